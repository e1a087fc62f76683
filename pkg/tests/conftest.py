import numpy as np
import pytest

from semuep.embedding_store import Embedding, KnowledgeBase, planted_kb, random_kb


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def small_kb():
    return random_kb(count=50, dim=16, seed=3)


@pytest.fixture(scope="session")
def planted_task_kb():
    """The synthetic planted-importance task used by the learning tests."""
    return planted_kb(count=200, dim=32, planted_dims=4, noise_scale=0.005, seed=0)


@pytest.fixture
def tiny_kb():
    entries = [
        Embedding(id=0, text="Arden shipped 14 crates to Brelin on March 7", vector=np.array([1.0, 0.0])),
        Embedding(id=1, text="Calla logged 9 faults at Dunmore on May 2", vector=np.array([0.0, 1.0])),
        Embedding(id=2, text="Eloi routed 30 pallets to Fenwick on July 19", vector=np.array([-1.0, 0.0])),
    ]
    return KnowledgeBase(entries, dimension=2)
