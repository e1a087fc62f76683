from itertools import product

import numpy as np
import pytest

from semuep.allocation import (
    AllocationStrategy,
    allocate_baseline,
    allocate_deterministic,
    importance_weights_from_variance,
    sample_relaxed,
)
from semuep.embedding_store import Embedding, KnowledgeBase
from semuep.errors import ConfigError, InputError


def test_deterministic_worked_example():
    alloc = allocate_deterministic(np.array([0.5, 0.25, 0.125, 0.125]), 7)
    assert list(alloc.extras) == [3, 2, 1, 1]


def test_deterministic_trivial_cases():
    assert list(allocate_deterministic(np.full(8, 0.125), 0).extras) == [0] * 8
    assert list(allocate_deterministic(np.array([1.0, 0.0, 0.0]), 5).extras) == [5, 0, 0]


def test_deterministic_rejects_non_distribution():
    with pytest.raises(InputError):
        allocate_deterministic(np.array([0.5, 0.6]), 3)
    with pytest.raises(InputError):
        allocate_deterministic(np.array([-0.1, 1.1]), 3)


def test_fractional_tie_break_lowest_index():
    # p*T = (1.5, 1.5, 1.0): one residual goes to index 0, not 1
    alloc = allocate_deterministic(np.array([0.375, 0.375, 0.25]), 4)
    assert list(alloc.extras) == [2, 1, 1]


def test_deterministic_brute_force_oracle(rng):
    # greedy result minimizes sum |t_i - p_i T| among all feasible integer vectors
    def enumerate_allocations(dim, total):
        if dim == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in enumerate_allocations(dim - 1, total - first):
                yield (first, *rest)

    for _ in range(150):
        dim = int(rng.integers(2, 5))
        total = int(rng.integers(0, 7))
        p = rng.dirichlet(np.ones(dim))
        greedy = allocate_deterministic(p, total).extras
        target = p * total
        best = min(sum(abs(t - x) for t, x in zip(cand, target))
                   for cand in enumerate_allocations(dim, total))
        assert sum(abs(t - x) for t, x in zip(greedy, target)) == pytest.approx(best, abs=1e-9)


def test_permutation_consistency(rng):
    for _ in range(50):
        p = rng.dirichlet(np.ones(6) * 3)
        # perturb away from exact ties so permutation equivariance is exact
        p = p + np.linspace(0, 1e-9, 6)
        p = p / p.sum()
        total = int(rng.integers(0, 10))
        base = allocate_deterministic(p, total).extras
        perm = rng.permutation(6)
        permuted = allocate_deterministic(p[perm], total).extras
        assert np.array_equal(permuted, base[perm])


def test_sample_relaxed_exact_budget(rng):
    for _ in range(500):
        dim = int(rng.integers(1, 20))
        total = int(rng.integers(0, 15))
        p = rng.dirichlet(np.ones(dim))
        alloc = sample_relaxed(p, total, rng)
        assert int(alloc.extras.sum()) == total
        assert np.all(alloc.extras >= 0)


def test_sample_relaxed_degenerate():
    rng = np.random.default_rng(0)
    assert list(sample_relaxed(np.array([1.0, 0.0]), 4, rng).extras) == [4, 0]
    assert list(sample_relaxed(np.array([0.3, 0.7]), 0, rng).extras) == [0, 0]


def test_sample_relaxed_marginals():
    # E[t_1] = p_1 T within 4 standard errors; p=(0.5,0.5), T=10
    rng = np.random.default_rng(1)
    draws = np.array([sample_relaxed(np.array([0.5, 0.5]), 10, rng).extras[0]
                      for _ in range(100_000)])
    se = np.sqrt(10 * 0.5 * 0.5 / draws.size)
    assert draws.mean() == pytest.approx(5.0, abs=4 * se)


def test_uniform_round_robin():
    alloc = allocate_baseline(AllocationStrategy(kind="uniform"), 4, 7, np.random.default_rng(0))
    assert list(alloc.extras) == [2, 2, 2, 1]


def test_no_uep_all_on_argmax():
    strat = AllocationStrategy(kind="no_uep", importance_weights=np.array([0.1, 0.9, 0.5]))
    alloc = allocate_baseline(strat, 3, 7, np.random.default_rng(0))
    assert list(alloc.extras) == [0, 7, 0]


def test_no_uep_tie_lowest_index():
    strat = AllocationStrategy(kind="no_uep", importance_weights=np.array([0.5, 0.5]))
    alloc = allocate_baseline(strat, 2, 3, np.random.default_rng(0))
    assert list(alloc.extras) == [3, 0]


def test_zero_budget_all_strategies(rng):
    weights = np.array([1.0, 2.0, 3.0])
    for kind in ("uniform", "random", "importance", "no_uep"):
        strat = AllocationStrategy(kind=kind, importance_weights=weights)
        assert int(allocate_baseline(strat, 3, 0, rng).extras.sum()) == 0


def test_importance_requires_weights(rng):
    with pytest.raises(ConfigError):
        allocate_baseline(AllocationStrategy(kind="importance"), 3, 5, rng)
    with pytest.raises(ConfigError):
        allocate_baseline(AllocationStrategy(kind="no_uep"), 3, 5, rng)


def test_every_allocator_spends_budget_exactly(rng):
    weights = None
    for _ in range(2000):
        dim = int(rng.integers(1, 24))
        total = int(rng.integers(0, 12))
        kind = ("uniform", "random", "importance", "no_uep")[int(rng.integers(0, 4))]
        w = rng.random(dim) if kind in ("importance", "no_uep") else None
        strat = AllocationStrategy(kind=kind, importance_weights=w)
        alloc = allocate_baseline(strat, dim, total, rng)
        assert int(alloc.extras.sum()) == total
        assert np.all(alloc.extras >= 0)
    for _ in range(2000):
        dim = int(rng.integers(1, 24))
        total = int(rng.integers(0, 12))
        p = rng.dirichlet(np.ones(dim))
        for alloc in (allocate_deterministic(p, total), sample_relaxed(p, total, rng)):
            assert int(alloc.extras.sum()) == total
            assert np.all(alloc.extras >= 0)


def test_variance_weights():
    kb = KnowledgeBase(
        [Embedding(id=0, text="a", vector=np.array([0.0, 0.0])),
         Embedding(id=1, text="b", vector=np.array([2.0, 0.0]))],
        dimension=2,
    )
    w = importance_weights_from_variance(kb)
    # sample variance with divisor n-1: values {0,2} -> 2.0
    assert np.allclose(w, [2.0, 0.0])
    assert w.shape == (kb.dimension,)


def test_variance_weights_identical_entries():
    kb = KnowledgeBase(
        [Embedding(id=0, text="a", vector=np.array([1.0, 2.0])),
         Embedding(id=1, text="b", vector=np.array([1.0, 2.0]))],
        dimension=2,
    )
    assert np.allclose(importance_weights_from_variance(kb), 0.0)


def test_variance_weights_needs_two_entries():
    kb = KnowledgeBase([Embedding(id=0, text="a", vector=np.array([1.0, 0.0]))], dimension=2)
    with pytest.raises(InputError):
        importance_weights_from_variance(kb)


def test_zero_weights_fall_back_to_uniform(rng):
    strat = AllocationStrategy(kind="importance", importance_weights=np.zeros(4))
    alloc = allocate_baseline(strat, 4, 8, rng)
    assert list(alloc.extras) == [2, 2, 2, 2]
