"""Strategies for distributing the extra-repetition budget across dimensions.

Four static baselines plus the conversion of a policy's probability vector
into a feasible integer allocation: floor division with the residual handed
greedily to the largest fractional parts (ties to the lowest index). Every
allocator spends the budget exactly: sum(t) == T.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import AllocationVector
from .embedding_store import KnowledgeBase
from .errors import ConfigError, InputError

STRATEGY_KINDS = ("uniform", "random", "importance", "no_uep", "learned")


@dataclass(frozen=True)
class AllocationStrategy:
    kind: str
    importance_weights: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(f"unknown strategy kind {self.kind!r}")
        if self.importance_weights is not None:
            w = np.array(self.importance_weights, dtype=np.float64)
            if w.ndim != 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ConfigError("importance weights must be non-negative and finite")
            w.flags.writeable = False
            object.__setattr__(self, "importance_weights", w)


def _check_distribution(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InputError("probability vector must be nonempty and 1-d")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InputError("probabilities must be non-negative and finite")
    if abs(float(p.sum()) - 1.0) > 1e-6:
        raise InputError(f"probabilities sum to {float(p.sum())}, not 1")
    return p


def allocate_deterministic(p: np.ndarray, budget: int) -> AllocationVector:
    """Floor p_i * T, then one residual unit each to the largest fractional parts."""
    p = _check_distribution(p)
    if budget < 0:
        raise InputError(f"budget must be >= 0, got {budget}")
    raw = p * budget
    extras = np.floor(raw).astype(np.int64)
    residual = budget - int(extras.sum())
    if residual > 0:
        frac = raw - extras
        order = np.argsort(-frac, kind="stable")  # stable sort: ties keep lowest index
        extras[order[:residual]] += 1
    return AllocationVector(extras=extras, budget=budget)


def sample_relaxed(p: np.ndarray, budget: int, rng: np.random.Generator) -> AllocationVector:
    """Draw t ~ Multinomial(T; p); marginal means are p_i * T."""
    p = _check_distribution(p)
    if budget < 0:
        raise InputError(f"budget must be >= 0, got {budget}")
    extras = rng.multinomial(budget, p / p.sum())
    return AllocationVector(extras=extras.astype(np.int64), budget=budget)


def importance_weights_from_variance(kb: KnowledgeBase) -> np.ndarray:
    """Per-dimension sample variance (divisor n-1) across KB entries."""
    if len(kb) < 2:
        raise InputError("variance weights need at least 2 entries")
    return np.var(kb.matrix(), axis=0, ddof=1)


def _weights_to_distribution(weights: np.ndarray, dim: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (dim,):
        raise ConfigError(f"importance weights have shape {w.shape}, expected ({dim},)")
    total = float(w.sum())
    if total <= 0.0:
        # All-zero weights carry no preference; fall back to uniform.
        return np.full(dim, 1.0 / dim)
    return w / total


def allocate_baseline(
    strategy: AllocationStrategy,
    dim: int,
    budget: int,
    rng: np.random.Generator,
) -> AllocationVector:
    """One of the four static allocators; 'learned' is not a baseline."""
    if dim < 1:
        raise InputError(f"dim must be >= 1, got {dim}")
    if budget < 0:
        raise InputError(f"budget must be >= 0, got {budget}")

    if strategy.kind == "uniform":
        base, extra = divmod(budget, dim)
        extras = np.full(dim, base, dtype=np.int64)
        extras[:extra] += 1
        return AllocationVector(extras=extras, budget=budget)

    if strategy.kind == "random":
        extras = rng.multinomial(budget, np.full(dim, 1.0 / dim))
        return AllocationVector(extras=extras.astype(np.int64), budget=budget)

    if strategy.kind == "importance":
        if strategy.importance_weights is None:
            raise ConfigError("importance strategy requires importance_weights")
        p = _weights_to_distribution(strategy.importance_weights, dim)
        return allocate_deterministic(p, budget)

    if strategy.kind == "no_uep":
        if strategy.importance_weights is None:
            raise ConfigError("no_uep strategy requires importance_weights")
        if strategy.importance_weights.shape != (dim,):
            raise ConfigError("importance weights dimension mismatch")
        extras = np.zeros(dim, dtype=np.int64)
        extras[int(np.argmax(strategy.importance_weights))] = budget
        return AllocationVector(extras=extras, budget=budget)

    raise ConfigError(f"allocate_baseline cannot serve strategy {strategy.kind!r}")
