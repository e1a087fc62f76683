"""Statistical toolkit for paired method comparisons.

Percentile bootstrap for means, Wilcoxon signed-rank (exact null by dynamic
programming up to n = 20, tie- and continuity-corrected normal approximation
beyond), sign-flip permutation tests, and the paired-design Cohen's d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, UndefinedEffectError


@dataclass(frozen=True)
class PairedSample:
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if a.ndim != 1 or b.ndim != 1 or a.size == 0:
            raise InputError("paired samples must be nonempty 1-d arrays")
        if a.shape != b.shape:
            raise InputError(f"paired lengths differ: {a.size} vs {b.size}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def differences(self) -> np.ndarray:
        return self.a - self.b


EXACT_WILCOXON_MAX_N = 20


def bootstrap_ci(
    data: np.ndarray,
    resamples: int,
    level: float,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    data = np.asarray(data, dtype=np.float64)
    if data.size == 0:
        raise InputError("bootstrap needs nonempty data")
    if not (0.0 < level < 1.0):
        raise InputError(f"level must be in (0, 1), got {level}")
    if resamples < 1:
        raise InputError(f"resamples must be >= 1, got {resamples}")
    idx = rng.integers(0, data.size, size=(resamples, data.size))
    means = data[idx].mean(axis=1)
    lo = float(np.percentile(means, 100.0 * (1.0 - level) / 2.0))
    hi = float(np.percentile(means, 100.0 * (1.0 + level) / 2.0))
    return lo, hi


def _average_ranks(abs_diffs: np.ndarray) -> np.ndarray:
    order = np.argsort(abs_diffs, kind="stable")
    ranks = np.empty(abs_diffs.size, dtype=np.float64)
    i = 0
    sorted_vals = abs_diffs[order]
    while i < abs_diffs.size:
        j = i
        while j < abs_diffs.size and sorted_vals[j] == sorted_vals[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j + 1)  # average of ranks i+1 .. j
        i = j
    return ranks


def _exact_wilcoxon_p(ranks: np.ndarray, w_plus: float) -> float:
    """Two-sided exact p over all 2^n sign assignments.

    Average ranks are multiples of 0.5, so doubling makes everything integer
    and the null distribution of 2*W+ is a polynomial product evaluated by
    convolution. The distribution is symmetric about its midpoint; the
    two-sided p sums both tails at the observed deviation.
    """
    scaled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(scaled.sum())
    pmf = np.zeros(total + 1, dtype=np.float64)
    pmf[0] = 1.0
    top = 0
    for r in scaled:
        shifted = np.zeros_like(pmf)
        shifted[r : top + r + 1] = pmf[: top + 1]
        pmf[: top + r + 1] = 0.5 * (pmf[: top + r + 1] + shifted[: top + r + 1])
        top += r
    w_scaled = int(round(2.0 * w_plus))
    mirror = total - w_scaled
    lo, hi = min(w_scaled, mirror), max(w_scaled, mirror)
    p = float(pmf[: lo + 1].sum() + pmf[hi:].sum())
    if lo == hi:  # observed exactly at the center: both tails are everything
        p = 1.0
    return min(1.0, p)


def _normal_wilcoxon_p(ranks: np.ndarray, w_plus: float) -> float:
    n = ranks.size
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    # tie correction: subtract sum(t^3 - t)/48 over groups of tied |differences|
    _, counts = np.unique(ranks, return_counts=True)
    var -= float(np.sum(counts.astype(np.float64) ** 3 - counts)) / 48.0
    if var <= 0.0:
        return 1.0
    # continuity correction toward the mean
    z = (w_plus - mean - 0.5 * np.sign(w_plus - mean)) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return min(1.0, p)


def wilcoxon_signed_rank(pairs: PairedSample) -> tuple[float, float]:
    """Signed-rank statistic W (sum of positive ranks) and two-sided p."""
    diffs = pairs.differences
    diffs = diffs[diffs != 0.0]
    if diffs.size == 0:
        return 0.0, 1.0
    ranks = _average_ranks(np.abs(diffs))
    w_plus = float(ranks[diffs > 0].sum())
    if diffs.size <= EXACT_WILCOXON_MAX_N:
        return w_plus, _exact_wilcoxon_p(ranks, w_plus)
    return w_plus, _normal_wilcoxon_p(ranks, w_plus)


def permutation_test(
    pairs: PairedSample,
    iterations: int,
    rng: np.random.Generator,
    alternative: str = "two-sided",
) -> float:
    """Sign-flip permutation test on the paired mean difference."""
    if iterations < 1:
        raise InputError(f"iterations must be >= 1, got {iterations}")
    if alternative not in ("two-sided", "greater"):
        raise InputError(f"unknown alternative {alternative!r}")
    diffs = pairs.differences
    observed = float(diffs.mean())
    signs = np.where(rng.random((iterations, diffs.size)) < 0.5, 1.0, -1.0)
    permuted = (signs * diffs).mean(axis=1)
    if alternative == "two-sided":
        count = int(np.sum(np.abs(permuted) >= abs(observed)))
    else:
        count = int(np.sum(permuted >= observed))
    return (count + 1) / (iterations + 1)


def cohens_d(pairs: PairedSample) -> float:
    """Paired-design effect size: mean(diff) / sd(diff, n-1)."""
    diffs = pairs.differences
    if diffs.size < 2:
        raise InputError("Cohen's d needs at least 2 pairs")
    sd = float(np.std(diffs, ddof=1))
    if sd == 0.0:
        raise UndefinedEffectError("difference variance is zero; effect size undefined")
    return float(diffs.mean()) / sd


def bonferroni(p: float, comparisons: int) -> float:
    """Family-wise corrected p-value min(1, k*p)."""
    if comparisons < 1:
        raise InputError(f"comparisons must be >= 1, got {comparisons}")
    return min(1.0, comparisons * p)
