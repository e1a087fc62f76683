import math
from itertools import product

import numpy as np
import pytest
import scipy.stats as scipy_stats

from semuep.errors import InputError, UndefinedEffectError
from semuep.stats import (
    PairedSample,
    bonferroni,
    bootstrap_ci,
    cohens_d,
    permutation_test,
    wilcoxon_signed_rank,
)


# --- bootstrap ---------------------------------------------------------------

def test_bootstrap_constant_data():
    lo, hi = bootstrap_ci(np.full(20, 5.0), 200, 0.95, np.random.default_rng(0))
    assert (lo, hi) == (5.0, 5.0)


def test_bootstrap_single_point():
    lo, hi = bootstrap_ci(np.array([3.7]), 200, 0.95, np.random.default_rng(0))
    assert (lo, hi) == (3.7, 3.7)


def test_bootstrap_contains_mean_bernoulli():
    data = np.array([0.0] * 50 + [1.0] * 50)
    lo, hi = bootstrap_ci(data, 200, 0.95, np.random.default_rng(7))
    assert lo <= 0.5 <= hi


def test_bootstrap_coverage():
    # 95% interval should cover the true mean in >= 90 of 100 synthetic sets
    rng = np.random.default_rng(11)
    covered = 0
    for _ in range(100):
        data = rng.normal(2.0, 1.0, size=60)
        lo, hi = bootstrap_ci(data, 200, 0.95, rng)
        covered += int(lo <= 2.0 <= hi)
    assert covered >= 90


def test_bootstrap_width_shrinks_like_sqrt_n():
    rng = np.random.default_rng(13)
    widths = {}
    for n in (100, 400):
        deltas = []
        for _ in range(40):
            data = rng.normal(0.0, 1.0, size=n)
            lo, hi = bootstrap_ci(data, 200, 0.95, rng)
            deltas.append(hi - lo)
        widths[n] = np.mean(deltas)
    ratio = widths[100] / widths[400]
    assert 1.4 < ratio < 2.9


def test_bootstrap_reproducible():
    data = np.random.default_rng(1).normal(size=30)
    a = bootstrap_ci(data, 200, 0.95, np.random.default_rng(5))
    b = bootstrap_ci(data, 200, 0.95, np.random.default_rng(5))
    assert a == b


def test_bootstrap_input_guards():
    with pytest.raises(InputError):
        bootstrap_ci(np.array([]), 200, 0.95, np.random.default_rng(0))
    with pytest.raises(InputError):
        bootstrap_ci(np.ones(3), 200, 1.5, np.random.default_rng(0))
    with pytest.raises(InputError):
        bootstrap_ci(np.ones(3), 0, 0.95, np.random.default_rng(0))


# --- wilcoxon ----------------------------------------------------------------

def test_wilcoxon_identical_pairs():
    pairs = PairedSample(a=np.arange(5.0), b=np.arange(5.0))
    w, p = wilcoxon_signed_rank(pairs)
    assert w == 0.0 and p == 1.0


def test_wilcoxon_n5_all_positive():
    pairs = PairedSample(a=np.array([1.0, 2, 3, 4, 5]), b=np.zeros(5))
    w, p = wilcoxon_signed_rank(pairs)
    assert w == 15.0
    assert p == pytest.approx(2 / 32)


def test_wilcoxon_exact_matches_enumeration_n5_to_10():
    # brute-force enumeration of all sign assignments as the oracle
    rng = np.random.default_rng(3)
    for n in range(5, 11):
        mags = np.sort(rng.uniform(0.1, 10.0, size=n))  # distinct magnitudes
        ranks = np.arange(1.0, n + 1)
        diffs = mags.copy()
        w_obs, p_mine = wilcoxon_signed_rank(PairedSample(a=diffs, b=np.zeros(n)))
        total = n * (n + 1) / 2
        # enumerate all 2^n sign patterns
        ws = []
        for signs in product((0, 1), repeat=n):
            ws.append(sum(r for r, s in zip(ranks, signs) if s))
        ws = np.array(ws, dtype=float)
        mirror = total - w_obs
        lo, hi = min(w_obs, mirror), max(w_obs, mirror)
        p_oracle = (np.sum(ws <= lo) + np.sum(ws >= hi)) / len(ws)
        assert p_mine == pytest.approx(p_oracle)


def test_wilcoxon_published_critical_values():
    # classic two-sided alpha = 0.05 critical values for W_min, n = 6..10
    critical = {6: 0, 7: 2, 8: 3, 9: 5, 10: 8}
    for n, crit in critical.items():
        # construct differences with W_minus = crit (ranks summing to crit negative)
        mags = np.arange(1.0, n + 1)
        signs = np.ones(n)
        remaining = crit
        for r in range(n, 0, -1):
            if remaining >= r:
                signs[r - 1] = -1
                remaining -= r
        assert remaining == 0
        diffs = mags * signs
        _, p_at = wilcoxon_signed_rank(PairedSample(a=diffs, b=np.zeros(n)))
        assert p_at <= 0.05, f"n={n}"
        # one step further from the tail must not be significant
        signs_next = np.ones(n)
        remaining = crit + 1
        for r in range(n, 0, -1):
            if remaining >= r:
                signs_next[r - 1] = -1
                remaining -= r
        assert remaining == 0
        _, p_next = wilcoxon_signed_rank(PairedSample(a=mags * signs_next, b=np.zeros(n)))
        assert p_next > 0.05, f"n={n}"


def test_wilcoxon_matches_scipy_exact(rng):
    for _ in range(100):
        n = int(rng.integers(3, 15))
        d = rng.standard_normal(n)
        d = np.sign(d) * (np.abs(d) + np.linspace(0.01, 0.02, n))  # distinct, nonzero
        _, p_mine = wilcoxon_signed_rank(PairedSample(a=d, b=np.zeros(n)))
        p_scipy = scipy_stats.wilcoxon(d, mode="exact").pvalue
        assert p_mine == pytest.approx(p_scipy, abs=1e-12)


def test_wilcoxon_normal_approximation_matches_scipy():
    rng = np.random.default_rng(9)
    d = rng.standard_normal(60) + 0.3
    _, p_mine = wilcoxon_signed_rank(PairedSample(a=d, b=np.zeros(60)))
    p_scipy = scipy_stats.wilcoxon(d, mode="approx", correction=True).pvalue
    assert p_mine == pytest.approx(p_scipy, rel=1e-9)


def test_wilcoxon_power_on_shifted_pairs():
    rng = np.random.default_rng(10)
    a = rng.normal(1.0, 1.0, size=100)
    _, p = wilcoxon_signed_rank(PairedSample(a=a, b=np.zeros(100)))
    assert p < 0.001


def test_wilcoxon_zero_differences_dropped():
    a = np.array([1.0, 2.0, 3.0, 5.0])
    b = np.array([1.0, 2.0, 3.0, 4.0])
    w, p = wilcoxon_signed_rank(PairedSample(a=a, b=b))
    assert w == 1.0 and p == 1.0


def test_wilcoxon_ties_average_ranks():
    d = np.array([1.0, 1.0, -1.0, 2.0])
    w, p = wilcoxon_signed_rank(PairedSample(a=d, b=np.zeros(4)))
    # ranks of |d|: three ties at 1 -> rank 2 each; the 2.0 gets rank 4
    assert w == 2.0 + 2.0 + 4.0
    assert 0.0 < p <= 1.0


# --- permutation -------------------------------------------------------------

def test_permutation_identical_pairs():
    pairs = PairedSample(a=np.ones(10), b=np.ones(10))
    assert permutation_test(pairs, 999, np.random.default_rng(0)) == 1.0


def test_permutation_minimum_attainable():
    pairs = PairedSample(a=np.full(40, 10.0), b=np.zeros(40))
    p = permutation_test(pairs, 999, np.random.default_rng(1))
    assert p == pytest.approx(1 / 1000)


def test_permutation_matches_exhaustive_n8():
    rng = np.random.default_rng(2)
    d = rng.standard_normal(8) + 0.6
    obs = d.mean()
    count = 0
    for signs in product((-1.0, 1.0), repeat=8):
        if abs(np.mean(np.array(signs) * d)) >= abs(obs):
            count += 1
    exact = count / 2**8
    approx = permutation_test(PairedSample(a=d, b=np.zeros(8)), 10_000, np.random.default_rng(3))
    assert approx == pytest.approx(exact, abs=0.02)


def test_permutation_p_in_valid_range(rng):
    for _ in range(20):
        d = rng.standard_normal(12)
        p = permutation_test(PairedSample(a=d, b=np.zeros(12)), 99, rng)
        assert 1 / 100 <= p <= 1.0


def test_permutation_one_sided():
    d = np.full(30, 1.0)
    p_greater = permutation_test(PairedSample(a=d, b=np.zeros(30)), 999,
                                 np.random.default_rng(4), alternative="greater")
    assert p_greater == pytest.approx(1 / 1000)
    p_wrong_side = permutation_test(PairedSample(a=-d, b=np.zeros(30)), 999,
                                    np.random.default_rng(4), alternative="greater")
    assert p_wrong_side == 1.0


# --- effect size -------------------------------------------------------------

def test_cohens_d_hand_value():
    pairs = PairedSample(a=np.array([1.0, 1.0, 1.0, 3.0]), b=np.zeros(4))
    assert cohens_d(pairs) == pytest.approx(1.5)


def test_cohens_d_antisymmetric():
    a = np.array([1.0, 2.0, 4.0])
    b = np.array([0.5, 2.5, 1.0])
    assert cohens_d(PairedSample(a=a, b=b)) == pytest.approx(-cohens_d(PairedSample(a=b, b=a)))


def test_cohens_d_zero_variance():
    with pytest.raises(UndefinedEffectError):
        cohens_d(PairedSample(a=np.ones(5), b=np.zeros(5)))
    with pytest.raises(UndefinedEffectError):
        cohens_d(PairedSample(a=np.ones(5), b=np.ones(5)))


# --- bonferroni --------------------------------------------------------------

def test_bonferroni():
    assert bonferroni(0.01, 5) == pytest.approx(0.05)
    assert bonferroni(0.4, 5) == 1.0
    for k in range(1, 10):
        assert bonferroni(0.02, k) <= bonferroni(0.02, k + 1)


def test_paired_sample_validation():
    with pytest.raises(InputError):
        PairedSample(a=np.ones(3), b=np.ones(4))
    with pytest.raises(InputError):
        PairedSample(a=np.array([]), b=np.array([]))
