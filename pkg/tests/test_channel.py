import math

import numpy as np
import pytest

from semuep.channel import (
    ChannelConfig,
    snr_sigma,
    theoretical_ber_awgn,
    theoretical_ber_rayleigh,
    transmit,
)
from semuep.errors import ConfigError, InputError


def binomial_se(p, n):
    return math.sqrt(p * (1 - p) / n)


def test_snr_sigma_values():
    assert snr_sigma(0.0) == pytest.approx(0.7071067811865476, abs=1e-5)
    assert snr_sigma(math.inf) == 0.0
    assert snr_sigma(-math.inf) == snr_sigma(-60.0)  # clamped, finite
    assert math.isfinite(snr_sigma(-1000.0))


def test_theoretical_ber_values():
    assert theoretical_ber_awgn(0.0) == pytest.approx(0.0786496, abs=1e-4)
    assert theoretical_ber_awgn(3.0) == pytest.approx(0.0228784, abs=1e-4)
    assert theoretical_ber_awgn(100.0) < 1e-12
    assert theoretical_ber_awgn(math.inf) == 0.0


def test_config_validation():
    with pytest.raises(ConfigError):
        ChannelConfig(model="carrier-pigeon")
    with pytest.raises(ConfigError):
        ChannelConfig(model="bsc", bsc_p=1.5)
    with pytest.raises(ConfigError):
        ChannelConfig(model="rician", rician_k=-0.1)
    with pytest.raises(ConfigError):
        ChannelConfig(model="nakagami", nakagami_m=0.3)
    with pytest.raises(ConfigError):
        ChannelConfig(model="burst", burst_bad_flip=2.0)
    with pytest.raises(InputError):
        transmit(np.array([], dtype=np.uint8), ChannelConfig(), np.random.default_rng(0))


def test_awgn_noiseless_limit():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, size=10**6, dtype=np.uint8)
    out = transmit(bits, ChannelConfig(model="awgn", snr_db=100.0), np.random.default_rng(2))
    assert np.array_equal(out, bits)


def test_awgn_ber_matches_q_function():
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, size=10**6, dtype=np.uint8)
    for snr in (0.0, 1.0, 2.0, 3.0):
        out = transmit(bits, ChannelConfig(model="awgn", snr_db=snr), np.random.default_rng(40 + int(snr)))
        emp = float(np.mean(bits != out))
        theory = theoretical_ber_awgn(snr)
        assert abs(emp - theory) <= 3 * binomial_se(theory, bits.size)


def test_bsc_flip_rate():
    rng = np.random.default_rng(4)
    bits = rng.integers(0, 2, size=10**6, dtype=np.uint8)
    out = transmit(bits, ChannelConfig(model="bsc", bsc_p=0.10), np.random.default_rng(5))
    assert float(np.mean(bits != out)) == pytest.approx(0.100, abs=0.002)


def test_rayleigh_ber_matches_closed_form():
    rng = np.random.default_rng(6)
    bits = rng.integers(0, 2, size=10**6, dtype=np.uint8)
    for snr in (0.0, 3.0):
        out = transmit(bits, ChannelConfig(model="rayleigh", snr_db=snr), np.random.default_rng(60 + int(snr)))
        emp = float(np.mean(bits != out))
        theory = theoretical_ber_rayleigh(snr)
        assert abs(emp - theory) <= 3 * binomial_se(theory, bits.size)


def test_nakagami_m1_equals_rayleigh():
    # two-proportion z-test must NOT reject equality (p > 0.01)
    rng = np.random.default_rng(7)
    bits = rng.integers(0, 2, size=10**6, dtype=np.uint8)
    out_n = transmit(bits, ChannelConfig(model="nakagami", snr_db=1.0, nakagami_m=1.0),
                     np.random.default_rng(70))
    out_r = transmit(bits, ChannelConfig(model="rayleigh", snr_db=1.0), np.random.default_rng(71))
    k1, k2 = int(np.sum(bits != out_n)), int(np.sum(bits != out_r))
    n = bits.size
    pooled = (k1 + k2) / (2 * n)
    z = (k1 / n - k2 / n) / math.sqrt(2 * pooled * (1 - pooled) / n)
    p_two_sided = math.erfc(abs(z) / math.sqrt(2))
    assert p_two_sided > 0.01


def test_rician_k1_ber_between_awgn_and_rayleigh():
    rng = np.random.default_rng(8)
    bits = rng.integers(0, 2, size=10**6, dtype=np.uint8)
    out = transmit(bits, ChannelConfig(model="rician", snr_db=1.0, rician_k=1.0),
                   np.random.default_rng(80))
    emp = float(np.mean(bits != out))
    assert theoretical_ber_awgn(1.0) < emp < theoretical_ber_rayleigh(1.0)


def test_burst_stationary_rate():
    # stationary bad fraction p_gb/(p_gb+p_bg) times the bad flip rate
    rng = np.random.default_rng(9)
    bits = rng.integers(0, 2, size=5 * 10**5, dtype=np.uint8)
    cfg = ChannelConfig(model="burst")
    out = transmit(bits, cfg, np.random.default_rng(90))
    expected = 0.05 / 0.55 * 0.5
    emp = float(np.mean(bits != out))
    # burst errors are correlated; allow a generous band around stationarity
    assert abs(emp - expected) < 0.01


def test_burst_is_bursty():
    # error gaps should cluster: P(next bit also flipped | flipped) >> marginal rate
    rng = np.random.default_rng(10)
    bits = np.zeros(5 * 10**5, dtype=np.uint8)
    out = transmit(bits, ChannelConfig(model="burst"), np.random.default_rng(100))
    flips = out.astype(bool)
    pairs = flips[:-1] & flips[1:]
    cond = pairs.sum() / max(1, flips[:-1].sum())
    assert cond > 3 * flips.mean()


def test_output_shape_and_validity(rng):
    for model in ("awgn", "rayleigh", "rician", "nakagami", "burst", "bsc"):
        bits = rng.integers(0, 2, size=1000, dtype=np.uint8)
        out = transmit(bits, ChannelConfig(model=model, snr_db=1.0), np.random.default_rng(11))
        assert out.shape == bits.shape
        assert np.all((out == 0) | (out == 1))


def test_transmit_reproducible(rng):
    bits = rng.integers(0, 2, size=4096, dtype=np.uint8)
    cfg = ChannelConfig(model="rayleigh", snr_db=2.0)
    a = transmit(bits, cfg, np.random.default_rng(123))
    b = transmit(bits, cfg, np.random.default_rng(123))
    assert np.array_equal(a, b)
