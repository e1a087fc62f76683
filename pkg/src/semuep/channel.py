"""Bit-level channel simulation with hard-decision BPSK demodulation.

Bits map to antipodal symbols (0 -> +1, 1 -> -1); the receiver decides by the
sign of the received sample. SNR is interpreted as Es/N0 per channel use, so
sigma^2 = 1/(2 * 10^(snr_db/10)). Fading channels draw an independent
nonnegative gain per bit and detect coherently, which under hard decisions is
an AWGN channel whose per-bit SNR is scaled by the squared gain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

CHANNEL_MODELS = ("awgn", "rayleigh", "rician", "nakagami", "burst", "bsc")

# Below this SNR the noise std is clamped so the noiseless-limit algebra
# never produces infinities.
SNR_DB_FLOOR = -60.0


@dataclass(frozen=True)
class ChannelConfig:
    model: str = "awgn"
    snr_db: float = 0.0
    rician_k: float = 1.0
    nakagami_m: float = 1.0
    bsc_p: float = 0.05
    burst_p_good_to_bad: float = 0.05
    burst_p_bad_to_good: float = 0.5
    burst_bad_flip: float = 0.5
    burst_good_flip: float = 0.0

    def __post_init__(self):
        if self.model not in CHANNEL_MODELS:
            raise ConfigError(f"unknown channel model {self.model!r}")
        if not (0.0 <= self.bsc_p <= 1.0):
            raise ConfigError(f"bsc_p must be in [0, 1], got {self.bsc_p}")
        if self.rician_k < 0.0:
            raise ConfigError(f"rician_k must be >= 0, got {self.rician_k}")
        if self.nakagami_m < 0.5:
            raise ConfigError(f"nakagami_m must be >= 0.5, got {self.nakagami_m}")
        for name in ("burst_p_good_to_bad", "burst_p_bad_to_good",
                     "burst_bad_flip", "burst_good_flip"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must be in [0, 1], got {v}")


def snr_sigma(snr_db: float) -> float:
    """Noise std for the Es/N0 convention, clamped below SNR_DB_FLOOR."""
    if not math.isfinite(snr_db):
        if snr_db > 0:
            return 0.0
        snr_db = SNR_DB_FLOOR
    snr_db = max(snr_db, SNR_DB_FLOOR)
    return math.sqrt(1.0 / (2.0 * 10.0 ** (snr_db / 10.0)))


def theoretical_ber_awgn(snr_db: float) -> float:
    """Closed-form BPSK/AWGN bit error rate Q(sqrt(2 * 10^(snr_db/10)))."""
    if not math.isfinite(snr_db):
        return 0.0 if snr_db > 0 else 0.5
    gamma = 10.0 ** (snr_db / 10.0)
    # Q(x) = erfc(x / sqrt(2)) / 2
    return 0.5 * math.erfc(math.sqrt(gamma))


def theoretical_ber_rayleigh(snr_db: float) -> float:
    """Closed-form coherent-BPSK BER over Rayleigh fading with mean gain 1."""
    gamma = 10.0 ** (snr_db / 10.0)
    return 0.5 * (1.0 - math.sqrt(gamma / (1.0 + gamma)))


def _fading_gains(cfg: ChannelConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.model == "rayleigh":
        # E[|h|^2] = 1 requires Rayleigh scale 1/sqrt(2).
        return rng.rayleigh(scale=1.0 / math.sqrt(2.0), size=n)
    if cfg.model == "rician":
        k = cfg.rician_k
        mean = math.sqrt(k / (k + 1.0))
        std = math.sqrt(1.0 / (2.0 * (k + 1.0)))
        re = mean + std * rng.standard_normal(n)
        im = std * rng.standard_normal(n)
        return np.hypot(re, im)
    if cfg.model == "nakagami":
        m = cfg.nakagami_m
        return np.sqrt(rng.gamma(shape=m, scale=1.0 / m, size=n))
    raise ConfigError(f"{cfg.model} is not a fading model")


def _burst_flip_mask(cfg: ChannelConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gilbert-Elliott flip mask built from geometric state run lengths.

    The initial state is drawn from the chain's stationary distribution, and
    each subsequent sojourn is geometric in its leave probability, which is
    exactly a per-bit two-state Markov chain.
    """
    p_gb, p_bg = cfg.burst_p_good_to_bad, cfg.burst_p_bad_to_good
    if p_gb + p_bg == 0.0:
        stationary_bad = 0.0
    else:
        stationary_bad = p_gb / (p_gb + p_bg)
    bad = np.zeros(n, dtype=bool)
    state_bad = bool(rng.random() < stationary_bad)
    pos = 0
    while pos < n:
        leave_p = p_bg if state_bad else p_gb
        run = n - pos if leave_p == 0.0 else int(rng.geometric(leave_p))
        run = min(run, n - pos)
        if state_bad:
            bad[pos : pos + run] = True
        pos += run
        state_bad = not state_bad
    flip_p = np.where(bad, cfg.burst_bad_flip, cfg.burst_good_flip)
    return rng.random(n) < flip_p


def transmit(bits: np.ndarray, cfg: ChannelConfig, rng: np.random.Generator) -> np.ndarray:
    """Send a bit array through the configured channel; returns decided bits."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1 or bits.size == 0:
        raise InputError("bit array must be nonempty and 1-d")
    n = bits.size

    if cfg.model == "bsc":
        flips = rng.random(n) < cfg.bsc_p
        return bits ^ flips.astype(np.uint8)

    if cfg.model == "burst":
        flips = _burst_flip_mask(cfg, n, rng)
        return bits ^ flips.astype(np.uint8)

    sigma = snr_sigma(cfg.snr_db)
    x = 1.0 - 2.0 * bits.astype(np.float64)
    if cfg.model == "awgn":
        y = x + sigma * rng.standard_normal(n)
    else:
        y = _fading_gains(cfg, n, rng) * x + sigma * rng.standard_normal(n)
    return (y < 0.0).astype(np.uint8)
