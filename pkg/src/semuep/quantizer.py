"""Per-dimension uniform scalar quantization of embedding vectors.

A vector z is scaled by s = max|z_i| + 1e-6 into [-1, 1], then each component
is mapped to a signed integer in [-q_max, q_max] with q_max = 2^(b-1) - 1.
The scale travels as noiseless side information; only the integers cross the
channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptionError, InputError

SUPPORTED_BITS = (4, 8, 12, 16)
SCALE_EPS = 1e-6


def q_max_for(bits: int) -> int:
    return 2 ** (bits - 1) - 1


@dataclass(frozen=True)
class QuantizedVector:
    """Signed integer symbols plus the scale needed to invert them."""

    values: np.ndarray
    scale: float
    bits: int

    def __post_init__(self):
        if self.bits not in SUPPORTED_BITS:
            raise InputError(f"bits must be one of {SUPPORTED_BITS}, got {self.bits}")
        if not (self.scale > 0.0):
            raise InputError(f"scale must be positive, got {self.scale}")
        vals = np.array(self.values, dtype=np.int64)
        qm = q_max_for(self.bits)
        if vals.size == 0:
            raise InputError("quantized vector must be nonempty")
        if np.any(np.abs(vals) > qm):
            raise InputError(f"values exceed q_max={qm}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])

    @property
    def q_max(self) -> int:
        return q_max_for(self.bits)


def _checked_input(z: np.ndarray, bits: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size == 0:
        raise InputError("input must be a nonempty 1-d vector")
    if not np.all(np.isfinite(z)):
        raise InputError("input contains non-finite components")
    if bits not in SUPPORTED_BITS:
        raise InputError(f"bits must be one of {SUPPORTED_BITS}, got {bits}")
    return z


def _round_half_away(x: np.ndarray) -> np.ndarray:
    # np.round ties to even; half-away-from-zero keeps quantization symmetric.
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize_det(z: np.ndarray, bits: int) -> QuantizedVector:
    """Deterministic quantization: round u_i * q_max to the nearest integer."""
    z = _checked_input(z, bits)
    scale = float(np.max(np.abs(z))) + SCALE_EPS
    qm = q_max_for(bits)
    values = _round_half_away(z / scale * qm).astype(np.int64)
    return QuantizedVector(values=values, scale=scale, bits=bits)


def quantize_stoch(z: np.ndarray, bits: int, rng: np.random.Generator) -> QuantizedVector:
    """Unbiased probabilistic rounding: E[values_i] = u_i * q_max exactly."""
    z = _checked_input(z, bits)
    scale = float(np.max(np.abs(z))) + SCALE_EPS
    qm = q_max_for(bits)
    y = z / scale * qm
    lower = np.floor(y)
    frac = y - lower
    values = (lower + (rng.random(y.shape) < frac)).astype(np.int64)
    return QuantizedVector(values=values, scale=scale, bits=bits)


def dequantize(q: QuantizedVector) -> np.ndarray:
    """Invert quantization: z_hat_i = scale * values_i / q_max."""
    qm = q.q_max
    if np.any(np.abs(q.values) > qm):
        raise CorruptionError(f"quantized values outside [-{qm}, {qm}]")
    return q.scale * q.values.astype(np.float64) / qm


def clamp_values(values: np.ndarray, bits: int) -> np.ndarray:
    """Saturate received symbols into the legal range before dequantization.

    Majority voting over corrupted copies can reassemble the one b-bit
    pattern (-2^(b-1)) that the encoder never produces; the receiver clips it
    to -q_max rather than failing the episode.
    """
    qm = q_max_for(bits)
    return np.clip(np.asarray(values, dtype=np.int64), -qm, qm)
