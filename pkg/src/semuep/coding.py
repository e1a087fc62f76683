"""Per-dimension repetition coding under a channel-use budget.

Each quantized symbol q_i is serialized as a b-bit two's-complement word
(most-significant bit first) and sent 1 + t_i times, copies contiguous and
dimensions in index order. The receiver votes per bit position across the
copies; exact ties fall to an independent fair coin per bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetViolationError, CorruptionError, DimensionError, InputError
from .quantizer import QuantizedVector


@dataclass(frozen=True)
class AllocationVector:
    """Extra-repetition counts t_i under a total budget T."""

    extras: np.ndarray
    budget: int

    def __post_init__(self):
        t = np.array(self.extras, dtype=np.int64)
        if t.ndim != 1 or t.size == 0:
            raise InputError("extras must be a nonempty 1-d integer array")
        if np.any(t < 0):
            raise InputError("extra-repetition counts must be non-negative")
        if self.budget < 0:
            raise InputError(f"budget must be non-negative, got {self.budget}")
        if int(t.sum()) > self.budget:
            raise BudgetViolationError(
                f"sum of extras {int(t.sum())} exceeds budget {self.budget}"
            )
        t.flags.writeable = False
        object.__setattr__(self, "extras", t)

    @property
    def dimension(self) -> int:
        return int(self.extras.shape[0])

    @property
    def copies(self) -> np.ndarray:
        """Repetition counts n_i = 1 + t_i."""
        return self.extras + 1


@dataclass(frozen=True)
class RepetitionFrame:
    """Serialized repeated symbols plus the layout needed to undo them."""

    bits: np.ndarray
    copies: np.ndarray
    symbol_bits: int

    def __post_init__(self):
        bits = np.array(self.bits, dtype=np.uint8)
        copies = np.array(self.copies, dtype=np.int64)
        if np.any((bits != 0) & (bits != 1)):
            raise InputError("frame bits must be 0/1")
        if np.any(copies < 1):
            raise InputError("each dimension needs at least one copy")
        if bits.size != self.symbol_bits * int(copies.sum()):
            raise CorruptionError(
                f"frame holds {bits.size} bits but layout implies "
                f"{self.symbol_bits * int(copies.sum())}"
            )
        bits.flags.writeable = False
        copies.flags.writeable = False
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "copies", copies)

    @property
    def bit_length(self) -> int:
        return int(self.bits.size)

    def with_bits(self, bits: np.ndarray) -> "RepetitionFrame":
        """Same layout, different payload (e.g. the channel's output)."""
        return RepetitionFrame(bits=bits, copies=self.copies, symbol_bits=self.symbol_bits)


def compute_budget(dim: int, ecc_rate: float) -> tuple[int, int]:
    """Extra-repetition budget T = floor(dim * ecc_rate) and total B = dim + T."""
    if dim < 1:
        raise InputError(f"dim must be >= 1, got {dim}")
    if ecc_rate < 0:
        raise InputError(f"ecc_rate must be >= 0, got {ecc_rate}")
    t = math.floor(dim * ecc_rate)
    return t, dim + t


def symbols_to_bits(values: np.ndarray, symbol_bits: int) -> np.ndarray:
    """Two's-complement bit matrix, one row per value, MSB first."""
    vals = np.asarray(values, dtype=np.int64)
    mod = vals & ((1 << symbol_bits) - 1)
    shifts = np.arange(symbol_bits - 1, -1, -1, dtype=np.int64)
    return ((mod[:, None] >> shifts[None, :]) & 1).astype(np.uint8)


def bits_to_symbols(bit_rows: np.ndarray, symbol_bits: int) -> np.ndarray:
    """Invert symbols_to_bits; rows of b bits back to signed integers."""
    weights = 1 << np.arange(symbol_bits - 1, -1, -1, dtype=np.int64)
    raw = bit_rows.astype(np.int64) @ weights
    half = 1 << (symbol_bits - 1)
    return np.where(raw >= half, raw - (1 << symbol_bits), raw)


def encode_repetition(q: QuantizedVector, alloc: AllocationVector) -> RepetitionFrame:
    """Repeat each symbol 1 + t_i times; hard-fails on any budget violation."""
    if q.dimension != alloc.dimension:
        raise DimensionError(
            f"quantized dimension {q.dimension} != allocation dimension {alloc.dimension}"
        )
    copies = alloc.copies
    total_uses = int(copies.sum())
    if total_uses > alloc.dimension + alloc.budget:
        raise BudgetViolationError(
            f"{total_uses} channel uses exceed budget {alloc.dimension + alloc.budget}"
        )
    symbol_rows = symbols_to_bits(q.values, q.bits)
    frame_rows = np.repeat(symbol_rows, copies, axis=0)
    return RepetitionFrame(bits=frame_rows.reshape(-1), copies=copies, symbol_bits=q.bits)


def decode_majority(frame: RepetitionFrame, rng: np.random.Generator) -> np.ndarray:
    """Bitwise majority vote across each dimension's copies.

    Returns the decoded signed integer per dimension. Note the all-ones sign
    pattern -2^(b-1) can appear under corruption even though the encoder never
    emits it; callers saturate with quantizer.clamp_values before dequantizing.
    """
    b = frame.symbol_bits
    copies = frame.copies
    if frame.bits.size != b * int(copies.sum()):
        raise CorruptionError("frame bit count inconsistent with layout")
    rows = frame.bits.reshape(-1, b)
    starts = np.zeros(copies.size, dtype=np.int64)
    np.cumsum(copies[:-1], out=starts[1:])
    ones = np.add.reduceat(rows, starts, axis=0).astype(np.int64)
    doubled = 2 * ones
    n_col = copies[:, None]
    decided = (doubled > n_col).astype(np.uint8)
    tie = doubled == n_col
    if np.any(tie):
        decided[tie] = rng.integers(0, 2, size=int(tie.sum()), dtype=np.uint8)
    return bits_to_symbols(decided, b)


def decode_symbol_vote(frame: RepetitionFrame, rng: np.random.Generator) -> np.ndarray:
    """Symbol-level plurality vote; ties broken uniformly among tied symbols."""
    b = frame.symbol_bits
    rows = frame.bits.reshape(-1, b)
    symbols = bits_to_symbols(rows, b)
    out = np.empty(frame.copies.size, dtype=np.int64)
    pos = 0
    for i, n in enumerate(frame.copies):
        group = symbols[pos : pos + n]
        pos += n
        vals, counts = np.unique(group, return_counts=True)
        top = vals[counts == counts.max()]
        out[i] = top[0] if top.size == 1 else rng.choice(top)
    return out
