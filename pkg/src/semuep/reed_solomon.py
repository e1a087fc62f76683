"""Systematic Reed-Solomon codec over GF(2^8), the block-code baseline.

The total parity budget is spread across as few blocks as fit the 255-byte
RS(255, k) limit, so a codeword always occupies exactly payload + parity
channel symbols. Decoding is bounded-distance (floor(parity/2) byte errors
per block); an undecodable block is reported, not raised, and its received
systematic bytes pass through unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .quantizer import QuantizedVector

_PRIM_POLY = 0x11D


class _GF256:
    """Log/antilog arithmetic for GF(2^8) with primitive element 2."""

    def __init__(self):
        self.exp = [0] * 512
        self.log = [0] * 256
        x = 1
        for i in range(255):
            self.exp[i] = x
            self.log[x] = i
            x <<= 1
            if x & 0x100:
                x ^= _PRIM_POLY
        for i in range(255, 512):
            self.exp[i] = self.exp[i - 255]

    def mul(self, a: int, b: int) -> int:
        if a == 0 or b == 0:
            return 0
        return self.exp[self.log[a] + self.log[b]]

    def div(self, a: int, b: int) -> int:
        if b == 0:
            raise ZeroDivisionError("division by zero in GF(256)")
        if a == 0:
            return 0
        return self.exp[(self.log[a] - self.log[b]) % 255]

    def inv(self, a: int) -> int:
        return self.exp[255 - self.log[a]]

    def pow_alpha(self, e: int) -> int:
        return self.exp[e % 255]


_GF = _GF256()


def _generator_poly(nsym: int) -> list[int]:
    """Monic generator Π (x - alpha^i), coefficients highest degree first."""
    g = [1]
    for i in range(nsym):
        factor = [1, _GF.pow_alpha(i)]
        out = [0] * (len(g) + 1)
        for j, a in enumerate(g):
            out[j] ^= _GF.mul(a, factor[0])
            out[j + 1] ^= _GF.mul(a, factor[1])
        g = out
    return g


def _encode_block(payload: list[int], nsym: int) -> list[int]:
    if nsym == 0:
        return list(payload)
    gen = _generator_poly(nsym)
    rem = list(payload) + [0] * nsym
    for i in range(len(payload)):
        coef = rem[i]
        if coef != 0:
            for j in range(1, len(gen)):
                rem[i + j] ^= _GF.mul(gen[j], coef)
    return list(payload) + rem[len(payload):]


def _eval_poly_asc(p: list[int], x: int) -> int:
    """Evaluate Σ p[i] x^i."""
    acc = 0
    for c in reversed(p):
        acc = _GF.mul(acc, x) ^ c
    return acc


def _syndromes(block: list[int], nsym: int) -> list[int]:
    asc = list(reversed(block))
    return [_eval_poly_asc(asc, _GF.pow_alpha(j)) for j in range(nsym)]


def _berlekamp_massey(synd: list[int]) -> tuple[list[int], int]:
    """Error locator (ascending coefficients, C[0] = 1) and its degree L."""
    c = [1]
    b = [1]
    L = 0
    m = 1
    bb = 1
    for i, s in enumerate(synd):
        delta = s
        for j in range(1, L + 1):
            if j < len(c):
                delta ^= _GF.mul(c[j], synd[i - j])
        if delta == 0:
            m += 1
            continue
        coef = _GF.div(delta, bb)
        if len(b) + m > len(c):
            c = c + [0] * (len(b) + m - len(c))
        if 2 * L <= i:
            prev = list(c[: L + 1])
            for j, bj in enumerate(b):
                c[j + m] ^= _GF.mul(coef, bj)
            L = i + 1 - L
            b = prev
            bb = delta
            m = 1
        else:
            for j, bj in enumerate(b):
                c[j + m] ^= _GF.mul(coef, bj)
            m += 1
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c, L


def _decode_block(block: list[int], nsym: int) -> tuple[list[int], bool]:
    """Correct one block in place; returns (payload, ok)."""
    payload_len = len(block) - nsym
    if nsym == 0:
        return list(block), True
    synd = _syndromes(block, nsym)
    if max(synd) == 0:
        return block[:payload_len], True

    locator, n_errs = _berlekamp_massey(synd)
    if n_errs == 0 or n_errs > nsym // 2 or len(locator) - 1 != n_errs:
        return block[:payload_len], False

    n = len(block)
    asc = list(reversed(block))
    error_powers = [e for e in range(n) if _eval_poly_asc(locator, _GF.inv(_GF.pow_alpha(e))) == 0]
    if len(error_powers) != n_errs:
        return block[:payload_len], False

    # Forney: omega = S * locator mod x^nsym; derivative keeps odd-power terms.
    s_poly = list(synd)
    omega = [0] * nsym
    for i, si in enumerate(s_poly):
        for j, lj in enumerate(locator):
            if i + j < nsym:
                omega[i + j] ^= _GF.mul(si, lj)
    deriv = [locator[i] if i % 2 == 1 else 0 for i in range(1, len(locator))]

    for e in error_powers:
        x = _GF.pow_alpha(e)
        x_inv = _GF.inv(x)
        denom = _eval_poly_asc(deriv, x_inv)
        if denom == 0:
            return block[:payload_len], False
        magnitude = _GF.mul(x, _GF.div(_eval_poly_asc(omega, x_inv), denom))
        asc[e] ^= magnitude

    corrected = list(reversed(asc))
    if max(_syndromes(corrected, nsym)) != 0:
        return block[:payload_len], False
    return corrected[:payload_len], True


def block_plan(payload_len: int, parity_total: int) -> list[tuple[int, int]]:
    """Split (payload, parity) into RS blocks of at most 255 bytes each."""
    if payload_len < 1:
        raise ConfigError(f"payload length must be >= 1, got {payload_len}")
    if parity_total < 0:
        raise ConfigError(f"parity budget must be >= 0, got {parity_total}")
    n = max(1, math.ceil((payload_len + parity_total) / 255))
    while math.ceil(payload_len / n) + math.ceil(parity_total / n) > 255:
        n += 1
    pay_base, pay_extra = divmod(payload_len, n)
    par_base, par_extra = divmod(parity_total, n)
    return [
        (pay_base + (1 if i < pay_extra else 0), par_base + (1 if i < par_extra else 0))
        for i in range(n)
    ]


@dataclass(frozen=True)
class RsDecodeResult:
    values: np.ndarray
    failed_blocks: int

    @property
    def ok(self) -> bool:
        return self.failed_blocks == 0


def values_to_bytes(values: np.ndarray) -> np.ndarray:
    return (np.asarray(values, dtype=np.int64) & 0xFF).astype(np.uint8)


def bytes_to_values(data: np.ndarray) -> np.ndarray:
    raw = np.asarray(data, dtype=np.int64)
    return np.where(raw >= 128, raw - 256, raw)


def rs_encode(q: QuantizedVector, parity_symbols: int) -> np.ndarray:
    """Encode an 8-bit quantized vector; returns payload + parity bytes."""
    if q.bits != 8:
        raise ConfigError("Reed-Solomon baseline requires 8-bit quantization")
    payload = values_to_bytes(q.values).tolist()
    out: list[int] = []
    pos = 0
    for pay_len, par_len in block_plan(len(payload), parity_symbols):
        out.extend(_encode_block(payload[pos : pos + pay_len], par_len))
        pos += pay_len
    return np.array(out, dtype=np.uint8)


def rs_decode(codeword: np.ndarray, parity_symbols: int) -> RsDecodeResult:
    """Decode a (possibly corrupted) codeword back to signed 8-bit values.

    Any block beyond its correction bound counts as failed and contributes
    its raw received systematic bytes.
    """
    data = np.asarray(codeword, dtype=np.uint8).tolist()
    payload_len = len(data) - parity_symbols
    if payload_len < 1:
        raise ConfigError("codeword shorter than its parity budget")
    plan = block_plan(payload_len, parity_symbols)
    out: list[int] = []
    failed = 0
    pos = 0
    for pay_len, par_len in plan:
        block = data[pos : pos + pay_len + par_len]
        pos += pay_len + par_len
        decoded, ok = _decode_block(block, par_len)
        if not ok:
            failed += 1
        out.extend(decoded)
    return RsDecodeResult(values=bytes_to_values(np.array(out, dtype=np.uint8)), failed_blocks=failed)
