"""The transmission pipeline shared by training rollouts and evaluation.

Everything that must pair across allocation strategies under common random
numbers draws from `channel_rng`: stochastic-quantizer dither (before the
noise), the channel noise itself, and vote tie-break coins (after it).
Seeding that stream per (message, snr) therefore makes two strategies with
identical frames produce bit-identical outcomes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelConfig, transmit
from .coding import AllocationVector, decode_majority, decode_symbol_vote, encode_repetition
from .embedding_store import KnowledgeBase, cosine
from .errors import ConfigError
from .quantizer import QuantizedVector, clamp_values, dequantize, quantize_det, quantize_stoch
from .reed_solomon import rs_decode, rs_encode
from .semantics import (
    ReconstructionResult,
    composite_distortion,
    entity_loss,
    failure_embedding,
    reconstruct,
)

ECC_MODES = ("repetition", "reed_solomon")
VOTE_MODES = ("bit", "symbol")
QUANT_MODES = ("det", "stoch")


@dataclass(frozen=True)
class TransmissionSpec:
    bits: int = 8
    channel: ChannelConfig = ChannelConfig()
    ecc: str = "repetition"
    vote: str = "bit"
    quant: str = "det"

    def __post_init__(self):
        if self.ecc not in ECC_MODES:
            raise ConfigError(f"unknown ecc mode {self.ecc!r}")
        if self.vote not in VOTE_MODES:
            raise ConfigError(f"unknown vote mode {self.vote!r}")
        if self.quant not in QUANT_MODES:
            raise ConfigError(f"unknown quantizer mode {self.quant!r}")


@dataclass(frozen=True)
class TransmissionOutcome:
    z_hat: np.ndarray
    ber: float
    bits_used: int


def transmit_embedding(
    z: np.ndarray,
    alloc: AllocationVector,
    spec: TransmissionSpec,
    channel_rng: np.random.Generator,
    channel_fn=transmit,
) -> TransmissionOutcome:
    """Send one embedding through the channel; BER is measured pre-decoding."""
    if spec.quant == "det":
        q = quantize_det(z, spec.bits)
    else:
        q = quantize_stoch(z, spec.bits, channel_rng)

    if spec.ecc == "repetition":
        frame = encode_repetition(q, alloc)
        received = channel_fn(frame.bits, spec.channel, channel_rng)
        ber = float(np.mean(frame.bits != received))
        received_frame = frame.with_bits(received)
        if spec.vote == "bit":
            values = decode_majority(received_frame, channel_rng)
        else:
            values = decode_symbol_vote(received_frame, channel_rng)
        bits_used = frame.bit_length
    else:
        codeword = rs_encode(q, parity_symbols=alloc.budget)
        sent_bits = np.unpackbits(codeword)
        received_bits = channel_fn(sent_bits, spec.channel, channel_rng)
        ber = float(np.mean(sent_bits != received_bits))
        received_bytes = np.packbits(received_bits)
        values = rs_decode(received_bytes, parity_symbols=alloc.budget).values
        bits_used = int(sent_bits.size)

    z_hat = dequantize(QuantizedVector(
        values=clamp_values(values, spec.bits), scale=q.scale, bits=spec.bits,
    ))
    return TransmissionOutcome(z_hat=z_hat, ber=ber, bits_used=bits_used)


def reconstruction_metrics(
    kb: KnowledgeBase,
    entry_index: int,
    z_unit: np.ndarray,
    recon: ReconstructionResult,
    alpha: float,
    fail_vec: np.ndarray | None = None,
) -> tuple[float, float, float]:
    """(cosine, entity loss, composite distortion) for one reconstruction.

    The reconstruction is a KB entry or the failure token, so its embedding is
    a lookup; the failure token maps to a fixed vector orthogonal to the KB
    mean. Cosine is measured between the source and reconstructed embeddings.
    """
    entry = kb[entry_index]
    if recon.kb_id is None:
        if fail_vec is None:
            fail_vec = failure_embedding(kb)
        cos_sim = cosine(z_unit, fail_vec)
    elif recon.kb_id == entry.id:
        cos_sim = 1.0
    else:
        cos_sim = cosine(z_unit, kb.unit_matrix()[kb.index_of(recon.kb_id)])
    ent_loss = entity_loss(entry.text, recon.text)
    return cos_sim, ent_loss, composite_distortion(cos_sim, ent_loss, alpha)


def episode_distortion(
    kb: KnowledgeBase,
    entry_index: int,
    z_unit: np.ndarray,
    alloc: AllocationVector,
    spec: TransmissionSpec,
    alpha: float,
    tau_r: float,
    tau_g: float,
    channel_rng: np.random.Generator,
    fail_vec: np.ndarray | None = None,
) -> float:
    """Composite distortion of one full transmit-and-retrieve episode."""
    outcome = transmit_embedding(z_unit, alloc, spec, channel_rng)
    recon = reconstruct(outcome.z_hat, kb, tau_r, tau_g)
    _, _, d_s = reconstruction_metrics(kb, entry_index, z_unit, recon, alpha, fail_vec)
    return d_s
