"""Learned per-dimension unequal error protection for quantized embeddings."""

from .allocation import (
    AllocationStrategy,
    allocate_baseline,
    allocate_deterministic,
    importance_weights_from_variance,
    sample_relaxed,
)
from .channel import ChannelConfig, snr_sigma, theoretical_ber_awgn, theoretical_ber_rayleigh, transmit
from .coding import (
    AllocationVector,
    RepetitionFrame,
    compute_budget,
    decode_majority,
    decode_symbol_vote,
    encode_repetition,
)
from .embedding_store import (
    Embedding,
    KnowledgeBase,
    cosine,
    l2_normalize,
    load_kb,
    planted_kb,
    random_kb,
    save_kb,
    synthetic_embed,
)
from .experiment import (
    EpisodeResult,
    ExperimentConfig,
    emit_results,
    run_episode,
    run_sweep,
)
from .pipeline import TransmissionSpec, transmit_embedding
from .quantizer import QuantizedVector, dequantize, quantize_det, quantize_stoch
from .reed_solomon import rs_decode, rs_encode
from .rl import (
    CriticParams,
    PolicyParams,
    TrainConfig,
    TrainResult,
    actor_forward,
    critic_forward,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .semantics import chrf, entity_loss, extract_entities, reconstruct, semantic_distortion
from .stats import PairedSample, bonferroni, bootstrap_ci, cohens_d, permutation_test, wilcoxon_signed_rank

__version__ = "0.1.0"
