"""End-to-end evaluation: episode runner, strategy sweeps, result files.

Sweeps pair message and channel-noise seeds across strategies (common random
numbers), so per-message metrics are directly comparable and the paired tests
in the summary are meaningful. The held-out evaluation set is the last
`eval_messages` knowledge-base entries; training and importance-weight
estimation only ever see the rest.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    AllocationStrategy,
    allocate_baseline,
    allocate_deterministic,
    importance_weights_from_variance,
)
from .channel import ChannelConfig, transmit
from .coding import compute_budget
from .embedding_store import Embedding, KnowledgeBase
from .errors import ConfigError, InputError, UndefinedEffectError
from .pipeline import TransmissionSpec, reconstruction_metrics, transmit_embedding
from .rl import PolicyParams, actor_forward
from .semantics import chrf, failure_embedding, reconstruct
from .stats import PairedSample, bootstrap_ci, cohens_d, permutation_test, wilcoxon_signed_rank

RESULT_COLUMNS = (
    "message_id", "snr_db", "strategy", "d_s", "cosine", "chrf",
    "entity_fraction", "ber", "bits_used", "status",
)

BOOTSTRAP_RESAMPLES = 200
BOOTSTRAP_LEVEL = 0.95


@dataclass(frozen=True)
class ExperimentConfig:
    kb_path: str | None = None
    channel_model: str = "awgn"
    bits: int = 8
    ecc: str = "repetition"
    vote: str = "bit"
    quant: str = "det"
    ecc_rate: float = 0.02
    alpha_distortion: float = 0.5
    tau_r: float = 0.9
    tau_g: float = 0.2
    eval_messages: int = 400
    snr_list: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0)
    seed: int = 0
    permutation_iterations: int = 2000
    bsc_p: float = 0.05
    rician_k: float = 1.0
    nakagami_m: float = 1.0

    def __post_init__(self):
        if self.eval_messages < 1:
            raise ConfigError("eval_messages must be >= 1")
        if not self.snr_list:
            raise ConfigError("snr_list must be nonempty")
        if self.ecc_rate < 0:
            raise ConfigError("ecc_rate must be >= 0")

    def channel_config(self, snr_db: float) -> ChannelConfig:
        return ChannelConfig(
            model=self.channel_model, snr_db=snr_db, bsc_p=self.bsc_p,
            rician_k=self.rician_k, nakagami_m=self.nakagami_m,
        )

    def transmission_spec(self, snr_db: float) -> TransmissionSpec:
        return TransmissionSpec(
            bits=self.bits, channel=self.channel_config(snr_db),
            ecc=self.ecc, vote=self.vote, quant=self.quant,
        )


@dataclass(frozen=True)
class EpisodeResult:
    message_id: int
    snr_db: float
    strategy: str
    d_s: float
    cosine: float
    chrf: float
    entity_fraction: float
    ber: float
    bits_used: int
    status: str


def run_episode(
    entry: Embedding,
    kb: KnowledgeBase,
    cfg: ExperimentConfig,
    strategy: AllocationStrategy,
    snr_db: float,
    channel_rng: np.random.Generator,
    aux_rng: np.random.Generator,
    policy: PolicyParams | None = None,
    fail_vec: np.ndarray | None = None,
    channel_fn=transmit,
) -> EpisodeResult:
    """One message through allocate -> transmit -> decode -> retrieve -> score."""
    if strategy.kind == "learned" and policy is None:
        raise ConfigError("learned strategy requires a trained policy")
    entry_index = kb.index_of(entry.id)
    z = kb.unit_matrix()[entry_index]
    budget, _ = compute_budget(kb.dimension, cfg.ecc_rate)

    if strategy.kind == "learned":
        p = actor_forward(policy, z)
        alloc = allocate_deterministic(p, budget)
    else:
        alloc = allocate_baseline(strategy, kb.dimension, budget, aux_rng)

    spec = cfg.transmission_spec(snr_db)
    outcome = transmit_embedding(z, alloc, spec, channel_rng, channel_fn)
    recon = reconstruct(outcome.z_hat, kb, cfg.tau_r, cfg.tau_g)
    cos_sim, ent_loss, d_s = reconstruction_metrics(
        kb, entry_index, z, recon, cfg.alpha_distortion, fail_vec
    )
    return EpisodeResult(
        message_id=entry.id,
        snr_db=snr_db,
        strategy=strategy.kind,
        d_s=d_s,
        cosine=cos_sim,
        chrf=chrf(entry.text, recon.text),
        entity_fraction=1.0 - ent_loss,
        ber=outcome.ber,
        bits_used=outcome.bits_used,
        status=recon.status,
    )


def split_eval(kb: KnowledgeBase, eval_messages: int) -> tuple[np.ndarray, np.ndarray]:
    """(train indices, held-out indices): the tail of the KB is held out."""
    if eval_messages >= len(kb):
        raise ConfigError(
            f"eval_messages={eval_messages} needs a KB larger than {len(kb)} entries"
        )
    n = len(kb)
    return np.arange(0, n - eval_messages), np.arange(n - eval_messages, n)


def build_strategies(
    names: list[str],
    kb: KnowledgeBase,
    train_indices: np.ndarray,
) -> dict[str, AllocationStrategy]:
    """Instantiate strategies; variance weights come from the training slice only."""
    out: dict[str, AllocationStrategy] = {}
    weights = None
    for name in names:
        if name in ("importance", "no_uep"):
            if weights is None:
                sub = KnowledgeBase(
                    [kb[int(i)] for i in train_indices], dimension=kb.dimension
                )
                weights = importance_weights_from_variance(sub)
            out[name] = AllocationStrategy(kind=name, importance_weights=weights)
        else:
            out[name] = AllocationStrategy(kind=name)
    return out


def _episode_seeds(seed: int, message_id: int, snr_db: float, strategy_index: int):
    snr_key = int(round(snr_db * 1000.0))
    channel_seq = np.random.SeedSequence(entropy=seed, spawn_key=(1, message_id, snr_key))
    aux_seq = np.random.SeedSequence(
        entropy=seed, spawn_key=(2, message_id, snr_key, strategy_index)
    )
    return np.random.default_rng(channel_seq), np.random.default_rng(aux_seq)


@dataclass
class SweepResult:
    rows: list[EpisodeResult]
    cells: dict = field(default_factory=dict)        # (strategy, snr) -> metric summary
    comparisons: dict = field(default_factory=dict)  # (strategy, snr) -> tests vs uniform


def run_sweep(
    kb: KnowledgeBase,
    cfg: ExperimentConfig,
    strategy_names: list[str],
    policy: PolicyParams | None = None,
    channel_fn=transmit,
) -> SweepResult:
    """Evaluate every (strategy, snr) cell over the held-out messages."""
    if not strategy_names:
        raise InputError("need at least one strategy")
    train_idx, eval_idx = split_eval(kb, cfg.eval_messages)
    strategies = build_strategies(strategy_names, kb, train_idx)
    fail_vec = failure_embedding(kb)

    rows: list[EpisodeResult] = []
    per_cell: dict[tuple[str, float], list[EpisodeResult]] = {}
    for snr_db in cfg.snr_list:
        for mi in eval_idx:
            entry = kb[int(mi)]
            for si, name in enumerate(strategy_names):
                channel_rng, aux_rng = _episode_seeds(cfg.seed, entry.id, snr_db, si)
                res = run_episode(
                    entry, kb, cfg, strategies[name], snr_db,
                    channel_rng, aux_rng, policy=policy, fail_vec=fail_vec,
                    channel_fn=channel_fn,
                )
                rows.append(res)
                per_cell.setdefault((name, snr_db), []).append(res)

    result = SweepResult(rows=rows)
    ci_rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(3,)))
    for key, cell_rows in per_cell.items():
        summary = {}
        for metric in ("d_s", "chrf", "entity_fraction", "cosine", "ber"):
            vals = np.array([getattr(r, metric) for r in cell_rows])
            summary[metric] = float(vals.mean())
            if metric in ("d_s", "chrf", "entity_fraction"):
                lo, hi = bootstrap_ci(vals, BOOTSTRAP_RESAMPLES, BOOTSTRAP_LEVEL, ci_rng)
                summary[f"{metric}_ci"] = (lo, hi)
        result.cells[key] = summary

    if "uniform" in strategy_names:
        perm_rng = np.random.default_rng(
            np.random.SeedSequence(entropy=cfg.seed, spawn_key=(4,))
        )
        for snr_db in cfg.snr_list:
            base = np.array([r.d_s for r in per_cell[("uniform", snr_db)]])
            for name in strategy_names:
                if name == "uniform":
                    continue
                other = np.array([r.d_s for r in per_cell[(name, snr_db)]])
                pairs = PairedSample(a=other, b=base)
                _, w_p = wilcoxon_signed_rank(pairs)
                perm_p = permutation_test(pairs, cfg.permutation_iterations, perm_rng)
                try:
                    d = cohens_d(pairs)
                except (UndefinedEffectError, InputError):
                    d = None
                result.comparisons[(name, snr_db)] = {
                    "wilcoxon_p": w_p, "permutation_p": perm_p, "cohens_d": d,
                }
    return result


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def emit_results(rows: list[EpisodeResult], path, format: str = "csv") -> None:
    """Persist episode rows; CSV header is fixed, JSON-lines mirrors the names."""
    if format == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(RESULT_COLUMNS)
            for r in rows:
                writer.writerow([_format_value(getattr(r, c)) for c in RESULT_COLUMNS])
    elif format == "json_lines":
        with open(path, "w") as f:
            for r in rows:
                record = {}
                for c in RESULT_COLUMNS:
                    v = getattr(r, c)
                    record[c] = float(_format_value(v)) if isinstance(v, float) else v
                f.write(json.dumps(record) + "\n")
    else:
        raise ConfigError(f"unknown results format {format!r}")


def load_results_csv(path) -> list[EpisodeResult]:
    """Parse a CSV produced by emit_results back into result rows."""
    out = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != list(RESULT_COLUMNS):
            raise ConfigError(f"unexpected results header: {reader.fieldnames}")
        for rec in reader:
            out.append(EpisodeResult(
                message_id=int(rec["message_id"]),
                snr_db=float(rec["snr_db"]),
                strategy=rec["strategy"],
                d_s=float(rec["d_s"]),
                cosine=float(rec["cosine"]),
                chrf=float(rec["chrf"]),
                entity_fraction=float(rec["entity_fraction"]),
                ber=float(rec["ber"]),
                bits_used=int(rec["bits_used"]),
                status=rec["status"],
            ))
    return out


def parse_config_file(path) -> dict:
    """Flat key-value config: one `key = value` per line, # comments allowed."""
    out: dict = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, value = line.partition("=")
            elif ":" in line:
                key, _, value = line.partition(":")
            else:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip()] = _parse_scalar(value.strip())
    return out


def _parse_scalar(text: str):
    if "," in text:
        return tuple(_parse_scalar(part.strip()) for part in text.split(","))
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text
