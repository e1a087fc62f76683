"""Actor-critic allocation policy: networks, gradients, optimizer, training.

Everything is plain numpy with explicit backpropagation so gradients can be
audited against finite differences. The actor maps a unit embedding to a
probability vector over dimensions through a 2-hidden-layer ReLU MLP with a
softmax head; the critic shares the architecture with a scalar head.

Training follows the advantage actor-critic recipe: per episode the policy's
multinomial sample is rolled out through quantize -> encode -> channel ->
decode -> retrieve, the reward is the negative composite distortion minus a
budget penalty, and the advantage (reward minus critic value, normalized over
a sliding window) weights the multinomial log-likelihood gradient together
with an entropy bonus. At deployment the allocation is deterministic (floor
plus greedy residual), which is also available as a rollout mode for
training; with it the gradient keeps the sampled log-likelihood, so the
estimator matches deployment but carries no distortion signal in expectation.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .allocation import allocate_deterministic, sample_relaxed
from .coding import AllocationVector, compute_budget
from .embedding_store import KnowledgeBase, l2_normalize
from .errors import ConfigError, DimensionError, InputError, NumericError, TrainingDivergedError

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_VERSION = 1


# --- parameter containers ----------------------------------------------------

class Mlp:
    """Fully-connected ReLU network; weights[i] is (fan_out, fan_in)."""

    def __init__(self, weights: list[np.ndarray], biases: list[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise InputError("weights and biases must be nonempty and parallel")
        self.weights = [np.asarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float64) for b in biases]

    @property
    def dim_in(self) -> int:
        return self.weights[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.weights[-1].shape[0]

    def tensors(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def copy(self) -> "Mlp":
        return type(self)([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(t)) for t in self.tensors())


class PolicyParams(Mlp):
    """Actor network; forward output is a point on the probability simplex."""


class CriticParams(Mlp):
    """Value network; forward output is a scalar."""


def _init_mlp(cls, dim_in: int, hidden: tuple[int, ...], dim_out: int,
              rng: np.random.Generator):
    sizes = [dim_in, *hidden, dim_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return cls(weights, biases)


def init_policy(dim: int, hidden: tuple[int, ...], rng: np.random.Generator) -> PolicyParams:
    return _init_mlp(PolicyParams, dim, hidden, dim, rng)


def init_critic(dim: int, hidden: tuple[int, ...], rng: np.random.Generator) -> CriticParams:
    return _init_mlp(CriticParams, dim, hidden, 1, rng)


# --- forward / backward ------------------------------------------------------

def _mlp_forward(params: Mlp, x: np.ndarray):
    """Returns (logits, cache) where cache holds layer inputs and pre-activations."""
    inputs = [np.asarray(x, dtype=np.float64)]
    pres = []
    a = inputs[0]
    n_layers = len(params.weights)
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        pre = w @ a + b
        pres.append(pre)
        a = np.maximum(pre, 0.0) if i < n_layers - 1 else pre
        inputs.append(a)
    return inputs[-1], (inputs, pres)


def _mlp_backward(params: Mlp, cache, dout: np.ndarray) -> list[np.ndarray]:
    """Gradients w.r.t. every tensor, ordered like Mlp.tensors()."""
    inputs, pres = cache
    n_layers = len(params.weights)
    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    delta = np.asarray(dout, dtype=np.float64)
    for i in range(n_layers - 1, -1, -1):
        if i < n_layers - 1:
            delta = delta * (pres[i] > 0.0)
        grads_w[i] = np.outer(delta, inputs[i])
        grads_b[i] = delta.copy()
        if i > 0:
            delta = params.weights[i].T @ delta
    out = []
    for gw, gb in zip(grads_w, grads_b):
        out.append(gw)
        out.append(gb)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / e.sum()


def entropy(p: np.ndarray) -> float:
    # saturated components may carry exact zeros; the resulting non-finite
    # values are surfaced by the callers' divergence checks, not warned about
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(-np.sum(p * np.log(p)))


def actor_forward(params: PolicyParams, z: np.ndarray) -> np.ndarray:
    """Probability vector over dimensions; raises on numeric blow-up."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.dim_in,):
        raise DimensionError(f"input shape {z.shape}, expected ({params.dim_in},)")
    logits, _ = _mlp_forward(params, z)
    if not np.all(np.isfinite(logits)):
        raise NumericError("actor produced non-finite logits")
    return softmax(logits)


def critic_forward(params: CriticParams, z: np.ndarray) -> float:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (params.dim_in,):
        raise DimensionError(f"input shape {z.shape}, expected ({params.dim_in},)")
    out, _ = _mlp_forward(params, z)
    v = float(out[0])
    if not np.isfinite(v):
        raise NumericError("critic produced a non-finite value")
    return v


def actor_objective(params: PolicyParams, z: np.ndarray, extras: np.ndarray,
                    advantage: float, entropy_beta: float) -> float:
    """advantage * sum_i t_i log p_i + beta * H(p); the quantity whose ascent
    gradient drives the actor (the multinomial coefficient is theta-free)."""
    p = actor_forward(params, z)
    t = np.asarray(extras, dtype=np.float64)
    return float(advantage * np.sum(t * np.log(p)) + entropy_beta * entropy(p))


def actor_gradients(params: PolicyParams, z: np.ndarray, extras: np.ndarray,
                    advantage: float, entropy_beta: float) -> list[np.ndarray]:
    """Ascent gradients of actor_objective for every actor tensor."""
    z = np.asarray(z, dtype=np.float64)
    logits, cache = _mlp_forward(params, z)
    if not np.all(np.isfinite(logits)):
        raise NumericError("actor produced non-finite logits")
    p = softmax(logits)
    t = np.asarray(extras, dtype=np.float64)
    h = entropy(p)
    # d/dlogits of sum_i t_i log p_i is t - (sum t) p; of H it is -p (log p + H).
    with np.errstate(divide="ignore", invalid="ignore"):
        dlogits = advantage * (t - t.sum() * p) + entropy_beta * (-p * (np.log(p) + h))
    grads = _mlp_backward(params, cache, dlogits)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise NumericError("actor gradients are non-finite")
    return grads


def critic_loss(params: CriticParams, z: np.ndarray, target: float) -> float:
    v = critic_forward(params, z)
    return (target - v) ** 2


def critic_gradients(params: CriticParams, z: np.ndarray, target: float) -> list[np.ndarray]:
    """Descent gradients of the squared value error."""
    z = np.asarray(z, dtype=np.float64)
    out, cache = _mlp_forward(params, z)
    v = float(out[0])
    if not np.isfinite(v):
        raise NumericError("critic produced a non-finite value")
    dlogits = np.array([2.0 * (v - target)])
    grads = _mlp_backward(params, cache, dlogits)
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise NumericError("critic gradients are non-finite")
    return grads


def compute_gradients(actor: PolicyParams, critic: CriticParams, z: np.ndarray,
                      t_relax: AllocationVector, advantage: float, reward: float,
                      entropy_beta: float) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Actor ascent gradients and critic descent gradients for one episode."""
    a = actor_gradients(actor, z, t_relax.extras, advantage, entropy_beta)
    c = critic_gradients(critic, z, reward)
    return a, c


# --- optimizer ---------------------------------------------------------------

class AdamState:
    """First/second moment accumulators, one pair per parameter tensor."""

    def __init__(self, params: Mlp):
        self.m = [np.zeros_like(t) for t in params.tensors()]
        self.v = [np.zeros_like(t) for t in params.tensors()]
        self.step = 0


def clip_gradients(grads: list[np.ndarray], clip_norm: float) -> list[np.ndarray]:
    """Rescale so the global 2-norm is at most clip_norm; never grows."""
    if not np.isfinite(clip_norm):
        return grads
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total <= clip_norm or total == 0.0:
        return grads
    scale = clip_norm / total
    return [g * scale for g in grads]


def optimizer_step(params: Mlp, grads: list[np.ndarray], adam: AdamState,
                   lr: float, clip_norm: float, maximize: bool = False) -> None:
    """Clipped Adam update in place; maximize flips to gradient ascent."""
    tensors = params.tensors()
    if len(grads) != len(tensors):
        raise InputError("gradient count does not match parameter count")
    grads = clip_gradients(grads, clip_norm)
    adam.step += 1
    t = adam.step
    for tensor, g, m, v in zip(tensors, grads, adam.m, adam.v):
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        m_hat = m / (1.0 - ADAM_BETA1 ** t)
        v_hat = v / (1.0 - ADAM_BETA2 ** t)
        update = lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        if maximize:
            tensor += update
        else:
            tensor -= update


def normalize_advantages(values: np.ndarray, guard: float = 1e-8) -> np.ndarray:
    """Shift to mean 0 and scale to std 1; all zeros when the std is degenerate."""
    values = np.asarray(values, dtype=np.float64)
    centered = values - values.mean()
    std = float(values.std())
    if std < guard:
        return np.zeros_like(values)
    return centered / std


# --- training ----------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 3
    episodes_per_epoch: int = 128
    actor_lr: float = 5e-4
    critic_lr: float = 5e-4
    grad_clip_norm: float = 1.0
    entropy_beta: float = 0.01
    lambda_reg: float = 0.0
    alpha_distortion: float = 0.5
    train_snr_db: float = 0.0
    seed: int = 0
    bits: int = 8
    ecc_rate: float = 0.02
    tau_r: float = 0.9
    tau_g: float = 0.2
    hidden: tuple[int, ...] = (128, 128)
    adv_window: int = 16
    adv_mode: str = "window"  # "window": normalize over recent episodes;
                              # "critic": critic is the baseline, window sets scale
    rollout_mode: str = "relaxed"  # "relaxed" (training protocol) or "deterministic"
    vote: str = "bit"

    def __post_init__(self):
        if self.epochs < 1 or self.episodes_per_epoch < 1:
            raise ConfigError("epochs and episodes_per_epoch must be >= 1")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ConfigError("learning rates must be positive")
        if not (0.0 <= self.alpha_distortion <= 1.0):
            raise ConfigError("alpha_distortion must be in [0, 1]")
        if self.lambda_reg < 0:
            raise ConfigError("lambda_reg must be non-negative")
        if self.rollout_mode not in ("relaxed", "deterministic"):
            raise ConfigError(f"unknown rollout_mode {self.rollout_mode!r}")
        if self.adv_mode not in ("window", "critic"):
            raise ConfigError(f"unknown adv_mode {self.adv_mode!r}")
        if self.adv_window < 1:
            raise ConfigError("adv_window must be >= 1")


@dataclass
class EpochLog:
    epoch: int
    mean_reward: float
    mean_distortion: float
    mean_entropy: float


@dataclass
class TrainResult:
    policy: PolicyParams
    critic: CriticParams
    log: list[EpochLog] = field(default_factory=list)
    budget: int = 0


def _default_rollout(kb: KnowledgeBase, cfg: TrainConfig):
    """Quantize -> encode -> 0 dB AWGN -> decode -> retrieve -> distortion."""
    from .channel import ChannelConfig
    from .pipeline import TransmissionSpec, episode_distortion

    spec = TransmissionSpec(
        bits=cfg.bits,
        channel=ChannelConfig(model="awgn", snr_db=cfg.train_snr_db),
        vote=cfg.vote,
    )

    def rollout(entry_index: int, z: np.ndarray, alloc: AllocationVector,
                channel_rng: np.random.Generator, aux_rng: np.random.Generator) -> float:
        return episode_distortion(
            kb, entry_index, z, alloc, spec,
            alpha=cfg.alpha_distortion, tau_r=cfg.tau_r, tau_g=cfg.tau_g,
            channel_rng=channel_rng,
        )

    return rollout


def train(
    kb: KnowledgeBase,
    cfg: TrainConfig,
    rollout_fn=None,
    train_indices: np.ndarray | None = None,
) -> TrainResult:
    """Run the actor-critic training loop; bit-reproducible given (seed, cfg, kb).

    rollout_fn(entry_index, z, alloc, channel_rng, aux_rng) -> distortion may be
    injected for tests; the default runs the real transmission pipeline.
    """
    dim = kb.dimension
    budget, _ = compute_budget(dim, cfg.ecc_rate)
    if train_indices is None:
        train_indices = np.arange(len(kb))
    train_indices = np.asarray(train_indices, dtype=np.int64)
    if train_indices.size == 0:
        raise ConfigError("no training messages available")
    if rollout_fn is None:
        rollout_fn = _default_rollout(kb, cfg)

    root = np.random.SeedSequence(cfg.seed)
    init_seq, msg_seq, episode_seq = root.spawn(3)
    init_rng = np.random.default_rng(init_seq)
    msg_rng = np.random.default_rng(msg_seq)

    actor = init_policy(dim, cfg.hidden, init_rng)
    critic = init_critic(dim, cfg.hidden, init_rng)
    actor_adam = AdamState(actor)
    critic_adam = AdamState(critic)

    unit_vectors = kb.unit_matrix()
    window: deque[float] = deque(maxlen=cfg.adv_window)
    result = TrainResult(policy=actor, critic=critic, budget=budget)
    last_good = (actor.copy(), critic.copy())

    for epoch in range(cfg.epochs):
        rewards, distortions, entropies = [], [], []
        for ep in range(cfg.episodes_per_epoch):
            ep_seq = np.random.SeedSequence(
                entropy=cfg.seed, spawn_key=(2, epoch, ep)
            )
            channel_rng, aux_rng = (np.random.default_rng(s) for s in ep_seq.spawn(2))

            idx = int(msg_rng.choice(train_indices))
            z = unit_vectors[idx]
            try:
                p = actor_forward(actor, z)
                t_relax = sample_relaxed(p, budget, aux_rng)
                if cfg.rollout_mode == "relaxed":
                    rolled = t_relax
                else:
                    rolled = allocate_deterministic(p, budget)
                distortion = float(rollout_fn(idx, z, rolled, channel_rng, aux_rng))
                reward = -distortion - cfg.lambda_reg * float(rolled.extras.sum())
                value = critic_forward(critic, z)

                window.append(reward - value)
                if cfg.adv_mode == "window":
                    adv = float(normalize_advantages(np.array(window))[-1])
                else:
                    # Critic supplies the baseline; the window only sets the
                    # scale, so the estimate cannot chase recent-reward trends.
                    scale = float(np.std(np.array(window)))
                    adv = (reward - value) / max(scale, 1e-2)
                # The budget penalty is constant under a full-spend allocation,
                # so advantage normalization would silently cancel it; feed it
                # to the policy through the sampled log-likelihood instead.
                coef = adv - cfg.lambda_reg * float(t_relax.extras.sum())

                a_grads = actor_gradients(actor, z, t_relax.extras, coef, cfg.entropy_beta)
                c_grads = critic_gradients(critic, z, reward)
                optimizer_step(actor, a_grads, actor_adam, cfg.actor_lr,
                               cfg.grad_clip_norm, maximize=True)
                optimizer_step(critic, c_grads, critic_adam, cfg.critic_lr,
                               cfg.grad_clip_norm)
            except NumericError as exc:
                raise TrainingDivergedError(
                    f"training diverged at epoch {epoch}, episode {ep}: {exc}",
                    last_good=last_good,
                ) from exc
            if not (actor.all_finite() and critic.all_finite()):
                raise TrainingDivergedError(
                    f"non-finite parameters at epoch {epoch}, episode {ep}",
                    last_good=last_good,
                )
            rewards.append(reward)
            distortions.append(distortion)
            entropies.append(entropy(p))
        last_good = (actor.copy(), critic.copy())
        result.log.append(EpochLog(
            epoch=epoch,
            mean_reward=float(np.mean(rewards)),
            mean_distortion=float(np.mean(distortions)),
            mean_entropy=float(np.mean(entropies)),
        ))
    return result


# --- checkpoint io -----------------------------------------------------------

def save_checkpoint(path, result: TrainResult, cfg: TrainConfig) -> None:
    arrays = {}
    for name, net in (("actor", result.policy), ("critic", result.critic)):
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}_w{i}"] = w
            arrays[f"{name}_b{i}"] = b
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "dim": result.policy.dim_in,
        "hidden": list(cfg.hidden),
        "seed": cfg.seed,
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in vars(cfg).items()},
    }
    np.savez(path, meta=json.dumps(meta), **arrays)


@dataclass
class Checkpoint:
    policy: PolicyParams
    critic: CriticParams
    dim: int
    meta: dict


def load_checkpoint(path, expected_dim: int | None = None) -> Checkpoint:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ConfigError(
                f"unsupported checkpoint version {meta.get('format_version')}"
            )
        dim = int(meta["dim"])
        if expected_dim is not None and dim != expected_dim:
            raise DimensionError(
                f"checkpoint trained for dimension {dim}, knowledge base has {expected_dim}"
            )
        nets = {}
        for name, cls in (("actor", PolicyParams), ("critic", CriticParams)):
            weights, biases = [], []
            i = 0
            while f"{name}_w{i}" in data:
                weights.append(data[f"{name}_w{i}"])
                biases.append(data[f"{name}_b{i}"])
                i += 1
            nets[name] = cls(weights, biases)
    return Checkpoint(policy=nets["actor"], critic=nets["critic"], dim=dim, meta=meta)
