"""Command-line entry points: train, eval, export-synthetic.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

import numpy as np

from . import experiment, rl
from .embedding_store import load_kb, planted_kb, random_kb, save_kb
from .errors import (
    ConfigError,
    DimensionError,
    FormatError,
    InputError,
    SemuepError,
    TrainingDivergedError,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2


class _ArgumentError(ConfigError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="semuep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train an allocation policy")
    p_train.add_argument("--kb", required=True, help="SEMB knowledge base path")
    p_train.add_argument("--config", help="flat key=value training config file")
    p_train.add_argument("--out", required=True, help="checkpoint output path (.npz)")
    p_train.add_argument("--holdout", type=int, default=None,
                         help="KB tail entries excluded from training "
                              "(default: the config's eval_messages, capped to fit)")

    p_eval = sub.add_parser("eval", help="run an evaluation sweep")
    p_eval.add_argument("--kb", required=True)
    p_eval.add_argument("--checkpoint", help="trained policy (.npz); needed for learned")
    p_eval.add_argument("--strategies", default="uniform",
                        help="comma list of uniform,random,importance,no_uep,learned")
    p_eval.add_argument("--snr", default="0,1,2,3", help="comma list of SNR dB values")
    p_eval.add_argument("--channel", default="awgn",
                        choices=("awgn", "rayleigh", "rician", "nakagami", "burst", "bsc"))
    p_eval.add_argument("--ecc", default="repetition", choices=("repetition", "reed_solomon"))
    p_eval.add_argument("--vote", default="bit", choices=("bit", "symbol"))
    p_eval.add_argument("--quant", default="det", choices=("det", "stoch"))
    p_eval.add_argument("--bits", type=int, default=8)
    p_eval.add_argument("--ecc-rate", type=float, default=0.02)
    p_eval.add_argument("--alpha", type=float, default=0.5)
    p_eval.add_argument("--tau-r", type=float, default=0.9)
    p_eval.add_argument("--tau-g", type=float, default=0.2)
    p_eval.add_argument("--eval-messages", type=int, default=400)
    p_eval.add_argument("--bsc-p", type=float, default=0.05)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--out", required=True, help="results file path")
    p_eval.add_argument("--format", default="csv", choices=("csv", "json_lines"))

    p_syn = sub.add_parser("export-synthetic", help="write a synthetic SEMB KB")
    p_syn.add_argument("--dim", type=int, required=True)
    p_syn.add_argument("--count", type=int, required=True)
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--out", required=True)
    p_syn.add_argument("--planted-dims", type=int, default=0,
                       help="concentrate the signal in this many leading dimensions")
    p_syn.add_argument("--noise-scale", type=float, default=0.005)
    return parser


_TRAIN_FIELDS = {f.name for f in fields(rl.TrainConfig)}


def _train_config_from_file(path: str | None) -> rl.TrainConfig:
    if path is None:
        return rl.TrainConfig()
    values = experiment.parse_config_file(path)
    unknown = set(values) - _TRAIN_FIELDS
    if unknown:
        raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
    if "hidden" in values:
        h = values["hidden"]
        values["hidden"] = tuple(h) if isinstance(h, tuple) else (int(h),)
    return rl.TrainConfig(**values)


def _cmd_train(args) -> int:
    kb = load_kb(args.kb)
    cfg = _train_config_from_file(args.config)
    holdout = args.holdout
    if holdout is None:
        holdout = min(400, max(0, len(kb) // 2))
    train_indices = np.arange(len(kb) - holdout) if holdout else None
    try:
        result = rl.train(kb, cfg, train_indices=train_indices)
    except TrainingDivergedError as exc:
        if exc.last_good is not None:
            actor, critic = exc.last_good
            rl.save_checkpoint(args.out, rl.TrainResult(policy=actor, critic=critic), cfg)
            print(f"training diverged; last good checkpoint saved to {args.out}",
                  file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    rl.save_checkpoint(args.out, result, cfg)
    for entry in result.log:
        print(f"epoch {entry.epoch}: reward {entry.mean_reward:.4f} "
              f"distortion {entry.mean_distortion:.4f} entropy {entry.mean_entropy:.4f}")
    print(f"checkpoint written to {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    kb = load_kb(args.kb)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    snr_list = tuple(float(s) for s in args.snr.split(","))
    cfg = experiment.ExperimentConfig(
        kb_path=args.kb,
        channel_model=args.channel,
        bits=args.bits,
        ecc=args.ecc,
        vote=args.vote,
        quant=args.quant,
        ecc_rate=args.ecc_rate,
        alpha_distortion=args.alpha,
        tau_r=args.tau_r,
        tau_g=args.tau_g,
        eval_messages=args.eval_messages,
        snr_list=snr_list,
        seed=args.seed,
        bsc_p=args.bsc_p,
    )
    policy = None
    if "learned" in strategies:
        if not args.checkpoint:
            raise ConfigError("--checkpoint is required when evaluating 'learned'")
        policy = rl.load_checkpoint(args.checkpoint, expected_dim=kb.dimension).policy
    sweep = experiment.run_sweep(kb, cfg, strategies, policy=policy)
    experiment.emit_results(sweep.rows, args.out, format=args.format)

    for (name, snr), summary in sorted(sweep.cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        lo, hi = summary["d_s_ci"]
        line = (f"snr {snr:g} dB  {name:<11} d_s {summary['d_s']:.4f} "
                f"[{lo:.4f}, {hi:.4f}]  chrf {summary['chrf']:.4f}  "
                f"entity {summary['entity_fraction']:.4f}  ber {summary['ber']:.4f}")
        tests = sweep.comparisons.get((name, snr))
        if tests:
            d = tests["cohens_d"]
            line += (f"  vs uniform: wilcoxon p={tests['wilcoxon_p']:.4g} "
                     f"perm p={tests['permutation_p']:.4g} "
                     f"d={'n/a' if d is None else f'{d:.3f}'}")
        print(line)
    print(f"results written to {args.out}")
    return EXIT_OK


def _cmd_export_synthetic(args) -> int:
    if args.planted_dims > 0:
        kb = planted_kb(args.count, args.dim, planted_dims=args.planted_dims,
                        noise_scale=args.noise_scale, seed=args.seed)
    else:
        kb = random_kb(args.count, args.dim, seed=args.seed)
    save_kb(kb, args.out)
    print(f"wrote {len(kb)} records of dimension {kb.dimension} to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "export-synthetic":
            return _cmd_export_synthetic(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InputError, FormatError, DimensionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SemuepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
