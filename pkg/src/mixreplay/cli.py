"""Command-line entry points.

    mixreplay run        one training run from a config file plus overrides
    mixreplay grid       sweep strategies x replay ratios x k x seeds
    mixreplay residuals  score interpolated samples from a buffer dump
    mixreplay smooth     recompute the smoothed column of a curve CSV
    mixreplay serve      answer buffer/sample requests over stdio
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .buffer import RingBuffer
from .config import RunConfig, apply_settings, load_config
from .errors import InvalidConfigError, InvalidInputError
from .harness import grid_to_csv, run_experiment, run_grid, smooth
from .residuals import reports_to_csv, residual_report
from .strategies import ReplayEngine, StrategyConfig


def _base_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["run.out"] = args.out
    if getattr(args, "strategy", None) is not None:
        overrides["strategy.kind"] = args.strategy
    if getattr(args, "replay_ratio", None) is not None:
        overrides["td3.replay_ratio"] = args.replay_ratio
    if getattr(args, "k", None) is not None:
        overrides["strategy.k"] = args.k
    return apply_settings(cfg, overrides)


def _int_list(raw: str):
    return [int(p) for p in raw.split(",") if p.strip()]


def _cmd_run(args) -> int:
    cfg = _base_config(args)
    result = run_experiment(cfg)
    print(f"final_score={result.final_score:.17g}")
    print(f"total_updates={result.total_updates}")
    if result.curve_path:
        print(f"curve={result.curve_path}")
    return 0


def _cmd_grid(args) -> int:
    cfg = _base_config(args)
    strategies = args.strategies.split(",") if args.strategies \
        else [cfg.strategy.kind]
    ratios = _int_list(args.replay_ratios) if args.replay_ratios \
        else [cfg.td3.replay_ratio]
    ks = _int_list(args.ks) if args.ks else [cfg.strategy.k]
    seeds = _int_list(args.seeds) if args.seeds else [cfg.seed]
    rows, errors = run_grid(cfg, strategies, ratios, ks, seeds)
    csv_text = grid_to_csv(rows)
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "grid_summary.csv")
    with open(path, "w") as fh:
        fh.write(csv_text)
    sys.stdout.write(csv_text)
    print(f"summary={path}")
    for name, err in errors:
        print(f"failed: {name}: {err}", file=sys.stderr)
    return 0 if not errors else 1


def _cmd_residuals(args) -> int:
    from .harness import make_env

    cfg = RunConfig(env_name=args.env)
    if cfg.env_noise_sd > 0:
        raise InvalidConfigError("residuals need a deterministic env")
    env = make_env(cfg)
    buf = RingBuffer.restore(args.dump, env.spec)
    if buf.count < 2:
        raise InvalidInputError("dump holds too few transitions to interpolate")
    rng = np.random.default_rng(args.seed)
    reports = []
    seeds = []
    for kind in args.strategies.split(","):
        engine = ReplayEngine.from_buffer(
            buf, StrategyConfig(kind=kind.strip(), k=args.k))
        batch = engine.sample(args.samples, rng)
        report = residual_report(batch, env.spec, env.dynamics, kind.strip())
        reports.append(report)
        seeds.append(args.seed)
        print(f"{report.strategy}: n={report.count} mean={report.mean:.6g} "
              f"median={report.median:.6g} p95={report.p95:.6g}")
    csv_text = reports_to_csv(reports, seeds)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
        print(f"csv={args.out}")
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_smooth(args) -> int:
    with open(args.input) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("env_step,"):
        raise InvalidInputError("expected a learning-curve CSV header")
    steps = []
    raw = []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        steps.append(int(parts[0]))
        raw.append(float(parts[1]))
    smoothed = smooth(np.asarray(raw), args.window)
    out_lines = ["env_step,eval_return_raw,eval_return_smoothed"]
    for s, r, m in zip(steps, raw, smoothed):
        out_lines.append(f"{s},{r:.17g},{m:.17g}")
    text = "\n".join(out_lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"csv={args.out}")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_serve(args) -> int:
    from .server import serve

    return serve()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixreplay",
        description="experience replay with neighborhood interpolation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one training run")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--strategy", help="replay strategy kind")
    p.add_argument("--replay-ratio", type=int, dest="replay_ratio")
    p.add_argument("--k", type=int, help="neighborhood size")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("grid", help="sweep the Cartesian product")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--strategy", dest="strategies",
                   help="comma-separated strategy kinds")
    p.add_argument("--replay-ratio", dest="replay_ratios",
                   help="comma-separated replay ratios")
    p.add_argument("--k", dest="ks", help="comma-separated neighborhood sizes")
    p.add_argument("--seed", dest="seeds", help="comma-separated seeds")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("residuals",
                       help="score interpolations against true dynamics")
    p.add_argument("--dump", required=True, help="buffer dump file")
    p.add_argument("--env", choices=("linear", "pendulum"), required=True)
    p.add_argument("--strategy", dest="strategies", default="nmer,naive_mixup")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=_cmd_residuals)

    p = sub.add_parser("smooth", help="recompute a curve's smoothed column")
    p.add_argument("--in", dest="input", required=True, help="curve CSV")
    p.add_argument("--window", type=int, default=11)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(func=_cmd_smooth)

    p = sub.add_parser("serve",
                       help="serve line-delimited JSON requests on stdio")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidConfigError, InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
