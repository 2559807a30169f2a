"""Command-line entry points: single runs, seed sweeps and the two-mode
comparison experiment.  Each run writes trace.csv, summary.json and
config.echo.json into <out>/<mode>_<seed>/."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import RunConfig, apply_overrides, load_config, parse_config
from .errors import ConfigError
from .simulation import MODE_ACTIVE, MODE_NOMINAL, run, summarize


def _parse_seed_range(text: str):
    try:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
    except ValueError as exc:
        raise ConfigError(f"seed range {text!r} is not of the form A..B") from exc
    if hi < lo:
        raise ConfigError(f"empty seed range {text!r}")
    return list(range(lo, hi + 1))


def _execute_run(cfg: RunConfig, out_root: Path) -> dict:
    setup = cfg.to_setup()
    trace = run(
        setup,
        steps=cfg.steps,
        mode=cfg.mode,
        oracle=cfg.oracle,
        config_hash=cfg.hash(),
    )
    run_dir = out_root / f"{cfg.mode}_{cfg.seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    trace.to_csv(run_dir / "trace.csv")
    summary = summarize(trace, setup)
    with open(run_dir / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2)
    with open(run_dir / "config.echo.json", "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
    return summary


def _load_with_overrides(args) -> RunConfig:
    cfg = load_config(args.config)
    raw = cfg.to_dict()
    if getattr(args, "set", None):
        raw = apply_overrides(raw, args.set)
    run_over = {}
    if getattr(args, "mode", None):
        run_over["mode"] = args.mode
    if getattr(args, "steps", None):
        run_over["steps"] = args.steps
    if getattr(args, "oracle", False):
        run_over["oracle"] = True
    if getattr(args, "out", None):
        run_over["out_dir"] = args.out
    if run_over:
        raw["run"].update(run_over)
    return parse_config(raw)


def cmd_run(args) -> int:
    cfg = _load_with_overrides(args)
    if args.seed is not None and args.seed_sweep is not None:
        raise ConfigError("--seed and --seed-sweep are mutually exclusive")
    seeds = [cfg.seed]
    if args.seed is not None:
        seeds = [args.seed]
    if args.seed_sweep is not None:
        seeds = _parse_seed_range(args.seed_sweep)
    out_root = Path(cfg.out_dir)
    for seed in seeds:
        seeded = cfg.with_updates(noise={"seed": seed})
        summary = _execute_run(seeded, out_root)
        print(
            f"{summary['mode']} seed={summary['seed']} "
            f"final_error={summary['final_error']:.4g} "
            f"feasibility_rate={summary['feasibility_rate']:.2f}"
        )
    return 0


def cmd_compare(args) -> int:
    cfg = _load_with_overrides(args)
    seeds = [cfg.seed] if args.seeds is None else _parse_seed_range(args.seeds)
    out_root = Path(cfg.out_dir)
    pairs = []
    for seed in seeds:
        per_mode = {}
        for mode in (MODE_ACTIVE, MODE_NOMINAL):
            seeded = cfg.with_updates(noise={"seed": seed}, run={"mode": mode})
            per_mode[mode] = _execute_run(seeded, out_root)
        pairs.append(per_mode)
        print(
            f"seed={seed} active_final={per_mode[MODE_ACTIVE]['final_error']:.4g} "
            f"nominal_final={per_mode[MODE_NOMINAL]['final_error']:.4g}"
        )
    comparison = {
        "seeds": seeds,
        "config_hash": cfg.hash(),
        "runs": pairs,
        "active_final_errors": [p[MODE_ACTIVE]["final_error"] for p in pairs],
        "nominal_final_errors": [p[MODE_NOMINAL]["final_error"] for p in pairs],
        "active_feasibility_rates": [p[MODE_ACTIVE]["feasibility_rate"] for p in pairs],
        "nominal_lammin_below_1e3_rates": [
            p[MODE_NOMINAL]["lammin_below_1e3_rate"] for p in pairs
        ],
    }
    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / "comparison.json", "w") as fh:
        json.dump(comparison, fh, indent=2)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="obsmpc",
        description="Coupled fast moving-horizon parameter estimation and "
        "observability-seeking MPC simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one run or a seed sweep")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--mode", choices=[MODE_ACTIVE, MODE_NOMINAL])
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--seed-sweep", metavar="A..B")
    p_run.add_argument("--steps", type=int)
    p_run.add_argument("--oracle", action="store_true")
    p_run.add_argument("--out")
    p_run.add_argument("--set", action="append", metavar="PATH=VALUE")
    p_run.set_defaults(func=cmd_run)

    p_cmp = sub.add_parser("compare", help="run both modes on the same seeds")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--seeds", metavar="A..B")
    p_cmp.add_argument("--steps", type=int)
    p_cmp.add_argument("--oracle", action="store_true")
    p_cmp.add_argument("--out")
    p_cmp.add_argument("--set", action="append", metavar="PATH=VALUE")
    p_cmp.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
