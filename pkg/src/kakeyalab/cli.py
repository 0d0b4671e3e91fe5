"""Command-line front end: one subcommand per experiment, flags mirroring
the ExperimentConfig fields, optional JSON config with flag override."""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import EXPERIMENTS, ExperimentConfig, run_experiment

_DEFAULTS = dict(
    grid_n=64,
    domain_length=8.0,
    dirs="fibonacci",
    num_dirs=[16],
    k=[1, 2, 3],
    cluster_width=0.01,
    delta=0.25,
    seed=0,
    out=None,
    threads=1,
    dtype="float64",
    c1=1.0,
)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-n", type=int, dest="grid_n")
    p.add_argument("--domain-length", type=float, dest="domain_length")
    p.add_argument("--dirs", choices=("fibonacci", "random", "clustered"))
    p.add_argument("--num-dirs", type=int, action="append", dest="num_dirs",
                   help="direction count N; repeatable")
    p.add_argument("--k", type=int, action="append", dest="k",
                   help="annulus scale; repeatable")
    p.add_argument("--cluster-width", type=float, dest="cluster_width")
    p.add_argument("--delta", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--threads", type=int)
    p.add_argument("--dtype", choices=("float64", "float32"))
    p.add_argument("--c1", type=float)
    p.add_argument("--config", type=str, help="JSON config; explicit flags override")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kakeyalab",
                                     description="directional maximal operator experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        _add_common(sub.add_parser(name))
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    merged = dict(_DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(_DEFAULTS) - {"experiment"}
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in _DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return ExperimentConfig(
        experiment=args.experiment,
        grid_n=merged["grid_n"],
        domain_length=merged["domain_length"],
        dirs=merged["dirs"],
        num_dirs=tuple(merged["num_dirs"]),
        k_list=tuple(merged["k"]),
        cluster_width=merged["cluster_width"],
        delta=merged["delta"],
        seed=merged["seed"],
        out=merged["out"],
        threads=merged["threads"],
        dtype=merged["dtype"],
        c1=merged["c1"],
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    header, rows = run_experiment(cfg)
    if cfg.out:
        print(f"wrote {len(rows)} rows to {cfg.out}")
    else:
        print(",".join(header))
        for row in rows[:50]:
            print(",".join(str(x) for x in row))
        if len(rows) > 50:
            print(f"... {len(rows) - 50} more rows (use --out to save)")
    if cfg.experiment == "combinatorics":
        _print_selection_summary(rows, header)
    return 0


def _print_selection_summary(rows, header) -> None:
    idx = {name: i for i, name in enumerate(header)}
    for row in rows:
        print(f"N={row[idx['N']]} k={row[idx['k']]}: L={row[idx['L']]}, "
              f"sqrt(N)={row[idx['sqrt_N']]:.2f}, "
              f"max residual count={row[idx['max_residual_count']]}")


if __name__ == "__main__":
    sys.exit(main())
