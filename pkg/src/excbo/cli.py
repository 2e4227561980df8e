"""Command-line experiment harness.

Subcommands:
  run <config> [--out DIR] [--jobs N] [--override key=value ...]
  oracle <benchmark> [--budget N] [--sigma S]
  plot <bundle-dir>
  validate <config>

Exit codes: 0 success, 2 configuration error, 3 partial run failure,
4 I/O error. The output directory resolves as --out, then the
EXCBO_OUT_DIR environment variable, then the config's output_dir.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .benchmarks import MixtureNoiseSpec, benchmark_names, make_benchmark
from .config import (ExperimentConfig, apply_overrides, config_from_dict,
                     load_config, parse_config)
from .errors import ExcboError, IoError, ParseError, ValidationError
from .runner import emit_outputs, estimate_oracle_optimum, run_suite

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="excbo",
        description="Causal Bayesian optimization experiment runner")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured seed sweep")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")

    p_oracle = sub.add_parser("oracle",
                              help="estimate a benchmark's best expected reward")
    p_oracle.add_argument("benchmark", choices=benchmark_names())
    p_oracle.add_argument("--budget", type=int, default=10000)
    p_oracle.add_argument("--sigma", type=float, default=0.05)

    p_plot = sub.add_parser("plot", help="re-render the SVG from a bundle dir")
    p_plot.add_argument("bundle_dir")

    p_val = sub.add_parser("validate", help="parse and validate a config")
    p_val.add_argument("config")
    p_val.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")
    return parser


def _load_with_overrides(path: str, overrides) -> ExperimentConfig:
    cfg = load_config(path)
    if not overrides:
        return cfg
    import yaml
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh.read()) or {}
    return config_from_dict(apply_overrides(raw, overrides))


def _cmd_run(args) -> int:
    try:
        cfg = _load_with_overrides(args.config, args.override)
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.out or os.environ.get("EXCBO_OUT_DIR") or cfg.output_dir
    bundle = run_suite(cfg, jobs=args.jobs)
    try:
        paths = emit_outputs(bundle, out_dir)
    except IoError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, path in sorted(paths.items()):
        print(f"wrote {path}")
    for rec in bundle.failures:
        print(f"FAILED {rec.algorithm} seed={rec.seed}: "
              f"{rec.error}: {rec.message}", file=sys.stderr)
    return EXIT_PARTIAL if bundle.failures else EXIT_OK


def _cmd_oracle(args) -> int:
    scm = make_benchmark(args.benchmark, MixtureNoiseSpec(sigma=args.sigma))
    try:
        y_star = estimate_oracle_optimum(scm, args.budget)
    except ValidationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({"benchmark": args.benchmark, "sigma": args.sigma,
                      "budget": args.budget, "oracle_optimum": y_star}))
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .runner import load_raw_csv
    from .svg import render_series_svg, series_from_raw
    raw_path = os.path.join(args.bundle_dir, "raw.csv")
    try:
        _, runs = load_raw_csv(raw_path)
        manifest_path = os.path.join(args.bundle_dir, "manifest.json")
        with open(manifest_path, "r", encoding="utf-8") as fh:
            benchmark = json.load(fh)["config"]["benchmark"]
        svg = render_series_svg(benchmark, series_from_raw(runs))
        out = os.path.join(args.bundle_dir, f"{benchmark}.svg")
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        cfg = _load_with_overrides(args.config, args.override)
    except (ParseError, ValidationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    print(f"config hash: {cfg.hash()}", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "oracle": _cmd_oracle,
               "plot": _cmd_plot, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except ExcboError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
