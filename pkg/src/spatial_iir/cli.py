"""Command-line interface.

Subcommands map one-to-one onto the experiment runners::

    spatial-iir pattern  --preset fig3 --out fig3.csv
    spatial-iir fsll     --preset fsll --out fsll.csv
    spatial-iir estimate --preset fig6 --out fig6.csv
    spatial-iir sweep    --preset fig7 --out fig7.csv --threads 4
    spatial-iir fim      --config my_fim.json --out fim.csv

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import os
import sys

from . import experiments
from .errors import SpatialIIRError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="spatial-iir",
        description="Spatial IIR (feedback) beamforming experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("pattern", "beam-pattern comparison curves"),
        ("fsll", "first-sidelobe level versus element count"),
        ("estimate", "pseudo-spectrum and picked angles for one method"),
        ("sweep", "Monte-Carlo RMSE over methods x SNR x retransmissions"),
        ("fim", "Fisher information versus steering offset"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="path to a JSON config file")
        p.add_argument("--preset", help="name of a packaged preset "
                                        f"({', '.join(experiments.preset_names())})")
        p.add_argument("--out", help="output file path "
                                     "(default: spatial_iir_<command>.<fmt>)")
        p.add_argument("--format", choices=("csv", "jsonl"), default=None)
        p.add_argument("--seed", type=int, default=None,
                       help="override the scene seed")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for sweeps "
                            "(fallback: SPATIAL_IIR_THREADS, then 1)")
    return parser


def _resolve_config(args):
    if args.config and args.preset:
        raise experiments.ConfigError("give either --config or --preset, not both")
    if args.config:
        cfg = experiments.load_config(args.config)
    elif args.preset:
        cfg = experiments.load_preset(args.preset)
    else:
        raise experiments.ConfigError("one of --config or --preset is required")
    if args.seed is not None:
        cfg.setdefault("scene", {})["seed"] = args.seed
        experiments.validate_config(cfg)
    return cfg


def _resolve_threads(args):
    if args.threads is not None:
        value = args.threads
    else:
        value = int(os.environ.get("SPATIAL_IIR_THREADS", "1"))
    if value < 1:
        raise experiments.ConfigError("thread count must be >= 1")
    return value


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        threads = _resolve_threads(args)
        out_cfg = cfg.get("output") or {}
        fmt = args.format or out_cfg.get("format", "csv")
        out_path = args.out or out_cfg.get("path") or f"spatial_iir_{args.command}.{fmt}"
        if args.command == "pattern":
            meta, header, rows = experiments.run_pattern(cfg)
        elif args.command == "fsll":
            meta, header, rows = experiments.run_fsll(cfg)
        elif args.command == "estimate":
            meta, header, rows = experiments.run_estimate(cfg)
        elif args.command == "sweep":
            meta, header, rows = experiments.run_sweep(cfg, threads)
        else:
            meta, header, rows = experiments.run_fim(cfg)
    except experiments.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SpatialIIRError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        experiments.write_rows(out_path, meta, header, rows, fmt)
    except OSError as exc:
        print(f"cannot write {out_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"wrote {len(rows)} rows to {out_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
