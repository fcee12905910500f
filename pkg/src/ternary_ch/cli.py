"""Command-line interface: ``run``, ``eoc`` and ``list``."""
from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from .benchmarks import list_benchmarks
from .config import OUTPUT_ENV, ConfigError, parse_config
from .experiments import run_benchmark, run_eoc
from .output import OutputError
from .schemes import SCHEMES, StabilityWarning, StepError


def _dt_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ternary-ch", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a benchmark and write CSV/VTK output")
    r.add_argument("--config", required=True, help="key = value configuration file")
    r.add_argument("--benchmark", help="override the benchmark named in the file")
    r.add_argument("--scheme", type=str.upper, choices=SCHEMES)
    r.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV} and the file)")
    r.add_argument("--quiet", action="store_true")

    e = sub.add_parser("eoc", help="time-convergence study against a fine reference")
    e.add_argument("--config", required=True)
    e.add_argument("--dts", required=True, type=_dt_list, help="decreasing time steps, e.g. '4e-5,2e-5,1e-5'")
    e.add_argument("--ref-dt", required=True, type=float)
    e.add_argument("--benchmark")
    e.add_argument("--scheme", type=str.upper, choices=SCHEMES)
    e.add_argument("--out")
    e.add_argument("--quiet", action="store_true")

    sub.add_parser("list", help="list the built-in benchmarks")
    return p


def cmd_list(stream=None) -> int:
    stream = stream or sys.stdout
    for b in list_benchmarks():
        print(f"{b.name:<16}{b.description}", file=stream)
    return 0


def _logger(quiet: bool):
    return None if quiet else (lambda msg: print(msg, file=sys.stderr))


def cmd_run(args) -> int:
    cfg = parse_config(args.config, args.benchmark, scheme=args.scheme)
    out = cfg.resolved_output_dir(args.out)
    with warnings.catch_warnings():
        warnings.simplefilter("always", StabilityWarning)
        res = run_benchmark(cfg, out, _logger(args.quiet))
    print(f"wrote {res.rows} diagnostic rows to {res.csv_path}")
    return 0


def cmd_eoc(args) -> int:
    cfg = parse_config(args.config, args.benchmark, scheme=args.scheme)
    table = run_eoc(cfg, args.dts, args.ref_dt, _logger(args.quiet))
    text = table.to_csv()
    out = cfg.resolved_output_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = Path(out) / f"eoc_{cfg.scheme}.csv"
    path.write_text(text)
    sys.stdout.write(text)
    print(f"wrote {path}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return cmd_list()
        if args.command == "run":
            return cmd_run(args)
        return cmd_eoc(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except StepError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
