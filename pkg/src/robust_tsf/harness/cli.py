"""``robust-tsf`` command line.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config, parse_axis
from .experiment import ABLATE_MODES, ablate, run, sweep, write_report
from .synthetic import SYNTH_NAMES, synth


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robust-tsf", description="Robust forecasting experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every configured method and seed")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default="results")

    s = sub.add_parser("sweep", help="run the Cartesian product of sweep axes")
    s.add_argument("--config", required=True)
    s.add_argument("--axis", action="append", default=[], help="key=v1,v2,... (repeatable)")
    s.add_argument("--out", default="results")

    g = sub.add_parser("synth", help="write a synthetic series as CSV")
    g.add_argument("--name", choices=SYNTH_NAMES, default="sine")
    g.add_argument("--length", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    a = sub.add_parser("ablate", help="RobustTSF component ablation")
    a.add_argument("--config", required=True)
    a.add_argument("--mode", choices=ABLATE_MODES, required=True)
    a.add_argument("--out", default="results")
    return p


def _summary_lines(report: dict):
    for method, block in report["methods"].items():
        best = block["summary"]["best_test_mae"]
        delta = block["summary"]["delta"]
        yield (f"{method:>14}  best MAE {best['mean']:.4f} (std {best['std']:.4f})"
               f"  delta {delta['mean']:.4f}")


def _dispatch(args) -> int:
    if args.command == "synth":
        try:
            ts = synth(args.name, args.length, args.seed)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("value\n" + "".join(f"{v!r}\n" for v in ts.values.tolist()))
        print(f"wrote {len(ts)} points to {out}")
        return 0

    cfg = load_config(args.config)
    if args.command == "run":
        report = run(cfg)
        path = write_report(report, args.out)
        print("\n".join(_summary_lines(report)))
        print(f"report: {path}")
    elif args.command == "ablate":
        report = ablate(cfg, args.mode, args.out)
        print("\n".join(_summary_lines(report)))
    else:
        axes = [parse_axis(a) for a in args.axis] or list(cfg.axes)
        reports = sweep(cfg, axes, args.out)
        print(f"{len(reports)} sweep points; summary: {Path(args.out) / 'summary.csv'}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit code 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
