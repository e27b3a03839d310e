"""Command-line interface.

    ewkv run <config.json> [--out DIR] [--jobs N] [--plot]
    ewkv gate --m 1 --p1 7 --p2 7 [--p3 P3] [--out DIR]
    ewkv spectrum --a 1 --b 2 [--out DIR]
    ewkv plot table.csv [table2.csv ...]

Exit codes: 0 all certificates pass, 1 any certificate fails, 2 usage error.
$EWKV_OUT overrides the default output directory.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bench

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ewkv",
        description="Spectral certification experiments for damped elastic waves")
    subs = parser.add_subparsers(dest="command", required=True)

    p_run = subs.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--jobs", type=int, default=1, help="worker cap")
    p_run.add_argument("--plot", action="store_true",
                       help="also render figures from the emitted CSV tables")

    p_gate = subs.add_parser("gate", help="evaluate the 2D/3D existence gate")
    p_gate.add_argument("--m", type=float, required=True)
    p_gate.add_argument("--p1", type=float, required=True)
    p_gate.add_argument("--p2", type=float, required=True)
    p_gate.add_argument("--p3", type=float, default=None,
                        help="third exponent switches to the 3D gate")
    p_gate.add_argument("--out", default=None)

    p_spec = subs.add_parser("spectrum", help="run the spectrum suite")
    p_spec.add_argument("--a", type=float, required=True)
    p_spec.add_argument("--b", type=float, required=True)
    p_spec.add_argument("--out", default=None)

    p_plot = subs.add_parser("plot", help="render figures from emitted CSVs")
    p_plot.add_argument("csv", nargs="+")
    return parser


def _finish(certs) -> int:
    for c in certs:
        status = "PASS" if c.passed else "FAIL"
        print("[%s] %s: measured=%.6g predicted=%.6g (%s, tol=%g)"
              % (status, c.cert_id, c.measured, c.predicted, c.kind, c.tolerance))
    return 0 if all(c.passed for c in certs) else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = bench.load_config(args.config)
            certs = bench.run(cfg, out_dir=args.out, jobs=args.jobs,
                              plot=args.plot)
            return _finish(certs)
        if args.command == "gate":
            if args.p3 is None:
                raw = {"experiment": "gate",
                       "physics": {"m": args.m, "p1": args.p1, "p2": args.p2}}
            else:
                raw = {"experiment": "gate3d",
                       "physics": {"m": args.m, "p1": args.p1, "p2": args.p2,
                                   "p3": args.p3}}
            cfg = bench.parse_config(raw)
            certs = bench.run(cfg, out_dir=args.out)
            print(json.dumps(certs[0].to_dict(), indent=2, sort_keys=True))
            return _finish(certs)
        if args.command == "spectrum":
            raw = {"experiment": "spectrum", "params": {"a": args.a, "b": args.b}}
            cfg = bench.parse_config(raw)
            certs = bench.run(cfg, out_dir=args.out)
            return _finish(certs)
        if args.command == "plot":
            from . import report

            for path in args.csv:
                out = report.render_csv(path)
                print("wrote %s" % out)
            return 0
    except bench.UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
