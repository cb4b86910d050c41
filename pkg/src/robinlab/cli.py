"""Command-line entry point: ``robinlab audit | sweep | converge``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import RobinLabError
from .experiments import EXIT_ERROR, EXIT_FAIL, EXIT_OK, run_audit, run_convergence, run_sweep


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robinlab", description="Robin torsion / eigenvalue inequality laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("audit", help="audit every inequality on one polygon")
    a.add_argument("polygon", help='polygon JSON: {"vertices": [[x, y], ...]}')
    a.add_argument("--beta", type=float, required=True)
    a.add_argument("--levels", type=_positive_int, default=3, help="mesh levels (>= 3)")
    a.add_argument("--out", default="audit_out", help="output directory")

    s = sub.add_parser("sweep", help="audit a shape family from a JSON config")
    s.add_argument("config")
    s.add_argument("--levels", type=_positive_int, default=None, help="override config levels")
    s.add_argument("--out", default=None, help="override config output directory")

    c = sub.add_parser("converge", help="mesh-convergence study of T_beta and lambda_beta")
    c.add_argument("polygon")
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--levels", type=_positive_int, default=4, help="number of mesh levels (>= 3)")
    c.add_argument("--out", default="converge_out")
    return p


def _err(e: Exception) -> int:
    print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
    return EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "audit":
            code, paths = run_audit(args.polygon, args.beta, args.levels, args.out)
            print(json.dumps({k: str(v) for k, v in paths.items()}))
            if code == EXIT_FAIL:
                print("audit: at least one inequality FAILED", file=sys.stderr)
            return code
        if args.command == "sweep":
            rep, paths = run_sweep(args.config, out=args.out, levels=args.levels)
            print(json.dumps({k: str(v) for k, v in paths.items()}))
            return EXIT_FAIL if rep.failures() else EXIT_OK
        rows, path = run_convergence(args.polygon, args.beta, args.levels, args.out)
        print(str(path))
        return EXIT_OK
    except (RobinLabError, OSError, ValueError, KeyError, TypeError) as e:
        return _err(e)


if __name__ == "__main__":
    sys.exit(main())
