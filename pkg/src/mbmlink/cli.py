"""Command line interface: run or validate experiment spec files.

Exit codes: 0 ok, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import EXPERIMENTS, OUT_DIR_ENV, load_spec, run, validate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbmlink",
        description="Media-based modulation link simulator: SNR sweeps, "
                    "MAC regions, spectrum checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a spec file, write CSV + manifest")
    p_run.add_argument("spec", help="path to the experiment spec file")
    p_run.add_argument("--out", default=None,
                       help=f"output directory (overrides ${OUT_DIR_ENV} and the spec)")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the spec's master_seed")
    p_run.add_argument("--threads", type=int, default=1,
                       help="parallel grid tasks (output is order independent)")

    p_val = sub.add_parser("validate", help="check a spec file, report violations")
    p_val.add_argument("spec", help="path to the experiment spec file")

    sub.add_parser("list-experiments", help="print the known experiment names")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENTS:
            print(name)
        return 0

    if args.command == "validate":
        violations = validate(args.spec)
        if violations:
            for v in violations:
                print(f"violation: {v}", file=sys.stderr)
            return 1
        print("ok")
        return 0

    # run
    spec, violations = load_spec(args.spec)
    if violations:
        for v in violations:
            print(f"violation: {v}", file=sys.stderr)
        return 1
    if args.seed is not None:
        from dataclasses import replace
        spec = replace(spec, master_seed=args.seed)
    try:
        result = run(spec, out_dir=args.out, threads=args.threads)
    except Exception as exc:  # runtime failure: nothing was written
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.csv_path} ({len(result.rows)} rows)")
    print(f"wrote {result.manifest_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
