"""CLI: render one plot job file. Exit codes: 0 ok, 1 bad job/data, 2 render failure."""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .csvdata import EmptyCsvError, MissingColumnError
from .jobs import JobError, load_job
from .plot import plot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mbmfig", description="Render mbmlink CSV datasets to figures.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_plot = sub.add_parser("plot", help="render a job file")
    p_plot.add_argument("job", help="path to the plot-job file")
    args = parser.parse_args(argv)

    try:
        job = load_job(args.job)
        result = plot(job)
    except (JobError, MissingColumnError, EmptyCsvError, FileNotFoundError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"render failure: {exc}", file=sys.stderr)
        return 2
    plt.close(result.figure)
    print(f"wrote {result.path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
