"""banditplot CLI: render one figure kind from simulator CSV output.

Usage: banditplot <kind> --in results.csv [--in more.csv] --out fig.png
       [--log-x] [--label NAME ...] [--bound lower_bound.csv]
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, FigureJob, render


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banditplot",
        description="Render figures from banditsim CSV output.",
    )
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        type=Path, help="input results.csv (repeatable)")
    parser.add_argument("--out", required=True, type=Path, help="output image path")
    parser.add_argument("--log-x", action="store_true", help="logarithmic round axis")
    parser.add_argument("--label", dest="labels", action="append", default=[],
                        help="legend label per input (repeatable)")
    parser.add_argument("--bound", type=Path, default=None,
                        help="lower_bound.csv to overlay on regret curves")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        job = FigureJob(
            kind=args.kind,
            inputs=args.inputs,
            output=args.out,
            log_x=args.log_x,
            labels=args.labels,
            bound=args.bound,
        )
        result = render(job)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(result.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
