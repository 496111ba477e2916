"""Command line entry point: plot <kind> <csv> <out.png>."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, FigureSpec, SweepFormatError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot", description="render sweep CSV files as summary figures"
    )
    parser.add_argument("kind", choices=sorted(KINDS))
    parser.add_argument("csv", help="input sweep CSV")
    parser.add_argument("out", help="output image path")
    args = parser.parse_args(argv)
    spec = FigureSpec(csv_path=args.csv, kind=args.kind, out_path=args.out)
    try:
        spec.render()
    except SweepFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: cannot write '{args.out}': {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
