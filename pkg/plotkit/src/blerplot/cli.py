"""Command-line figure rendering: plot --csv ... --group algo,K --out fig.png."""

from __future__ import annotations

import argparse
import sys

from .render import PlotError, PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bler-plot",
        description="Render semilog BLER curves from simulation result CSVs")
    parser.add_argument("--csv", nargs="+", required=True, help="result CSV file(s)")
    parser.add_argument("--group", default="algo,K",
                        help="comma-separated CSV columns defining one curve each")
    parser.add_argument("--ref", default=None, help="reference-points JSON to overlay")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument("--title", default="")
    parser.add_argument("--filter", action="append", default=[],
                        metavar="COLUMN=VALUE", help="keep only matching rows")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    filters = {}
    for item in args.filter:
        if "=" not in item:
            print(f"error: bad --filter {item!r}, expected COLUMN=VALUE", file=sys.stderr)
            return 2
        column, value = item.split("=", 1)
        filters[column] = value
    spec = PlotSpec(csv_paths=args.csv, out_path=args.out,
                    group_by=tuple(c.strip() for c in args.group.split(",") if c.strip()),
                    ref_path=args.ref, title=args.title, filters=filters)
    try:
        path = render(spec)
    except (PlotError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
