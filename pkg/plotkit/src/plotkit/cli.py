"""Command-line renderer: ``plotkit <figure-kind> --data FILE --out IMG``."""

from __future__ import annotations

import argparse
import sys

from .io import DataError
from .render import KINDS, PlotSpec, render

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render publication-style figures from zinbgt "
                    "plot-data tables.",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("--data", required=True, help="input plot-data TSV")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--cmap", default="viridis", help="matplotlib colormap")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--log-color", action="store_true",
                        help="logarithmic color scale for bin counts")
    parser.add_argument("--log-x", action="store_true")
    parser.add_argument("--log-y", action="store_true")
    parser.add_argument("--title", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(
        kind=args.kind, data=args.data, out=args.out, cmap=args.cmap,
        dpi=args.dpi, log_color=args.log_color, log_x=args.log_x,
        log_y=args.log_y, title=args.title,
    )
    try:
        render(spec)
    except (DataError, FileNotFoundError) as exc:
        print(f"plotkit: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"plotkit: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"{args.kind}: {args.data} -> {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
