"""Script entry point: render --figure fig8 --in <dir> --out <path>."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_IDS, FigureError, render, spec_for


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render",
        description="Render calibration-study figures from scenario CSV outputs",
    )
    parser.add_argument("--figure", required=True, choices=FIGURE_IDS,
                        help="which figure to produce")
    parser.add_argument("--in", dest="in_dir", required=True,
                        help="scenario artifact directory holding the CSVs")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--trm", type=int, default=None,
                        help="channel to plot in overlay figures "
                             "(default: strongest error)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        result = render(spec_for(args.figure, args.in_dir, args.out, trm=args.trm))
    except FigureError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(f"{result.path} [{', '.join(result.series)}]")
    return 0


if __name__ == "__main__":
    sys.exit(main())
