"""Command-line entry point: ``plotviz KIND input.csv [...] -o out.png``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from plotviz.plots import KINDS, MalformedInputError, PlotSpec, plot

EXIT_OK = 0
EXIT_INPUT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotviz",
        description="Regenerate figures from npbem CSV artifacts. "
                    "field-map takes field.csv; boundary-trace takes "
                    "trace.csv; loglog-fit takes sweep.csv and fit.csv.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("inputs", nargs="+", type=Path,
                        help="input CSV file(s)")
    parser.add_argument("-o", "--output", type=Path, required=True,
                        help="output image path (e.g. figure.png)")
    parser.add_argument("--window", type=str, default=None,
                        help="xmin,xmax,ymin,ymax zoom box (field-map) or "
                             "xmin,xmax arc-length range (boundary-trace)")
    parser.add_argument("--title", type=str, default="")
    return parser


def _parse_window(text: str) -> tuple[float, float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) not in (2, 4):
        raise MalformedInputError(
            f"--window expects 2 or 4 comma-separated numbers, got {text!r}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as exc:
        raise MalformedInputError(f"--window: {exc}") from exc
    if len(vals) == 2:
        vals += [0.0, 0.0]
    return tuple(vals)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        window = _parse_window(args.window) if args.window else None
        out = plot(PlotSpec(kind=args.kind, inputs=args.inputs,
                            output=args.output, window=window,
                            title=args.title))
    except MalformedInputError as exc:
        print(f"plotviz: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"wrote {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
