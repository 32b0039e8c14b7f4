"""Command line: figures <kind> --in results.csv --out fig.svg [filters]."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

from . import io, plots

KINDS = ("rates_vs_L", "efficiency_vs_p", "choice_annotated")


@dataclass(frozen=True)
class PlotSpec:
    """One figure request: what to draw, from which CSV, with which filters."""

    kind: str
    input_csv: str
    output_image: str
    png: str | None = None
    filters: dict = field(default_factory=dict)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figures")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="input_csv", required=True)
    parser.add_argument("--out", dest="output_image", required=True)
    parser.add_argument("--png", help="also write a PNG next to the SVG")
    parser.add_argument("--lam", type=float, help="pool intensity filter (rates_vs_L)")
    parser.add_argument("--K", type=float, help="precision filter (compare plots)")
    parser.add_argument("--epsilon", type=float,
                        help="tolerance filter (choice_annotated)")
    parser.add_argument("--label", choices=("n", "L"), default="n",
                        help="which choice to annotate (choice_annotated)")
    return parser


def render(spec: PlotSpec):
    """Dispatch one PlotSpec; returns the plotted series."""
    if spec.kind == "rates_vs_L":
        rows = io.read_rates_csv(spec.input_csv)
        return plots.plot_rates_vs_l(rows, spec.output_image, spec.png,
                                     lam=spec.filters.get("lam"))
    if spec.kind == "efficiency_vs_p":
        rows = io.read_compare_csv(spec.input_csv)
        return plots.plot_efficiency_vs_p(rows, spec.output_image, spec.png,
                                          k_filter=spec.filters.get("K"))
    if spec.kind == "choice_annotated":
        rows = io.read_compare_csv(spec.input_csv)
        return plots.plot_choice_annotated(
            rows, spec.output_image, spec.png,
            k_filter=spec.filters.get("K"),
            epsilon=spec.filters.get("epsilon"),
            label_field=spec.filters.get("label", "n"),
        )
    raise io.SchemaError(f"unknown figure kind {spec.kind!r}")


def run(argv) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    filters = {k: v for k, v in (("lam", args.lam), ("K", args.K),
                                 ("epsilon", args.epsilon), ("label", args.label))
               if v is not None}
    spec = PlotSpec(kind=args.kind, input_csv=args.input_csv,
                    output_image=args.output_image, png=args.png, filters=filters)
    try:
        render(spec)
    except (OSError, io.SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {spec.output_image}")
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))
