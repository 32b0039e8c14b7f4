"""Deterministic SVG figures from gridpool result CSVs."""

from .io import SchemaError, read_compare_csv, read_rates_csv
from .cli import PlotSpec, render
from .plots import fit_line, plot_choice_annotated, plot_efficiency_vs_p, plot_rates_vs_l

__version__ = "0.1.0"
