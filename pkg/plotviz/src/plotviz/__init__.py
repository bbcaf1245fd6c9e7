"""Offline figure regeneration from the npbem CSV artifacts.

This package only renders: every number it draws (field values, traces,
fitted exponents) comes from the CSV files written by the primary suite.
It never recomputes or refits anything.
"""

from plotviz.plots import (FIELD_HEADER, FIT_HEADER, KINDS, SWEEP_HEADER,
                           TRACE_HEADER, MalformedInputError, PlotSpec, plot)
from plotviz.cli import main

__version__ = "0.1.0"

__all__ = [
    "FIELD_HEADER", "FIT_HEADER", "KINDS", "SWEEP_HEADER", "TRACE_HEADER",
    "MalformedInputError", "PlotSpec", "plot", "main",
]
