"""Render figures from the primary suite's CSV artifacts.

Three plot kinds, matching the CSV contracts of the npbem CLI:

- ``field-map``      <- field.csv      (header ``x,y,re,im,abs,mask``)
- ``boundary-trace`` <- trace.csv      (header ``arclen,re_value,im_value,
                                        re_conormal,im_conormal``)
- ``loglog-fit``     <- sweep.csv + fit.csv (headers below)

Everything here is read-only over its inputs and deterministic: fixed
figure size, dpi, and colormap.  The log-log plot overlays the line
``exp(ln_alpha) * kappa^p`` taken verbatim from fit.csv — it never refits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIELD_HEADER = ["x", "y", "re", "im", "abs", "mask"]
TRACE_HEADER = ["arclen", "re_value", "im_value", "re_conormal",
                "im_conormal"]
SWEEP_HEADER = ["kappa_max", "track", "re_lambda", "im_lambda", "observable",
                "psi_max", "argmax_arclen", "mark_arclen", "mark_distance",
                "panel_arclen_at_mark", "n_nodes", "converged"]
FIT_HEADER = ["label", "p", "ln_alpha", "residual", "count"]

KINDS = ("field-map", "boundary-trace", "loglog-fit")

FIGSIZE = (6.4, 4.8)
DPI = 150
COLORMAP = "viridis"
MASK_EXCLUDED = 2


class MalformedInputError(Exception):
    """A CSV input is missing, empty, or does not carry the expected header."""


@dataclass(frozen=True)
class PlotSpec:
    """What to plot, from which CSVs, into which image file.

    ``window``, when given, is ``(xmin, xmax, ymin, ymax)``: for field-map
    it adds a zoom inset over that box; for boundary-trace it restricts the
    arc-length axis to ``(xmin, xmax)`` (the y entries are ignored).
    """

    kind: str
    inputs: Sequence[Path]
    output: Path
    window: tuple[float, float, float, float] | None = None
    title: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedInputError(
                f"unknown plot kind {self.kind!r}; expected one of {KINDS}")
        wanted = 2 if self.kind == "loglog-fit" else 1
        if len(self.inputs) != wanted:
            raise MalformedInputError(
                f"{self.kind} takes {wanted} input CSV(s), "
                f"got {len(self.inputs)}")


def read_csv_columns(path, expected_header):
    """Read a CSV with the given header into a dict of string columns."""
    path = Path(path)
    if not path.is_file():
        raise MalformedInputError(f"{path}: no such file")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise MalformedInputError(f"{path}: empty file")
    if rows[0] != expected_header:
        raise MalformedInputError(
            f"{path}: header {rows[0]!r} does not match expected "
            f"{expected_header!r}")
    body = [r for r in rows[1:] if r]
    if not body:
        raise MalformedInputError(f"{path}: no data rows")
    if any(len(r) != len(expected_header) for r in body):
        raise MalformedInputError(f"{path}: ragged rows")
    return {name: [r[i] for r in body]
            for i, name in enumerate(expected_header)}


def _floats(cols, name, path):
    try:
        return np.array([float(v) for v in cols[name]])
    except ValueError as exc:
        raise MalformedInputError(f"{path}: non-numeric value in column "
                                  f"{name!r}: {exc}") from exc


def _field_grid(path):
    """Reassemble the row-major grid written by the field CSV."""
    cols = read_csv_columns(path, FIELD_HEADER)
    x = _floats(cols, "x", path)
    y = _floats(cols, "y", path)
    mag = _floats(cols, "abs", path)
    mask = _floats(cols, "mask", path)
    xs, ys = np.unique(x), np.unique(y)
    if xs.size * ys.size != x.size:
        raise MalformedInputError(f"{path}: rows do not form a full grid "
                                  f"({xs.size} x {ys.size} != {x.size})")
    order = np.lexsort((x, y))
    grid = mag[order].reshape(ys.size, xs.size)
    gmask = mask[order].reshape(ys.size, xs.size)
    return xs, ys, np.ma.masked_where(
        (gmask == MASK_EXCLUDED) | ~np.isfinite(grid), grid)


def _plot_field_map(spec):
    xs, ys, grid = _field_grid(spec.inputs[0])
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    extent = (xs[0], xs[-1], ys[0], ys[-1])
    im = ax.imshow(grid, origin="lower", extent=extent, cmap=COLORMAP,
                   aspect="equal", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="|u|")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(spec.title or "total field modulus")
    if spec.window is not None:
        x0, x1, y0, y1 = spec.window
        ax.add_patch(plt.Rectangle((x0, y0), x1 - x0, y1 - y0, fill=False,
                                   edgecolor="white", linewidth=0.8))
        inset = ax.inset_axes([0.62, 0.62, 0.35, 0.35])
        inset.imshow(grid, origin="lower", extent=extent, cmap=COLORMAP,
                     aspect="equal", interpolation="nearest")
        inset.set_xlim(x0, x1)
        inset.set_ylim(y0, y1)
        inset.set_xticks([])
        inset.set_yticks([])
    return fig


def _plot_boundary_trace(spec):
    path = spec.inputs[0]
    cols = read_csv_columns(path, TRACE_HEADER)
    s = _floats(cols, "arclen", path)
    val = np.hypot(_floats(cols, "re_value", path),
                   _floats(cols, "im_value", path))
    con = np.hypot(_floats(cols, "re_conormal", path),
                   _floats(cols, "im_conormal", path))
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.plot(s, val, lw=1.0, label="|value|")
    ax2 = ax.twinx()
    ax2.plot(s, con, lw=1.0, color="tab:red", label="|conormal|")
    ax.set_xlabel("arc length")
    ax.set_ylabel("|value|")
    ax2.set_ylabel("|conormal derivative|", color="tab:red")
    if spec.window is not None:
        ax.set_xlim(spec.window[0], spec.window[1])
    lines = ax.get_lines() + ax2.get_lines()
    ax.legend(lines, [ln.get_label() for ln in lines], loc="upper right")
    ax.set_title(spec.title or "boundary trace")
    return fig


def _plot_loglog_fit(spec):
    sweep_path, fit_path = spec.inputs
    sw = read_csv_columns(sweep_path, SWEEP_HEADER)
    kap = _floats(sw, "kappa_max", sweep_path)
    psi = _floats(sw, "psi_max", sweep_path)
    ft = read_csv_columns(fit_path, FIT_HEADER)
    p = _floats(ft, "p", fit_path)[0]
    ln_alpha = _floats(ft, "ln_alpha", fit_path)[0]
    if np.any(kap <= 0) or np.any(psi <= 0):
        raise MalformedInputError(
            f"{sweep_path}: log-log plot needs positive kappa_max/psi_max")
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.loglog(kap, psi, "o", label="sweep data")
    kk = np.geomspace(kap.min(), kap.max(), 64)
    ax.loglog(kk, np.exp(ln_alpha) * kk ** p, "-",
              label=f"fit: slope p = {p:.4g}")
    ax.set_xlabel(r"$\kappa_{\max}$")
    ax.set_ylabel(r"$\psi_{\max}$")
    ax.legend()
    ax.set_title(spec.title or f"blow-up rate, track {ft['label'][0]}")
    return fig


_RENDERERS = {"field-map": _plot_field_map,
              "boundary-trace": _plot_boundary_trace,
              "loglog-fit": _plot_loglog_fit}


def plot(spec: PlotSpec) -> Path:
    """Render the figure described by ``spec`` and return the output path."""
    fig = _RENDERERS[spec.kind](spec)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out)
    finally:
        plt.close(fig)
    return out
