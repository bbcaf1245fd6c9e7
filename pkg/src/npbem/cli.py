"""Command-line front end: reproducible scenario runs with CSV outputs.

Scenario files are flat structured text: one ``key = value`` per line,
``#`` comments, a mandatory ``schema = npbem-scenario/1`` line, and a
``command`` selecting one of spectrum, field, sweep, scatter, oracle-check,
star-demo.  Unknown keys are errors, not warnings, so a scenario that runs
is a complete record of what it computed.  Every run writes a manifest
echoing the fully resolved configuration; numeric output is rendered at 17
significant digits so identical scenarios give bit-identical CSVs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 oracle-check tolerance failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .fieldeval import (BoundaryTrace, InsufficientGridError,
                        conormal_derivative, grid_to_csv, grid_to_pgm,
                        harmonicity_check, render_field, trace_to_csv)
from .geometry import (Curve, InvalidGeometryError, InvalidParameterError,
                       curvature, make_bump_family, make_circle, make_ellipse,
                       make_exp_sin_star, scale_curve)
from .layerpot import assemble_np
from .quadrature import build_mesh
from .scatter import (ResolutionError, ScatterConfig, boundary_enhancement,
                      energy_proxy, interior_grid_box, localization_experiment,
                      scatter_summary_csv, solve_transmission, star_demo,
                      total_field_grid)
from .spectral import (EigensolverError, MissingEigenvalueError,
                       MultiplicityMismatchError, eigendecompose,
                       ellipse_oracle, match_oracle, spectrum_to_csv)
from .sweep import (TrackingError, _select_track, ellipse_family,
                    fit_power_law, run_sweep, sweep_to_csv, table_report)

SCHEMA = "npbem-scenario/1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ORACLE = 4

_NUMERICAL_ERRORS = (ResolutionError, TrackingError, EigensolverError,
                     MissingEigenvalueError, MultiplicityMismatchError,
                     np.linalg.LinAlgError)


class ScenarioError(ValueError):
    """Configuration problem in a scenario file, with line diagnostics."""


# ---------------------------------------------------------------------------
# Scenario parsing
# ---------------------------------------------------------------------------

def parse_scenario_text(text: str, origin: str = "<scenario>") -> dict:
    """Parse ``key = value`` lines into an ordered dict of strings."""
    out: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{origin}:{ln}: expected 'key = value', "
                                f"got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError(f"{origin}:{ln}: empty key")
        if key in out:
            raise ScenarioError(f"{origin}:{ln}: duplicate key {key!r}")
        out[key] = value
    if out.get("schema") != SCHEMA:
        raise ScenarioError(
            f"{origin}: missing or unsupported schema line "
            f"(need 'schema = {SCHEMA}', got {out.get('schema')!r})")
    if "command" not in out:
        raise ScenarioError(f"{origin}: missing 'command' key")
    return out


class _Fields:
    """Typed access to scenario keys with unknown-key detection."""

    def __init__(self, raw: dict, origin: str):
        self.raw = dict(raw)
        self.origin = origin
        self.used = {"schema", "command"}
        self.resolved: dict[str, object] = {
            "schema": raw["schema"], "command": raw["command"]}

    def _get(self, key, default):
        self.used.add(key)
        if key in self.raw:
            return self.raw[key]
        if default is _REQUIRED:
            raise ScenarioError(f"{self.origin}: missing required key {key!r}")
        return None

    def _fail(self, key, kind, val):
        raise ScenarioError(
            f"{self.origin}: key {key!r}: cannot parse {val!r} as {kind}")

    def floatv(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            out = default
        else:
            try:
                out = float(v)
            except ValueError:
                self._fail(key, "a number", v)
        self.resolved[key] = out
        return out

    def intv(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            out = default
        else:
            try:
                out = int(v)
            except ValueError:
                self._fail(key, "an integer", v)
        self.resolved[key] = out
        return out

    def boolv(self, key, default=False):
        v = self._get(key, default)
        if v is None:
            out = default
        elif v in ("true", "false"):
            out = (v == "true")
        else:
            self._fail(key, "true/false", v)
        self.resolved[key] = out
        return out

    def strv(self, key, default=None, choices=None):
        v = self._get(key, default)
        out = v if v is not None else default
        if choices is not None and out not in choices:
            raise ScenarioError(
                f"{self.origin}: key {key!r}: {out!r} not in "
                f"{sorted(c for c in choices if c is not None)}")
        self.resolved[key] = out
        return out

    def floatlist(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            out = default
        else:
            try:
                out = [float(x) for x in v.split(",")]
            except ValueError:
                self._fail(key, "a comma-separated number list", v)
        self.resolved[key] = out
        return out

    def intlist(self, key, default=None):
        v = self._get(key, default)
        if v is None:
            out = default
        else:
            try:
                out = [int(x) for x in v.split(",")]
            except ValueError:
                self._fail(key, "a comma-separated integer list", v)
        self.resolved[key] = out
        return out

    def finish(self):
        unknown = sorted(set(self.raw) - self.used)
        if unknown:
            raise ScenarioError(
                f"{self.origin}: unknown key(s): {', '.join(unknown)}")


_REQUIRED = object()


def _build_curve(f: _Fields) -> Curve:
    kind = f.strv("curve", _REQUIRED,
                  choices={"circle", "ellipse", "bump", "star"})
    if kind == "circle":
        curve = make_circle(f.floatv("radius", 1.0))
    elif kind == "ellipse":
        curve = make_ellipse(f.floatv("R0", _REQUIRED),
                             f.floatv("rho0", _REQUIRED))
    elif kind == "bump":
        h = f.floatv("height", None)
        curve = make_bump_family(f.intv("n_sym", 1),
                                 f.floatv("kappa_max", _REQUIRED),
                                 concave=f.boolv("concave", False),
                                 h=h)
    else:
        curve = make_exp_sin_star(f.floatv("amp", 1e-4),
                                  f.floatv("sharp", 8.0),
                                  f.intv("lobes", 12))
    scale = f.floatv("scale", 1.0)
    if scale != 1.0:
        curve = scale_curve(curve, scale)
    return curve


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, tuple)):
        return ",".join(_fmt(v) for v in value)
    return str(value)


def write_manifest(outdir: Path, resolved: dict) -> Path:
    path = outdir / "manifest.txt"
    with open(path, "w") as fh:
        for key, value in resolved.items():
            fh.write(f"{key} = {_fmt(value)}\n")
    return path


def _square_cell_box(box, nx: int, ny: int):
    """Grow the box symmetrically until its cells are square."""
    xmin, xmax, ymin, ymax = box
    side = max((xmax - xmin) / nx, (ymax - ymin) / ny)
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    return (cx - 0.5 * side * nx, cx + 0.5 * side * nx,
            cy - 0.5 * side * ny, cy + 0.5 * side * ny)


def _mesh_kappa_max(curve: Curve, mesh) -> float:
    return float(np.max(np.abs(curvature(curve, mesh.t))))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_spectrum(f: _Fields, outdir: Path, verbose: int) -> int:
    curve = _build_curve(f)
    panels = f.intv("panels", 64)
    graded = f.boolv("graded", False)
    n_eigs = f.intv("n_eigs", 24)
    ranks = f.intlist("trace_ranks", [])
    f.finish()
    write_manifest(outdir, f.resolved)
    mesh = build_mesh(curve, panels, graded=graded)
    pairs = eigendecompose(assemble_np(mesh), n_eigs=n_eigs)
    spectrum_to_csv(pairs, outdir / "spectrum.csv",
                    _mesh_kappa_max(curve, mesh))
    for rank in ranks:
        if rank < 0 or rank >= len(pairs):
            raise ScenarioError(f"trace rank {rank} out of range "
                                f"(0..{len(pairs) - 1})")
        pair = pairs[rank]
        dn = conormal_derivative(mesh, pair.samples)
        trace_to_csv(BoundaryTrace(mesh.arclen, pair.samples, dn.derivative),
                     outdir / f"trace_rank{rank}.csv")
    if verbose:
        print(f"spectrum: {len(pairs)} eigenvalues, {mesh.n_nodes} nodes")
    print(f"lambda_max = {max(p.eigenvalue.real for p in pairs):.17g}")
    return EXIT_OK


def cmd_field(f: _Fields, outdir: Path, verbose: int) -> int:
    curve = _build_curve(f)
    panels = f.intv("panels", 64)
    graded = f.boolv("graded", False)
    sign = f.intv("sign", 1)
    rank = f.intv("rank", 0)
    box = f.floatlist("box", None)
    res = f.intlist("resolution", [120, 120])
    f.finish()
    if sign not in (1, -1):
        raise ScenarioError("key 'sign': must be 1 or -1")
    if len(res) != 2:
        raise ScenarioError("key 'resolution': need nx,ny")
    if box is not None and len(box) != 4:
        raise ScenarioError("key 'box': need xmin,xmax,ymin,ymax")
    write_manifest(outdir, f.resolved)
    mesh = build_mesh(curve, panels, graded=graded)
    pairs = eigendecompose(assemble_np(mesh), n_eigs=max(24, rank + 2))
    cluster = _select_track(pairs, sign, rank)
    pair = cluster[0]
    if box is None:
        box = _square_cell_box(interior_grid_box(mesh, pad=0.25),
                               res[0], res[1])
    grid = render_field(mesh, pair.samples, tuple(box),
                        (res[0], res[1]),
                        density_label=f"eig sign={sign:+d} rank={rank}")
    grid_to_csv(grid, outdir / "field.csv")
    grid_to_pgm(grid, outdir / "field.pgm")
    dn = conormal_derivative(mesh, pair.samples)
    trace_to_csv(BoundaryTrace(mesh.arclen, pair.samples, dn.derivative),
                 outdir / "trace.csv")
    try:
        resid = harmonicity_check(grid)
    except (ValueError, InsufficientGridError):
        # non-square user box or too few clear interior cells
        resid = float("nan")
    if verbose:
        print(f"field: lambda = {pair.eigenvalue.real:.17g}, "
              f"harmonicity residual {resid:.3e}")
    print(f"harmonicity_residual = {resid:.17g}")
    return EXIT_OK


def cmd_sweep(f: _Fields, outdir: Path, verbose: int) -> int:
    family_kind = f.strv("family", _REQUIRED,
                         choices={"ellipse", "bump-convex", "bump-concave"})
    sign = f.intv("sign", 1)
    rank = f.intv("rank", 0)
    observable = f.strv("observable", None)
    base_panels = f.intv("base_panels", 32)
    max_nodes = f.intv("max_nodes", 4096)
    if family_kind == "ellipse":
        R0 = f.floatv("R0", 1.0)
        rho0_list = f.floatlist("rho0_list", _REQUIRED)
        kappa_list, family = ellipse_family(R0, rho0_list)
        concave = False
    else:
        n_sym = f.intv("n_sym", 1)
        kappa_list = f.floatlist("kappa_list", _REQUIRED)
        concave = (family_kind == "bump-concave")
        family = (lambda kap: make_bump_family(n_sym, kap, concave=concave))
    f.finish()
    if sign not in (1, -1):
        raise ScenarioError("key 'sign': must be 1 or -1")
    write_manifest(outdir, f.resolved)
    records = run_sweep(family, kappa_list, sign=sign, rank=rank,
                        observable=observable, concave=concave,
                        base_panels=base_panels, max_nodes=max_nodes)
    sweep_to_csv(records, outdir / "sweep.csv")
    fit = fit_power_law(records)
    with open(outdir / "fit.csv", "w") as fh:
        fh.write(table_report([(records[0].track_label, fit)]))
    if verbose:
        for rec in records:
            print(f"  kappa={rec.kappa_max:g} psi_max={rec.psi_max:.6g} "
                  f"converged={rec.converged}")
    print(f"p = {fit.p:.17g}")
    return EXIT_OK


def cmd_scatter(f: _Fields, outdir: Path, verbose: int) -> int:
    eps_c = f.floatv("eps_c", _REQUIRED)
    delta = f.floatv("delta", _REQUIRED)
    k = f.floatv("k", _REQUIRED)
    direction = f.floatlist("direction", [-1.0, 0.0])
    kappa_list = f.floatlist("kappa_list", None)
    max_panels = f.intv("max_panels", 512)
    res = f.intlist("resolution", [96, 96])
    if len(direction) != 2 or np.hypot(*direction) == 0:
        raise ScenarioError("key 'direction': need a nonzero dx,dy pair")
    direction = tuple(np.asarray(direction) / np.hypot(*direction))
    f.resolved["direction"] = list(direction)
    if len(res) != 2:
        raise ScenarioError("key 'resolution': need nx,ny")
    if kappa_list is not None:
        # curvature-family localization experiment
        scale = f.floatv("scale", 2.0)
        zoom_side = f.floatv("zoom_side", 0.5)
        f.finish()
        write_manifest(outdir, f.resolved)
        reports = localization_experiment(
            kappa_list, eps_c=eps_c, delta=delta, k=k, direction=direction,
            scale=scale, zoom_side=zoom_side, resolution=(res[0], res[1]),
            max_panels=max_panels)
        scatter_summary_csv(reports, outdir / "summary.csv")
        for rep in reports:
            print(f"kappa={rep.kappa_max:g} "
                  f"localization_ratio = {rep.localization_ratio:.17g}")
        return EXIT_OK
    curve = _build_curve(f)
    panels = f.intv("panels", None)
    box = f.floatlist("box", None)
    f.finish()
    if box is not None and len(box) != 4:
        raise ScenarioError("key 'box': need xmin,xmax,ymin,ymax")
    write_manifest(outdir, f.resolved)
    config = ScatterConfig(curve, eps_c, delta, k, direction,
                           panels=panels, max_panels=max_panels)
    sol = solve_transmission(config)
    if box is None:
        box = interior_grid_box(sol.mesh, pad=0.25)
    grid = total_field_grid(sol, tuple(box), (res[0], res[1]))
    grid_to_csv(grid, outdir / "field.csv")
    grid_to_pgm(grid, outdir / "field.pgm")
    trace_to_csv(BoundaryTrace(sol.mesh.arclen, sol.boundary_field),
                 outdir / "trace.csv")
    energy, coverage = energy_proxy(sol, grid=total_field_grid(
        sol, interior_grid_box(sol.mesh), (res[0], res[1])))
    enhancement = boundary_enhancement(sol)
    with open(outdir / "summary.csv", "w") as fh:
        fh.write("kappa_max,energy,coverage,enhancement,"
                 "localization_ratio,condition_estimate\n")
        fh.write(f"{_mesh_kappa_max(curve, sol.mesh):.17g},{energy:.17g},"
                 f"{coverage:.17g},{enhancement:.17g},1,"
                 f"{sol.condition_estimate:.17g}\n")
    if verbose:
        print(f"scatter: {sol.mesh.n_nodes} nodes, "
              f"condition ~ {sol.condition_estimate:.2e}")
    print(f"enhancement = {enhancement:.17g}")
    print(f"energy = {energy:.17g}")
    return EXIT_OK


def cmd_oracle_check(f: _Fields, outdir: Path, verbose: int) -> int:
    R0 = f.floatv("R0", 1.0)
    rho0 = f.floatv("rho0", 0.5)
    panels = f.intv("panels", 64)
    n_max = f.intv("n_max", 5)
    eig_tol = f.floatv("eig_tol", 1e-6)
    angle_tol = f.floatv("angle_tol", 1e-4)
    f.finish()
    write_manifest(outdir, f.resolved)
    mesh = build_mesh(make_ellipse(R0, rho0), panels)
    pairs = eigendecompose(assemble_np(mesh), n_eigs=4 * n_max + 4)
    rows = match_oracle(pairs, ellipse_oracle(R0, rho0), n_max, mesh)
    with open(outdir / "oracle.csv", "w") as fh:
        fh.write("n,sign,eigenvalue_error,subspace_angle\n")
        for row in rows:
            fh.write(f"{row.n},{row.sign},{row.eigenvalue_error:.17g},"
                     f"{row.subspace_angle:.17g}\n")
    worst_eig = max(row.eigenvalue_error for row in rows)
    worst_angle = max(row.subspace_angle for row in rows)
    ok = worst_eig < eig_tol and worst_angle < angle_tol
    print(f"max_eigenvalue_error = {worst_eig:.17g}")
    print(f"max_subspace_angle = {worst_angle:.17g}")
    print("oracle-check " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_ORACLE


def cmd_star_demo(f: _Fields, outdir: Path, verbose: int) -> int:
    eps_c = f.floatv("eps_c", -2.48907)
    delta = f.floatv("delta", 1e-5)
    k = f.floatv("k", 0.01)
    max_panels = f.intv("max_panels", 256)
    f.finish()
    write_manifest(outdir, f.resolved)
    report, sol = star_demo(eps_c=eps_c, delta=delta, k=k,
                            max_panels=max_panels)
    with open(outdir / "peaks.csv", "w") as fh:
        fh.write("cusp_label,cusp_t,peak_arclen,cusp_arclen,distance,"
                 "panel_arclen,peak_value\n")
        for p in report.peaks:
            fh.write(f"{p.cusp_label},{p.cusp_t:.17g},{p.peak_arclen:.17g},"
                     f"{p.cusp_arclen:.17g},{p.distance:.17g},"
                     f"{p.panel_arclen:.17g},{p.peak_value:.17g}\n")
    trace_to_csv(BoundaryTrace(sol.mesh.arclen, sol.boundary_field),
                 outdir / "trace.csv")
    print(f"wavelength = {report.wavelength_echo}")
    print(f"d_tilde = {report.cusp_distance_echo}")
    print(f"subwavelength_ratio = {report.subwavelength_ratio:.17g}")
    if verbose:
        for p in report.peaks:
            print(f"  {p.cusp_label}: |u_res| = {p.peak_value:.4f}, "
                  f"distance {p.distance:.2e}")
    return EXIT_OK


_COMMANDS = {
    "spectrum": cmd_spectrum,
    "field": cmd_field,
    "sweep": cmd_sweep,
    "scatter": cmd_scatter,
    "oracle-check": cmd_oracle_check,
    "star-demo": cmd_star_demo,
}


def run_scenario(path, outdir=None, panels_override: int | None = None,
                 verbose: int = 0) -> int:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"config error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = parse_scenario_text(text, origin=str(path))
        command = raw["command"]
        if command not in _COMMANDS:
            raise ScenarioError(
                f"{path}: unknown command {command!r} "
                f"(choose from {sorted(_COMMANDS)})")
        if panels_override is not None:
            raw["panels"] = str(panels_override)
        fields = _Fields(raw, str(path))
        out = Path(outdir) if outdir is not None else path.parent
        out.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[command](fields, out, verbose)
    except (ScenarioError, InvalidParameterError, InvalidGeometryError,
            ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="npbem",
        description="Neumann-Poincare boundary-integral scenario runner")
    parser.add_argument("scenario", help="scenario file (key = value lines)")
    parser.add_argument("-o", "--outdir", default=None,
                        help="output directory (default: scenario directory)")
    parser.add_argument("--panels", type=int, default=None,
                        help="override the scenario's panel count")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    args = parser.parse_args(argv)
    return run_scenario(args.scenario, args.outdir, args.panels, args.verbose)


if __name__ == "__main__":
    sys.exit(main())
