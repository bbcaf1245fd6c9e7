"""Curvature-sweep harness: tracks eigenvalues and blow-up observables
across domain families of increasing maximal curvature and fits the power
law psi_max ~ alpha * kappa_max^p."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .fieldeval import conormal_derivative
from .geometry import Curve, TWO_PI, make_ellipse
from .layerpot import assemble_np
from .quadrature import NODES_PER_PANEL, build_mesh
from .spectral import EigenPair, eigendecompose

OBS_EIGENFUNCTION = "eigenfunction-modulus"
OBS_CONORMAL = "conormal-derivative-modulus"


class TrackingError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepRecord:
    kappa_max: float
    eigenvalue: complex
    track_label: str
    observable: str
    psi_max: float
    argmax_arclen: float
    mark_arclen: float
    mark_distance: float        # |argmax - mark| along the boundary
    panel_arclen_at_mark: float
    n_nodes: int
    converged: bool


@dataclass(frozen=True)
class RegressionFit:
    p: float
    ln_alpha: float
    residual: float
    count: int


def _wrapped_gap(a: float, b: float, period: float) -> float:
    d = abs(a - b) % period
    return min(d, period - d)


def _select_track(pairs: list[EigenPair], sign: int, rank: int) -> list[EigenPair]:
    """Cluster of the rank-th eigenvalue of the given sign (lambda=1/2 excluded)."""
    same = [p for p in pairs
            if np.sign(p.eigenvalue.real) == sign
            and abs(p.eigenvalue - 0.5) > 1e-3]
    same.sort(key=lambda p: -abs(p.eigenvalue))
    if rank >= len(same):
        raise TrackingError(
            f"requested rank {rank} but only {len(same)} eigenvalues of "
            f"sign {sign:+d} available")
    chosen = same[rank]
    return [p for p in pairs if p.cluster == chosen.cluster]


def _observable_values(mesh, phi: np.ndarray, observable: str) -> np.ndarray:
    if observable == OBS_EIGENFUNCTION:
        return np.abs(phi)
    if observable == OBS_CONORMAL:
        return np.abs(conormal_derivative(mesh, phi).derivative)
    raise ValueError(f"unknown observable {observable!r}")


def _lemma_normalize(mesh, phi: np.ndarray) -> np.ndarray:
    """Scale so that int |phi|^2 |x'| ds = pi.

    On the ellipse this reproduces the closed-form eigenfunctions
    cos(n w)/Xi exactly; it is well defined on any curve and makes psi_max
    comparable across family members.
    """
    s = float(np.sum(np.abs(phi) ** 2 * mesh.speed * mesh.weights))
    return phi * np.sqrt(np.pi / s)


def _quadratic_peak(arcs: np.ndarray, vals: np.ndarray, j: int,
                    perimeter: float):
    """3-node quadratic refinement of the extremum around node j."""
    n = len(vals)
    jm, jp = (j - 1) % n, (j + 1) % n
    x0 = arcs[j]
    xm = x0 - _wrapped_gap(arcs[jm], x0, perimeter)
    xp = x0 + _wrapped_gap(arcs[jp], x0, perimeter)
    coeffs = np.polyfit([xm, x0, xp], [vals[jm], vals[j], vals[jp]], 2)
    a, b, _ = coeffs
    if a < 0:
        xv = -b / (2 * a)
        if xm <= xv <= xp:
            return float(np.polyval(coeffs, xv)), float(xv % perimeter)
    k = [jm, j, jp][int(np.argmax([vals[jm], vals[j], vals[jp]]))]
    return float(vals[k]), float(arcs[k])


def _evaluate_member(curve: Curve, kappa: float, panels: int, sign: int,
                     rank: int, observable: str, label: str,
                     n_eigs: int | None):
    mesh = build_mesh(curve, panels, graded=True)
    pairs = eigendecompose(assemble_np(mesh), n_eigs=n_eigs)
    cluster = _select_track(pairs, sign, rank)
    # arc lengths of all marked points (nearest-node approximation)
    mark_nodes = [int(np.argmin([_wrapped_gap(t, m.t, TWO_PI)
                                 for t in mesh.t])) for m in curve.marks]
    mark_arcs = [float(mesh.arclen[j]) for j in mark_nodes]
    best = None
    for p in cluster:
        phi = _lemma_normalize(mesh, p.samples)
        vals = _observable_values(mesh, phi, observable)
        j = int(np.argmax(vals))
        peak, peak_arc = _quadratic_peak(mesh.arclen, vals, j, mesh.perimeter)
        if best is None or peak > best[0]:
            best = (peak, peak_arc, p.eigenvalue)
    peak, peak_arc, lam = best
    gaps = [_wrapped_gap(peak_arc, a, mesh.perimeter) for a in mark_arcs]
    nearest = int(np.argmin(gaps))
    return SweepRecord(
        kappa_max=kappa, eigenvalue=lam, track_label=label,
        observable=observable, psi_max=peak, argmax_arclen=peak_arc,
        mark_arclen=mark_arcs[nearest],
        mark_distance=gaps[nearest],
        panel_arclen_at_mark=float(
            mesh.panel_arclen[mesh.panel_of[mark_nodes[nearest]]]),
        n_nodes=mesh.n_nodes, converged=False), mesh


def default_observable(sign: int, concave: bool = False) -> str:
    """Eigenfunction modulus for the blow-up track, conormal for the other.

    On convex families the eigenfunctions of positive eigenvalues blow up
    and the conormal derivatives of negative ones do; concave families swap
    the two roles.
    """
    positive_blows = not concave
    if (sign > 0) == positive_blows:
        return OBS_EIGENFUNCTION
    return OBS_CONORMAL


def run_sweep(family: Callable[[float], Curve], kappa_list: Sequence[float],
              sign: int = 1, rank: int = 0, observable: str | None = None,
              concave: bool = False, base_panels: int = 32,
              max_nodes: int = 4096, conv_rtol: float = 0.01,
              track_label: str | None = None,
              n_eigs: int | None = 24) -> list[SweepRecord]:
    """Track one eigenvalue across a curvature family and record psi_max.

    Each record is accepted once panel doubling changes psi_max by less
    than conv_rtol; otherwise resolution doubles up to max_nodes and the
    record is flagged unconverged.
    """
    kappa_list = [float(k) for k in kappa_list]
    if len(kappa_list) < 3:
        raise ValueError("kappa list must have at least 3 entries")
    if any(b <= a for a, b in zip(kappa_list, kappa_list[1:])):
        raise ValueError("kappa list must be strictly increasing")
    if observable is None:
        observable = default_observable(sign, concave)
    if track_label is None:
        track_label = f"{'+' if sign > 0 else '-'}{rank}"
    records = []
    for kappa in kappa_list:
        curve = family(kappa)
        panels = base_panels
        rec, mesh = _evaluate_member(curve, kappa, panels, sign, rank,
                                     observable, track_label, n_eigs)
        while True:
            panels *= 2
            if panels * NODES_PER_PANEL > max_nodes:
                break
            fine, mesh = _evaluate_member(curve, kappa, panels, sign, rank,
                                          observable, track_label, n_eigs)
            if abs(fine.psi_max - rec.psi_max) < conv_rtol * abs(fine.psi_max):
                rec = SweepRecord(**{**fine.__dict__, "converged": True})
                break
            rec = fine
        records.append(rec)
    return records


def ellipse_family(R0: float, rho0_list: Sequence[float]):
    """(kappa list, family fn) for ellipses of decreasing rho0.

    kappa_max = cosh(rho0) / (R0 sinh^2 rho0); the family fn inverts it.
    """
    rho0_list = sorted(float(r) for r in rho0_list)[::-1]
    kap = [float(np.cosh(r) / (R0 * np.sinh(r) ** 2)) for r in rho0_list]

    def family(kappa: float) -> Curve:
        rho = scipy.optimize.brentq(
            lambda r: np.cosh(r) / (R0 * np.sinh(r) ** 2) - kappa,
            1e-8, 50.0)
        return make_ellipse(R0, rho)

    return kap, family


def fit_power_law(records: Sequence[SweepRecord] | tuple) -> RegressionFit:
    """Least-squares line through (ln kappa_max, ln psi_max)."""
    if isinstance(records, tuple) and len(records) == 2:
        kappas, psis = (np.asarray(records[0], float),
                        np.asarray(records[1], float))
    else:
        kappas = np.array([r.kappa_max for r in records])
        psis = np.array([r.psi_max for r in records])
    if len(kappas) < 3:
        raise ValueError("need at least 3 records to fit")
    if np.any(psis <= 0):
        raise ValueError("psi_max values must be positive")
    lk, lp = np.log(kappas), np.log(psis)
    p, ln_alpha = np.polyfit(lk, lp, 1)
    residual = float(np.max(np.abs(lp - (ln_alpha + p * lk))))
    return RegressionFit(float(p), float(ln_alpha), residual, len(kappas))


def table_report(fits: Sequence[tuple[str, RegressionFit]]) -> str:
    """CSV table mirroring the per-track regression summaries."""
    lines = ["label,p,ln_alpha,residual,count"]
    for label, fit in fits:
        lines.append(f"{label},{fit.p:.17g},{fit.ln_alpha:.17g},"
                     f"{fit.residual:.17g},{fit.count}")
    return "\n".join(lines) + "\n"


def sweep_to_csv(records: Sequence[SweepRecord], path) -> None:
    with open(path, "w") as f:
        f.write("kappa_max,track,re_lambda,im_lambda,observable,psi_max,"
                "argmax_arclen,mark_arclen,mark_distance,"
                "panel_arclen_at_mark,n_nodes,converged\n")
        for r in records:
            f.write(f"{r.kappa_max:.17g},{r.track_label},"
                    f"{r.eigenvalue.real:.17g},{r.eigenvalue.imag:.17g},"
                    f"{r.observable},{r.psi_max:.17g},"
                    f"{r.argmax_arclen:.17g},{r.mark_arclen:.17g},"
                    f"{r.mark_distance:.17g},{r.panel_arclen_at_mark:.17g},"
                    f"{r.n_nodes},{int(r.converged)}\n")
