"""Eigendecomposition of the Nystrom NP matrix, the permittivity map, and
the ellipse analytic oracle."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .layerpot import DenseOperator, TWO_PI
from .quadrature import PanelMesh


class EigensolverError(RuntimeError):
    pass


class MissingEigenvalueError(RuntimeError):
    pass


class MultiplicityMismatchError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenPair:
    """One eigenvalue of the weighted NP eigenproblem with its samples.

    samples are eigenfunction values at mesh nodes, normalized to unit
    discrete weighted-L2 norm and phase-fixed so the largest-modulus sample
    is real-positive.
    """

    eigenvalue: complex
    samples: np.ndarray
    norm: float
    cluster: int
    rank: int


def _weighted_transform(op: DenseOperator) -> np.ndarray:
    sq = np.sqrt(op.mesh.weights)
    return op.matrix * (sq[:, None] / sq[None, :])


def _phase_fix(phi: np.ndarray) -> np.ndarray:
    j = int(np.argmax(np.abs(phi)))
    ph = phi[j]
    if abs(ph) == 0.0:
        return phi
    return phi * (np.conj(ph) / abs(ph))


def _cluster_ids(lams: np.ndarray, rtol: float) -> np.ndarray:
    """Group eigenvalues (already sorted by |lam| desc) by relative gaps."""
    ids = np.zeros(len(lams), dtype=int)
    cid = 0
    for i in range(1, len(lams)):
        gap = abs(lams[i] - lams[i - 1])
        scale = max(abs(lams[i]), abs(lams[i - 1]), 1e-8)
        if gap > rtol * scale:
            cid += 1
        ids[i] = cid
    return ids


def eigendecompose(op: DenseOperator, n_eigs: int | None = None,
                   cluster_rtol: float = 1e-5) -> list[EigenPair]:
    """Spectrum of the weighted Nystrom eigenproblem, sorted by |lambda| desc.

    Solves the similarity-transformed problem D^{1/2} A D^{-1/2} (D =
    diag(weights)); eigenfunction samples are v / sqrt(w).  When n_eigs is
    given only the n_eigs largest-magnitude eigenvalues are computed
    (Arnoldi iteration), which is much faster on fine meshes.
    """
    if op.kind != "NP_static":
        raise ValueError("eigendecompose expects an NP_static operator")
    b = _weighted_transform(op)
    w = op.mesh.weights
    if n_eigs is not None and n_eigs < b.shape[0] - 2:
        try:
            lams, vecs = scipy.sparse.linalg.eigs(
                b, k=n_eigs, which="LM", v0=np.ones(b.shape[0]))
        except scipy.sparse.linalg.ArpackNoConvergence as exc:
            raise EigensolverError(
                f"Arnoldi iteration failed to converge "
                f"(cond ~ {np.linalg.cond(b):.3e})") from exc
    else:
        lams, vecs = scipy.linalg.eig(b)
    order = np.argsort(-np.abs(lams))
    lams = lams[order]
    vecs = vecs[:, order]
    ids = _cluster_ids(lams, cluster_rtol)

    # orthonormalize within clusters (Gram-Schmidt, ordered by the arc-length
    # position of each member's largest-modulus sample)
    arc = op.mesh.arclen
    cols = []
    for cid in np.unique(ids):
        sel = np.where(ids == cid)[0]
        if len(sel) == 1:
            cols.append((sel[0], vecs[:, sel[0]]))
            continue
        sub = vecs[:, sel]
        key = np.argsort([arc[int(np.argmax(np.abs(sub[:, j])))]
                          for j in range(sub.shape[1])])
        basis = []
        for j in key:
            v = sub[:, j].copy()
            for u in basis:
                v -= (np.vdot(u, v)) * u
            nv = np.linalg.norm(v)
            if nv < 1e-10:
                raise EigensolverError("degenerate cluster basis")
            basis.append(v / nv)
        for idx, v in zip(sel, basis):
            cols.append((idx, v))
    cols.sort(key=lambda c: c[0])

    sq = np.sqrt(w)
    pairs = []
    for rank, (idx, v) in enumerate(cols):
        phi = _phase_fix(v / sq)
        nrm = float(np.sqrt(np.sum(np.abs(phi) ** 2 * w)))
        pairs.append(EigenPair(complex(lams[idx]), phi, nrm,
                               int(ids[idx]), rank))
    return pairs


def eigenvalue_to_permittivity(lam: float) -> float:
    """Invert lambda(eps) = (eps + 1)/(2(eps - 1)): eps = (2 lam + 1)/(2 lam - 1)."""
    lam = float(lam)
    if not -0.5 < lam < 0.5:
        raise ValueError("eigenvalue must lie in (-1/2, 1/2)")
    return (2.0 * lam + 1.0) / (2.0 * lam - 1.0)


def permittivity_to_eigenvalue(eps: float) -> float:
    eps = float(eps)
    if eps == 1.0:
        raise ValueError("eps = 1 gives no contrast")
    return (eps + 1.0) / (2.0 * (eps - 1.0))


@dataclass(frozen=True)
class HalfEigenReport:
    eigenvalue: complex
    mean: complex
    max_deviation: float
    relative_deviation: float
    passed: bool


def check_half_eigen(pairs: list[EigenPair], mesh: PanelMesh,
                     sl_op: DenseOperator, n_probes: int = 48,
                     shrink: float = 0.5, tol: float = 1e-6) -> HalfEigenReport:
    """Interior constancy of S[psi0] for the lambda = 1/2 eigen-density."""
    half = [p for p in pairs if abs(p.eigenvalue - 0.5) < 1e-3]
    if not half:
        raise MissingEigenvalueError(
            "no eigenvalue near 1/2 found; NP assembly is broken")
    psi0 = half[0].samples
    centroid = np.average(mesh.nodes, axis=0, weights=mesh.weights)
    step = max(1, mesh.n_nodes // n_probes)
    probes = centroid + shrink * (mesh.nodes[::step] - centroid)
    diff = probes[:, None, :] - mesh.nodes[None, :, :]
    lnd = 0.5 * np.log(np.einsum("pjk,pjk->pj", diff, diff))
    vals = (lnd / TWO_PI) @ (psi0 * mesh.weights)
    mean = np.mean(vals)
    dev = float(np.max(np.abs(vals - mean)))
    rel = dev / max(abs(mean), 1e-300)
    return HalfEigenReport(half[0].eigenvalue, complex(mean), dev, rel,
                           rel < tol)


# ---------------------------------------------------------------------------
# Ellipse analytic oracle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipseOracle:
    """Closed-form NP spectrum of the ellipse x = R0 (cosh r cos w, sinh r sin w).

    Eigenvalues a_n = 1/(2 e^{2 n rho0}) with eigenfunctions
    phi_{1,n} = cos(n w)/Xi (lambda = +a_n) and phi_{2,n} = sin(n w)/Xi
    (lambda = -a_n), Xi = R0 sqrt(sinh^2 rho0 + sin^2 w) = |x'(w)|.
    """

    R0: float
    rho0: float

    def __post_init__(self):
        if self.R0 <= 0 or self.rho0 <= 0:
            raise ValueError("EllipseOracle needs R0 > 0 and rho0 > 0")

    def eigenvalue(self, n: int) -> float:
        if n < 1:
            raise ValueError("n >= 1")
        return 0.5 * np.exp(-2.0 * n * self.rho0)

    def xi(self, omega) -> np.ndarray:
        omega = np.asarray(omega, dtype=float)
        return self.R0 * np.sqrt(np.sinh(self.rho0) ** 2 + np.sin(omega) ** 2)

    def eigenfunction(self, n: int, which: int, omega) -> np.ndarray:
        """which = 1 -> cos branch (lambda = +a_n); 2 -> sin branch (-a_n)."""
        omega = np.asarray(omega, dtype=float)
        trig = np.cos(n * omega) if which == 1 else np.sin(n * omega)
        return trig / self.xi(omega)

    def elliptic_coords(self, points: np.ndarray):
        """(rho, omega) with x1 + i x2 = R0 cosh(rho + i omega), rho >= 0."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        zeta = np.arccosh((pts[:, 0] + 1j * pts[:, 1]) / self.R0)
        rho = np.abs(zeta.real)
        omega = np.mod(np.sign(zeta.real + 1e-300) * zeta.imag, TWO_PI)
        return rho, omega

    def single_layer(self, n: int, which: int, points: np.ndarray) -> np.ndarray:
        """Closed-form S[phi_{which,n}] anywhere in the plane.

        cos branch: -cosh(n rho_<) e^{-n rho_>} cos(n w)/n;
        sin branch: -sinh(n rho_<) e^{-n rho_>} sin(n w)/n,
        with rho_< = min(rho, rho0), rho_> = max(rho, rho0).  (Both follow
        from continuity plus the unit normal-derivative jump; only the cosh
        pairing with the cos branch is consistent with the eigenvalues.)
        """
        if n < 1:
            raise ValueError("n >= 1")
        rho, omega = self.elliptic_coords(points)
        lo = np.minimum(rho, self.rho0)
        hi = np.maximum(rho, self.rho0)
        radial = np.cosh(n * lo) if which == 1 else np.sinh(n * lo)
        trig = np.cos(n * omega) if which == 1 else np.sin(n * omega)
        return -radial * np.exp(-n * hi) * trig / n


def ellipse_oracle(R0: float, rho0: float) -> EllipseOracle:
    return EllipseOracle(float(R0), float(rho0))


@dataclass(frozen=True)
class OracleMatchRow:
    n: int
    sign: int
    eigenvalue_error: float
    subspace_angle: float


def match_oracle(pairs: list[EigenPair], oracle: EllipseOracle,
                 n_max: int, mesh: PanelMesh) -> list[OracleMatchRow]:
    """Eigenvalue errors and eigenfunction subspace angles for n = 1..n_max."""
    rows = []
    lams = np.array([p.eigenvalue for p in pairs])
    sq = np.sqrt(mesh.weights)
    for n in range(1, n_max + 1):
        a_n = oracle.eigenvalue(n)
        for sign, which in ((1, 1), (-1, 2)):
            target = sign * a_n
            best = int(np.argmin(np.abs(lams - target)))
            cluster = [p for p in pairs if p.cluster == pairs[best].cluster]
            if len(cluster) != 1:
                raise MultiplicityMismatchError(
                    f"expected a simple eigenvalue near {target:+.6f}, "
                    f"found a cluster of size {len(cluster)}")
            ref = oracle.eigenfunction(n, which, mesh.t)
            comp = np.column_stack([p.samples * sq for p in cluster])
            refm = (ref * sq)[:, None]
            ang = float(scipy.linalg.subspace_angles(comp, refm).max())
            rows.append(OracleMatchRow(
                n, sign, float(abs(lams[best] - target)), ang))
    return rows


def spectrum_to_csv(pairs: list[EigenPair], path, kappa_max: float) -> None:
    with open(path, "w") as f:
        f.write("rank,re_lambda,im_lambda,cluster,kappa_max\n")
        for p in pairs:
            f.write(f"{p.rank},{p.eigenvalue.real:.17g},"
                    f"{p.eigenvalue.imag:.17g},{p.cluster},"
                    f"{kappa_max:.17g}\n")
