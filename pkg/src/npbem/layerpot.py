"""Nystrom assembly of the Neumann-Poincare operator K*, the single-layer
operator S, and their finite-frequency Helmholtz variants.

Log-singular kernels are assembled with panelwise product integration: on
the target's own panel and on any panel closer than two half-widths in
parameter, the kernel is split as A(t) ln|x_i - x(t)| + B(t) with smooth A
and B, the log factor is integrated exactly against the Legendre
interpolant of the node values, and the smooth remainder keeps the plain
Gauss-Legendre weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hankel import EULER_GAMMA, h0v, h1v, j0_small, j1_small, log_offset_tau
from .quadrature import NODES_PER_PANEL, PanelMesh, gauss_legendre_16

TWO_PI = 2.0 * np.pi

_GL_NODES, _GL_WEIGHTS = gauss_legendre_16()
# node values -> Legendre coefficients (the 16x16 pseudo-Vandermonde inverse)
_LEG_VANDER = np.polynomial.legendre.legvander(_GL_NODES, NODES_PER_PANEL - 1)
_LEG_COEFF = np.linalg.inv(_LEG_VANDER)

# product-integration corrections are applied where the mapped target sits
# within this distance of [-1, 1]; beyond it plain GL already converges
_NEAR_LIMIT = 2.0


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    mesh: PanelMesh
    kind: str  # NP_static | SL_static | NP_helmholtz | SL_helmholtz
    k: complex = 0.0


# ---------------------------------------------------------------------------
# Legendre log moments
# ---------------------------------------------------------------------------

def _legendre_q(c: float, m_max: int) -> np.ndarray:
    """Q_0..Q_m of the Legendre function of the second kind at real c.

    On the cut (|c| < 1) this is the principal-value branch.  Forward
    recurrence is used where stable; Miller's downward recurrence otherwise.
    """
    q0 = 0.5 * np.log(abs((1.0 + c) / (1.0 - c)))
    ac = abs(c)
    xi = 0.0 if ac <= 1.0 else float(np.arccosh(ac))
    if ac <= 1.0 or xi <= 0.45:
        q = np.empty(m_max + 1)
        q[0] = q0
        if m_max >= 1:
            q[1] = c * q0 - 1.0
        for m in range(1, m_max):
            q[m + 1] = ((2 * m + 1) * c * q[m] - m * q[m - 1]) / (m + 1)
        return q
    # exterior point: Q decays, so recur downward and normalize by Q_0
    start = m_max + 2 + int(np.ceil(40.0 / xi))
    qn1, qn = 0.0, 1.0
    q = np.zeros(m_max + 1)
    for m in range(start, 0, -1):
        qm1 = ((2 * m + 1) * c * qn - (m + 1) * qn1) / m
        qn1, qn = qn, qm1
        if m - 1 <= m_max:
            q[m - 1] = qm1
        if abs(qm1) > 1e280:
            qn1 *= 1e-280
            qn *= 1e-280
            q *= 1e-280
    return q * (q0 / q[0])


def legendre_log_moments(c: float) -> np.ndarray:
    """M_k(c) = integral_{-1}^{1} ln|tau - c| P_k(tau) dtau for k = 0..15."""
    n = NODES_PER_PANEL
    q = _legendre_q(c, n)
    m = np.empty(n)
    m[0] = ((1.0 - c) * np.log(abs(1.0 - c)) if c != 1.0 else 0.0) \
        + ((1.0 + c) * np.log(abs(1.0 + c)) if c != -1.0 else 0.0) - 2.0
    for k in range(1, n):
        m[k] = 2.0 * (q[k + 1] - q[k - 1]) / (2 * k + 1)
    return m


def log_quadrature_weights(tau_c: float) -> np.ndarray:
    """Weights u on the 16 GL nodes with sum u_q f_q ~ int ln|tau-tau_c| f."""
    return legendre_log_moments(tau_c) @ _LEG_COEFF


# ---------------------------------------------------------------------------
# Static kernels
# ---------------------------------------------------------------------------

def np_kernel(x: np.ndarray, nu_x: np.ndarray, y: np.ndarray) -> float:
    """(1/2 pi) <x - y, nu_x> / |x - y|^2 for x != y."""
    dx = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    r2 = float(dx @ dx)
    if r2 < 1e-28:
        raise ValueError("np_kernel is undefined on the diagonal; "
                         "use np_diagonal for the coincidence limit")
    return float(dx @ np.asarray(nu_x, dtype=float)) / (TWO_PI * r2)


def np_diagonal(mesh: PanelMesh, j: int) -> float:
    """Coincidence limit -<x'', nu>/(2 |x'|^2) scaled by 1/(2 pi)."""
    num = -float(mesh.d2[j] @ mesh.normals[j])
    return num / (2.0 * mesh.speed[j] ** 2) / TWO_PI


def _pair_geometry(mesh: PanelMesh):
    """dx, distances and <dx, nu_i> for all node pairs (target i, source j)."""
    dx = mesh.nodes[:, None, :] - mesh.nodes[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", dx, dx))
    udot = np.einsum("ijk,ik->ij", dx, mesh.normals)
    return dx, d, udot


def assemble_np(mesh: PanelMesh) -> DenseOperator:
    """Nystrom matrix of K* (static).  The kernel is smooth on C2 curves."""
    _, d, udot = _pair_geometry(mesh)
    n = mesh.n_nodes
    with np.errstate(divide="ignore", invalid="ignore"):
        ker = udot / (TWO_PI * d * d)
    diag = -np.einsum("ij,ij->i", mesh.d2, mesh.normals) / (2.0 * mesh.speed**2) / TWO_PI
    ker[np.arange(n), np.arange(n)] = diag
    return DenseOperator(ker * mesh.weights[None, :], mesh, "NP_static", 0.0)


# ---------------------------------------------------------------------------
# Generic log-split assembly
# ---------------------------------------------------------------------------

def _near_panels(mesh: PanelMesh, i: int):
    """(panel index, mapped target tau_c, shifted t_i) for panels near node i."""
    mids = 0.5 * (mesh.edges[:-1] + mesh.edges[1:])
    halves = 0.5 * np.diff(mesh.edges)
    ti = mesh.t[i]
    out = []
    for p in range(mesh.n_panels):
        delta = ti - mids[p]
        delta -= TWO_PI * np.round(delta / TWO_PI)
        tau_c = delta / halves[p]
        if abs(tau_c) <= 1.0 + _NEAR_LIMIT:
            out.append((p, tau_c, mids[p] + delta))
    return out


def _assemble_log_split(mesh: PanelMesh, far, a_fn, b_fn, a_diag, b_diag,
                        dtype=complex) -> np.ndarray:
    """Assemble sum over j of [A ln|x_i - x_j| + B](x_i, x_j) w_j.

    far: (i, j-index array) -> full kernel values used away from the target.
    a_fn, b_fn: smooth split factors for near panels; a_diag, b_diag their
    coincidence limits per node.
    """
    n = mesh.n_nodes
    mat = far()
    if mat.dtype != np.dtype(dtype):
        mat = mat.astype(dtype)
    halves = 0.5 * np.diff(mesh.edges)
    for i in range(n):
        for p, tau_c, ti_shift in _near_panels(mesh, i):
            sl = mesh.panel_slice(p)
            idx = np.arange(sl.start, sl.stop)
            hw = halves[p]
            tq = mesh.t[sl]
            # node params in the shifted frame so |t - t_i| is the wrapped gap
            dt = np.abs((tq - mesh.edges[p]) + mesh.edges[p] - ti_shift)
            u_log = hw * (np.log(hw) * _GL_WEIGHTS + log_quadrature_weights(tau_c))
            a = a_fn(i, idx)
            b = b_fn(i, idx)
            dist = np.sqrt(np.sum((mesh.nodes[i] - mesh.nodes[sl]) ** 2, axis=1))
            on_diag = idx == i
            with np.errstate(divide="ignore", invalid="ignore"):
                smooth_log = np.log(dist / dt)
            if np.any(on_diag):
                smooth_log[on_diag] = np.log(mesh.speed[i])
                a = np.where(on_diag, a_diag[i], a)
                b = np.where(on_diag, b_diag[i], b)
            glw = hw * _GL_WEIGHTS * mesh.speed[sl]
            mat[i, idx] = (a * (u_log * mesh.speed[sl] + glw * smooth_log)
                           + b * mesh.weights[sl])
    return mat


def assemble_sl(mesh: PanelMesh) -> DenseOperator:
    """Nystrom matrix of the static single-layer boundary operator S."""
    def far():
        _, d, _ = _pair_geometry(mesh)
        np.fill_diagonal(d, 1.0)
        return (np.log(d) / TWO_PI) * mesh.weights[None, :]

    zeros = np.zeros(mesh.n_nodes)
    const_a = np.full(mesh.n_nodes, 1.0 / TWO_PI)
    mat = _assemble_log_split(
        mesh, far,
        a_fn=lambda i, idx: const_a[idx],
        b_fn=lambda i, idx: zeros[idx],
        a_diag=const_a, b_diag=zeros, dtype=float)
    return DenseOperator(mat, mesh, "SL_static", 0.0)


# ---------------------------------------------------------------------------
# Finite-frequency kernels
# ---------------------------------------------------------------------------

def _check_wavenumber(k: complex) -> complex:
    k = complex(k)
    if k == 0:
        raise ValueError("k = 0: use the static assembly")
    if k.imag < -1e-12 * abs(k):
        raise ValueError("finite-frequency kernels require Im k >= 0")
    return k


def _b_coeff_sums(kd: np.ndarray, k: complex, deriv: bool) -> np.ndarray:
    """sum_n (b_n ln k + c_n) (kd)^{2n}, or with an extra factor 2n if deriv.

    b_n = (-1)^n / (2 pi 4^n (n!)^2); c_n = b_n (gamma - ln 2 - i pi/2 - H_n).
    """
    lk = np.log(complex(k))
    g2 = EULER_GAMMA - np.log(2.0) - 0.5j * np.pi
    z2 = (kd.astype(complex)) ** 2
    acc = np.zeros_like(z2)
    b = 1.0 / TWO_PI
    H = 0.0
    p = np.ones_like(z2)
    for n in range(1, 80):
        b *= -1.0 / (4.0 * n * n)
        H += 1.0 / n
        p = p * z2
        term = b * (lk + g2 - H) * p
        if deriv:
            term = term * (2 * n)
        acc = acc + term
        if np.max(np.abs(term)) < 1e-18 * max(np.max(np.abs(acc)), 1e-30) and n > 3:
            break
    return acc


def assemble_sl_k(mesh: PanelMesh, k: complex) -> DenseOperator:
    """Nystrom matrix of the Helmholtz single-layer operator S^k.

    Kernel split: G^k(d) = (1/2 pi) J0(kd) ln d + B(d), with
    B(d) = tau(k) + sum_n (b_n ln k + c_n)(kd)^{2n} analytic in d^2.
    """
    k = _check_wavenumber(k)
    _, d, _ = _pair_geometry(mesh)
    np.fill_diagonal(d, 1.0)
    tau = log_offset_tau(k)

    def far():
        # evaluate in row blocks: the Hankel series would otherwise hold
        # several full n x n complex temporaries at once
        n = mesh.n_nodes
        out = np.empty((n, n), dtype=complex)
        step = max(1, int(4e6) // n)
        for s in range(0, n, step):
            out[s:s + step] = (-0.25j * h0v(k * d[s:s + step])) \
                * mesh.weights[None, :]
        return out

    def a_fn(i, idx):
        return j0_small(k * d[i, idx]) / TWO_PI

    def b_fn(i, idx):
        return tau + _b_coeff_sums(k * d[i, idx], k, deriv=False)

    a_diag = np.full(mesh.n_nodes, 1.0 / TWO_PI, dtype=complex)
    b_diag = np.full(mesh.n_nodes, tau, dtype=complex)
    mat = _assemble_log_split(mesh, far, a_fn, b_fn, a_diag, b_diag)
    return DenseOperator(mat, mesh, "SL_helmholtz", k)


def assemble_np_k(mesh: PanelMesh, k: complex) -> DenseOperator:
    """Nystrom matrix of the finite-frequency NP operator (K^k)*.

    Kernel d/d nu_x G^k = A ln d + B with A = -(k/2 pi) J1(kd) u/d and
    B = (u/d^2) [J0(kd)/(2 pi) + sum_n 2n (b_n ln k + c_n)(kd)^{2n}],
    where u = <x - y, nu_x>; B's diagonal is the static NP coincidence limit.
    """
    k = _check_wavenumber(k)
    _, d, udot = _pair_geometry(mesh)
    np.fill_diagonal(d, 1.0)

    def far():
        n = mesh.n_nodes
        out = np.empty((n, n), dtype=complex)
        step = max(1, int(4e6) // n)
        for s in range(0, n, step):
            sl = slice(s, s + step)
            out[sl] = (0.25j * k * h1v(k * d[sl]) * udot[sl] / d[sl]) \
                * mesh.weights[None, :]
        return out

    def a_fn(i, idx):
        dd = d[i, idx]
        return -(k / TWO_PI) * j1_small(k * dd) * udot[i, idx] / dd

    def b_fn(i, idx):
        dd = d[i, idx]
        bracket = j0_small(k * dd) / TWO_PI + _b_coeff_sums(k * dd, k, deriv=True)
        return (udot[i, idx] / dd**2) * bracket

    np_diag = -np.einsum("ij,ij->i", mesh.d2, mesh.normals) \
        / (2.0 * mesh.speed**2) / TWO_PI
    a_diag = np.zeros(mesh.n_nodes, dtype=complex)
    mat = _assemble_log_split(mesh, far, a_fn, b_fn, a_diag,
                              np_diag.astype(complex))
    return DenseOperator(mat, mesh, "NP_helmholtz", k)


# ---------------------------------------------------------------------------
# Operator norms and quasi-static residuals
# ---------------------------------------------------------------------------

def operator_norm(op_matrix: np.ndarray, weights: np.ndarray,
                  tol: float = 1e-8, max_iter: int = 500) -> float:
    """Largest singular value in the discrete weighted-L2 metric.

    Power iteration on M^H M with M = D^{1/2} A D^{-1/2}, D = diag(weights).
    """
    sq = np.sqrt(weights)
    m = op_matrix * (sq[:, None] / sq[None, :])
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(m.shape[1]) + 0j
    v /= np.linalg.norm(v)
    sigma2 = 0.0
    for _ in range(max_iter):
        w = m.conj().T @ (m @ v)
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(new - sigma2) <= tol * max(new, 1e-30):
            sigma2 = new
            break
        sigma2 = new
    return float(np.sqrt(max(sigma2, 0.0)))


@dataclass(frozen=True)
class QuasistaticRow:
    k: float
    residual_np: float
    residual_sl: float
    outside_regime: bool


def quasistatic_residual(mesh: PanelMesh, k_values) -> list[QuasistaticRow]:
    """Scaled operator-norm distances of (K^k)*, S^k from their static limits.

    residual_np = ||(K^k)* - K*|| / (k^2 |ln k|); residual_sl subtracts the
    rank-one tau <., 1> offset first.  Rows with k * diam > 0.5 are flagged
    as outside the asymptotic regime.
    """
    rows = []
    if len(list(k_values)) == 0:
        return rows
    np0 = assemble_np(mesh).matrix
    sl0 = assemble_sl(mesh).matrix
    span = mesh.nodes.max(axis=0) - mesh.nodes.min(axis=0)
    diam = float(np.hypot(*span))
    for k in k_values:
        k = float(k)
        if k <= 0.0:
            raise ValueError("quasistatic_residual expects real positive k")
        scale = k * k * abs(np.log(k))
        npk = assemble_np_k(mesh, k).matrix
        slk = assemble_sl_k(mesh, k).matrix
        tau = log_offset_tau(k)
        sl_ref = sl0 + tau * np.tile(mesh.weights, (mesh.n_nodes, 1))
        rows.append(QuasistaticRow(
            k,
            operator_norm(npk - np0, mesh.weights) / scale,
            operator_norm(slk - sl_ref, mesh.weights) / scale,
            k * diam > 0.5,
        ))
    return rows


def operator_to_csv(op: DenseOperator, path) -> None:
    """Row-major CSV dump with a metadata header line."""
    with open(path, "w") as f:
        f.write(f"# kind={op.kind},k={op.k!r},nodes={op.mesh.n_nodes}\n")
        for row in op.matrix:
            f.write(",".join(f"{v.real:.17g}{v.imag:+.17g}j"
                             if np.iscomplexobj(op.matrix) else f"{v:.17g}"
                             for v in row))
            f.write("\n")
