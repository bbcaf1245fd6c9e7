"""Single-layer potential evaluation on planar grids, boundary traces and
conormal derivatives, and field-map rendering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .hankel import h0v
from .layerpot import TWO_PI, _GL_NODES, _LEG_COEFF
from .quadrature import NODES_PER_PANEL, PanelMesh

MASK_EXTERIOR = 0
MASK_INTERIOR = 1
MASK_EXCLUDED = 2


class InsufficientGridError(RuntimeError):
    pass


@dataclass(frozen=True)
class FieldGrid:
    """Complex field samples at cell centers of a regular grid.

    mask: 0 exterior, 1 interior, 2 near-boundary-excluded (no value).
    """

    box: tuple[float, float, float, float]  # xmin, xmax, ymin, ymax
    nx: int
    ny: int
    values: np.ndarray   # (ny, nx) complex, NaN where excluded
    mask: np.ndarray     # (ny, nx) uint8
    density_label: str = ""

    @property
    def dx(self) -> float:
        return (self.box[1] - self.box[0]) / self.nx

    @property
    def dy(self) -> float:
        return (self.box[3] - self.box[2]) / self.ny

    def cell_centers(self) -> np.ndarray:
        xs = self.box[0] + (np.arange(self.nx) + 0.5) * self.dx
        ys = self.box[2] + (np.arange(self.ny) + 0.5) * self.dy
        gx, gy = np.meshgrid(xs, ys)
        return np.stack([gx, gy], axis=-1)


@dataclass(frozen=True)
class BoundaryTrace:
    arclen: np.ndarray
    values: np.ndarray
    derivative: np.ndarray | None = None


def eval_single_layer(mesh: PanelMesh, density: np.ndarray, points: np.ndarray,
                      k: complex = 0.0, exclusion_radius: float | None = None):
    """S[density](x) = sum_j G^k(x - y_j) density_j w_j at each point.

    Returns (values, excluded) where excluded marks points closer to the
    boundary than the exclusion radius (default: the local panel arc
    length); excluded points carry NaN.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    density = np.asarray(density)
    diff = pts[:, None, :] - mesh.nodes[None, :, :]
    d = np.sqrt(np.einsum("pjk,pjk->pj", diff, diff))
    nearest = np.argmin(d, axis=1)
    if exclusion_radius is None:
        local = mesh.panel_arclen[mesh.panel_of[nearest]]
    else:
        local = np.full(len(pts), float(exclusion_radius))
    excluded = d[np.arange(len(pts)), nearest] < local
    if k == 0:
        kermat = np.log(np.where(d > 0, d, 1.0)) / TWO_PI
    else:
        kermat = np.zeros(d.shape, dtype=complex)
        ok = ~excluded
        if np.any(ok):
            kermat[ok] = -0.25j * h0v(complex(k) * d[ok])
    values = kermat @ (density * mesh.weights)
    values = np.where(excluded, np.nan + 0j if np.iscomplexobj(values)
                      else np.nan, values)
    return values, excluded


def conormal_derivative(mesh: PanelMesh, values: np.ndarray) -> BoundaryTrace:
    """d psi = (d/dt psi) / |x'(t)|, differentiated panelwise.

    Each panel's 16 node values determine a degree-15 Legendre interpolant;
    its derivative is evaluated at the nodes.  Panelwise differentiation
    keeps spectral accuracy on curvature-graded meshes, where a single
    global uniform grid would undersample the refined panels.
    """
    values = np.asarray(values)
    if values.shape[0] != mesh.n_nodes:
        raise ValueError("trace length must equal the node count")
    halves = 0.5 * np.diff(mesh.edges)
    deriv = np.empty_like(values, dtype=complex if np.iscomplexobj(values)
                          else float)
    for p in range(mesh.n_panels):
        sl = mesh.panel_slice(p)
        coef = _LEG_COEFF @ values[sl]
        dcoef = np.polynomial.legendre.legder(coef)
        deriv[sl] = np.polynomial.legendre.legval(_GL_NODES, dcoef) / halves[p]
    return BoundaryTrace(mesh.arclen.copy(), values,
                         deriv / mesh.speed)


def points_inside(points: np.ndarray, loop: np.ndarray) -> np.ndarray:
    """Even-odd crossing-number classification against a closed polygon."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x1, y1 = loop[:, 0], loop[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    inside = np.zeros(len(pts), dtype=bool)
    # chunk over points so the (points x edges) temporaries stay bounded
    step = max(1, int(4e6 // max(len(x1), 1)))
    for s in range(0, len(pts), step):
        px = pts[s:s + step, 0][:, None]
        py = pts[s:s + step, 1][:, None]
        crosses = ((y1[None, :] > py) != (y2[None, :] > py)) & (
            px < x1[None, :] + (py - y1[None, :]) * (x2 - x1)[None, :]
            / np.where(y2 - y1 == 0, 1e-300, y2 - y1)[None, :])
        inside[s:s + step] = np.sum(crosses, axis=1) % 2 == 1
    return inside


def render_field(mesh: PanelMesh, density: np.ndarray,
                 box: tuple[float, float, float, float],
                 resolution: tuple[int, int], k: complex = 0.0,
                 density_label: str = "") -> FieldGrid:
    """Field grid of S[density] with interior/exterior/excluded mask."""
    nx, ny = resolution
    grid = FieldGrid(box, nx, ny,
                     np.full((ny, nx), np.nan, dtype=complex),
                     np.zeros((ny, nx), dtype=np.uint8), density_label)
    pts = grid.cell_centers().reshape(-1, 2)
    interior = points_inside(pts, mesh.nodes)
    tree = cKDTree(mesh.nodes)
    dist, nearest = tree.query(pts)
    excluded = dist < mesh.panel_arclen[mesh.panel_of[nearest]]
    mask = np.where(excluded, MASK_EXCLUDED,
                    np.where(interior, MASK_INTERIOR, MASK_EXTERIOR))
    values = np.full(len(pts), np.nan, dtype=complex)
    live = ~excluded
    if np.any(live):
        vals, _ = eval_single_layer(mesh, density, pts[live], k=k,
                                    exclusion_radius=0.0)
        values[live] = vals
    return FieldGrid(box, nx, ny, values.reshape(ny, nx),
                     mask.reshape(ny, nx).astype(np.uint8), density_label)


def harmonicity_check(grid: FieldGrid, min_cells: int = 9) -> float:
    """Max five-point Laplacian residual over interior cells whose four
    neighbors are interior, scaled by max field magnitude (per spacing^2)."""
    if abs(grid.dx - grid.dy) > 1e-12 * max(grid.dx, grid.dy):
        raise ValueError("harmonicity_check needs square cells")
    interior = grid.mask == MASK_INTERIOR
    ok = interior.copy()
    ok[1:-1, 1:-1] = (interior[1:-1, 1:-1] & interior[:-2, 1:-1]
                      & interior[2:, 1:-1] & interior[1:-1, :-2]
                      & interior[1:-1, 2:])
    ok[0, :] = ok[-1, :] = ok[:, 0] = ok[:, -1] = False
    if np.count_nonzero(ok) < min_cells:
        raise InsufficientGridError(
            f"only {np.count_nonzero(ok)} eligible interior cells")
    u = grid.values
    lap = np.zeros_like(u)
    lap[1:-1, 1:-1] = (u[:-2, 1:-1] + u[2:, 1:-1] + u[1:-1, :-2]
                       + u[1:-1, 2:] - 4.0 * u[1:-1, 1:-1])
    scale = np.nanmax(np.abs(u[interior]))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(lap[ok])) / (scale * grid.dx ** 2))


def grid_to_csv(grid: FieldGrid, path) -> None:
    centers = grid.cell_centers()
    with open(path, "w") as f:
        f.write("x,y,re,im,abs,mask\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                v = grid.values[j, i]
                f.write(f"{centers[j, i, 0]:.17g},{centers[j, i, 1]:.17g},"
                        f"{v.real:.17g},{v.imag:.17g},{abs(v):.17g},"
                        f"{int(grid.mask[j, i])}\n")


def grid_to_pgm(grid: FieldGrid, path) -> None:
    """8-bit portable graymap of |values| with a sidecar stating the scale."""
    mag = np.abs(grid.values)
    finite = np.isfinite(mag)
    lo = float(np.min(mag[finite])) if np.any(finite) else 0.0
    hi = float(np.max(mag[finite])) if np.any(finite) else 1.0
    span = hi - lo if hi > lo else 1.0
    img = np.zeros_like(mag)
    img[finite] = (mag[finite] - lo) / span
    pix = np.clip(np.round(img * 255), 0, 255).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{grid.nx} {grid.ny}\n255\n".encode())
        f.write(pix[::-1, :].tobytes())  # row 0 at the top = max y
    with open(str(path) + ".txt", "w") as f:
        f.write(f"min={lo:.17g}\nmax={hi:.17g}\n"
                f"scaling=linear |value| -> [0,255]; excluded cells = 0\n")


def trace_to_csv(trace: BoundaryTrace, path) -> None:
    with open(path, "w") as f:
        f.write("arclen,re_value,im_value,re_conormal,im_conormal\n")
        for i in range(len(trace.arclen)):
            v = complex(trace.values[i])
            d = complex(trace.derivative[i]) if trace.derivative is not None \
                else complex(np.nan)
            f.write(f"{trace.arclen[i]:.17g},{v.real:.17g},{v.imag:.17g},"
                    f"{d.real:.17g},{d.imag:.17g}\n")
