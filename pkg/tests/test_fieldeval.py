import numpy as np
import pytest

from npbem.fieldeval import (BoundaryTrace, InsufficientGridError,
                             conormal_derivative, eval_single_layer,
                             grid_to_csv, grid_to_pgm, harmonicity_check,
                             points_inside, render_field, trace_to_csv)
from npbem.geometry import make_circle, make_ellipse
from npbem.layerpot import assemble_np, assemble_sl
from npbem.quadrature import build_mesh
from npbem.spectral import eigendecompose


@pytest.fixture(scope="module")
def circle_mesh():
    # radius != 1 so that S[1] = ln R is nonzero
    return build_mesh(make_circle(2.0), 24)


def test_single_layer_constant_density(circle_mesh):
    mesh = circle_mesh
    # S[1](x) = R ln R inside, R ln |x| outside, for a radius-R circle
    inside = np.array([[0.3, -0.1], [0.0, 0.0], [1.0, 1.0]])
    outside = np.array([[3.0, 0.0], [0.0, -5.0]])
    vin, exc_in = eval_single_layer(mesh, np.ones(mesh.n_nodes), inside)
    vout, exc_out = eval_single_layer(mesh, np.ones(mesh.n_nodes), outside)
    assert not exc_in.any() and not exc_out.any()
    assert np.allclose(vin, 2.0 * np.log(2.0), atol=1e-12)
    r = np.hypot(outside[:, 0], outside[:, 1])
    assert np.allclose(vout, 2.0 * np.log(r), atol=1e-12)


def test_single_layer_excludes_near_boundary(circle_mesh):
    vals, excluded = eval_single_layer(circle_mesh,
                                       np.ones(circle_mesh.n_nodes),
                                       np.array([[2.0001, 0.0]]))
    assert excluded[0] and np.isnan(vals[0])


def test_conormal_derivative_is_arclength_derivative(circle_mesh):
    mesh = circle_mesh
    # on a radius-2 circle d/ds = (1/2) d/dt, so cos(n t) maps to
    # -(n/2) sin(n t)
    for n in (1, 3):
        vals = 2.0 ** n * np.cos(n * mesh.t)
        trace = conormal_derivative(mesh, vals)
        ref = -n * 2.0 ** n * np.sin(n * mesh.t) / 2.0
        assert np.max(np.abs(trace.derivative - ref)) < 1e-8


def test_points_inside_circle(circle_mesh):
    pts = np.array([[0.0, 0.0], [1.9, 0.0], [2.1, 0.0], [-3.0, 1.0]])
    assert list(points_inside(pts, circle_mesh.nodes)) == [True, True,
                                                           False, False]


def test_render_field_masks_and_harmonicity(circle_mesh):
    mesh = circle_mesh
    pairs = eigendecompose(assemble_np(mesh))
    psi0 = pairs[0].samples  # lambda = 1/2: interior potential is constant
    grid = render_field(mesh, psi0, (-2.5, 2.5, -2.5, 2.5), (64, 64))
    assert set(np.unique(grid.mask)) <= {0, 1, 2}
    resid = harmonicity_check(grid)
    assert resid < 1e-8  # constant interior field has zero Laplacian


def test_harmonicity_check_o_h2():
    # S[cos t] is harmonic off the boundary; the 5-point residual per h^2
    # must shrink ~ h^2 as the grid refines
    mesh = build_mesh(make_ellipse(1.0, 0.8), 32)
    dens = np.cos(mesh.t)
    box = (-0.55, 0.55, -0.55, 0.55)
    r1 = harmonicity_check(render_field(mesh, dens, box, (24, 24)))
    r2 = harmonicity_check(render_field(mesh, dens, box, (96, 96)))
    assert r2 < r1 / 4.0


def test_harmonicity_check_guards():
    mesh = build_mesh(make_circle(1.0), 16)
    tiny = render_field(mesh, np.ones(mesh.n_nodes), (-0.1, 0.1, -0.1, 0.1),
                        (3, 3))
    with pytest.raises(InsufficientGridError):
        harmonicity_check(tiny)
    rect = render_field(mesh, np.ones(mesh.n_nodes), (-1.5, 1.5, -1.0, 1.0),
                        (32, 32))
    with pytest.raises(ValueError):
        harmonicity_check(rect)


def test_csv_and_pgm_outputs(tmp_path, circle_mesh):
    mesh = circle_mesh
    grid = render_field(mesh, np.ones(mesh.n_nodes), (-3, 3, -3, 3), (8, 8))
    grid_to_csv(grid, tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "x,y,re,im,abs,mask"
    assert len(lines) == 1 + 64
    grid_to_pgm(grid, tmp_path / "g.pgm")
    raw = (tmp_path / "g.pgm").read_bytes()
    assert raw.startswith(b"P5\n8 8\n255\n")
    assert (tmp_path / "g.pgm.txt").exists()
    trace = BoundaryTrace(mesh.arclen, np.cos(mesh.t))
    trace_to_csv(trace, tmp_path / "t.csv")
    header = (tmp_path / "t.csv").read_text().splitlines()[0]
    assert header == "arclen,re_value,im_value,re_conormal,im_conormal"
