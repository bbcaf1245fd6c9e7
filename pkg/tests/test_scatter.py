import numpy as np
import pytest
import scipy.special

from npbem.geometry import make_circle, scale_curve
from npbem.scatter import (CoverageWarning, ResolutionError, ScatterConfig,
                           boundary_enhancement, energy_proxy, incident_field,
                           interior_wavenumber, solve_transmission,
                           total_field_grid)


def mie_boundary_total(k, kc, eps, radius, thetas, n_terms=80):
    """Independent cylindrical-wave series for the penetrable cylinder.

    Plane wave arriving from theta_d = pi (direction (-1, 0)); matches u
    and the conormal derivative weighted by eps across r = radius, exactly
    the solver's transmission conditions.  Returns the total boundary trace.
    """
    theta_d = np.pi
    tot = np.zeros_like(thetas, dtype=complex)
    for n in range(-n_terms, n_terms + 1):
        an = 1j ** n * np.exp(-1j * n * theta_d)
        jn, jnp = scipy.special.jv(n, k * radius), \
            scipy.special.jvp(n, k * radius)
        hn, hnp = scipy.special.hankel1(n, k * radius), \
            scipy.special.h1vp(n, k * radius)
        ji, jip = scipy.special.jv(n, kc * radius), \
            scipy.special.jvp(n, kc * radius)
        a = np.array([[hn, -ji], [k * hnp, -eps * kc * jip]])
        _, c_in = np.linalg.solve(a, -np.array([an * jn, an * k * jnp]))
        tot += c_in * ji * np.exp(1j * n * thetas)
    return tot


@pytest.fixture(scope="module")
def lossy_disc_solution():
    config = ScatterConfig(make_circle(1.0), 2.0, 0.1, 3.0, panels=48)
    return solve_transmission(config)


def test_interior_wavenumber_branch():
    kc = interior_wavenumber(10.0, -1.0, 1e-3)
    assert kc.imag >= 0
    # kc is k/sqrt(eps) up to the sign flip enforcing Im kc >= 0
    assert abs(kc ** 2 * complex(-1.0, 1e-3) - 100.0) < 1e-8


def test_incident_field_plane_wave():
    pts = np.array([[1.0, 0.0], [0.0, 2.0]])
    vals = incident_field(2.0, (-1.0, 0.0), pts)
    assert abs(vals[0] - np.exp(-2j)) < 1e-14
    assert abs(vals[1] - 1.0) < 1e-14


def test_config_validation():
    with pytest.raises(ValueError):
        ScatterConfig(make_circle(1.0), -1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        ScatterConfig(make_circle(1.0), -1.0, 1e-3, 1.0, direction=(2.0, 0.0))


def test_resolution_guard():
    config = ScatterConfig(make_circle(1.0), 2.0, 0.1, 50.0, panels=8)
    with pytest.raises(ResolutionError):
        solve_transmission(config)


def test_solver_matches_mie_series(lossy_disc_solution):
    sol = lossy_disc_solution
    theta = np.arctan2(sol.mesh.nodes[:, 1], sol.mesh.nodes[:, 0])
    ref = mie_boundary_total(3.0, sol.k_c, complex(2.0, 0.1), 1.0, theta)
    err = np.max(np.abs(sol.boundary_field - ref)) / np.max(np.abs(ref))
    assert err < 1e-8


def test_transmission_continuity_off_nodes(lossy_disc_solution):
    # total field evaluated just inside and just outside agrees (the
    # matching condition holds away from the collocation nodes too)
    sol = lossy_disc_solution
    theta = np.linspace(0.1, 2 * np.pi, 17)
    from npbem.fieldeval import eval_single_layer
    pin = 0.98 * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    pout = 1.02 * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    ui, _ = eval_single_layer(sol.mesh, sol.psi, pin, k=sol.k_c,
                              exclusion_radius=0.0)
    us, _ = eval_single_layer(sol.mesh, sol.phi, pout, k=sol.config.k,
                              exclusion_radius=0.0)
    uo = us + incident_field(sol.config.k, sol.config.direction, pout)
    # 2% off the boundary the fields differ only by the radial variation
    assert np.max(np.abs(ui - uo)) < 0.15 * np.max(np.abs(uo))


def test_scaling_invariance():
    # solving on s*Omega at wavenumber k equals Omega at wavenumber s*k
    base = make_circle(1.0)
    for s in (0.5, 2.0):
        sol_scaled = solve_transmission(
            ScatterConfig(scale_curve(base, s), -1.0, 1e-3, 10.0, panels=64))
        sol_equiv = solve_transmission(
            ScatterConfig(base, -1.0, 1e-3, 10.0 * s, panels=64))
        a = sol_scaled.boundary_field
        b = sol_equiv.boundary_field
        assert np.max(np.abs(a - b)) < 1e-3 * np.max(np.abs(b))


def test_total_field_grid_masks(lossy_disc_solution):
    grid = total_field_grid(lossy_disc_solution, (-2, 2, -2, 2), (40, 40))
    assert {0, 1, 2} >= set(np.unique(grid.mask))
    inside = grid.mask == 1
    assert np.all(np.isfinite(grid.values[inside]))


def test_energy_proxy_decreases_with_delta():
    # non-resonant disc: E_delta -> 0 as delta -> 0
    energies = []
    for delta in (1e-2, 1e-3, 1e-4):
        sol = solve_transmission(
            ScatterConfig(scale_curve(make_circle(1.0), 2.0), -1.0, delta,
                          10.0, panels=128))
        e, coverage = energy_proxy(sol, resolution=(64, 64))
        assert e >= 0 and coverage > 0.5
        energies.append(e)
    assert energies[0] > energies[1] > energies[2]


def test_coverage_warning_on_coarse_grid():
    sol = solve_transmission(
        ScatterConfig(make_circle(1.0), 2.0, 0.1, 3.0, panels=48))
    with pytest.warns(CoverageWarning):
        energy_proxy(sol, resolution=(12, 12))


def test_boundary_enhancement_is_trace_max(lossy_disc_solution):
    sol = lossy_disc_solution
    assert boundary_enhancement(sol) == pytest.approx(
        np.max(np.abs(sol.boundary_field)))
