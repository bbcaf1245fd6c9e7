import numpy as np
import pytest

from npbem.geometry import make_bump_family
from npbem.sweep import (OBS_CONORMAL, OBS_EIGENFUNCTION, default_observable,
                         ellipse_family, fit_power_law, run_sweep,
                         sweep_to_csv, table_report)


@pytest.fixture(scope="module")
def ellipse_records():
    kappas, family = ellipse_family(1.0, [0.2, 0.1, 0.05])
    return run_sweep(family, kappas, sign=1, rank=0)


def test_ellipse_family_kappa_inversion():
    kappas, family = ellipse_family(1.0, [0.2, 0.1])
    for kap in kappas:
        curve = family(kap)
        rho0 = curve.params["rho0"]
        assert abs(np.cosh(rho0) / np.sinh(rho0) ** 2 - kap) < 1e-8 * kap


def test_ellipse_sweep_closed_form(ellipse_records):
    # psi_max of the normalized leading eigenfunction is 1/(R0 sinh rho0);
    # recover rho0 by inverting kappa = cosh(rho)/sinh^2(rho)
    import scipy.optimize
    for rec in ellipse_records:
        rho0 = scipy.optimize.brentq(
            lambda r: np.cosh(r) / np.sinh(r) ** 2 - rec.kappa_max, 1e-6, 5)
        assert abs(rec.psi_max - 1.0 / np.sinh(rho0)) < 1e-4
        assert rec.converged
        assert rec.mark_distance < 2 * rec.panel_arclen_at_mark


def test_ellipse_exponent_half(ellipse_records):
    fit = fit_power_law(ellipse_records)
    assert abs(fit.p - 0.5) < 0.02


def test_default_observable_roles():
    assert default_observable(1) == OBS_EIGENFUNCTION
    assert default_observable(-1) == OBS_CONORMAL
    assert default_observable(1, concave=True) == OBS_CONORMAL
    assert default_observable(-1, concave=True) == OBS_EIGENFUNCTION


def test_run_sweep_validates_kappa_list():
    _, family = ellipse_family(1.0, [0.2, 0.1])
    with pytest.raises(ValueError):
        run_sweep(family, [1.0, 2.0], sign=1)
    with pytest.raises(ValueError):
        run_sweep(family, [3.0, 2.0, 4.0], sign=1)


def test_fit_power_law_exact_line():
    kappas = np.array([10.0, 100.0, 1000.0])
    psis = 3.0 * kappas ** 0.75
    fit = fit_power_law((kappas, psis))
    assert abs(fit.p - 0.75) < 1e-12
    assert abs(fit.ln_alpha - np.log(3.0)) < 1e-12
    assert fit.residual < 1e-12
    with pytest.raises(ValueError):
        fit_power_law((kappas, -psis))


def test_bump_sweep_short(tmp_path):
    family = lambda kap: make_bump_family(1, kap)
    records = run_sweep(family, [300.0, 600.0, 900.0], sign=1, rank=0)
    fit = fit_power_law(records)
    assert 0.3 < fit.p < 0.7
    for rec in records:
        assert rec.mark_distance < 2 * rec.panel_arclen_at_mark
    sweep_to_csv(records, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert len(lines) == 4
    report = table_report([("+0", fit)])
    assert report.splitlines()[0] == "label,p,ln_alpha,residual,count"
