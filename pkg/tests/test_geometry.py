import numpy as np
import pytest

from npbem.geometry import (InvalidGeometryError, InvalidParameterError,
                            TWO_PI, curvature, make_bump_family, make_circle,
                            make_ellipse, make_exp_sin_star, make_multi_bump,
                            make_radial, profile, scale_curve)


def test_circle_curvature_constant():
    curve = make_circle(2.0)
    t = np.linspace(0, TWO_PI, 64, endpoint=False)
    assert np.allclose(curvature(curve, t), 0.5, atol=1e-12)


def test_circle_invalid_radius():
    with pytest.raises(InvalidParameterError):
        make_circle(-1.0)


def test_ellipse_parametrization_and_marks():
    R0, rho0 = 1.0, 0.5
    curve = make_ellipse(R0, rho0)
    a, b = R0 * np.cosh(rho0), R0 * np.sinh(rho0)
    t = np.linspace(0, TWO_PI, 17)
    pts = curve.position(t)
    assert np.allclose((pts[:, 0] / a) ** 2 + (pts[:, 1] / b) ** 2, 1.0)
    kmax = np.cosh(rho0) / (R0 * np.sinh(rho0) ** 2)
    assert curve.marks[0].t == 0.0
    assert np.isclose(float(curvature(curve, 0.0)), kmax, rtol=1e-12)
    # vertices of the major axis are the curvature maxima
    assert np.max(np.abs(curvature(curve, t))) <= kmax + 1e-12


def test_ellipse_rejects_bad_params():
    with pytest.raises(InvalidParameterError):
        make_ellipse(1.0, 0.0)


def test_curvature_sign_convention():
    # counterclockwise convex curve has positive curvature everywhere
    curve = make_ellipse(1.0, 0.7)
    t = np.linspace(0, TWO_PI, 128, endpoint=False)
    assert np.all(curvature(curve, t) > 0)


@pytest.mark.parametrize("kappa", [50.0, 500.0, 1500.0])
def test_bump_family_calibration(kappa):
    curve = make_bump_family(1, kappa)
    t = np.linspace(0, TWO_PI, 20001)
    measured = np.max(np.abs(curvature(curve, t)))
    assert abs(measured - kappa) < 1e-3 * kappa
    # the curvature maximum sits at the marked point t = 0
    assert abs(float(curvature(curve, 0.0)) - kappa) < 1e-6 * kappa


def test_bump_family_concave_dimple():
    kappa = 300.0
    curve = make_bump_family(1, kappa, concave=True)
    # concave family dips inward: r(0) < 1 and the mark carries the
    # (negative-curvature) target magnitude
    assert np.hypot(*curve.point(0.0)) < 1.0
    assert float(curvature(curve, 0.0)) < 0
    assert abs(abs(float(curvature(curve, 0.0))) - kappa) < 1e-6 * kappa


def test_bump_family_explicit_height():
    curve = make_bump_family(1, 800.0, h=0.5)
    assert np.isclose(np.hypot(*curve.point(0.0)), 1.5, atol=1e-12)


def test_bump_family_symmetry_marks():
    curve = make_bump_family(3, 200.0)
    assert len(curve.marks) == 3
    ts = [m.t for m in curve.marks]
    assert np.allclose(ts, [0.0, TWO_PI / 3, 2 * TWO_PI / 3])
    kap = [float(curvature(curve, t)) for t in ts]
    assert np.allclose(kap, kap[0])


def test_bump_family_rejects_bad_height():
    with pytest.raises(InvalidGeometryError):
        make_bump_family(1, 100.0, concave=True, h=1.5)


def test_multi_bump_positive_radius_guard():
    with pytest.raises(InvalidGeometryError):
        make_multi_bump([(-2.0, 30.0, 0.0)])


def test_star_marks_are_the_cusps():
    curve = make_exp_sin_star()
    assert len(curve.marks) == 12
    t = np.linspace(0, TWO_PI, 200001)
    kap = np.abs(curvature(curve, t))
    for m in curve.marks:
        # each mark is a local curvature spike location
        near = np.abs(np.mod(t - m.t + np.pi, TWO_PI) - np.pi) < 1e-4
        far = ~near
        assert kap[near].max() > 10 * np.median(kap[far])
    # sin(12 t) = 1 at the marked cusps
    assert np.allclose(np.sin(12 * np.array([m.t for m in curve.marks])), 1.0)


def test_scale_curve_scales_positions_and_marks():
    base = make_ellipse(1.0, 0.5)
    scaled = scale_curve(base, 3.0)
    assert np.allclose(scaled.point(1.2), 3.0 * base.point(1.2))
    assert np.isclose(scaled.marks[0].kappa, base.marks[0].kappa / 3.0)
    t = np.linspace(0, TWO_PI, 32)
    assert np.allclose(curvature(scaled, t),
                       np.asarray(curvature(base, t)) / 3.0)


def test_profile_perimeter():
    prof = profile(make_circle(2.0), 4096)
    assert abs(prof.perimeter - 2 * TWO_PI) < 1e-6


def test_make_radial_rejects_nonpositive_radius():
    with pytest.raises(InvalidGeometryError):
        make_radial(lambda t: np.cos(t), lambda t: -np.sin(t),
                    lambda t: -np.cos(t))
