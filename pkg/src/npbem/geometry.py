"""Closed C2 planar boundary curves: ellipses, star-shaped radial domains,
and exponential-bump families with prescribed maximum curvature.

All curves are parametrized over t in [0, 2pi) with counterclockwise
orientation.  Position and derivative evaluators are vectorized over numpy
arrays of parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

TWO_PI = 2.0 * np.pi


class InvalidParameterError(ValueError):
    pass


class InvalidGeometryError(ValueError):
    pass


class DegenerateParametrizationError(ValueError):
    pass


class FamilyCalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MarkedPoint:
    """A designated high-curvature boundary point."""

    label: str
    t: float
    kappa: float


@dataclass(frozen=True)
class Curve:
    """Closed planar curve with analytic first and second derivatives.

    position, deriv1, deriv2 map an array of parameters (n,) to points (n, 2).
    """

    position: Callable[[np.ndarray], np.ndarray]
    deriv1: Callable[[np.ndarray], np.ndarray]
    deriv2: Callable[[np.ndarray], np.ndarray]
    kind: str
    params: dict = field(default_factory=dict)
    marks: tuple[MarkedPoint, ...] = ()

    def point(self, t: float) -> np.ndarray:
        return self.position(np.atleast_1d(float(t)))[0]


@dataclass(frozen=True)
class CurvatureProfile:
    t: np.ndarray
    kappa: np.ndarray
    arclen: np.ndarray
    perimeter: float
    marks: tuple[MarkedPoint, ...]


def _as_t(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


def _validate_curve(curve: Curve, n_check: int = 512) -> None:
    t = np.linspace(0.0, TWO_PI, n_check, endpoint=False)
    d1 = curve.deriv1(t)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if np.any(speed <= 0.0):
        raise InvalidGeometryError("curve is not regular: |x'(t)| vanishes")
    # 2pi-periodicity of position and derivatives
    for f in (curve.position, curve.deriv1, curve.deriv2):
        a = f(np.array([0.0, 1.0, 2.5]))
        b = f(np.array([TWO_PI, TWO_PI + 1.0, TWO_PI + 2.5]))
        # loose tolerance: the shifted arguments t + 2pi carry an O(1e-16)
        # rounding offset that sharp profiles amplify by their derivative scale
        if not np.allclose(a, b, rtol=0.0, atol=1e-8 * (1.0 + np.abs(a).max())):
            raise InvalidGeometryError("curve is not 2pi-periodic")
    # counterclockwise orientation via the shoelace integral
    x = curve.position(t)
    area = 0.5 * np.sum(x[:, 0] * d1[:, 1] - x[:, 1] * d1[:, 0]) * (TWO_PI / n_check)
    if area <= 0.0:
        raise InvalidGeometryError("curve is not counterclockwise (signed area <= 0)")


def curvature(curve: Curve, t) -> np.ndarray | float:
    """Signed curvature kappa = (x1' x2'' - x2' x1'') / |x'|^3.

    Positive on a convex boundary traversed counterclockwise.
    """
    ta = _as_t(t)
    d1 = curve.deriv1(ta)
    d2 = curve.deriv2(ta)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    if np.any(speed < 1e-14):
        raise DegenerateParametrizationError("|x'(t)| below 1e-14")
    k = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    return k if np.ndim(t) else float(k[0])


def make_ellipse(R0: float, rho0: float) -> Curve:
    """Ellipse x1 = R0 cosh(rho0) cos(t), x2 = R0 sinh(rho0) sin(t).

    The parameter t is the elliptic angular coordinate; the two vertices on
    the semi-major axis (t = 0 and t = pi) are marked as the high-curvature
    points.
    """
    if R0 <= 0.0 or rho0 <= 0.0:
        raise InvalidParameterError("make_ellipse requires R0 > 0 and rho0 > 0")
    a = R0 * np.cosh(rho0)
    b = R0 * np.sinh(rho0)

    def pos(t):
        t = _as_t(t)
        return np.stack([a * np.cos(t), b * np.sin(t)], axis=1)

    def d1(t):
        t = _as_t(t)
        return np.stack([-a * np.sin(t), b * np.cos(t)], axis=1)

    def d2(t):
        t = _as_t(t)
        return np.stack([-a * np.cos(t), -b * np.sin(t)], axis=1)

    kmax = np.cosh(rho0) / (R0 * np.sinh(rho0) ** 2)
    marks = (
        MarkedPoint("x_star", 0.0, kmax),
        MarkedPoint("x_circ", np.pi, kmax),
    )
    curve = Curve(pos, d1, d2, "ellipse", {"R0": R0, "rho0": rho0}, marks)
    _validate_curve(curve)
    return curve


def ellipse_curvature(R0: float, rho0: float, omega) -> np.ndarray | float:
    """Closed-form ellipse curvature cosh(r0) sinh(r0) / (R0 Xi^3/R0^3)."""
    w = np.asarray(omega, dtype=float)
    k = (np.cosh(rho0) * np.sinh(rho0)) / (
        R0 * (np.sinh(rho0) ** 2 + np.sin(w) ** 2) ** 1.5
    )
    return k if np.ndim(omega) else float(k)


def make_radial(
    radial_fn: Callable,
    radial_d1: Callable,
    radial_d2: Callable,
    kind: str = "radial",
    params: dict | None = None,
    marks: tuple[MarkedPoint, ...] = (),
) -> Curve:
    """Star-shaped curve r(theta) (cos theta, sin theta).

    radial_fn and its two derivatives must be 2pi-periodic and vectorized.
    """
    theta = np.linspace(0.0, TWO_PI, 2048, endpoint=False)
    r = np.asarray(radial_fn(theta), dtype=float)
    if np.any(r <= 0.0):
        raise InvalidGeometryError("radial function must be positive everywhere")

    def pos(t):
        t = _as_t(t)
        r = radial_fn(t)
        return np.stack([r * np.cos(t), r * np.sin(t)], axis=1)

    def d1(t):
        t = _as_t(t)
        r, rp = radial_fn(t), radial_d1(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack([rp * c - r * s, rp * s + r * c], axis=1)

    def d2(t):
        t = _as_t(t)
        r, rp, rpp = radial_fn(t), radial_d1(t), radial_d2(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack(
            [rpp * c - 2.0 * rp * s - r * c, rpp * s + 2.0 * rp * c - r * s], axis=1
        )

    curve = Curve(pos, d1, d2, kind, dict(params or {}), marks)
    _validate_curve(curve)
    return curve


def make_circle(radius: float = 1.0) -> Curve:
    if radius <= 0.0:
        raise InvalidParameterError("circle radius must be positive")
    R = float(radius)
    return make_radial(
        lambda t: np.full_like(_as_t(t), R),
        lambda t: np.zeros_like(_as_t(t)),
        lambda t: np.zeros_like(_as_t(t)),
        kind="circle",
        params={"radius": R},
    )


def _bump_profile(h: float, beta: float, n: int, sign: float):
    """r(theta) = 1 + sign*h*exp(beta*(cos(n theta) - 1)) and derivatives.

    cos(x) - 1 is evaluated as -2 sin^2(x/2): beta reaches ~1e6 for sharp
    tips, and the naive difference would lose six digits to cancellation
    near the tip, which the layer-potential kernels then amplify.
    """

    def cosm1(t):
        s = np.sin(0.5 * n * t)
        return -2.0 * s * s

    def r(t):
        t = _as_t(t)
        return 1.0 + sign * h * np.exp(beta * cosm1(t))

    def rp(t):
        t = _as_t(t)
        e = np.exp(beta * cosm1(t))
        return sign * h * e * (-beta * n * np.sin(n * t))

    def rpp(t):
        t = _as_t(t)
        g1 = -beta * n * np.sin(n * t)
        g2 = -beta * n * n * np.cos(n * t)
        e = np.exp(beta * cosm1(t))
        return sign * h * e * (g2 + g1 * g1)

    return r, rp, rpp


def _max_abs_curvature(curve: Curve, n_sym: int) -> float:
    # the extremum sits at a symmetry point t = 0 for the bump family, but
    # scan one sector densely in case the calibration is far off; cluster
    # extra samples near t = 0 since sharp tips are narrower than the grid
    sector = TWO_PI / max(n_sym, 1)
    t = np.concatenate([
        np.linspace(0.0, sector, 2049),
        np.logspace(-9, np.log10(sector / 2), 256),
        sector - np.logspace(-9, np.log10(sector / 2), 256),
    ])
    t = np.sort(t)
    k = np.abs(curvature(curve, t))
    i = int(np.argmax(k))
    lo = t[max(i - 1, 0)]
    hi = t[min(i + 1, len(t) - 1)]
    res = minimize_scalar(
        lambda x: -abs(curvature(curve, float(x))), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(-res.fun)


def make_bump_family(
    n_sym: int,
    target_kappa_max: float,
    concave: bool = False,
    h: float | None = None,
    aspect: float | None = None,
) -> Curve:
    """n-symmetric exponential-bump domain with calibrated maximum curvature.

    r(theta) = 1 + h exp(beta (cos(n theta) - 1)) for the convex family
    (outward bumps) and 1 - h exp(...) for the concave one (inward dimples).
    By default the bump is a self-similar tip: its height is tied to its
    angular width 1/sqrt(beta) through h = aspect/sqrt(beta) (aspect 0.5
    convex, 0.3 concave), so raising the target curvature sharpens the
    boundary only locally and leaves the rest of the spectrum-determining
    geometry fixed, with feature width scaling like 1/kappa.  Passing an
    explicit h fixes the height instead (width then scales like
    1/sqrt(kappa)).  beta is solved by scalar root finding so that
    max |kappa| hits target_kappa_max; the high-curvature points sit at
    theta = 2 pi j / n.
    """
    if n_sym < 1:
        raise InvalidParameterError("n_sym must be >= 1")
    sign = -1.0 if concave else 1.0
    if aspect is None:
        aspect = 0.3 if concave else 0.5
    if h is not None and (h < 0.0 or (concave and h >= 1.0)):
        raise InvalidGeometryError("bump height leaves r <= 0")
    if h == 0.0 or abs(target_kappa_max - 1.0) <= 1e-12:
        if abs(target_kappa_max - 1.0) > 1e-12:
            raise InvalidParameterError("h = 0 admits only the unit circle")
        return make_circle(1.0)

    def height(beta: float) -> float:
        return h if h is not None else aspect / np.sqrt(beta)

    def build(beta: float) -> Curve:
        hb = height(beta)
        r, rp, rpp = _bump_profile(hb, beta, n_sym, sign)
        marks = tuple(
            MarkedPoint(f"x_{j}", TWO_PI * j / n_sym, target_kappa_max)
            for j in range(n_sym)
        )
        return make_radial(
            r, rp, rpp,
            kind="bump",
            params={
                "n_sym": n_sym, "h": hb, "beta": beta,
                "concave": concave, "kappa_max": target_kappa_max,
            },
            marks=marks,
        )

    def objective(beta: float) -> float:
        return _max_abs_curvature(build(beta), n_sym) - target_kappa_max

    # keep the dimple shallow enough that r stays positive
    beta_lo = max(1e-2, (aspect / 0.9) ** 2 if h is None else 1e-2)
    if objective(beta_lo) >= 0.0:
        raise InvalidParameterError(
            f"target curvature {target_kappa_max} is below the family's "
            "reachable minimum")
    beta_hi = max(1.0, 2 * beta_lo)
    f_hi = objective(beta_hi)
    while f_hi < 0.0:
        beta_hi *= 2.0
        if beta_hi > 1e8:
            raise FamilyCalibrationError("failed to bracket target curvature")
        f_hi = objective(beta_hi)
    beta = brentq(objective, beta_lo, beta_hi, xtol=1e-10, rtol=1e-12)
    curve = build(beta)
    achieved = _max_abs_curvature(curve, n_sym)
    if abs(achieved - target_kappa_max) > 1e-3 * target_kappa_max:
        raise FamilyCalibrationError(
            f"calibrated curvature {achieved} misses target {target_kappa_max}"
        )
    return curve


def make_multi_bump(bumps: Sequence[tuple[float, float, float]]) -> Curve:
    """Non-symmetric domain as a sum of independent exponential bumps.

    Each bump is (h_j, beta_j, theta_j), r = 1 + sum h_j exp(beta_j (cos(theta
    - theta_j) - 1)).  Negative h_j gives a dimple.
    """
    bumps = [(float(h), float(b), float(t0)) for h, b, t0 in bumps]

    def cosm1(t, t0):
        # cancellation-free cos(t - t0) - 1 for large beta exponents
        s = np.sin(0.5 * (t - t0))
        return -2.0 * s * s

    def r(t):
        t = _as_t(t)
        out = np.ones_like(t)
        for h, b, t0 in bumps:
            out += h * np.exp(b * cosm1(t, t0))
        return out

    def rp(t):
        t = _as_t(t)
        out = np.zeros_like(t)
        for h, b, t0 in bumps:
            out += h * np.exp(b * cosm1(t, t0)) * (-b * np.sin(t - t0))
        return out

    def rpp(t):
        t = _as_t(t)
        out = np.zeros_like(t)
        for h, b, t0 in bumps:
            g1 = -b * np.sin(t - t0)
            g2 = -b * np.cos(t - t0)
            out += h * np.exp(b * cosm1(t, t0)) * (g2 + g1 * g1)
        return out

    marks = tuple(
        MarkedPoint(f"x_{j}", t0, float("nan")) for j, (_, _, t0) in enumerate(bumps)
    )
    curve = make_radial(r, rp, rpp, kind="multibump", params={"bumps": bumps}, marks=marks)
    # refresh marked curvatures now that the curve exists
    refreshed = tuple(
        MarkedPoint(m.label, m.t, float(np.abs(curvature(curve, m.t)))) for m in marks
    )
    return Curve(curve.position, curve.deriv1, curve.deriv2, curve.kind,
                 curve.params, refreshed)


def make_exp_sin_star(amp: float = 1e-4, sharp: float = 8.0, lobes: int = 12) -> Curve:
    """Cusped star r(theta) = 1 + amp * exp(sharp * sin(lobes * theta)).

    The cusp tips sit at theta = pi/(2*lobes) + 2 pi j / lobes.
    """
    a, b, m = float(amp), float(sharp), int(lobes)

    def r(t):
        t = _as_t(t)
        return 1.0 + a * np.exp(b * np.sin(m * t))

    def rp(t):
        t = _as_t(t)
        return a * np.exp(b * np.sin(m * t)) * b * m * np.cos(m * t)

    def rpp(t):
        t = _as_t(t)
        g1 = b * m * np.cos(m * t)
        g2 = -b * m * m * np.sin(m * t)
        return a * np.exp(b * np.sin(m * t)) * (g2 + g1 * g1)

    tips = [np.pi / (2 * m) + TWO_PI * j / m for j in range(m)]
    curve = make_radial(r, rp, rpp, kind="expstar",
                        params={"amp": a, "sharp": b, "lobes": m})
    marks = tuple(
        MarkedPoint(f"cusp_{j}", t0, float(np.abs(curvature(curve, t0))))
        for j, t0 in enumerate(tips)
    )
    return Curve(curve.position, curve.deriv1, curve.deriv2, curve.kind,
                 curve.params, marks)


def scale_curve(curve: Curve, s: float) -> Curve:
    """Dilate a curve by s about the origin; curvature scales by 1/s."""
    if s <= 0.0:
        raise InvalidParameterError("scale factor must be positive")
    s = float(s)
    marks = tuple(MarkedPoint(m.label, m.t, m.kappa / s) for m in curve.marks)
    params = dict(curve.params)
    params["scale"] = s * params.get("scale", 1.0)
    return Curve(
        lambda t: s * curve.position(t),
        lambda t: s * curve.deriv1(t),
        lambda t: s * curve.deriv2(t),
        curve.kind,
        params,
        marks,
    )


def profile(curve: Curve, n_samples: int) -> CurvatureProfile:
    """Sampled curvature profile with arc length and marked points.

    Arc length is accumulated by 16-point Gauss-Legendre quadrature of |x'|
    on each sample interval.  Marked points come from the curve's declared
    marks, or are auto-detected as local curvature maxima exceeding twice the
    median |kappa|.
    """
    if n_samples < 16:
        raise InvalidParameterError("profile needs n_samples >= 16")
    t = np.linspace(0.0, TWO_PI, n_samples, endpoint=False)
    kap = curvature(curve, t)

    gl_x, gl_w = np.polynomial.legendre.leggauss(16)
    dt = TWO_PI / n_samples
    # quadrature nodes for every interval at once
    mids = t + dt / 2.0
    tq = mids[:, None] + (dt / 2.0) * gl_x[None, :]
    d1 = curve.deriv1(tq.ravel())
    speed = np.hypot(d1[:, 0], d1[:, 1]).reshape(n_samples, 16)
    seg = (dt / 2.0) * speed @ gl_w
    arclen = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    perimeter = float(np.sum(seg))

    if curve.marks:
        marks = curve.marks
    else:
        marks = []
        ak = np.abs(kap)
        med = np.median(ak)
        for i in range(n_samples):
            prev_k, next_k = ak[i - 1], ak[(i + 1) % n_samples]
            if ak[i] > prev_k and ak[i] >= next_k and ak[i] > 2.0 * med:
                marks.append(MarkedPoint(f"peak_{len(marks)}", float(t[i]), float(kap[i])))
        marks = tuple(marks)
    return CurvatureProfile(t, kap, arclen, perimeter, marks)
