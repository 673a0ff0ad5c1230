"""Smooth convex bodies of revolution about the x3-axis.

A body is described by its radial profile ``rho(theta)``: the boundary point
at polar angle ``theta`` (measured from the positive x3-axis) has distance
``rho(theta)`` from the origin.  Three profile kinds are supported:

* ``sphere``  -- ``rho == 1``;
* ``spheroid`` -- equatorial semi-axis ``a``, polar semi-axis ``b``;
* ``fourier`` -- ``rho = c0 + c2 cos(2 theta) + c4 cos(4 theta) + ...``.

Only even harmonics are allowed so that the body is also symmetric under
``x3 -> -x3``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate, optimize

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# support maximization
GSS_WIDTH = 1e-6
NEWTON_STEPS = 10

# profile validation
VALIDATION_GRID = 4096
VALIDATION_TOL = 1e-6

POLE_EPS = 1e-12
EXACT_DPS = 50


class ProfileError(ValueError):
    """The profile violates positivity or the curvature condition."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class GeometryError(RuntimeError):
    pass


@dataclass(frozen=True)
class RevolutionProfile:
    kind: str
    a: float = 1.0
    b: float = 1.0
    coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("sphere", "spheroid", "fourier"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "spheroid" and not (self.a > 0 and self.b > 0):
            raise ValueError("spheroid semi-axes must be positive")
        if self.kind == "fourier":
            if len(self.coeffs) == 0:
                raise ValueError("fourier profile needs at least c0")
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @classmethod
    def sphere(cls):
        return cls("sphere")

    @classmethod
    def spheroid(cls, a, b):
        return cls("spheroid", a=float(a), b=float(b))

    @classmethod
    def fourier(cls, coeffs):
        """``coeffs = [c0, c2, c4, ...]`` (coefficients of the even harmonics)."""
        return cls("fourier", coeffs=tuple(coeffs))

    def describe(self):
        if self.kind == "sphere":
            return "sphere"
        if self.kind == "spheroid":
            return f"spheroid(a={self.a!r}, b={self.b!r})"
        return f"fourier(coeffs={list(self.coeffs)!r})"

    # -- profile and derivatives, vectorized over theta --------------------

    def derivatives(self, theta):
        """Return ``(rho, rho', rho'')`` at ``theta`` (array-like)."""
        th = np.asarray(theta, dtype=np.float64)
        if self.kind == "sphere":
            one = np.ones_like(th)
            return one, np.zeros_like(th), np.zeros_like(th)
        if self.kind == "spheroid":
            ia, ib = 1.0 / self.a**2, 1.0 / self.b**2
            s, c = np.sin(th), np.cos(th)
            u = s * s * ia + c * c * ib
            du = np.sin(2 * th) * (ia - ib)
            d2u = 2 * np.cos(2 * th) * (ia - ib)
            rho = u**-0.5
            d1 = -0.5 * u**-1.5 * du
            d2 = 0.75 * u**-2.5 * du * du - 0.5 * u**-1.5 * d2u
            return rho, d1, d2
        rho = np.zeros_like(th)
        d1 = np.zeros_like(th)
        d2 = np.zeros_like(th)
        for k, ck in enumerate(self.coeffs):
            j = 2 * k
            cj, sj = np.cos(j * th), np.sin(j * th)
            rho = rho + ck * cj
            d1 = d1 - ck * j * sj
            d2 = d2 - ck * j * j * cj
        return rho, d1, d2

    def rho(self, theta):
        return self.derivatives(theta)[0]

    def rho_of_cos(self, c):
        """``rho`` as a function of ``cos(theta)`` (no trigonometry needed)."""
        c = np.asarray(c, dtype=np.float64)
        if self.kind == "sphere":
            return np.ones_like(c)
        if self.kind == "spheroid":
            return (((1.0 - c * c) / self.a**2) + c * c / self.b**2) ** -0.5
        cheb = np.zeros(2 * len(self.coeffs) - 1)
        cheb[::2] = self.coeffs
        return np.polynomial.chebyshev.chebval(c, cheb)

    def gauge_sq(self, r2, x3):
        """Squared gauge ``||x||^2 / rho(theta(x))^2`` from ``r2 = x1^2+x2^2``.

        ``x`` lies in ``sqrt(t) B`` exactly when ``gauge_sq <= t``.
        """
        r2 = np.asarray(r2, dtype=np.float64)
        x3 = np.asarray(x3, dtype=np.float64)
        if self.kind == "sphere":
            return r2 + x3 * x3
        if self.kind == "spheroid":
            return r2 / self.a**2 + x3 * x3 / self.b**2
        n2 = r2 + x3 * x3
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(n2 > 0, x3 / np.sqrt(np.where(n2 > 0, n2, 1.0)), 1.0)
        return n2 / self.rho_of_cos(c) ** 2

    def inside_exact(self, r2, x3, t):
        """Closed membership test ``(x1, x2, x3) in sqrt(t) B`` for integer data.

        Sphere and spheroid are decided in rational arithmetic (floats are
        exact binary rationals); the Fourier profile at 50 significant digits,
        where a difference below 1e-40 counts as boundary (inside).
        """
        r2, x3 = int(r2), int(x3)
        tq = Fraction(t)
        if self.kind == "sphere":
            return r2 + x3 * x3 <= tq
        if self.kind == "spheroid":
            a2 = Fraction(self.a) ** 2
            b2 = Fraction(self.b) ** 2
            return Fraction(r2) / a2 + Fraction(x3 * x3) / b2 <= tq
        n2 = r2 + x3 * x3
        if n2 == 0:
            return True
        with mpmath.workdps(EXACT_DPS):
            c = mpmath.mpf(x3) / mpmath.sqrt(n2)
            th = mpmath.acos(c)
            rho = mpmath.fsum(mpmath.mpf(ck) * mpmath.cos(2 * k * th)
                              for k, ck in enumerate(self.coeffs))
            diff = mpmath.mpf(t) * rho * rho - n2
            return diff >= -mpmath.mpf(10) ** -40 * max(n2, 1)

    @property
    def z_range(self):
        return (-float(self.rho(math.pi)), float(self.rho(0.0)))


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    grid_size: int
    min_abs_curvature_expr: float
    theta_at_min_curvature_expr: float
    min_rho: float
    theta_at_min_rho: float
    sign: int
    tolerance: float
    accepted: bool
    offending_theta: float | None = None

    def lines(self):
        return [
            f"grid_size={self.grid_size}",
            f"min_abs_curvature_expr={self.min_abs_curvature_expr!r}",
            f"theta_at_min_curvature_expr={self.theta_at_min_curvature_expr!r}",
            f"min_rho={self.min_rho!r}",
            f"theta_at_min_rho={self.theta_at_min_rho!r}",
            f"sign={self.sign}",
            f"tolerance={self.tolerance!r}",
            f"accepted={str(self.accepted).lower()}",
            f"offending_theta={self.offending_theta!r}",
        ]


def curvature_expr(p, theta):
    """``rho rho'' - 2 rho'^2 - rho^2``; nonvanishing iff curvature is nonzero."""
    r, d1, d2 = p.derivatives(theta)
    return r * d2 - 2 * d1 * d1 - r * r


def validate_profile(p, grid_size=VALIDATION_GRID, tol=VALIDATION_TOL):
    """Check positivity and the curvature condition on a uniform grid of [0, pi].

    Raises ``ProfileError`` (carrying the report) when rejected.
    """
    if grid_size < 64:
        raise ValueError("grid_size must be at least 64")
    theta = np.linspace(0.0, math.pi, grid_size)
    rho = p.rho(theta)
    expr = curvature_expr(p, theta)
    i_e = int(np.argmin(np.abs(expr)))
    i_r = int(np.argmin(rho))
    signs = np.sign(expr)
    uniform = bool(np.all(signs == signs[0])) and signs[0] != 0
    offending = None
    if rho[i_r] < tol:
        offending = float(theta[i_r])
    elif not uniform:
        offending = float(theta[int(np.argmax(signs != signs[0]))])
    elif abs(expr[i_e]) < tol:
        offending = float(theta[i_e])
    report = ValidationReport(
        grid_size=grid_size,
        min_abs_curvature_expr=float(abs(expr[i_e])),
        theta_at_min_curvature_expr=float(theta[i_e]),
        min_rho=float(rho[i_r]),
        theta_at_min_rho=float(theta[i_r]),
        sign=int(signs[0]) if uniform else 0,
        tolerance=tol,
        accepted=offending is None,
        offending_theta=offending,
    )
    if offending is not None:
        raise ProfileError(f"profile {p.describe()} rejected at theta={offending!r}", report)
    return report


# -- support function -------------------------------------------------------


def _meridian(p, theta):
    r, d1, d2 = p.derivatives(theta)
    s, c = np.sin(theta), np.cos(theta)
    xr = r * s
    x3 = r * c
    xr1 = d1 * s + r * c
    x31 = d1 * c - r * s
    xr2 = d2 * s + 2 * d1 * c - r * s
    x32 = d2 * c - 2 * d1 * s - r * c
    return xr, x3, xr1, x31, xr2, x32


def support_many(p, w_r, w_3):
    """Vectorized support function ``H(w_r, 0, w_3)`` and the maximizing angle.

    Golden-section search over ``theta in [0, pi]`` down to width 1e-6,
    then up to ten safeguarded Newton steps on the derivative.
    """
    wr = np.atleast_1d(np.asarray(w_r, dtype=np.float64))
    w3 = np.atleast_1d(np.asarray(w_3, dtype=np.float64))
    wr, w3 = np.broadcast_arrays(wr, w3)
    if np.any(wr < 0):
        raise ValueError("w_r must be non-negative")
    if np.any((wr == 0) & (w3 == 0)):
        raise ValueError("support is undefined at w = 0")

    def phi(th):
        r = p.rho(th)
        return wr * r * np.sin(th) + w3 * r * np.cos(th)

    lo = np.zeros_like(wr)
    hi = np.full_like(wr, math.pi)
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1, f2 = phi(x1), phi(x2)
    while np.max(hi - lo) > GSS_WIDTH:
        left = f1 >= f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - GOLDEN * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + GOLDEN * (hi - lo))
        nf = phi(np.where(left, nx1, nx2))
        f1, f2 = np.where(left, nf, f2), np.where(left, f1, nf)
        x1, x2 = nx1, nx2
    theta = 0.5 * (lo + hi)
    # candidate endpoints: the maximizer may sit at a pole
    best_t = theta
    best_v = phi(theta)
    for end in (0.0, math.pi):
        ev = phi(np.full_like(theta, end))
        better = ev > best_v
        best_t = np.where(better, end, best_t)
        best_v = np.where(better, ev, best_v)
    theta, val = best_t, best_v
    for _ in range(NEWTON_STEPS):
        _, _, xr1, x31, xr2, x32 = _meridian(p, theta)
        d1 = wr * xr1 + w3 * x31
        d2 = wr * xr2 + w3 * x32
        ok = d2 < 0
        step = np.where(ok, -d1 / np.where(ok, d2, -1.0), 0.0)
        cand = np.clip(theta + step, 0.0, math.pi)
        cv = phi(cand)
        better = cv >= val
        theta = np.where(better, cand, theta)
        val = np.where(better, cv, val)
        if np.all(np.abs(step) < 1e-15):
            break
    return val, theta


def support(p, w_r, w_3):
    """``H(w_r, 0, w_3) = max_theta (w_r rho sin + w_3 rho cos)``."""
    val, _ = support_many(p, [w_r], [w_3])
    return float(val[0])


def support3(p, w):
    """Support function of a general 3-vector via rotation invariance."""
    w1, w2, w3 = (float(x) for x in w)
    return support(p, math.hypot(w1, w2), w3)


# -- slices, volume, curvature ----------------------------------------------


def slice_radius_many(p, z, iterations=64):
    """Radius of the horizontal cross-section disc at heights ``z`` (vectorized).

    Bisection for ``rho(theta) cos(theta) = z``; the axial coordinate
    decreases monotonically from the north to the south pole.
    """
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    z_min, z_max = p.z_range
    if np.any(z < z_min - POLE_EPS) or np.any(z > z_max + POLE_EPS):
        raise ValueError(f"z outside [{z_min}, {z_max}]")
    lo = np.zeros_like(z)
    hi = np.full_like(z, math.pi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = p.rho(mid) * np.cos(mid) > z
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    th = 0.5 * (lo + hi)
    r = p.rho(th) * np.sin(th)
    polar = (np.abs(z - z_max) <= POLE_EPS) | (np.abs(z - z_min) <= POLE_EPS)
    return np.where(polar, 0.0, np.maximum(r, 0.0))


def slice_radius(p, z):
    return float(slice_radius_many(p, [z])[0])


def volume(p):
    """``(2 pi / 3) int_0^pi rho^3 sin(theta) d theta`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda th: float(p.rho(th)) ** 3 * math.sin(th),
                            0.0, math.pi, epsabs=0.0, epsrel=1e-12, limit=200)
    return 2.0 * math.pi / 3.0 * val


def volume_by_slices(p, nodes=400):
    """``pi int R(z)^2 dz`` with Gauss-Legendre nodes; independent of ``volume``."""
    z_min, z_max = p.z_range
    x, w = np.polynomial.legendre.leggauss(nodes)
    z = 0.5 * (z_max - z_min) * x + 0.5 * (z_max + z_min)
    r = slice_radius_many(p, z)
    return math.pi * 0.5 * (z_max - z_min) * float(np.dot(w, r * r))


def _curvatures(p, theta):
    r, d1, d2 = p.derivatives(theta)
    expr = r * d2 - 2 * d1 * d1 - r * r
    g2 = r * r + d1 * d1
    k2 = np.abs(expr) / g2**1.5
    dx3 = d1 * np.cos(theta) - r * np.sin(theta)
    with np.errstate(invalid="ignore", divide="ignore"):
        k3 = dx3 / (r * np.sin(theta)) * expr / g2**2
    return k2, k3


def curvatures(p, theta):
    """Meridian curvature magnitude and Gaussian curvature at ``0 < theta < pi``."""
    th = np.asarray(theta, dtype=np.float64)
    if np.any((th <= 0.0) | (th >= math.pi)):
        raise ValueError("curvatures are evaluated on the open interval (0, pi)")
    k2, k3 = _curvatures(p, th)
    if np.ndim(theta) == 0:
        return float(k2), float(k3)
    return k2, k3


def gaussian_curvature(p, theta, pole_eps=1e-6):
    """Gaussian curvature including the poles, where it equals ``kappa2**2``."""
    th = np.asarray(theta, dtype=np.float64)
    polar = (th < pole_eps) | (th > math.pi - pole_eps)
    safe = np.where(polar, 0.5 * math.pi, th)
    k2_pole, _ = _curvatures(p, np.where(th > 0.5 * math.pi, math.pi, 0.0))
    _, k3 = _curvatures(p, safe)
    return np.where(polar, k2_pole**2, k3)


# -- assembled geometry -----------------------------------------------------


@dataclass(frozen=True)
class BodyGeometry:
    profile: RevolutionProfile
    volume: float
    c1: float
    c2: float
    rect: tuple
    z_range: tuple
    report: ValidationReport = field(repr=False, compare=False, default=None)


def _radial_extremes(p, grid=4096):
    """``(min rho, max rho)``: grid search refined by bounded minimization."""
    theta = np.linspace(0.0, math.pi, grid)
    rho = p.rho(theta)
    out = []
    for sign in (1.0, -1.0):
        idx = int(np.argmin(sign * rho))
        bounds = (theta[max(idx - 1, 0)], theta[min(idx + 1, grid - 1)])
        res = optimize.minimize_scalar(lambda th: sign * float(p.rho(th)), bounds=bounds,
                                       method="bounded", options={"xatol": 1e-12})
        out.append(sign * min(float(res.fun), float(sign * rho[idx])))
    return out[0], out[1]


def _corners(rect):
    a1, a2, a3, a4 = rect
    return [(a1, a3), (a1, a4), (a2, a3), (a2, a4)]


def find_rect(p, max_iter=60, shrink=0.9):
    """Rectangle ``[a1, a2] x [a3, a4]`` in the ``(w1, w3)`` quadrant whose
    corners all satisfy ``1/2 <= H(w1, 0, w3) <= 3/2``.

    Starts from the radial interval [0.55, 1.45] (in units of the level-1
    distance) along the diagonal direction and shrinks about the centre.
    """
    u = 1.0 / math.sqrt(2.0)
    h_unit = support(p, u, u)
    rect = (0.55 * u / h_unit, 1.45 * u / h_unit, 0.55 * u / h_unit, 1.45 * u / h_unit)
    for _ in range(max_iter):
        wr, w3 = zip(*_corners(rect))
        h, _ = support_many(p, wr, w3)
        if np.all((h >= 0.5) & (h <= 1.5)):
            return tuple(float(x) for x in rect)
        c1, c3 = 0.5 * (rect[0] + rect[1]), 0.5 * (rect[2] + rect[3])
        h1, h3 = 0.5 * (rect[1] - rect[0]) * shrink, 0.5 * (rect[3] - rect[2]) * shrink
        rect = (c1 - h1, c1 + h1, c3 - h3, c3 + h3)
    raise GeometryError("find_rect: shrinking budget exhausted")


def make_geometry(p, grid_size=VALIDATION_GRID, tol=VALIDATION_TOL):
    """Validate ``p`` and derive volume, norm constants, rectangle and axial extent."""
    report = validate_profile(p, grid_size=grid_size, tol=tol)
    c1, c2 = _radial_extremes(p)
    return BodyGeometry(
        profile=p,
        volume=float(volume(p)),
        c1=float(c1),
        c2=float(c2),
        rect=find_rect(p),
        z_range=p.z_range,
        report=report,
    )
