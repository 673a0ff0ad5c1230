"""Frequency classes, the damped exponential sum S(t) and the Borel mean B(t).

With ``X = 1/log t`` and ``k = t^2 log t`` the Borel mean is the average of
the discrepancy ``P(X u)`` against the Gamma(k+1) density in ``u``; its
leading oscillation is ``-(t / 2 pi) S(t)`` up to the normalization of the
Fourier coefficients, which here is a pluggable model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from revlattice import kernels
from revlattice._parallel import ordered_map
from revlattice.arith import LimitExceeded, build_tables
from revlattice.body import gaussian_curvature, support_many
from revlattice.lattice import GUARD, count_many, jump_points

EPS0 = 0.3
COEFF_MODELS = ("unit", "curvature")

BOREL_WINDOW = 8.0
BOREL_MIN_NODES = 257
BOREL_NODES_PER_UNIT = 4
BOREL_MASS_TOL = 1e-6

# Bernoulli numbers B_2 .. B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


class BorelError(RuntimeError):
    pass


def log_gamma(x):
    """``log Gamma(x)`` for ``x > 0`` by the Stirling series with eight correction terms."""
    x = float(x)
    if x <= 0:
        raise ValueError("log_gamma needs x > 0")
    shift = 0.0
    while x < 10.0:
        shift -= math.log(x)
        x += 1.0
    series = 0.0
    for n, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * n * (2 * n - 1) * x ** (2 * n - 1))
    return shift + (x - 0.5) * math.log(x) - x + 0.5 * math.log(2 * math.pi) + series


def smoothing_params(t):
    """``(X, k) = (1/log t, t^2 log t)``."""
    lt = math.log(t)
    return 1.0 / lt, t * t * lt


def series_cutoff(t, eps0=EPS0):
    """Classes are kept while ``l + m3^2 <= t^(2 eps0) log t``."""
    return t ** (2 * eps0) * math.log(t)


@dataclass(frozen=True)
class SpectralSeries:
    t: float
    X: float
    cutoff: float
    eps0: float
    model: str
    ell: np.ndarray
    m3: np.ndarray
    norm2: np.ndarray
    lam: np.ndarray
    g: np.ndarray
    f: np.ndarray

    def __len__(self):
        return int(self.lam.size)

    @property
    def total_mass(self):
        return math.fsum(self.f.tolist())

    def rows(self):
        return zip(self.ell.tolist(), self.m3.tolist(), self.lam.tolist(),
                   self.g.tolist(), self.f.tolist())


SERIES_COLUMNS = ("ell", "m3", "lambda", "g", "f")


def enumerate_classes(tables, cutoff):
    """All ``(l, m3) != (0, 0)`` with ``l + m3^2 <= cutoff`` and ``r(l) > 0``."""
    top = math.floor(cutoff)
    if top > tables.limit or tables.lo != 0:
        raise LimitExceeded(f"cutoff {cutoff} exceeds the table limit {tables.limit}")
    ells, m3s = [], []
    rep = np.flatnonzero(tables.r2[: top + 1] > 0)
    for m3 in range(-math.isqrt(top), math.isqrt(top) + 1):
        ell = rep[rep <= top - m3 * m3]
        if m3 == 0:
            ell = ell[ell > 0]
        ells.append(ell)
        m3s.append(np.full(ell.size, m3, dtype=np.int64))
    return np.concatenate(ells).astype(np.int64), np.concatenate(m3s)


def build_series(g, tables, t, coeff_model="unit", eps0=EPS0, X=None):
    """Frequency classes sorted by ``lambda = H(sqrt l, 0, m3)`` with weights ``f``.

    Ties in ``lambda`` are broken by ``(l + m3^2, m3, l)``.  ``X`` defaults
    to ``1/log t``.
    """
    if t < 3:
        raise ValueError("build_series needs t >= 3")
    if coeff_model not in COEFF_MODELS:
        raise ValueError(f"unknown coefficient model {coeff_model!r}")
    if tables is None:
        tables = build_tables(max(2, math.floor(series_cutoff(t, eps0))))
    damping = 1.0 / math.log(t) if X is None else float(X)
    cutoff = series_cutoff(t, eps0)
    ell, m3 = enumerate_classes(tables, cutoff)
    norm2 = ell + m3 * m3
    lam, theta = support_many(g.profile, np.sqrt(ell.astype(np.float64)), m3.astype(np.float64))
    weight = tables.r(ell).astype(np.float64)
    if coeff_model == "curvature":
        weight = weight * gaussian_curvature(g.profile, theta) ** -0.5
    f = weight / norm2 * np.exp(-0.5 * math.pi**2 * damping * lam * lam)
    order = np.lexsort((ell, m3, norm2, lam))
    return SpectralSeries(t=float(t), X=damping, cutoff=cutoff, eps0=eps0, model=coeff_model,
                          ell=ell[order], m3=m3[order], norm2=norm2[order], lam=lam[order],
                          g=weight[order], f=f[order])


def eval_S(series, t=None):
    """``sum f(n) cos(2 pi lambda_n t)`` with compensated summation in class order."""
    t = series.t if t is None else float(t)
    return float(kernels.trig_sum(series.lam, series.f, t))


# -- Borel mean -------------------------------------------------------------


def _simpson_weights(n, h):
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _gamma_window(t, window=BOREL_WINDOW):
    X, k = smoothing_params(t)
    sd = math.sqrt(k)
    lo = max(k - window * sd, 0.0)
    hi = k + window * sd
    log_norm = log_gamma(k + 1.0)
    # the Gamma density is right-skewed for small k
    while k * math.log(hi) - hi - log_norm > -45.0:
        hi += sd
    return X, k, lo, hi, log_norm


def _density(u, k, log_norm):
    with np.errstate(divide="ignore"):
        return np.exp(k * np.log(u) - u - log_norm)


def _check_mass(mass):
    if mass < 1.0 - BOREL_MASS_TOL:
        raise BorelError(f"Gamma weight mass {mass!r} on the window is below 1 - {BOREL_MASS_TOL}")


def borel_nodes(t, nodes_per_unit=BOREL_NODES_PER_UNIT, min_nodes=BOREL_MIN_NODES,
                window=BOREL_WINDOW):
    """Dilations ``X u`` and composite-Simpson weights of the Gamma(k+1) density.

    The window ``k +- window sqrt(k)`` (widened on the right while the
    density is above e^-45) gets at least ``min_nodes`` nodes and at least
    ``nodes_per_unit`` per unit of dilation.
    """
    X, k, lo, hi, log_norm = _gamma_window(t, window)
    n = max(min_nodes, math.ceil((hi - lo) * X * nodes_per_unit) + 1)
    n += 1 - n % 2
    u = np.linspace(lo, hi, n)
    w = _density(u, k, log_norm) * _simpson_weights(n, (hi - lo) / (n - 1))
    _check_mass(math.fsum(w.tolist()))
    return X * u, w


def borel_average(t, func, **node_kw):
    """``(1/Gamma(k+1)) int e^-u u^k func(X u) du`` for a smooth vectorized ``func``."""
    x, w = borel_nodes(t, **node_kw)
    return math.fsum((w * np.asarray(func(x), dtype=np.float64)).tolist())


def borel_mean(g, t, guard=GUARD, nodes_per_unit=BOREL_NODES_PER_UNIT,
               min_nodes=BOREL_MIN_NODES, window=BOREL_WINDOW):
    """Borel mean of the lattice discrepancy.

    The regular Simpson grid is refined by every dilation where the count
    jumps, so the count is constant on each cell; it is evaluated exactly
    at the cell midpoints and each cell gets a three-point Simpson rule.
    """
    if t < 3:
        raise ValueError("borel_mean needs t >= 3")
    X, k, lo, hi, log_norm = _gamma_window(t, window)
    n = max(min_nodes, math.ceil((hi - lo) * X * nodes_per_unit) + 1)
    grid = np.linspace(lo, hi, n)
    jumps = jump_points(g, X * lo, X * hi) / X
    edges = np.unique(np.concatenate((grid, jumps[(jumps > lo) & (jumps < hi)])))
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    wa, wm, wb = (_density(u, k, log_norm) for u in (a, mid, b))
    counts = count_many(g, X * mid, guard).astype(np.float64)
    vol = g.volume
    h6 = (b - a) / 6.0
    _check_mass(math.fsum((h6 * (wa + 4 * wm + wb)).tolist()))
    cells = h6 * (wa * (counts - vol * (X * a) ** 1.5)
                  + 4 * wm * (counts - vol * (X * mid) ** 1.5)
                  + wb * (counts - vol * (X * b) ** 1.5))
    return math.fsum(cells.tolist())


# -- spectral link ----------------------------------------------------------


@dataclass(frozen=True)
class LinkRow:
    t: float
    borel: float
    predicted: float
    scaled: float
    residual: float

    def row(self):
        return (self.t, self.borel, self.predicted, self.scaled, self.residual)


LINK_COLUMNS = ("t", "borel", "predicted", "scaled_predicted", "residual")


@dataclass(frozen=True)
class LinkReport:
    rows: list
    scale: float
    pearson: float


def _link_point(g, tables, coeff_model, eps0, node_kw, t):
    series = build_series(g, tables, t, coeff_model=coeff_model, eps0=eps0)
    return borel_mean(g, t, **node_kw), -t * eval_S(series, t) / (2 * math.pi)


def fit_scale(observed, predicted):
    """Least-squares ``c`` minimizing ``sum (observed - c predicted)^2``."""
    den = math.fsum(p * p for p in predicted)
    if den == 0:
        return 0.0
    return math.fsum(o * p for o, p in zip(observed, predicted)) / den


def pearson(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xd, yd = x - x.mean(), y - y.mean()
    den = math.sqrt(float(np.dot(xd, xd)) * float(np.dot(yd, yd)))
    return float(np.dot(xd, yd)) / den if den > 0 else 0.0


def link_from_values(ts, borel, predicted, scale=None):
    """Assemble a ``LinkReport``; ``scale`` is fitted unless given."""
    if scale is None:
        scale = fit_scale(borel, predicted)
    rows = [LinkRow(float(t), b, p, scale * p, b - scale * p)
            for t, b, p in zip(ts, borel, predicted)]
    return LinkReport(rows=rows, scale=scale, pearson=pearson(borel, predicted))


def spectral_link_report(g, t_grid, coeff_model="unit", eps0=EPS0, tables=None,
                         workers=1, **node_kw):
    """Both sides of ``B(t) ~ -(t / 2 pi) S(t)`` on a grid, with one fitted scale."""
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        return LinkReport(rows=[], scale=0.0, pearson=0.0)
    if tables is None:
        tables = build_tables(max(2, math.floor(series_cutoff(max(t_grid), eps0))))
    values = ordered_map(partial(_link_point, g, tables, coeff_model, eps0, node_kw),
                         t_grid, workers)
    borel = [b for b, _ in values]
    pred = [p for _, p in values]
    return link_from_values(t_grid, borel, pred)
