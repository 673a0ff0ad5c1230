"""Exact counts of integer points in the dilates ``sqrt(t) B``.

The body is cut into horizontal slices ``x3 = m3``.  Each slice is a disc of
squared radius ``q = t R(m3 / sqrt(t))^2`` and the number of integer points
in it depends only on ``floor(q)``, which the compiled kernel turns into a
Gauss circle count.  When ``q`` lies within the guard band of an integer the
floor is settled by an exact membership test instead of floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from revlattice import kernels
from revlattice._parallel import chunked, ordered_map
from revlattice.body import slice_radius_many

GUARD = 1e-9
BRUTE_MAX_POINTS = 10**8
NORMALIZE_FROM = 20.0
OMEGA_EXPONENT = 2.0 / 3.0 * (math.sqrt(2.0) - 1.0)


class BoxTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class CountResult:
    t: float
    count: int
    per_slice: tuple | None = None
    boundary_flags: int = 0


@dataclass(frozen=True)
class ScanRecord:
    t: float
    count: int
    volume_term: float
    discrepancy: float
    normalized: float | None

    def row(self):
        return (self.t, self.count, self.volume_term, self.discrepancy,
                "" if self.normalized is None else self.normalized)


SCAN_COLUMNS = ("t", "count", "volume_term", "discrepancy", "normalized")


def _r2_direct(n):
    if n < 0:
        return 0
    total = 0
    for a in range(-math.isqrt(n), math.isqrt(n) + 1):
        rest = n - a * a
        b = math.isqrt(rest)
        if b * b == rest:
            total += 1 if b == 0 else 2
    return total


def slice_squares(p, t, m3):
    """Squared slice radii ``t R(m3/sqrt t)^2`` (negative outside the body).

    Returns ``(q, exact)``; ``exact`` says the floats equal the true values.
    """
    m3 = np.asarray(m3, dtype=np.float64)
    if p.kind == "sphere":
        return t - m3 * m3, True
    if p.kind == "spheroid":
        return p.a * p.a * (t - m3 * m3 / (p.b * p.b)), False
    if t == 0:
        return np.where(m3 == 0, 0.0, -1.0), False
    z_min, z_max = p.z_range
    s = math.sqrt(t)
    z = m3 / s
    zc = np.clip(z, z_min, z_max)
    r = slice_radius_many(p, zc)
    over = np.maximum(z - z_max, z_min - z)
    return np.where(over > 0, -t * over, t * r * r), False


def _slice_floors(p, t, guard):
    """Integer ``floor(q)`` per slice plus the boundary-flag count."""
    z_min, z_max = p.z_range
    s = math.sqrt(t)
    top = int(math.floor(s * max(z_max, -z_min))) + 1
    m3 = np.arange(-top, top + 1, dtype=np.int64)
    q, exact = slice_squares(p, t, m3)
    floors = np.floor(q).astype(np.int64)
    flags = 0
    if not exact:
        n0 = np.rint(q)
        near = np.abs(q - n0) <= guard * np.maximum(np.abs(q), 1.0)
        for i in np.flatnonzero(near):
            n = int(n0[i])
            if n < 0:
                floors[i] = -1
                continue
            floors[i] = n if p.inside_exact(n, int(m3[i]), t) else n - 1
            flags += _r2_direct(n)
    floors = np.maximum(floors, -1)
    return m3, floors, flags


def count_points(g, t, guard=GUARD, per_slice=False):
    """``#(sqrt(t) B  intersect  Z^3)`` by slice decomposition."""
    if t < 0:
        raise ValueError("t must be non-negative")
    m3, floors, flags = _slice_floors(g.profile, float(t), guard)
    counts = kernels.disc_counts(floors)
    total = int(counts.sum())
    slices = None
    if per_slice:
        keep = counts > 0
        slices = tuple(zip(m3[keep].tolist(), counts[keep].tolist()))
    return CountResult(t=float(t), count=total, per_slice=slices, boundary_flags=flags)


def count_many(g, ts, guard=GUARD):
    """Counts at every dilation in ``ts`` with one kernel call."""
    ts = np.asarray(ts, dtype=np.float64)
    if ts.size == 0:
        return np.zeros(0, dtype=np.int64)
    if np.any(ts < 0):
        raise ValueError("t must be non-negative")
    parts = [_slice_floors(g.profile, float(t), guard)[1] for t in ts]
    lengths = np.array([len(x) for x in parts])
    counts = kernels.disc_counts(np.concatenate(parts))
    starts = np.concatenate(([0], np.cumsum(lengths)[:-1]))
    return np.add.reduceat(counts, starts)


def brute_count(g, t, guard=GUARD):
    """Oracle: test every point of the box ``[-B, B]^3`` with the radial inequality."""
    if t < 0:
        raise ValueError("t must be non-negative")
    t = float(t)
    p = g.profile
    bound = int(math.ceil(math.sqrt(t) * g.c2))
    side = 2 * bound + 1
    if side**3 > BRUTE_MAX_POINTS:
        raise BoxTooLarge(f"box with {side**3} points exceeds {BRUTE_MAX_POINTS}")
    m = np.arange(-bound, bound + 1, dtype=np.int64)
    r2 = (m[:, None] ** 2 + m[None, :] ** 2).astype(np.float64)
    band = guard * max(t, 1.0)
    total = 0
    decided = {}
    for m3 in range(-bound, bound + 1):
        gs = p.gauge_sq(r2, float(m3))
        total += int(np.count_nonzero(gs < t - band))
        near = np.abs(gs - t) <= band
        for v in r2[near].astype(np.int64).tolist():
            key = (v, m3)
            if key not in decided:
                decided[key] = p.inside_exact(v, m3, t)
            total += decided[key]
    return total


def jump_points(g, x_lo, x_hi):
    """Sorted distinct dilations in ``(x_lo, x_hi]`` at which the count jumps.

    These are the squared gauges of the lattice points in the shell; between
    two consecutive ones ``count_points`` is constant.
    """
    p = g.profile
    x_hi = float(x_hi)
    bound = int(math.ceil(math.sqrt(max(x_hi, 0.0)) * g.c2))
    m = np.arange(0, bound + 1, dtype=np.int64)
    r2 = np.unique((m[:, None] ** 2 + m[None, :] ** 2).ravel()).astype(np.float64)
    vals = []
    for m3 in range(0, bound + 1):
        gs = p.gauge_sq(r2, float(m3))
        vals.append(gs[(gs > x_lo) & (gs <= x_hi)])
    return np.unique(np.concatenate(vals)) if vals else np.zeros(0)


def normalizer(t):
    """``t^(1/2) (log t)^(1/3) (log2 t)^(2/3 (sqrt2 - 1)) (log3 t)^(-2/3)``."""
    l1 = math.log(t)
    l2 = math.log(l1)
    l3 = math.log(l2)
    return math.sqrt(t) * l1 ** (1 / 3) * l2**OMEGA_EXPONENT * l3 ** (-2 / 3)


def _record(g, t, count):
    vol = float(g.volume) * t**1.5
    disc = float(int(count) - vol)
    norm = disc / normalizer(t) if t >= NORMALIZE_FROM else None
    return ScanRecord(t=float(t), count=int(count), volume_term=vol,
                      discrepancy=disc, normalized=norm)


def discrepancy(g, t, guard=GUARD):
    """``P(t) = #(sqrt(t) B  intersect  Z^3) - vol(B) t^(3/2)``."""
    return _record(g, float(t), count_points(g, t, guard).count)


def _scan_chunk(g, guard, ts):
    return [_record(g, t, c) for t, c in zip(ts, count_many(g, ts, guard))]


def discrepancy_scan(g, t_grid, guard=GUARD, workers=1, chunk=64):
    """One ``ScanRecord`` per grid point; the chunking is fixed, not per worker."""
    t_grid = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t grid must be sorted ascending")
    parts = ordered_map(partial(_scan_chunk, g, guard), chunked(t_grid, chunk), workers)
    return [r for part in parts for r in part]


def running_minimum(records):
    """Running minimum of the discrepancy, one value per record."""
    out = []
    best = math.inf
    for r in records:
        best = min(best, r.discrepancy)
        out.append(best)
    return out
