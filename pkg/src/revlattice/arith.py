"""Sieve-backed arithmetic: r(n), r3(n), omega(n) and the sets S_{Lambda,K}.

``r(n)`` counts ordered signed pairs with ``m1^2 + m2^2 = n``.  ``A1`` is
the set of positive integers all of whose prime factors are 1 mod 4
(``1`` belongs to it vacuously, with ``omega(1) = 0``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from revlattice._parallel import ordered_map

TABLE_MAX = 10**8


class LimitExceeded(ValueError):
    pass


def primes_upto(n):
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve)


class ArithTables:
    """Arithmetic tables on the integer window ``[lo, limit]``."""

    def __init__(self, lo, limit, spf, r2, omega, a1):
        self.lo = lo
        self.limit = limit
        self.spf = spf
        self.r2 = r2
        self.omega = omega
        self.a1 = a1
        self._r3 = None

    def _index(self, n):
        n = np.asarray(n, dtype=np.int64)
        if np.any(n < self.lo) or np.any(n > self.limit):
            raise LimitExceeded(f"n outside table window [{self.lo}, {self.limit}]")
        return n - self.lo

    def r(self, n):
        return self.r2[self._index(n)]

    def omega_of(self, n):
        return self.omega[self._index(n)]

    def in_a1(self, n):
        return self.a1[self._index(n)]

    def covers(self, lo, hi):
        return self.lo <= lo and hi <= self.limit

    def r3_table(self):
        """``r3(n)`` for ``0 <= n <= limit`` as the convolution of ``r`` with squares."""
        if self.lo != 0:
            raise LimitExceeded("r3 needs a table starting at 0")
        if self._r3 is None:
            r3 = self.r2.astype(np.int64)
            base = self.r2.astype(np.int64)
            for j in range(1, math.isqrt(self.limit) + 1):
                r3[j * j:] += 2 * base[: self.limit + 1 - j * j]
            self._r3 = r3
        return self._r3


def build_tables(limit, lo=0):
    """Tables on ``[lo, limit]`` by a segmented smallest-prime-factor sieve."""
    limit = int(limit)
    lo = int(lo)
    if limit > TABLE_MAX:
        raise LimitExceeded(f"table limit {limit} exceeds {TABLE_MAX}")
    if limit < lo or lo < 0:
        raise ValueError("need 0 <= lo <= limit")
    size = limit - lo + 1
    rem = np.arange(lo, limit + 1, dtype=np.int64)
    spf = np.zeros(size, dtype=np.int64)
    omega = np.zeros(size, dtype=np.int16)
    mult = np.ones(size, dtype=np.int64)
    vanish = np.zeros(size, dtype=bool)
    a1 = rem >= 1
    for p in primes_upto(math.isqrt(limit)).tolist():
        first = max(p, -(-lo // p) * p)
        if first > limit:
            continue
        idx = np.arange(first - lo, size, p)
        spf[idx[spf[idx] == 0]] = p
        exp = np.zeros(idx.size, dtype=np.int64)
        live = idx
        pos = np.arange(idx.size)
        while live.size:
            rem[live] //= p
            exp[pos] += 1
            keep = rem[live] % p == 0
            live, pos = live[keep], pos[keep]
        omega[idx] += 1
        if p == 2:
            a1[idx] = False
        elif p % 4 == 1:
            mult[idx] *= exp + 1
        else:
            a1[idx] = False
            vanish[idx] |= exp % 2 == 1
    big = rem > 1
    spf[big & (spf == 0)] = rem[big & (spf == 0)]
    omega[big] += 1
    one_mod_4 = big & (rem % 4 == 1)
    mult[one_mod_4] *= 2
    three = big & (rem % 4 == 3)
    vanish |= three
    a1 &= ~three
    r2 = np.where(vanish, 0, 4 * mult)
    if lo == 0:
        r2[0] = 1
    return ArithTables(lo, limit, spf, r2, omega, a1)


def r3(tables, n):
    """Representations of ``n`` as an ordered signed sum of three squares."""
    n = int(n)
    if n < 0 or n > tables.limit:
        raise LimitExceeded(f"n={n} outside table")
    total = int(tables.r(n))
    for j in range(1, math.isqrt(n) + 1):
        total += 2 * int(tables.r(n - j * j))
    return total


def r3_partial(tables, u):
    """``sum_{1 <= n <= u} r3(n)``."""
    u = int(math.floor(u))
    if u > tables.limit:
        raise LimitExceeded(f"u={u} outside table")
    if u < 1:
        return 0
    return int(tables.r3_table()[1:u + 1].sum())


def window_bounds(lam, a1, a2):
    """Integer window ``[ceil(a1^2 Lambda^2), floor(a2^2 Lambda^2)]``."""
    lo = max(1, math.ceil(a1 * a1 * lam * lam))
    hi = math.floor(a2 * a2 * lam * lam)
    return lo, hi


def enumerate_S(tables, lam, K, a1, a2):
    """Sorted ``l`` in the window with ``l in A1`` and ``omega(l) = K``."""
    lo, hi = window_bounds(lam, a1, a2)
    if hi < lo:
        return []
    if not tables.covers(lo, hi):
        raise LimitExceeded(f"window [{lo}, {hi}] not covered by the tables")
    sl = slice(lo - tables.lo, hi - tables.lo + 1)
    hit = tables.a1[sl] & (tables.omega[sl] == K)
    return (np.flatnonzero(hit) + lo).tolist()


def iterated_log2(x):
    return math.log(math.log(x))


def resonance_K(lam, beta):
    """``K = floor(beta log log Lambda)`` with natural logarithms."""
    return math.floor(beta * iterated_log2(lam))


def predicted_cardinality(lam, K):
    """Main term ``(Lambda^2/log Lambda) (log2 Lambda / 2)^(K-1) / (K-1)!``."""
    if K < 1:
        return None
    return (lam * lam / math.log(lam)) * (0.5 * iterated_log2(lam)) ** (K - 1) / math.factorial(K - 1)


def stirling_shape(K):
    """``K^(K - 1/2) e^(-K)``; equals ``(K-1)! / sqrt(2 pi)`` asymptotically."""
    return K ** (K - 0.5) * math.exp(-K)


@dataclass(frozen=True)
class CardinalityRow:
    lam: float
    K: int
    card: int
    predicted: float | None
    ratio: float | None

    def row(self):
        blank = lambda v: "" if v is None else v  # noqa: E731
        return (self.lam, self.K, self.card, blank(self.predicted), blank(self.ratio))


CARDINALITY_COLUMNS = ("lambda", "K", "card", "predicted", "ratio")


def _cardinality_one(tables, beta, a1, a2, lam):
    K = resonance_K(lam, beta)
    lo, hi = window_bounds(lam, a1, a2)
    tab = tables if tables is not None and tables.covers(lo, hi) else build_tables(hi, lo=lo)
    members = enumerate_S(tab, lam, K, a1, a2)
    pred = predicted_cardinality(lam, K)
    ratio = len(members) / pred if pred else None
    return CardinalityRow(float(lam), K, len(members), pred, ratio)


def cardinality_check(tables, lambdas, beta, a1, a2, workers=1):
    """Exact ``|S_{Lambda,K}|`` against the predicted main term for each Lambda.

    ``tables=None`` builds window-restricted tables per Lambda.
    """
    return ordered_map(partial(_cardinality_one, tables, beta, a1, a2), list(lambdas), workers)


def ratio_spread(rows):
    """``max ratio / min ratio`` over rows with ``K >= 1``."""
    ratios = [r.ratio for r in rows if r.ratio is not None and r.K >= 1]
    return max(ratios) / min(ratios)
