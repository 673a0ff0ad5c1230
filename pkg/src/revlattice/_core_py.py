"""Pure-Python/numpy versions of the kernels in ``_core.pyx``.

Same signatures and the same summation order.  The compiled kernel uses
its own polynomial cosine, so cosine sums agree to a few ulps per term.
"""

from functools import lru_cache
from math import isqrt

import numpy as np

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=1 << 16)
def disc_count(n):
    n = int(n)
    if n < 0:
        return 0
    s = isqrt(n)
    h = isqrt(n // 2)
    if h == 0:
        return 1 + 4 * s
    m = np.arange(1, h + 1, dtype=np.int64)
    r = n - m * m
    root = np.sqrt(r.astype(np.float64)).astype(np.int64)
    root -= root * root > r
    root += (root + 1) * (root + 1) <= r
    q = 2 * int((root - m).sum()) + h
    return 1 + 4 * s + 4 * q


def disc_counts(n):
    n = np.asarray(n, dtype=np.int64)
    return np.fromiter((disc_count(int(v)) for v in n), dtype=np.int64, count=n.size)


def trig_sum(lam, f, t):
    s = 0.0
    c = 0.0
    for li, fi in zip(np.asarray(lam, dtype=np.float64).tolist(),
                      np.asarray(f, dtype=np.float64).tolist()):
        ph = li * t
        ph -= np.floor(ph)
        term = fi * float(np.cos(TWO_PI * ph))
        tmp = s + term
        if abs(s) >= abs(term):
            c += (s - tmp) + term
        else:
            c += (term - tmp) + s
        s = tmp
    return s + c


def trig_sums(lam, f, ts):
    lam = np.asarray(lam, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    s = np.zeros_like(ts)
    c = np.zeros_like(ts)
    for li, fi in zip(lam, f):
        ph = li * ts
        ph -= np.floor(ph)
        term = fi * np.cos(TWO_PI * ph)
        tmp = s + term
        big = np.abs(s) >= np.abs(term)
        c += np.where(big, (s - tmp) + term, (term - tmp) + s)
        s = tmp
    return s + c
