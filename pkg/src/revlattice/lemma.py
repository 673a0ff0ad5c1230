"""The resonance lemma as an executable search, and the construction around it.

For non-negative weights ``f`` and non-decreasing frequencies ``lam`` the
lemma guarantees some ``t`` in ``[T/2, (6L)^(|M|+1) T]`` with

    sum f(n) cos(2 pi lam_n t) >= (1/8) sum_M f - (1/(L-1)) sum_{lam <= 2 Lambda} f
                                   - (2 / (pi^2 T Lambda)) sum f

whenever every ``lam_m`` (``m`` in ``M``) lies in ``[Lambda/2, 3 Lambda/2]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from revlattice import kernels
from revlattice._parallel import ordered_map
from revlattice.arith import build_tables, enumerate_S, window_bounds
from revlattice.spectrum import EPS0, build_series, eval_S, series_cutoff

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
BETA_OPT = math.sqrt(2.0)
C0_DEFAULT = 1.0
L_DEFAULT = 3
XI_BOUND = 10.0
SCAN_CHUNK = 4096
REFINE_TOL = 1e-10


class ResolutionError(ValueError):
    """Grid step too coarse for the fastest frequency."""


class ConstructionError(RuntimeError):
    pass


# -- iterated logarithms ----------------------------------------------------


def iterated_log(x, j, clamp=True):
    """``log_j x``; with ``clamp`` every stage is floored at 1 (logged)."""
    y = float(x)
    for stage in range(1, j + 1):
        if y <= 0:
            if not clamp:
                raise ValueError(f"log_{stage} undefined at x={x}")
            y = 0.0
        else:
            y = math.log(y)
        if clamp and y < 1.0:
            log.warning("log_%d(%g) = %g clamped to 1", stage, x, y)
            y = 1.0
    return y


# -- instances and the bound ------------------------------------------------


@dataclass(frozen=True)
class LemmaInstance:
    f: np.ndarray
    lam: np.ndarray
    Lambda: float
    L: int
    M: tuple
    T: float

    def __post_init__(self):
        f = np.asarray(self.f, dtype=np.float64)
        lam = np.asarray(self.lam, dtype=np.float64)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "M", tuple(int(m) for m in self.M))
        if f.shape != lam.shape:
            raise ValueError("f and lam must have equal length")
        if np.any(f < 0):
            raise ValueError("f must be non-negative")
        if np.any(np.diff(lam) < 0):
            raise ValueError("lam must be non-decreasing")
        if self.L < 2 or self.T < 2 or self.Lambda <= 0:
            raise ValueError("need L >= 2, T >= 2, Lambda > 0")
        if any(m < 0 or m >= lam.size for m in self.M) or len(set(self.M)) != len(self.M):
            raise ValueError("M must be distinct indices into lam")
        lm = lam[list(self.M)]
        if np.any(lm < 0.5 * self.Lambda) or np.any(lm > 1.5 * self.Lambda):
            raise ValueError("every lam_m for m in M must lie in [Lambda/2, 3 Lambda/2]")

    @property
    def stretch(self):
        """``(6L)^(|M|+1)``."""
        return float(6 * self.L) ** (len(self.M) + 1)

    @property
    def conforming(self):
        return self.stretch <= self.T

    @property
    def interval(self):
        return 0.5 * self.T, self.stretch * self.T


def rhs_bound(inst):
    """The three-term lower bound for the cosine sum."""
    f = inst.f
    resonant = math.fsum(f[list(inst.M)].tolist())
    low = math.fsum(f[inst.lam <= 2 * inst.Lambda].tolist())
    total = math.fsum(f.tolist())
    return (resonant / 8.0 - low / (inst.L - 1)
            - 2.0 / (math.pi**2 * inst.T * inst.Lambda) * total)


@dataclass(frozen=True)
class LemmaWitness:
    t: float
    sum_value: float
    rhs_bound: float
    met: bool
    interval: tuple
    full_interval: tuple
    full_searched: bool
    grid_step: float
    evaluated: int
    stopped_early: bool = False
    scan: tuple | None = field(default=None, repr=False)


def _scan_chunk(lam, f, t0, step, bounds):
    i0, i1 = bounds
    ts = t0 + step * np.arange(i0, i1, dtype=np.float64)
    vals = kernels.trig_sums(lam, f, ts)
    j = int(np.argmax(vals))
    return i0 + j, float(vals[j]), ts, vals


def _golden_max(func, a, b, tol=REFINE_TOL):
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = func(x1), func(x2)
    while b - a > tol:
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = func(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = func(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def search_witness(inst, grid_step=None, budget=None, stop_when_met=False,
                   drop_below=0.0, keep_scan=False, workers=1):
    """Scan the cosine sum over the lemma's interval and refine the best point.

    ``grid_step`` defaults to ``1/(8 lam_max)`` and must not exceed
    ``1/(4 lam_max)``.  ``budget`` caps the number of grid points (the cap is
    recorded in ``full_searched``).  With ``stop_when_met`` the scan ends at
    the first chunk whose best value meets the bound; the lemma asserts
    existence, so such a witness settles it.  Terms with
    ``f <= drop_below * sum f`` are left out of the scan only; the reported
    ``sum_value`` always uses every term.
    """
    bound = rhs_bound(inst)
    lam, f = inst.lam, inst.f
    total = math.fsum(f.tolist())
    keep = f > drop_below * total if drop_below > 0 else f > 0
    lam_s, f_s = np.ascontiguousarray(lam[keep]), np.ascontiguousarray(f[keep])
    lo, hi = inst.interval
    lam_max = float(lam_s.max()) if lam_s.size else 0.0
    if grid_step is None:
        grid_step = 1.0 / (8.0 * lam_max) if lam_max > 0 else 0.5 * (hi - lo)
    if lam_max > 0 and grid_step > 1.0 / (4.0 * lam_max) * (1 + 1e-12):
        raise ResolutionError(f"grid step {grid_step} exceeds 1/(4 lam_max) = {1 / (4 * lam_max)}")
    n_full = int(math.floor((hi - lo) / grid_step)) + 1
    n = n_full if budget is None else min(n_full, int(budget))
    full = n == n_full

    def full_sum(t):
        return float(kernels.trig_sum(lam, f, t))

    best_i, best_v = 0, -math.inf
    scanned = 0
    stopped = False
    scan_t, scan_v = [], []
    batch = max(1, workers) * 4
    span = SCAN_CHUNK * batch
    for g0 in range(0, n, span):
        group = [(i, min(i + SCAN_CHUNK, n)) for i in range(g0, min(g0 + span, n), SCAN_CHUNK)]
        results = ordered_map(partial(_scan_chunk, lam_s, f_s, lo, grid_step), group,
                              workers if len(group) > 1 else 1)
        for (i0, i1), (j, v, ts, vals) in zip(group, results):
            scanned = i1
            if keep_scan:
                scan_t.append(ts)
                scan_v.append(vals)
            if v > best_v:
                best_i, best_v = j, v
        if stop_when_met and full_sum(lo + grid_step * best_i) >= bound:
            stopped = scanned < n
            break
    t_grid = lo + grid_step * best_i
    grid_val = full_sum(t_grid)
    a = max(lo, t_grid - grid_step)
    b = min(lo + grid_step * (scanned - 1), t_grid + grid_step)
    t_best, v_best = t_grid, grid_val
    if b > a:
        t_ref, v_ref = _golden_max(full_sum, a, b)
        if v_ref > v_best:
            t_best, v_best = t_ref, v_ref
    searched = (lo, lo + grid_step * (scanned - 1))
    scan = None
    if keep_scan:
        scan = (np.concatenate(scan_t), np.concatenate(scan_v))
    return LemmaWitness(t=t_best, sum_value=v_best, rhs_bound=bound, met=v_best >= bound,
                        interval=searched, full_interval=(lo, hi), full_searched=full,
                        grid_step=grid_step, evaluated=scanned, stopped_early=stopped,
                        scan=scan)


def random_instance(rng, T=16.0, L=3, max_M=4, n_tail=6):
    """Random instance satisfying every hypothesis of the lemma."""
    Lambda = float(rng.uniform(0.5, 2.0))
    size_M = int(rng.integers(1, max_M + 1))
    lam_M = rng.uniform(0.5 * Lambda, 1.5 * Lambda, size_M)
    lam_tail = rng.uniform(0.05 * Lambda, 3.0 * Lambda, n_tail)
    lam = np.concatenate((lam_M, lam_tail))
    f = rng.uniform(0.0, 1.0, lam.size)
    order = np.argsort(lam, kind="stable")
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    M = sorted(int(pos[i]) for i in range(size_M))
    return LemmaInstance(f=f[order], lam=lam[order], Lambda=Lambda, L=L, M=tuple(M), T=T)


def property_suite(seed, n=50, T=16.0, L=3, max_M=4, workers=1):
    """Seeded random instances, each searched over its full interval."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        inst = random_instance(rng, T=T, L=L, max_M=max_M)
        out.append((inst, search_witness(inst, stop_when_met=True, workers=workers)))
    return out


# -- exponent bookkeeping ---------------------------------------------------


def exponent_E(beta):
    """Exponent of ``log2 T`` in the resonance mass: ``2/3 (b - 1 - b log b) + (b log 2)/3``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return 2.0 / 3.0 * (beta - 1.0 - beta * math.log(beta)) + beta * math.log(2.0) / 3.0


def exponent_E_prime(beta):
    return -2.0 / 3.0 * math.log(beta) + math.log(2.0) / 3.0


def maximize_E(lo=1.0, hi=2.0, tol=1e-13):
    """Maximizer of ``exponent_E`` by bisection on its derivative."""
    if not (exponent_E_prime(lo) > 0 > exponent_E_prime(hi)):
        raise ValueError("derivative does not change sign on the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if exponent_E_prime(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambda_exponent(beta):
    """Exponent of ``log2 T`` in the choice of Lambda."""
    return (1.0 - beta + beta * math.log(2.0 * beta)) / 3.0


def select_lambda(T, beta=BETA_OPT, c0=C0_DEFAULT):
    """``c0 (log T)^(1/3) (log2 T)^(lambda_exponent) (log3 T)^(-1/6)``."""
    l1 = iterated_log(T, 1)
    l2 = iterated_log(T, 2)
    l3 = math.log(l2) if l2 > 1.0 else None
    if l3 is None or l3 <= 0:
        log.warning("log3(%g) not positive; factor clamped to 1", T)
        l3 = 1.0
    return c0 * l1 ** (1 / 3) * l2 ** lambda_exponent(beta) * l3 ** (-1 / 6)


def resonance_shape(T):
    """``(log T)^(1/3) (log2 T)^(2/3 (sqrt2 - 1)) (log3 T)^(-2/3)``."""
    l1 = iterated_log(T, 1)
    l2 = iterated_log(T, 2)
    l3 = math.log(l2) if l2 > 1.0 else 1.0
    if l3 <= 0:
        l3 = 1.0
    return l1 ** (1 / 3) * l2 ** exponent_E(BETA_OPT) * l3 ** (-2 / 3)


def asymptotic_L(T):
    """``floor((log2 T)^20)``."""
    return math.floor(iterated_log(T, 2, clamp=False) ** 20)


# -- the resonating set -----------------------------------------------------


@dataclass(frozen=True)
class MReport:
    indices: tuple
    K: int
    S: tuple
    m3_values: tuple
    ell_window: tuple
    size: int
    product_size: int
    stretch: float
    conforming: bool
    T: float


def build_M(g, tables, series, Lambda, beta, L, T):
    """Series indices of the classes ``(l, m3)`` in the resonating set.

    ``l`` runs over ``S_{Lambda,K}`` with ``K = floor(beta log2 Lambda)`` and
    ``m3`` over the integers of ``[a3 Lambda, a4 Lambda]``.
    """
    a1, a2, a3, a4 = g.rect
    K = math.floor(beta * iterated_log(Lambda, 2))
    ell_lo, ell_hi = window_bounds(Lambda, a1, a2)
    m3_lo = max(1, math.ceil(a3 * Lambda))
    m3_hi = math.floor(a4 * Lambda)
    S = enumerate_S(tables, Lambda, K, a1, a2) if ell_hi >= ell_lo else []
    m3_values = list(range(m3_lo, m3_hi + 1))
    if S and m3_values and max(S) + m3_hi**2 > series.cutoff:
        raise ConstructionError("resonating window extends past the series cutoff")
    wanted = set(S)
    sel = np.flatnonzero(np.isin(series.ell, list(wanted))
                         & (series.m3 >= m3_lo) & (series.m3 <= m3_hi))
    lam = series.lam[sel]
    if np.any(lam < 0.5 * Lambda) or np.any(lam > 1.5 * Lambda):
        raise ConstructionError("selected class outside [Lambda/2, 3 Lambda/2]; bad rectangle")
    stretch = float(6 * L) ** (sel.size + 1)
    return MReport(indices=tuple(sel.tolist()), K=K, S=tuple(S), m3_values=tuple(m3_values),
                   ell_window=(ell_lo, ell_hi), size=int(sel.size),
                   product_size=len(S) * len(m3_values), stretch=stretch,
                   conforming=stretch <= T, T=T)


# -- the whole construction -------------------------------------------------


@dataclass
class ConstructionReport:
    T: float
    beta: float
    c0: float
    L: int
    L_asymptotic: int
    eps0: float
    coeff_model: str
    Lambda: float
    K: int
    X: float
    cutoff: float
    n_classes: int
    M: MReport
    star_holds: bool
    xi_max: float
    xi_bound: float
    double_star_holds: bool
    resonant_mass: float
    low_mass: float
    total_mass: float
    rhs_bound: float
    witness: LemmaWitness
    witness_S: float
    shape: float
    normalized_mass: float
    exponent: float

    def lines(self):
        w = self.witness
        pairs = [
            ("T", self.T), ("beta", self.beta), ("c0", self.c0), ("L", self.L),
            ("L_asymptotic_rule", self.L_asymptotic), ("eps0", self.eps0),
            ("coeff_model", self.coeff_model), ("Lambda", self.Lambda), ("K", self.K),
            ("X", self.X), ("cutoff", self.cutoff), ("n_classes", self.n_classes),
            ("M_size", self.M.size), ("M_product_size", self.M.product_size),
            ("S_size", len(self.M.S)), ("m3_count", len(self.M.m3_values)),
            ("star_lhs", self.M.stretch), ("star_holds", self.star_holds),
            ("double_star_max", self.xi_max), ("double_star_bound", self.xi_bound),
            ("double_star_holds", self.double_star_holds),
            ("resonant_mass", self.resonant_mass), ("low_mass", self.low_mass),
            ("total_mass", self.total_mass), ("rhs_bound", self.rhs_bound),
            ("witness_t", w.t), ("witness_sum", w.sum_value), ("witness_met", w.met),
            ("witness_S_check", self.witness_S),
            ("searched_lo", w.interval[0]), ("searched_hi", w.interval[1]),
            ("full_lo", w.full_interval[0]), ("full_hi", w.full_interval[1]),
            ("full_interval_searched", w.full_searched), ("grid_step", w.grid_step),
            ("grid_points", w.evaluated), ("resonance_shape", self.shape),
            ("normalized_resonant_mass", self.normalized_mass),
            ("exponent_E_beta", self.exponent),
        ]
        out = []
        for k, v in pairs:
            if isinstance(v, bool):
                v = str(v).lower()
            elif isinstance(v, float):
                v = repr(v)
            out.append(f"{k}={v}")
        return out


def run_construction(g, tables=None, T=1e4, beta=BETA_OPT, c0=C0_DEFAULT, L=L_DEFAULT,
                     eps0=EPS0, coeff_model="unit", xi_bound=XI_BOUND, budget=1 << 16,
                     drop_below=1e-18, keep_scan=False, workers=1):
    """Choose Lambda, build the series at ``t = T``, build M, check the side
    conditions and search for a witness."""
    Lambda = select_lambda(T, beta, c0)
    cutoff = series_cutoff(T, eps0)
    if tables is None:
        tables = build_tables(max(2, math.floor(cutoff)))
    series = build_series(g, tables, T, coeff_model=coeff_model, eps0=eps0)
    mrep = build_M(g, tables, series, Lambda, beta, L, T)
    inst = LemmaInstance(f=series.f, lam=series.lam, Lambda=Lambda, L=L, M=mrep.indices, T=T)
    idx = list(mrep.indices)
    xi = series.X * series.lam[idx] ** 2
    xi_max = float(xi.max()) if idx else 0.0
    resonant = math.fsum(series.f[idx].tolist())
    low = math.fsum(series.f[series.lam <= 2 * Lambda].tolist())
    witness = search_witness(inst, budget=budget, drop_below=drop_below, keep_scan=keep_scan,
                             workers=workers)
    shape = resonance_shape(T)
    try:
        l_rule = asymptotic_L(T)
    except ValueError:
        l_rule = 0
    return ConstructionReport(
        T=float(T), beta=beta, c0=c0, L=L, L_asymptotic=l_rule, eps0=eps0,
        coeff_model=coeff_model, Lambda=Lambda, K=mrep.K, X=series.X, cutoff=cutoff,
        n_classes=len(series), M=mrep, star_holds=mrep.conforming, xi_max=xi_max,
        xi_bound=xi_bound, double_star_holds=xi_max < xi_bound, resonant_mass=resonant,
        low_mass=low, total_mass=series.total_mass, rhs_bound=rhs_bound(inst),
        witness=witness, witness_S=eval_S(series, witness.t), shape=shape,
        normalized_mass=resonant / shape, exponent=exponent_E(beta),
    )
