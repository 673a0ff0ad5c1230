"""Command line entry point: ``revlattice <subcommand> ...``.

CSV output starts with ``#`` comment lines (version, config hash, resolved
config, columns).  Floats are written with ``repr`` so identical runs give
identical bytes.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import logging
import math
import sys

import numpy as np

from revlattice import __version__, kernels
from revlattice.config import ConfigError, canonical, config_hash, load_config, make_profile

log = logging.getLogger("revlattice")


# -- output -------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


def write_csv(fh, cfg, columns, rows, extra=(), footer=()):
    fh.write(f"# revlattice {__version__}\n")
    fh.write(f"# config_sha256 {config_hash(cfg)}\n")
    fh.write(f"# config {canonical(cfg)}\n")
    for line in extra:
        fh.write(f"# {line}\n")
    fh.write(f"# columns {','.join(columns)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    for line in footer:
        fh.write(f"# {line}\n")


@contextlib.contextmanager
def _sink(path):
    if not path or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _emit(args, cfg, columns, rows, **kw):
    with _sink(cfg["run"]["out"]) as fh:
        write_csv(fh, cfg, columns, rows, **kw)


def _geometry(cfg):
    from revlattice.body import make_geometry

    return make_geometry(make_profile(cfg))


# -- subcommands --------------------------------------------------------------


def cmd_body_check(args, cfg):
    from revlattice.body import ProfileError, make_geometry

    p = make_profile(cfg)
    print(f"body={p.describe()}")
    try:
        g = make_geometry(p)
    except ProfileError as exc:
        if exc.report is not None:
            print("\n".join(exc.report.lines()))
        raise
    print("\n".join(g.report.lines()))
    print(f"volume={g.volume!r}")
    print(f"c1={g.c1!r}")
    print(f"c2={g.c2!r}")
    print("rect=" + ",".join(repr(x) for x in g.rect))
    print(f"z_range={g.z_range[0]!r},{g.z_range[1]!r}")
    return 0


def cmd_count(args, cfg):
    from revlattice.lattice import count_points

    res = count_points(_geometry(cfg), args.t, guard=cfg["lattice"]["guard"])
    print(res.count)
    return 0


def _t_grid(args, cfg):
    if args.t_list:
        with open(args.t_list) as fh:
            ts = [float(x) for line in fh for x in line.replace(",", " ").split()
                  if not line.lstrip().startswith("#")]
        return ts
    lat = cfg["lattice"]
    lo, hi, step = lat["t_min"], lat["t_max"], lat["step"]
    if not step > 0:
        raise ConfigError(f"scan step must be positive, got {step!r}")
    if hi < lo:
        raise ConfigError("scan needs t_min <= t_max")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def cmd_scan(args, cfg):
    from revlattice.lattice import SCAN_COLUMNS, discrepancy_scan, running_minimum

    ts = _t_grid(args, cfg)
    recs = discrepancy_scan(_geometry(cfg), ts, guard=cfg["lattice"]["guard"],
                            workers=cfg["run"]["workers"])
    footer = []
    if recs:
        mins = running_minimum(recs)
        arg = min(range(len(recs)), key=lambda i: (recs[i].discrepancy, i))
        footer = [f"running_min {mins[-1]!r} at t={recs[arg].t!r}",
                  "running_min_series " + " ".join(repr(m) for m in mins)]
    _emit(args, cfg, SCAN_COLUMNS, (r.row() for r in recs), footer=footer)
    return 0


def cmd_arith_table(args, cfg):
    from revlattice.arith import build_tables

    limit = cfg["arith"]["limit"]
    tab = build_tables(limit)
    r3 = tab.r3_table()
    rows = ((n, int(tab.r2[n]), int(r3[n]), int(tab.omega[n]), bool(tab.a1[n]), int(tab.spf[n]))
            for n in range(limit + 1))
    _emit(args, cfg, ("n", "r", "r3", "omega", "in_A1", "spf"), rows)
    return 0


def cmd_arith_s_lambda(args, cfg):
    from revlattice.arith import CARDINALITY_COLUMNS, cardinality_check, ratio_spread

    g = _geometry(cfg)
    a1, a2 = g.rect[0], g.rect[1]
    rows = cardinality_check(None, cfg["arith"]["lambdas"], cfg["lemma"]["beta"], a1, a2,
                             workers=cfg["run"]["workers"])
    extra = [f"a1 {a1!r}", f"a2 {a2!r}"]
    footer = []
    if any(r.ratio is not None for r in rows):
        footer = [f"ratio_spread {ratio_spread(rows)!r}"]
    _emit(args, cfg, CARDINALITY_COLUMNS, (r.row() for r in rows), extra=extra, footer=footer)
    return 0


def cmd_spectrum(args, cfg):
    from revlattice.spectrum import SERIES_COLUMNS, build_series

    sp = cfg["spectrum"]
    s = build_series(_geometry(cfg), None, args.t, coeff_model=sp["coeff"], eps0=sp["eps0"])
    extra = [f"t {s.t!r}", f"X {s.X!r}", f"cutoff {s.cutoff!r}", f"classes {len(s)}",
             f"total_mass {s.total_mass!r}"]
    _emit(args, cfg, SERIES_COLUMNS, s.rows(), extra=extra)
    return 0


def _borel_row(g, cfg, t):
    from revlattice.spectrum import borel_mean, build_series, eval_S, smoothing_params

    sp = cfg["spectrum"]
    X, k = smoothing_params(t)
    b = borel_mean(g, t, guard=cfg["lattice"]["guard"], nodes_per_unit=sp["nodes_per_unit"])
    s = build_series(g, None, t, coeff_model=sp["coeff"], eps0=sp["eps0"])
    return (t, X, k, b, -t * eval_S(s, t) / (2 * math.pi))


def cmd_borel(args, cfg):
    g = _geometry(cfg)
    rows = [_borel_row(g, cfg, float(t)) for t in args.t]
    _emit(args, cfg, ("t", "X", "k", "borel", "predicted"), rows)
    return 0


def cmd_link(args, cfg):
    from revlattice.spectrum import LINK_COLUMNS, spectral_link_report

    sp = cfg["spectrum"]
    n = sp["n"]
    if n < 2 or sp["t_max"] <= sp["t_min"] or sp["t_min"] < 3:
        raise ConfigError("link needs n >= 2 and 3 <= t_min < t_max")
    ts = np.linspace(sp["t_min"], sp["t_max"], n).tolist()
    rep = spectral_link_report(_geometry(cfg), ts, coeff_model=sp["coeff"], eps0=sp["eps0"],
                               workers=cfg["run"]["workers"],
                               nodes_per_unit=sp["nodes_per_unit"],
                               guard=cfg["lattice"]["guard"])
    footer = [f"scale {rep.scale!r}", f"pearson {rep.pearson!r}"]
    _emit(args, cfg, LINK_COLUMNS, (r.row() for r in rep.rows), footer=footer)
    return 0


def _instance_from_config(table, lem):
    from revlattice.lemma import LemmaInstance

    missing = {"f", "lam", "Lambda", "M"} - set(table)
    if missing:
        raise ConfigError(f"lemma.instance lacks {sorted(missing)}")
    return LemmaInstance(f=table["f"], lam=table["lam"], Lambda=float(table["Lambda"]),
                         L=int(table.get("L", lem["L"])), M=tuple(table["M"]),
                         T=float(table.get("T", lem["T"])))


def cmd_lemma_search(args, cfg):
    from revlattice.lemma import property_suite, search_witness

    lem = cfg["lemma"]
    step = lem["grid_step"] or None
    if lem["instance"]:
        inst = _instance_from_config(lem["instance"], lem)
        w = search_witness(inst, grid_step=step, budget=lem["budget"], keep_scan=True,
                           workers=cfg["run"]["workers"])
        for k, v in (("t", w.t), ("sum_value", w.sum_value), ("rhs_bound", w.rhs_bound),
                     ("met", w.met), ("searched_lo", w.interval[0]),
                     ("searched_hi", w.interval[1]), ("full_hi", w.full_interval[1]),
                     ("full_interval_searched", w.full_searched),
                     ("conforming", inst.conforming)):
            print(f"{k}={_cell(v)}")
        ts, vals = w.scan
        _emit(args, cfg, ("t", "sum"), zip(ts.tolist(), vals.tolist()))
        return 0
    suite = property_suite(lem["seed"], n=lem["n_instances"], T=lem["suite_T"], L=lem["L"],
                           workers=cfg["run"]["workers"])
    met = sum(w.met for _, w in suite)
    print(f"seed={lem['seed']}")
    print(f"instances={len(suite)}")
    print(f"met={met}")
    rows = ((i, len(inst.M), inst.Lambda, w.t, w.sum_value, w.rhs_bound, w.met,
             w.interval[1]) for i, (inst, w) in enumerate(suite))
    _emit(args, cfg, ("instance", "M_size", "Lambda", "t", "sum", "rhs_bound", "met",
                      "searched_hi"), rows, extra=[f"seed {lem['seed']}"])
    return 0 if met == len(suite) else 1


def cmd_lemma_pipeline(args, cfg):
    from revlattice.lemma import run_construction

    lem, sp = cfg["lemma"], cfg["spectrum"]
    rep = run_construction(_geometry(cfg), None, T=lem["T"], beta=lem["beta"], c0=lem["c0"],
                           L=lem["L"], eps0=sp["eps0"], coeff_model=sp["coeff"],
                           xi_bound=lem["xi_bound"], budget=lem["budget"], keep_scan=True,
                           workers=cfg["run"]["workers"])
    print("\n".join(rep.lines()))
    if cfg["run"]["out"]:
        ts, vals = rep.witness.scan
        _emit(args, cfg, ("t", "sum"), zip(ts.tolist(), vals.tolist()))
    return 0


# -- parser -------------------------------------------------------------------


def _overrides(args):
    """Command line flags that map onto config keys."""
    table = {
        "t_min": ("lattice", "t_min"), "t_max": ("lattice", "t_max"), "step": ("lattice", "step"),
        "guard": ("lattice", "guard"), "limit": ("arith", "limit"), "lambdas": ("arith", "lambdas"),
        "eps0": ("spectrum", "eps0"), "coeff": ("spectrum", "coeff"),
        "nodes_per_unit": ("spectrum", "nodes_per_unit"),
        "link_t_min": ("spectrum", "t_min"), "link_t_max": ("spectrum", "t_max"),
        "n": ("spectrum", "n"), "beta": ("lemma", "beta"), "c0": ("lemma", "c0"),
        "L": ("lemma", "L"), "T": ("lemma", "T"), "budget": ("lemma", "budget"),
        "seed": ("lemma", "seed"), "xi_bound": ("lemma", "xi_bound"),
        "workers": ("run", "workers"), "out": ("run", "out"),
    }
    out = {}
    for name, (sec, key) in table.items():
        v = getattr(args, name, None)
        if v is not None:
            out.setdefault(sec, {})[key] = v
    return out


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config (default: $REVLATTICE_CONFIG)")
    common.add_argument("--workers", type=int, help="worker processes (results do not depend on it)")
    common.add_argument("--out", help="CSV output path (default stdout)")
    common.add_argument("--guard", type=float)
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="revlattice",
                                 description="Lattice points in dilated bodies of revolution.")
    ap.add_argument("--version", action="version", version=f"revlattice {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    body = sub.add_parser("body", help="profile validation").add_subparsers(dest="action", required=True)
    body.add_parser("check", parents=[common]).set_defaults(func=cmd_body_check)

    p = sub.add_parser("count", parents=[common], help="count points at one dilation")
    p.add_argument("--t", type=float, required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("scan", parents=[common], help="discrepancy over a t grid")
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--t-list", dest="t_list")
    p.set_defaults(func=cmd_scan)

    arith = sub.add_parser("arith", help="arithmetic tables").add_subparsers(dest="action", required=True)
    p = arith.add_parser("table", parents=[common])
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_arith_table)
    p = arith.add_parser("s-lambda", parents=[common])
    p.add_argument("--lambda", dest="lambdas", type=float, nargs="+")
    p.add_argument("--beta", type=float)
    p.set_defaults(func=cmd_arith_s_lambda)

    p = sub.add_parser("spectrum", parents=[common], help="frequency class table")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--coeff", choices=("unit", "curvature"))
    p.add_argument("--eps0", type=float)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("borel", parents=[common], help="Borel mean against the spectral sum")
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.add_argument("--coeff", choices=("unit", "curvature"))
    p.add_argument("--eps0", type=float)
    p.add_argument("--nodes-per-unit", dest="nodes_per_unit", type=int)
    p.set_defaults(func=cmd_borel)

    p = sub.add_parser("link", parents=[common], help="Borel mean vs spectral sum on a grid")
    p.add_argument("--t-min", dest="link_t_min", type=float)
    p.add_argument("--t-max", dest="link_t_max", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--coeff", choices=("unit", "curvature"))
    p.add_argument("--eps0", type=float)
    p.add_argument("--nodes-per-unit", dest="nodes_per_unit", type=int)
    p.set_defaults(func=cmd_link)

    lemma = sub.add_parser("lemma", help="resonance lemma").add_subparsers(dest="action", required=True)
    p = lemma.add_parser("search", parents=[common])
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_lemma_search)
    p = lemma.add_parser("pipeline", parents=[common])
    p.add_argument("--T", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--c0", type=float)
    p.add_argument("--budget", type=int)
    p.add_argument("--xi-bound", dest="xi_bound", type=float)
    p.add_argument("--coeff", choices=("unit", "curvature"))
    p.add_argument("--eps0", type=float)
    p.set_defaults(func=cmd_lemma_pipeline)
    return ap


def dispatch(argv=None):
    """Parse ``argv`` and run the subcommand; returns the exit status."""
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config, _overrides(args))
        log.info("backend=%s workers=%d", kernels.BACKEND, cfg["run"]["workers"])
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
