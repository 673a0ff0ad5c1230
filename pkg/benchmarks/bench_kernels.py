"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from revlattice.kernels import available_backends


def best_of(func, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        func()
        times.append(time.perf_counter() - start)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    floors = rng.integers(0, 10**6, 20000).astype(np.int64)
    lam = np.sort(rng.uniform(0, 40, 2000))
    f = rng.uniform(0, 1, 2000)
    ts = np.linspace(100, 200, 4000)
    return {
        "disc_counts(20000 radii <= 1e6)": lambda impl: impl.disc_counts(floors),
        "trig_sum(2000 terms) x 200": lambda impl: [impl.trig_sum(lam, f, t) for t in ts[:200]],
        "trig_sums(2000 terms, 4000 t)": lambda impl: impl.trig_sums(lam, f, ts),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    names = sorted(backends)
    print("case," + ",".join(f"{n}_s" for n in names) + ",speedup")
    for label, run in cases().items():
        secs = []
        for n in names:
            impl = backends[n]

            def once():
                # the fallback memoizes disc_count; time it cold
                if hasattr(impl.disc_count, "cache_clear"):
                    impl.disc_count.cache_clear()
                run(impl)

            secs.append(best_of(once, args.repeat))
        # python time over compiled time
        speed = secs[-1] / secs[0] if len(secs) > 1 else 1.0
        print(f"{label}," + ",".join(f"{s:.4f}" for s in secs) + f",{speed:.1f}")


if __name__ == "__main__":
    main()
