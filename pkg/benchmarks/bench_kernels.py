"""Compare the numba kernels with their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py --size 256 --repeats 5

Both paths are imported directly, so the PERCFORKS_DISABLE_NUMBA flag does not
matter here. Outputs are checked for equality before timing.
"""

import argparse
import time

import numpy as np

from percforks import kernels


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(size, batch, rng):
    values = (rng.random((size, size)) < 0.5).astype(np.uint8)
    hb = rng.random((size, size - 1)) < 0.5
    vb = rng.random((size - 1, size)) < 0.5
    side = max(8, size // 8)
    bhb = rng.random((batch, side, 3 * side - 1)) < 0.6
    bvb = rng.random((batch, side - 1, 3 * side)) < 0.6
    small = (rng.random((min(size, 64), min(size, 64))) < 0.5).astype(np.uint8)
    return {
        "label_sites": (lambda: kernels.label_sites_numba(values),
                        lambda: kernels.label_sites_numpy(values)),
        "label_bonds": (lambda: kernels.label_bonds_numba(hb, vb, size, size),
                        lambda: kernels.label_bonds_numpy(hb, vb, size, size)),
        "crossings": (lambda: kernels.crossings_numba(bhb, bvb),
                      lambda: kernels.crossings_numpy(bhb, bvb)),
        "wilson": (lambda: kernels.wilson_parents_numba(32, 32, np.random.default_rng(1)),
                   lambda: kernels.wilson_parents_py(32, 32, np.random.default_rng(1))),
        "cut_sizes": (lambda: kernels.cut_sizes_numba(small),
                      lambda: kernels.cut_sizes_py(small)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--batch", type=int, default=200)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    table = cases(args.size, args.batch, np.random.default_rng(args.seed))
    print(f"{'kernel':<12} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, (fast, slow) in table.items():
        a, b = fast(), slow()  # also compiles the jitted path
        if isinstance(a, tuple):
            assert all(np.array_equal(x, y) for x, y in zip(a, b)), name
        else:
            assert np.array_equal(a, b), name
        tf = best_of(fast, args.repeats)
        ts = best_of(slow, args.repeats)
        print(f"{name:<12} {tf:>10.4f} {ts:>10.4f} {ts / tf:>7.1f}x")


if __name__ == "__main__":
    main()
