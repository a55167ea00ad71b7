"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--points 262144] [--n 2] [--repeat 5]

Prints one line per kernel: best-of-repeat time for each backend, the
speedup and the largest absolute difference between their outputs.
"""

import argparse
import timeit

import numpy as np

from pgrad.kernels import backend_module


def cases(points, n, rng):
    u = rng.standard_normal((points, n))
    d = rng.standard_normal((points, n))
    h = rng.standard_normal((points, n))
    side = int(round(points ** 0.5))
    a3 = rng.standard_normal((side, side, n))
    return {
        "grid_sum": lambda m: m.grid_sum(u),
        "row_sqnorm": lambda m: m.row_sqnorm(u),
        "centered_diff": lambda m: m.centered_diff(a3, 3.0),
        "forward_diff": lambda m: m.forward_diff(a3, 3.0),
        "second_diff": lambda m: m.second_diff(a3, 9.0),
        "pseudo_huber": lambda m: m.pseudo_huber(u, h, 1.0),
        "pseudo_huber_diff": lambda m: m.pseudo_huber_diff(u, d, h, 1.0),
        "cosine": lambda m: m.cosine(u, h, 1.0),
        "cosine_diff": lambda m: m.cosine_diff(u, d, h, 1.0),
    }


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(o) for o in out])
    return np.ravel(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=1 << 18)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    py = backend_module("python")
    try:
        cy = backend_module("cython")
    except ImportError:
        print("compiled extension not built; nothing to compare")
        return 1

    print(f"{'kernel':<20}{'python [ms]':>12}{'cython [ms]':>12}{'speedup':>9}{'max |diff|':>12}")
    for name, fn in cases(args.points, args.n, np.random.default_rng(0)).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        gap = float(np.max(np.abs(_flat(fn(py)) - _flat(fn(cy)))))
        print(f"{name:<20}{1e3 * t_py:>12.2f}{1e3 * t_cy:>12.2f}{t_py / t_cy:>9.2f}{gap:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
