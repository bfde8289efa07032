"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--walks 2000] [--steps 1000] [--repeat 3]

Both backends consume the same uniforms; the script checks that their
outputs agree before it reports timings.
"""
import argparse
import time

import numpy as np

from ergolab import kernels
from ergolab._accel import HAVE_NUMBA
from ergolab.generators.canopy import eps
from ergolab.seeds import make_rng


def _cycle_csr(n):
    indptr = np.arange(0, 2 * n + 1, 2)
    nxt = np.arange(n)
    indices = np.column_stack([(nxt - 1) % n, (nxt + 1) % n]).ravel()
    return indptr, indices, np.ones(2 * n)


def cases(walks, steps):
    U = make_rng(0, 1).random((walks, steps))
    indptr, indices, weights = _cycle_csr(1000)
    starts = np.zeros(walks, dtype=np.int64)
    table = np.array([0] + [eps(k) for k in range(1, steps + 2)])
    return {
        "csr (cycle C_1000)": lambda b: kernels.csr_walks(indptr, indices, weights, starts, U, b),
        "canopy T_inf": lambda b: kernels.canopy_walks(table, False, 0, U, b),
        "canopy T^R_inf": lambda b: kernels.canopy_walks(table, True, 0, U, b),
        "grandfather": lambda b: kernels.grandfather_walks(U, b),
        "Z^2": lambda b: kernels.lattice_walks(2, U, b),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def _same(a, b):
    a, b = (a if isinstance(a, tuple) else (a,)), (b if isinstance(b, tuple) else (b,))
    return all(np.array_equal(x, y) for x, y in zip(a, b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--walks", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    print(f"{args.walks} walks x {args.steps} steps, best of {args.repeat}")
    print(f"{'kernel':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>10}  agree")
    for name, fn in cases(args.walks, args.steps).items():
        fn("numba")  # compile (or load from cache) outside the timing
        t_nb, a = best_of(lambda: fn("numba"), args.repeat)
        t_np, b = best_of(lambda: fn("numpy"), args.repeat)
        print(f"{name:<20}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>10.1f}  {_same(a, b)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
