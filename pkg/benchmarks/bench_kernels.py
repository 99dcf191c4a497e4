"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from repcost import _kernels_py
from repcost.generations import elementary_link_state

try:
    from repcost import _kernels
except ImportError:
    _kernels = None

LINK = np.asarray(elementary_link_state(1e-2).weights)


def cases(mod):
    return {
        "g1_chain (nesting 6, mixed rounds)": lambda: mod.g1_chain(
            LINK, (1, 0, 2, 0, 1, 0, 0), True, 1e-2, 0.05),
        "g1_schedule_costs (4^6 schedules)": lambda: mod.g1_schedule_costs(
            LINK, (0, 1, 2, 3), 5, True, 1e-2, 0.05, 1e-4, 10.0, 1e4),
        "mc_chain (20k trials, nesting 2)": lambda: mod.mc_chain(
            np.random.default_rng(1), 20_000, 0.1, LINK, (1, 0, 0), True, 1e-2),
    }


def best_time(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    py = cases(_kernels_py)
    cy = cases(_kernels) if _kernels is not None else {}
    print(f"{'kernel':<38} {'python [s]':>12} {'cython [s]':>12} {'speedup':>9}")
    for name, fn in py.items():
        t_py = best_time(fn, args.repeat)
        if name in cy:
            t_cy = best_time(cy[name], args.repeat)
            print(f"{name:<38} {t_py:12.3e} {t_cy:12.3e} {t_py / t_cy:8.1f}x")
        else:
            print(f"{name:<38} {t_py:12.3e} {'n/a':>12} {'':>9}")
    if _kernels is None:
        print("compiled extension not built; install with a C compiler to compare")


if __name__ == "__main__":
    main()
