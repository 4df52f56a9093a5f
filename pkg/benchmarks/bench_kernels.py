"""Compare the numba kernels with the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--skip-solve]

Part 1 times each kernel on random tableaux of a few sizes. Part 2 times one
bundled-instance solve end to end in two subprocesses, one with
ARCTICSPILL_DISABLE_NUMBA=1.
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from arcticspill.solver import kernels as K

SOLVE_SNIPPET = """
import time, warnings
warnings.simplefilter("ignore")
from arcticspill.io import load_bundled
from arcticspill.formulation import formulate
from arcticspill.solver.bnb import SolverOptions, solve_milp
from arcticspill._accel import USE_NUMBA
p = formulate(load_bundled())
solve_milp(p)  # warm-up, includes JIT compilation
t = time.perf_counter()
sol, st = solve_milp(p)
print(USE_NUMBA, time.perf_counter() - t, sol.objective, st.lp_iterations)
"""


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_kernels(repeat: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14}{'m x n':>12}{'numba (us)':>14}{'numpy (us)':>14}{'speed-up':>10}")
    for m, n in ((50, 80), (300, 200), (1700, 970)):
        T0 = rng.standard_normal((m, n))
        d0 = rng.standard_normal(n)
        xB = rng.uniform(0, 1, m)
        lb = np.zeros(m)
        ub = np.where(rng.random(m) < 0.5, np.inf, 2.0)
        up = rng.random(n) < 0.5
        down = ~up
        r, q = m // 2, n // 3
        cases = {
            "pivot": (lambda f: f(T0.copy(), d0.copy(), r, q), K.pivot_nb, K.pivot_np),
            "primal_ratio": (lambda f: f(T0[:, q], xB, lb, ub, 1.0, 1e-9), K.primal_ratio_nb, K.primal_ratio_np),
            "dual_ratio": (lambda f: f(T0[r], d0, up, down, True, 1e-9), K.dual_ratio_nb, K.dual_ratio_np),
        }
        for name, (call, nb, npf) in cases.items():
            call(nb)  # compile
            t_nb = best_of(lambda: call(nb), repeat)
            t_np = best_of(lambda: call(npf), repeat)
            print(f"{name:<14}{f'{m}x{n}':>12}{1e6 * t_nb:>14.1f}{1e6 * t_np:>14.1f}{t_np / t_nb:>10.2f}")


def bench_solve() -> None:
    print("\nbundled instance, one full solve after warm-up")
    for flag in ("0", "1"):
        env = dict(os.environ, ARCTICSPILL_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", SOLVE_SNIPPET], env=env, capture_output=True, text=True, check=True)
        numba_on, secs, obj, iters = out.stdout.split()
        label = "numba" if numba_on == "True" else "numpy"
        print(f"  {label:<6} {float(secs):8.3f} s  objective {float(obj):.6f}  LP iterations {iters}")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--skip-solve", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if not args.skip_solve:
        bench_solve()


if __name__ == "__main__":
    main()
