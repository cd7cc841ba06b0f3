"""Time each hot kernel in its numba and numpy form, plus one LP solve per path.

    python benchmarks/bench_kernels.py [--repeat 200]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from vpc_forge import kernels
from vpc_forge._accel import HAS_NUMBA


def _time(fn, args, repeat):
    fn(*[a.copy() if isinstance(a, np.ndarray) else a for a in args])  # JIT warm-up
    best = np.inf
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeat):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / repeat)
    return best


def cases(rng):
    n = 40
    M = rng.normal(size=(n, n)) + n * np.eye(n)
    Binv = np.linalg.inv(M)
    w = Binv @ rng.normal(size=n)
    m = 200
    xB = rng.uniform(0, 5, m)
    lB = np.zeros(m)
    uB = np.full(m, np.inf)
    wr = rng.normal(size=m)
    ids = np.arange(m, dtype=np.int64)
    A = rng.integers(-3, 4, size=(3, 8)).astype(float)
    b = np.full(3, -6.0)
    lo = np.zeros(8, dtype=np.int64)
    hi = np.full(8, 2, dtype=np.int64)
    s = rng.uniform(0, 3, 4)
    d = rng.uniform(0.5, 3, 4)
    return {
        "gauss_jordan_inverse": (M, 1e-10),
        "eta_update": (Binv.copy(), w, 3),
        "ratio_test": (xB, lB, uB, wr, 1.0, np.inf, 1e-10, False, ids),
        "box_points": (A, b, lo, hi, 1e-9),
        "monoid_count": (-0.5, s, d, 1e-12),
        "monoid_bisect": (s, d, 64, 1e-12),
    }


def lp_time():
    code = (
        "import time; from vpc_forge.corpus import load_desk; from vpc_forge.model import standardize;"
        "from vpc_forge.linalg_lp import solve_lp; insts=[standardize(i) for i in load_desk()];"
        "[solve_lp(i.lp) for i in insts]; t=time.perf_counter();"
        "[solve_lp(i.lp) for i in insts for _ in range(5)]; print(time.perf_counter()-t)"
    )
    out = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, VPC_FORGE_NO_NUMBA=flag)
        r = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        out[label] = float(r.stdout.strip())
    return out


def main():
    np.seterr(all="ignore")  # eta_update mutates its input across repeats
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    if not HAS_NUMBA:
        print("numba unavailable; only the numpy kernels can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numba (us)':>12}{'numpy (us)':>12}{'speedup':>9}")
    for name, a in cases(rng).items():
        t_np = _time(kernels.KERNELS_NP[name], a, args.repeat)
        t_nb = _time(kernels.KERNELS_NB[name], a, args.repeat) if HAS_NUMBA else np.nan
        print(f"{name:<22}{t_nb * 1e6:>12.2f}{t_np * 1e6:>12.2f}{t_np / t_nb:>9.2f}")
    lp = lp_time()
    print(f"\ndesk LP solves x5: numba {lp['numba']:.3f}s, numpy {lp['numpy']:.3f}s")


if __name__ == "__main__":
    main()
