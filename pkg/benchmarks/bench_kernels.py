"""Compare the compiled and pure-Python alignment kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Times the two per-replicate kernels (cosine similarity and assignment) on
their own, then a full bootstrap run under each backend. The backend for the
end-to-end run is switched with CCABOOT_PURE_PYTHON in a subprocess.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from ccaboot import kernels

END_TO_END = """
import time, numpy as np, ccaboot
from ccaboot import combootcca
rng = np.random.default_rng(0)
Z = rng.standard_normal((1000, 10))
X = Z + rng.standard_normal((1000, 10)); Y = Z + rng.standard_normal((1000, 10))
t = time.perf_counter()
r = combootcca(X, Y, n_boots={n_boots}, seed=1)
print(ccaboot.BACKEND, time.perf_counter() - t, float(r.ci_B.lower.sum()))
"""


def kernel_timings(repeats: int) -> None:
    rng = np.random.default_rng(0)
    impls = [kernels.python_kernels]
    if kernels.compiled_kernels is not None:
        impls.append(kernels.compiled_kernels)
    else:
        print("compiled extension not available; timing the Python kernels only")
    print(f"{'K':>4} {'backend':>8} {'cosine (us)':>12} {'assign (us)':>12}")
    for K in (3, 10, 25):
        A = rng.standard_normal((50, K))
        Bm = rng.standard_normal((50, K))
        S = np.abs(rng.standard_normal((K, K)))
        for impl in impls:
            tc = timeit.timeit(lambda: impl.cosine_similarity(A, Bm), number=repeats) / repeats
            ta = timeit.timeit(lambda: impl.assignment_max(S), number=repeats) / repeats
            print(f"{K:>4} {impl.BACKEND:>8} {tc * 1e6:12.1f} {ta * 1e6:12.1f}")


def end_to_end(n_boots: int) -> None:
    print(f"\ncombootcca, N=1000, p=q=10, {n_boots} replicates")
    for pure in ("0", "1"):
        env = dict(os.environ, CCABOOT_PURE_PYTHON=pure)
        out = subprocess.run(
            [sys.executable, "-c", END_TO_END.format(n_boots=n_boots)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"  {out[0]:>8}: {float(out[1]):.2f}s  (checksum {out[2]})")


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=2000)
    ap.add_argument("--n-boots", type=int, default=1000)
    args = ap.parse_args(argv)
    kernel_timings(args.repeats)
    end_to_end(args.n_boots)


if __name__ == "__main__":
    main()
