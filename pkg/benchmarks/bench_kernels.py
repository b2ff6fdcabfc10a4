"""Compare the compiled beam-splitter kernel with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--terms N] [--repeat R]

Also times a full three-crystal build plus final tritter under each backend.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from zwmsim import kernels


def random_terms(n_terms, n_modes=6, max_per_mode=4, seed=0):
    rng = np.random.default_rng(seed)
    occ = np.ascontiguousarray(rng.integers(0, max_per_mode + 1, size=(n_terms, n_modes)), dtype=np.int64)
    amps = rng.normal(size=n_terms) + 1j * rng.normal(size=n_terms)
    return occ, amps


PIPELINE = (
    "from zwmsim.experiments import ExperimentConfig, build_zwm3;"
    "from zwmsim.optics import apply_tritter, tritter_final;"
    "apply_tritter(build_zwm3(ExperimentConfig(alpha_p=0.3), 4), tritter_final())"
)


def time_pipeline(pure: bool, repeat: int) -> float:
    env = dict(os.environ, ZWMSIM_PURE_PYTHON="1" if pure else "0")
    cmd = [sys.executable, "-m", "timeit", "-n", "1", "-r", str(repeat), "-s", "import zwmsim.experiments", PIPELINE]
    out = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True).stdout
    return out.strip()


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--terms", type=int, nargs="+", default=[100, 1000, 10000])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    t, r = 1 / np.sqrt(3), np.sqrt(2 / 3)
    print(f"active backend: {kernels.BACKEND}")
    if kernels.compiled_backend is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'terms':>8} {'python [ms]':>12} {'compiled [ms]':>14} {'speedup':>8}")
    for n in args.terms:
        occ, amps = random_terms(n)
        py = min(timeit.repeat(lambda: kernels.python_backend.bs_expand(occ, amps, 1, 4, t, r), number=1, repeat=args.repeat))
        if kernels.compiled_backend is not None:
            cy = min(
                timeit.repeat(lambda: kernels.compiled_backend.bs_expand(occ, amps, 1, 4, t, r), number=1, repeat=args.repeat)
            )
            print(f"{n:>8} {py * 1e3:>12.3f} {cy * 1e3:>14.3f} {py / cy:>8.1f}")
        else:
            print(f"{n:>8} {py * 1e3:>12.3f} {'-':>14} {'-':>8}")

    print("\nthree-crystal build (K=4) + final tritter:")
    print(f"  python:   {time_pipeline(True, args.repeat)}")
    if kernels.compiled_backend is not None:
        print(f"  compiled: {time_pipeline(False, args.repeat)}")


if __name__ == "__main__":
    main()
