"""Compare the numba kernels against their NumPy fallbacks.

Per-kernel timings call both implementations directly. The end-to-end run
builds an N-index polarization report in two subprocesses, one with
QPOLAR_DISABLE_NUMBA=1, since the backend is fixed at import time.

    python3 benchmarks/bench_kernels.py [--size 4096] [--N 1024] [--mu 256]
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from qpolar import kernels

END_TO_END = """
import json, time
from qpolar import kernels
from qpolar.btpm import Btpm
from qpolar.polarize import polarization_report
b = Btpm([[0.9, 0.1], [0.1, 0.9]])
polarization_report(b, 64, mode="quantized", mu={mu})  # warm up the JIT
t0 = time.perf_counter()
r = polarization_report(b, {N}, mode="quantized", mu={mu})
print(json.dumps({{"backend": kernels.BACKEND, "seconds": time.perf_counter() - t0,
                  "good_fraction": r.good_fraction[0.01]}}))
"""


def random_channel(rng, m):
    P = rng.random((m, 2))
    return P / P.sum(axis=0)


def best_of(fn, repeat=5):
    n, _ = timeit.Timer(fn).autorange()
    return min(timeit.repeat(fn, number=n, repeat=repeat)) / n


def kernel_table(size, mu):
    rng = np.random.default_rng(42)
    P = random_channel(rng, size)
    small = random_channel(rng, 64)
    cases = {
        "polar_minus": lambda mod: lambda: mod["polar_minus"](small),
        "polar_plus": lambda mod: lambda: mod["polar_plus"](small),
        "merge_identical": lambda mod: lambda: mod["merge_identical"](P),
        "capacity": lambda mod: lambda: mod["capacity"](P),
        "bin_degrade": lambda mod: lambda: mod["bin_degrade"](P, 8 * mu),
        "greedy_degrade": lambda mod: lambda: mod["greedy_degrade"](P, mu),
    }
    np_impl = {name: getattr(kernels, name + "_np") for name in cases}
    nb_impl = {name: getattr(kernels, name + "_nb") for name in cases} if kernels.HAS_NUMBA else None
    rows = []
    for name, make in cases.items():
        t_np = best_of(make(np_impl))
        t_nb = None
        if nb_impl:
            make(nb_impl)()  # compile
            t_nb = best_of(make(nb_impl))
        rows.append((name, t_np, t_nb))
    return rows


def end_to_end(N, mu):
    out = {}
    for flag in ("0", "1"):
        env = dict(os.environ, QPOLAR_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, "-c", END_TO_END.format(N=N, mu=mu)], env=env,
                              capture_output=True, text=True, check=True)
        r = json.loads(proc.stdout.strip().splitlines()[-1])
        out[r["backend"]] = r
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=4096, help="output alphabet size for the kernel inputs")
    ap.add_argument("--N", type=int, default=1024)
    ap.add_argument("--mu", type=int, default=256)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args()

    print(f"kernels on M={args.size} (polar steps on M=64), mu={args.mu}")
    print(f"{'kernel':<16}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>10}")
    for name, t_np, t_nb in kernel_table(args.size, args.mu):
        nb = f"{1e3 * t_nb:12.3f}{t_np / t_nb:10.1f}" if t_nb else f"{'n/a':>12}{'':>10}"
        print(f"{name:<16}{1e3 * t_np:12.3f}{nb}")

    if not args.skip_end_to_end:
        print(f"\npolarization report, N={args.N}, quantized mu={args.mu}")
        for backend, r in end_to_end(args.N, args.mu).items():
            print(f"{backend:<8}{r['seconds']:8.2f} s   good fraction(0.01) = {r['good_fraction']}")


if __name__ == "__main__":
    main()
