"""Time the hot kernels under the numba and pure-numpy backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--sweeps 50]

Kernel timings call both implementations directly. The full-sweep timing
runs a short chain in a subprocess per backend, selected through
``TENSORVAR_NUMBA``, since the backend is fixed at import time.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from tensorvar import kernels
from tensorvar.sampler.sv import LOG_OFFSET

SWEEP_SNIPPET = """
import time, numpy as np
from tensorvar.simulate import Scenario, simulate_dataset
from tensorvar.sampler import ChainConfig, TvarData, run_chain
Y, _ = simulate_dataset(Scenario(N=10, R_true=3, T=300, seed=1))
data = TvarData.from_panel(Y, 3)
cfg = ChainConfig(burn_in=1, draws=1, adapt=False, R_init=3)
run_chain(data, cfg, 0)  # warm-up and JIT compilation
cfg = ChainConfig(burn_in=0, draws={sweeps}, adapt=False, R_init=3)
t = time.perf_counter()
run_chain(data, cfg, 0)
print((time.perf_counter() - t) / {sweeps})
"""


def kernel_cases(rng):
    n = 5000
    lam = rng.uniform(-2, 2, n)
    chi = rng.uniform(0.01, 5, n)
    psi = rng.uniform(0.01, 5, n)
    T, N = 300, 10
    obs = np.log(rng.normal(size=(T, N)) ** 2 + LOG_OFFSET)
    u = rng.random((T, N))
    z = rng.integers(0, 7, size=(T, N))
    noise = rng.standard_normal((T + 1, N))
    mu, phi, s2 = np.zeros(N), np.full(N, 0.9), np.full(N, 0.04)
    om, ov = kernels.KSC_MEAN[z], kernels.KSC_VAR[z]
    out = np.empty(n)

    def gig(fill):
        return lambda: fill(lam, chi, psi, np.random.default_rng(0), out)

    return {
        f"gig x{n}": (gig(kernels.gig_fill_nb), gig(kernels.gig_fill_np)),
        f"ksc indicators {T}x{N}": (lambda: kernels.ksc_indicators_nb(obs, u),
                                   lambda: kernels.ksc_indicators_np(obs, u)),
        f"ffbs {T}x{N}": (lambda: kernels.ffbs_nb(obs, om, ov, mu, phi, s2, noise),
                         lambda: kernels.ffbs_np(obs, om, ov, mu, phi, s2, noise)),
    }


def sweep_time(flag: str, sweeps: int) -> float:
    env = dict(os.environ, TENSORVAR_NUMBA=flag)
    res = subprocess.run([sys.executable, "-c", SWEEP_SNIPPET.format(sweeps=sweeps)], env=env, check=True,
                         capture_output=True, text=True)
    return float(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sweeps", type=int, default=50)
    args = ap.parse_args(argv)
    if not kernels.NUMBA_AVAILABLE:
        sys.exit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<26}{'numba (ms)':>12}{'numpy (ms)':>12}{'speed-up':>10}")
    for name, (fast, slow) in kernel_cases(rng).items():
        fast()  # compile
        t_fast = min(timeit.repeat(fast, number=1, repeat=args.repeat)) * 1e3
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<26}{t_fast:>12.2f}{t_slow:>12.2f}{t_slow / t_fast:>9.1f}x")
    t_fast, t_slow = sweep_time("1", args.sweeps) * 1e3, sweep_time("0", args.sweeps) * 1e3
    print(f"{'gibbs sweep N=10 R=3':<26}{t_fast:>12.2f}{t_slow:>12.2f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
