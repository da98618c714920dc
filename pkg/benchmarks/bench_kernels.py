#!/usr/bin/env python3
"""Time the numba and pure-numpy iteration loops on the same trials.

Usage:
    python3 benchmarks/bench_kernels.py [--T 2000] [--repeat 5]

The first numba call per signature includes compilation (or a cache load);
it is reported separately and excluded from the steady-state timings.
"""
import argparse
import time

import numpy as np

from hpmd import kernels
from hpmd.algorithms import run_asmd, run_smd
from hpmd.mirror import MirrorMap
from hpmd.problems import NoiseModel, Problem
from hpmd.schedules import StepSchedule


def cases(d):
    A = np.diag(np.linspace(1.0, 0.1, d))
    ent = MirrorMap.entropy(d)
    u = np.full(d, 1.0 / d)
    return [
        ("smd  euclid lipschitz", "smd", Problem.lipschitz_norm(np.zeros(d), 1.0), np.ones(d)),
        ("smd  entropy composite", "smd", Problem.composite(A, 0.5, u, ent),
         0.5 * u + 0.5 * np.eye(d)[0]),
        ("asmd euclid quadratic", "asmd", Problem.quadratic(A, np.zeros(d)), np.ones(d)),
        ("asmd entropy composite", "asmd", Problem.composite(A, 0.5, u, ent),
         0.5 * u + 0.5 * np.eye(d)[0]),
    ]


def one_run(algo, p, start, T, backend):
    noise = NoiseModel.gaussian(p.dim, 1.0)
    if algo == "smd":
        return run_smd(p, p.domain, StepSchedule("fixed", 0.01), T, start, 0, noise=noise,
                       backend=backend)
    return run_asmd(p, p.domain, 1e-4, T, start, 0, noise=noise, backend=backend)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=2000)
    ap.add_argument("--dim", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.numba_kernels is None:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"T={args.T}  d={args.dim}  best of {args.repeat}")
    print(f"{'case':<24}{'first numba':>12}{'numba':>10}{'numpy':>10}{'speedup':>9}")
    for name, algo, p, start in cases(args.dim):
        t0 = time.perf_counter()
        a = one_run(algo, p, start, args.T, "numba")
        first = time.perf_counter() - t0
        b = one_run(algo, p, start, args.T, "numpy")
        if not np.allclose(a.gaps[:10], b.gaps[:10], rtol=1e-10):
            print(f"  warning: backends disagree on {name}")
        t_nb = best_of(lambda: one_run(algo, p, start, args.T, "numba"), args.repeat)
        t_np = best_of(lambda: one_run(algo, p, start, args.T, "numpy"), args.repeat)
        print(f"{name:<24}{first:>11.3f}s{t_nb:>9.4f}s{t_np:>9.4f}s{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
