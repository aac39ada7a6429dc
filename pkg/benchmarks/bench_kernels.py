"""Compiled history sum vs the NumPy fallback.

Times the raw O(N^2) memory loop and a full cn-cq-trap run with each backend::

    python benchmarks/bench_kernels.py --steps 20000
"""
import argparse
import time

import numpy as np

from vide import _backend, _kernels_py
from vide.kernel import Abel
from vide.operator import Diagonal
from vide.stepper import Scheme, SchemeConfig, run

try:
    from vide import _kernels as _compiled
except ImportError:
    _compiled = None


def memory_loop(history_sum, w, hist):
    N = hist.shape[0] - 1
    acc = 0.0
    for n in range(1, N + 1):
        acc += history_sum(w, hist, n, n - 1)[0]
    return acc


def timed(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - start)
    return best, out


def full_run(history_sum, steps, dim):
    saved = _backend.history_sum
    _backend.history_sum = history_sum
    try:
        cfg = SchemeConfig(Scheme.CN_CQ_TRAP, Abel(0.5), Diagonal(np.linspace(1, 10, dim)), 0.01, steps,
                           np.ones(dim))
        return run(cfg).norms[-1]
    finally:
        _backend.history_sum = saved


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--dim", type=int, default=1)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    w = rng.standard_normal(args.steps + 1)
    hist = np.ascontiguousarray(rng.standard_normal((args.steps + 1, args.dim)))
    backends = [("numpy", _kernels_py.history_sum)]
    if _compiled is not None:
        backends.append(("compiled", _compiled.history_sum))
    else:
        print("compiled extension not built; only the fallback is timed")
    print(f"N={args.steps} dim={args.dim}")
    print(f"{'backend':<10} {'memory loop [s]':>16} {'cn-cq-trap run [s]':>19}")
    results = {}
    for name, fn in backends:
        t_loop, acc = timed(memory_loop, fn, w, hist)
        t_run, last = timed(full_run, fn, args.steps, args.dim, repeat=1)
        results[name] = (acc, last)
        print(f"{name:<10} {t_loop:>16.3f} {t_run:>19.3f}")
    if len(results) == 2:
        (a1, l1), (a2, l2) = results.values()
        print(f"agreement: loop {abs(a1 - a2):.1e}, final norm {abs(l1 - l2):.1e}")


if __name__ == "__main__":
    main()
