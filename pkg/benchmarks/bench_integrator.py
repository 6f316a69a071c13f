"""Time the compiled RKF45 kernel against the pure-Python fallback.

    python3 benchmarks/bench_integrator.py [--repeat N]

Both backends integrate the same H0 - phi V trajectory; the script prints
per-call times, the speedup and the largest difference between the two
endpoint states.
"""
import argparse
import time

import numpy as np

from two_boost import _kernel_py
from two_boost.potential_cutoff import RadialPowerPotential, cutoff_spec

try:
    from two_boost import _kernel
except ImportError:
    _kernel = None


def _case():
    V = RadialPowerPotential(0.1, 3.0, 1.0)
    spec = cutoff_spec(V, 1.0, (1.0, 0.0), (0.0, 1.0))
    params = np.array([V.a, V.alpha, V.r0, spec.R1, spec.beta, spec.supV, spec.c])
    x0 = np.array([1.0, 0.0, 0.3, 1.1])
    return 2, params, x0, 5.0


def _time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--tol", type=float, default=1e-12)
    args = ap.parse_args(argv)
    mode, params, x0, T = _case()
    run_py = lambda: _kernel_py.integrate(mode, params, x0, T, 2, args.tol, args.tol)
    t_py, (y_py, steps, _) = _time(run_py, args.repeat)
    print(f"python   {t_py * 1e3:9.3f} ms  ({steps} steps)")
    if _kernel is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation`")
        return 0
    run_c = lambda: _kernel.integrate(mode, params, x0, T, 2, args.tol, args.tol)
    t_c, (y_c, steps_c, _) = _time(run_c, max(args.repeat, 20))
    print(f"compiled {t_c * 1e3:9.3f} ms  ({steps_c} steps)")
    print(f"speedup  {t_py / t_c:9.1f}x")
    print(f"max |endpoint difference| = {np.max(np.abs(y_py[-1] - y_c[-1])):.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
