"""Compare the compiled and numpy kernel backends on the Monte-Carlo pDP solver.

Usage: python3 benchmarks/bench_kernels.py [--draws N] [--r R] [--p P] [--repeat K]
"""

import argparse
import time

import numpy as np

from ggmech import _kernels_py, kernels
from ggmech.calibration import McConfig, PrivacyParams, gg_pdp_scale_mc
from ggmech.numerics import RngStream
from ggmech.sensitivity import SensitivityProfile

try:
    from ggmech import _kernels as compiled
except ImportError:
    compiled = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def solver_with(backend, profile, p, params, draws):
    saved = kernels.mc_coefficients, kernels.exceed_fraction
    kernels.mc_coefficients, kernels.exceed_fraction = backend.mc_coefficients, backend.exceed_fraction
    try:
        return gg_pdp_scale_mc(profile, p, params, McConfig(draws=draws), RngStream(1))
    finally:
        kernels.mc_coefficients, kernels.exceed_fraction = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--draws", type=int, default=200_000)
    ap.add_argument("--r", type=int, default=16)
    ap.add_argument("--p", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if compiled is None:
        print("compiled extension not built; only the numpy backend is available")
    backends = [("numpy", _kernels_py)] + ([("cython", compiled)] if compiled is not None else [])

    rng = np.random.default_rng(0)
    u = np.abs(rng.standard_normal((args.draws, args.r)))
    delta1 = rng.uniform(0.05, 1.0, args.r)
    print(f"draws={args.draws} r={args.r} p={args.p} (best of {args.repeat})")

    ref = None
    for name, mod in backends:
        t_coef, coef = best_of(lambda: mod.mc_coefficients(u, delta1, args.p), args.repeat)
        t_exc, frac = best_of(lambda: mod.exceed_fraction(coef, 0.4, 0.8), args.repeat)
        if ref is None:
            ref = coef
        err = float(np.max(np.abs(coef - ref) / np.maximum(np.abs(ref), 1e-300)))
        print(f"  {name:7s} mc_coefficients {t_coef * 1e3:8.2f} ms   exceed_fraction {t_exc * 1e3:7.2f} ms"
              f"   frac={frac:.6f}  max rel diff vs numpy {err:.1e}")

    profile = SensitivityProfile(tuple(delta1))
    params = PrivacyParams(1.0, 0.05)
    for name, mod in backends:
        t, b = best_of(lambda: solver_with(mod, profile, args.p, params, args.draws), max(1, args.repeat // 2))
        print(f"  {name:7s} gg_pdp_scale_mc  {t:8.3f} s    b={b:.6f}")
    print(f"default backend: {kernels.BACKEND}")


if __name__ == "__main__":
    main()
