"""Benchmark the compiled gradient kernels against the numpy fallback.

Run as:  python3 benchmarks/bench_kernels.py [--sizes 1e4,1e5,1e6] [--repeats 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from rigidlab import _gradkern_np as numpy_impl
from rigidlab.kernels import HAVE_COMPILED

if HAVE_COMPILED:
    from rigidlab import _gradkern as compiled_impl
else:  # pragma: no cover
    compiled_impl = None


def _time(fn, *args, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="10000,100000,1000000")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    sizes = [int(float(s)) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)

    print(f"compiled backend available: {HAVE_COMPILED}")
    header = f"{'n':>9}  {'kernel':<24}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        F = np.eye(2) + 0.05 * rng.normal(size=(n, 2, 2))
        w = rng.uniform(0.5, 1.0, size=n)
        R = np.eye(2)
        cases = [
            ("dist2_so2", (F,)),
            ("weighted_mean_and_frob2", (F, w, R)),
        ]
        for name, a in cases:
            tn = _time(getattr(numpy_impl, name), *a, repeats=args.repeats)
            if compiled_impl is None:
                print(f"{n:>9}  {name:<24}{tn * 1e3:>12.3f}{'-':>13}{'-':>9}")
                continue
            tc = _time(getattr(compiled_impl, name), *a, repeats=args.repeats)
            ref = getattr(numpy_impl, name)(*a)
            got = getattr(compiled_impl, name)(*a)
            if not isinstance(ref, tuple):
                ref, got = (ref,), (got,)
            for r_part, g_part in zip(ref, got):
                if not np.allclose(r_part, g_part, rtol=1e-12, atol=1e-12):
                    raise AssertionError(f"{name}: backends disagree at n={n}")
            print(f"{n:>9}  {name:<24}{tn * 1e3:>12.3f}{tc * 1e3:>13.3f}"
                  f"{tn / tc:>9.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
