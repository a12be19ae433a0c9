"""Kernel dispatch: compiled Cython implementations when available, otherwise
the numpy fallback. Both expose the same functions; the benchmark in
benchmarks/bench_kernels.py compares them."""
from __future__ import annotations

import numpy as np

from . import _gradkern_np as _numpy_impl

try:
    from . import _gradkern as _compiled_impl  # type: ignore
    HAVE_COMPILED = True
except ImportError:  # pragma: no cover
    _compiled_impl = None
    HAVE_COMPILED = False

_impl = _compiled_impl if HAVE_COMPILED else _numpy_impl


def backend_name() -> str:
    return "cython" if HAVE_COMPILED else "numpy"


def dist2_so2(F) -> np.ndarray:
    return _impl.dist2_so2(np.ascontiguousarray(F, dtype=np.float64))


def weighted_mean_and_frob2(F, w, R):
    return _impl.weighted_mean_and_frob2(
        np.ascontiguousarray(F, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
        np.ascontiguousarray(R, dtype=np.float64))


def dist2_so3(F) -> np.ndarray:
    """Squared distance to the rotation group for 3x3 matrices, via SVD."""
    F = np.asarray(F, dtype=float)
    sig = np.linalg.svd(F, compute_uv=False)
    det = np.linalg.det(F)
    last = np.where(det >= 0.0, sig[:, 2] - 1.0, sig[:, 2] + 1.0)
    return (sig[:, 0] - 1.0) ** 2 + (sig[:, 1] - 1.0) ** 2 + last**2


def dist2_so(F) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if F.shape[-1] == 2:
        return dist2_so2(F)
    return dist2_so3(F)
