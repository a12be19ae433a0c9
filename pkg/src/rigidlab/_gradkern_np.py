"""Pure-numpy fallback for the compiled gradient kernels."""
from __future__ import annotations

import numpy as np


def dist2_so2(F: np.ndarray) -> np.ndarray:
    """Squared distance of each 2x2 matrix to the rotation group.

    Uses the closed form for 2x2 singular values: sigma_{1,2} =
    (sqrt(|F|^2 + 2|det|) +- sqrt(|F|^2 - 2|det|)) / 2. For det < 0 the
    smaller singular value enters with flipped sign.
    """
    F = np.asarray(F, dtype=float)
    det = F[:, 0, 0] * F[:, 1, 1] - F[:, 0, 1] * F[:, 1, 0]
    fro2 = np.einsum("nij,nij->n", F, F)
    s = np.sqrt(np.maximum(fro2 + 2.0 * np.abs(det), 0.0))
    t = np.sqrt(np.maximum(fro2 - 2.0 * np.abs(det), 0.0))
    s1 = 0.5 * (s + t)
    s2 = 0.5 * (s - t)
    pos = (s1 - 1.0) ** 2 + (s2 - 1.0) ** 2
    neg = (s1 - 1.0) ** 2 + (s2 + 1.0) ** 2
    return np.where(det >= 0.0, pos, neg)


def weighted_mean_and_frob2(F: np.ndarray, w: np.ndarray, R: np.ndarray):
    """Weighted mean matrix and weighted squared Frobenius residual vs R."""
    F = np.asarray(F, dtype=float)
    w = np.asarray(w, dtype=float)
    wsum = w.sum()
    mean = np.einsum("n,nij->ij", w, F) / (wsum if wsum else 1.0)
    diff = F - R[None, :, :]
    res = float(np.einsum("n,nij,nij->", w, diff, diff))
    return mean, res
