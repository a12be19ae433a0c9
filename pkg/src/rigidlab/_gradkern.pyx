# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner kernels for batched 2x2 gradient statistics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()


def dist2_so2(cnp.ndarray[cnp.float64_t, ndim=3] F):
    """Squared distance of each 2x2 matrix to the rotation group."""
    cdef Py_ssize_t n = F.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double a, b, c, d, det, tr2, s, t, s1, s2
    for i in range(n):
        a = F[i, 0, 0]; b = F[i, 0, 1]; c = F[i, 1, 0]; d = F[i, 1, 1]
        det = a * d - b * c
        tr2 = a * a + b * b + c * c + d * d
        s = tr2 + 2.0 * fabs(det)
        t = tr2 - 2.0 * fabs(det)
        if s < 0.0:
            s = 0.0
        if t < 0.0:
            t = 0.0
        s = sqrt(s)
        t = sqrt(t)
        s1 = 0.5 * (s + t)
        s2 = 0.5 * (s - t)
        if det >= 0.0:
            out[i] = (s1 - 1.0) * (s1 - 1.0) + (s2 - 1.0) * (s2 - 1.0)
        else:
            out[i] = (s1 - 1.0) * (s1 - 1.0) + (s2 + 1.0) * (s2 + 1.0)
    return out


def weighted_mean_and_frob2(cnp.ndarray[cnp.float64_t, ndim=3] F,
                            cnp.ndarray[cnp.float64_t, ndim=1] w,
                            cnp.ndarray[cnp.float64_t, ndim=2] R):
    """Weighted mean of the matrices and the weighted squared Frobenius
    residual against a fixed matrix R, in one pass."""
    cdef Py_ssize_t n = F.shape[0]
    cdef double m00 = 0, m01 = 0, m10 = 0, m11 = 0, res = 0, wsum = 0
    cdef double r00 = R[0, 0], r01 = R[0, 1], r10 = R[1, 0], r11 = R[1, 1]
    cdef double d00, d01, d10, d11, wi
    cdef Py_ssize_t i
    for i in range(n):
        wi = w[i]
        wsum += wi
        m00 += wi * F[i, 0, 0]; m01 += wi * F[i, 0, 1]
        m10 += wi * F[i, 1, 0]; m11 += wi * F[i, 1, 1]
        d00 = F[i, 0, 0] - r00; d01 = F[i, 0, 1] - r01
        d10 = F[i, 1, 0] - r10; d11 = F[i, 1, 1] - r11
        res += wi * (d00 * d00 + d01 * d01 + d10 * d10 + d11 * d11)
    mean = np.array([[m00, m01], [m10, m11]]) / (wsum if wsum else 1.0)
    return mean, res
