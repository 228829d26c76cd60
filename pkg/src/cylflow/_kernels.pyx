# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: pointwise nonlinearity and exponential-integrator sweeps.

Signatures and results match :mod:`cylflow._kernels_py` exactly.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def nonlinear_pointwise(const double[::1] av, double k,
                        const double[::1] xi, const double[::1] v,
                        const double[:, ::1] vy, const double[::1] vt,
                        const double[:, :, ::1] vyy, const double[:, ::1] vyt,
                        const double[::1] vtt):
    """Return ``(N, F_rest, N1)`` at every point (``av`` is ``a`` per point).

    ``N = (a/k - v^-2) xi_tt - a v + k/v + 2 a xi + N1`` and
    ``F_rest = -v^-2 v_tt - a v + k/v + N1``.
    """
    cdef Py_ssize_t P = v.shape[0]
    cdef Py_ssize_t n = vy.shape[0]
    cdef Py_ssize_t p, i, j
    cdef double vv, iv, iv2, grad2, mixed, hess, J2, n1, vti, a
    out_N = np.empty(P)
    out_F = np.empty(P)
    out_1 = np.empty(P)
    cdef double[::1] oN = out_N
    cdef double[::1] oF = out_F
    cdef double[::1] o1 = out_1
    for p in range(P):
        vv = v[p]
        a = av[p]
        iv = 1.0 / vv
        iv2 = iv * iv
        vti = vt[p]
        grad2 = 0.0
        mixed = 0.0
        hess = 0.0
        for i in range(n):
            grad2 += vy[i, p] * vy[i, p]
            mixed += vy[i, p] * vyt[i, p]
            for j in range(n):
                hess += vy[i, p] * vy[j, p] * vyy[i, j, p]
        J2 = 1.0 + grad2 + iv2 * vti * vti
        n1 = (iv2 * iv2 * vtt[p] * vti * vti + iv2 * iv * vti * vti
              + 2.0 * iv2 * vti * mixed + hess) / J2
        o1[p] = n1
        oF[p] = -iv2 * vtt[p] - a * vv + k * iv + n1
        oN[p] = (a / k - iv2) * vtt[p] - a * vv + k * iv + 2.0 * a * xi[p] + n1
    return out_N, out_F, out_1


def etd_forward(const double[::1] c0, const double[:, ::1] E, const double[:, ::1] P1,
                const double[:, ::1] P2, const double[:, ::1] src):
    """``c[i+1] = E[i] c[i] + P1[i] s[i] + P2[i] (s[i+1] - s[i])``."""
    cdef Py_ssize_t S = E.shape[0]
    cdef Py_ssize_t K = E.shape[1]
    cdef Py_ssize_t i, q
    out = np.empty((S + 1, K))
    cdef double[:, ::1] o = out
    for q in range(K):
        o[0, q] = c0[q]
    for i in range(S):
        for q in range(K):
            o[i + 1, q] = (E[i, q] * o[i, q] + P1[i, q] * src[i, q]
                           + P2[i, q] * (src[i + 1, q] - src[i, q]))
    return out


def etd_backward(const double[::1] cM, const double[:, ::1] Einv, const double[:, ::1] P1,
                 const double[:, ::1] P2, const double[:, ::1] src):
    """Invert the forward step from the end: ``c[i] = Einv[i] (c[i+1] - ...)``."""
    cdef Py_ssize_t S = Einv.shape[0]
    cdef Py_ssize_t K = Einv.shape[1]
    cdef Py_ssize_t i, q
    out = np.empty((S + 1, K))
    cdef double[:, ::1] o = out
    for q in range(K):
        o[S, q] = cM[q]
    for i in range(S - 1, -1, -1):
        for q in range(K):
            o[i, q] = Einv[i, q] * (o[i + 1, q] - P1[i, q] * src[i, q]
                                    - P2[i, q] * (src[i + 1, q] - src[i, q]))
    return out
