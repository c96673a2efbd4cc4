# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot loops of the dbar solver."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def geometric_scan(a, b, q):
    cdef double complex[:, ::1] A = np.ascontiguousarray(a, dtype=np.complex128)
    cdef double complex[:, ::1] B = np.ascontiguousarray(b, dtype=np.complex128)
    cdef double[::1] Q = np.ascontiguousarray(q, dtype=np.float64)
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1], i, j
    out = np.zeros((n, m), dtype=np.complex128)
    cdef double complex[:, ::1] W = out
    for i in range(1, n):
        for j in range(m):
            W[i, j] = Q[j] * (W[i - 1, j] + B[i - 1, j]) + A[i, j]
    return out


def cauchy_direct(tx, ty, sx, sy, w):
    cdef double[::1] TX = np.ascontiguousarray(tx, dtype=np.float64)
    cdef double[::1] TY = np.ascontiguousarray(ty, dtype=np.float64)
    cdef double[::1] SX = np.ascontiguousarray(sx, dtype=np.float64)
    cdef double[::1] SY = np.ascontiguousarray(sy, dtype=np.float64)
    cdef double complex[::1] Wt = np.ascontiguousarray(w, dtype=np.complex128)
    cdef Py_ssize_t nt = TX.shape[0], ns = SX.shape[0], i, j
    cdef double dx, dy, d2, accr, acci, wr, wi
    out = np.empty(nt, dtype=np.complex128)
    cdef double complex[::1] U = out
    for i in range(nt):
        accr = 0.0
        acci = 0.0
        for j in range(ns):
            dx = TX[i] - SX[j]
            dy = TY[i] - SY[j]
            d2 = dx * dx + dy * dy
            if d2 == 0.0:
                continue
            # w / (dx + i dy) = w (dx - i dy) / d2
            wr = Wt[j].real
            wi = Wt[j].imag
            accr += (wr * dx + wi * dy) / d2
            acci += (wi * dx - wr * dy) / d2
        U[i] = (accr + 1j * acci) / 3.141592653589793
    return out
