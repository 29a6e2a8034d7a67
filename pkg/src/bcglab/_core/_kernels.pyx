# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: per-tuple modified Gram-Schmidt over R, C, or H."""

from libc.math cimport sqrt
from libc.stdlib cimport free, malloc

import numpy as np

DEF SINGULAR_RTOL = 1e-12


cdef inline void qmul(const double* a, const double* b, double* out) nogil:
    out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
    out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2]
    out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1]
    out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]


cdef double tuple_det_one(const double* v, double* q, double* u,
                          int n, int m) nogil:
    """|det| of one m-tuple of vectors in F^n; v and q are (n, m, 4) grids."""
    cdef int t, s, i, c, passes
    cdef double det = 1.0, nrm, scale, tol, colsq
    cdef double coef[4]
    cdef double conj_q[4]
    cdef double prod[4]
    cdef bint singular = 0

    scale = 0.0
    for t in range(m):
        colsq = 0.0
        for i in range(n):
            for c in range(4):
                colsq += v[(i * m + t) * 4 + c] * v[(i * m + t) * 4 + c]
        if colsq > scale:
            scale = colsq
    tol = SINGULAR_RTOL * sqrt(scale)

    for t in range(m):
        for i in range(n):
            for c in range(4):
                u[i * 4 + c] = v[(i * m + t) * 4 + c]
        for passes in range(2):
            for s in range(t):
                # hermitian coefficient (q_s, u) = sum_i conj(q_s[i]) u[i]
                coef[0] = coef[1] = coef[2] = coef[3] = 0.0
                for i in range(n):
                    conj_q[0] = q[(i * m + s) * 4 + 0]
                    conj_q[1] = -q[(i * m + s) * 4 + 1]
                    conj_q[2] = -q[(i * m + s) * 4 + 2]
                    conj_q[3] = -q[(i * m + s) * 4 + 3]
                    qmul(conj_q, &u[i * 4], prod)
                    for c in range(4):
                        coef[c] += prod[c]
                for i in range(n):
                    qmul(&q[(i * m + s) * 4], coef, prod)
                    for c in range(4):
                        u[i * 4 + c] -= prod[c]
        nrm = 0.0
        for i in range(n):
            for c in range(4):
                nrm += u[i * 4 + c] * u[i * 4 + c]
        nrm = sqrt(nrm)
        if nrm <= tol:
            singular = 1
        det *= nrm
        if nrm == 0.0:
            nrm = 1.0
        for i in range(n):
            for c in range(4):
                q[(i * m + t) * 4 + c] = u[i * 4 + c] / nrm

    if singular:
        return 0.0
    return det


def tuple_det_abs_batch(double[:, :, :, ::1] v):
    """|det| for a (N, n, m, 4) batch of m-tuples of vectors in F^n."""
    cdef Py_ssize_t nbatch = v.shape[0]
    cdef int n = <int> v.shape[1]
    cdef int m = <int> v.shape[2]
    cdef Py_ssize_t b

    out_arr = np.empty(nbatch, dtype=np.float64)
    cdef double[::1] out = out_arr

    cdef double* q = <double*> malloc(n * m * 4 * sizeof(double))
    cdef double* u = <double*> malloc(n * 4 * sizeof(double))
    if q == NULL or u == NULL:
        free(q)
        free(u)
        raise MemoryError()
    try:
        with nogil:
            for b in range(nbatch):
                out[b] = tuple_det_one(&v[b, 0, 0, 0], q, u, n, m)
    finally:
        free(q)
        free(u)
    return out_arr
