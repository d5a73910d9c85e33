# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""All-pairs adjacency kernels.

Every routine walks the strict upper triangle of node pairs once and tells
edges from non-edges by advancing a pointer through the sorted CSR row, so
no dense n x n structure is ever built.
"""

import numpy as np
from libc.math cimport exp, expm1, log, INFINITY


def adjacency_grad(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
                   const double[:, ::1] U, double scale_sq):
    cdef Py_ssize_t n = U.shape[0], k = U.shape[1]
    cdef Py_ssize_t i, j, c, ptr, end
    cdef double d2, diff, coef
    cdef double inv = 1.0 / scale_sq
    out = np.zeros((n, k), dtype=np.float64)
    cdef double[:, ::1] g = out
    with nogil:
        for i in range(n):
            ptr = indptr[i]
            end = indptr[i + 1]
            while ptr < end and indices[ptr] <= i:
                ptr += 1
            for j in range(i + 1, n):
                d2 = 0.0
                for c in range(k):
                    diff = U[i, c] - U[j, c]
                    d2 = d2 + diff * diff
                if ptr < end and indices[ptr] == j:
                    coef = 2.0 * inv
                    ptr += 1
                else:
                    coef = -2.0 * inv * exp(-d2 * inv)
                for c in range(k):
                    diff = coef * (U[i, c] - U[j, c])
                    g[i, c] += diff
                    g[j, c] -= diff
    return out


def adjacency_sums(const Py_ssize_t[::1] indptr, const Py_ssize_t[::1] indices,
                   const double[:, ::1] U, double scale_sq):
    """Return ``(edge_term, nonedge_term, loglik)``.

    ``edge_term`` is the sum over edges of ``|u_i - u_j|^2 / s^2``,
    ``nonedge_term`` the sum over non-edges of ``exp(-|u_i - u_j|^2 / s^2)``
    and ``loglik`` the exact ``log Pr[A | U]``.
    """
    cdef Py_ssize_t n = U.shape[0], k = U.shape[1]
    cdef Py_ssize_t i, j, c, ptr, end
    cdef double d2, diff, x
    cdef double inv = 1.0 / scale_sq
    cdef double edge_term = 0.0, nonedge_term = 0.0, loglik = 0.0
    with nogil:
        for i in range(n):
            ptr = indptr[i]
            end = indptr[i + 1]
            while ptr < end and indices[ptr] <= i:
                ptr += 1
            for j in range(i + 1, n):
                d2 = 0.0
                for c in range(k):
                    diff = U[i, c] - U[j, c]
                    d2 = d2 + diff * diff
                x = d2 * inv
                if ptr < end and indices[ptr] == j:
                    edge_term += x
                    loglik -= x
                    ptr += 1
                else:
                    nonedge_term += exp(-x)
                    if x == 0.0:
                        loglik = -INFINITY
                    else:
                        loglik += log(-expm1(-x))
    return edge_term, nonedge_term, loglik
