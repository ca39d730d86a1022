# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled alignment kernels (cosine similarity, Hungarian assignment).

Mirrors ``_kernels_py`` operation for operation.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


def cosine_similarity(a, b):
    """Pairwise cosine similarity between the columns of ``a`` and ``b``."""
    cdef double[:, ::1] A = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, ::1] Bm = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t d = A.shape[0], ka = A.shape[1], kb = Bm.shape[1]
    cdef Py_ssize_t i, j, r
    cdef double s, v
    na_arr = np.empty(ka)
    nb_arr = np.empty(kb)
    out_arr = np.empty((ka, kb))
    cdef double[::1] na = na_arr
    cdef double[::1] nb = nb_arr
    cdef double[:, ::1] out = out_arr
    with nogil:
        for i in range(ka):
            s = 0.0
            for r in range(d):
                s = s + A[r, i] * A[r, i]
            na[i] = sqrt(s)
        for j in range(kb):
            s = 0.0
            for r in range(d):
                s = s + Bm[r, j] * Bm[r, j]
            nb[j] = sqrt(s)
        for i in range(ka):
            for j in range(kb):
                s = 0.0
                for r in range(d):
                    s = s + A[r, i] * Bm[r, j]
                v = s / (na[i] * nb[j])
                if v > 1.0:
                    v = 1.0
                elif v < -1.0:
                    v = -1.0
                out[i, j] = v
    return out_arr


def assignment_max(score):
    """Hungarian algorithm; returns ``perm`` maximising ``sum(score[i, perm[i]])``."""
    cdef double[:, ::1] S = np.ascontiguousarray(score, dtype=np.float64)
    cdef Py_ssize_t n = S.shape[0]
    perm_arr = np.empty(n, dtype=np.int64)
    if n == 0:
        return perm_arr
    cdef cnp.int64_t[::1] perm = perm_arr
    cdef double top = np.max(score)
    cost_arr = np.empty((n, n))
    cdef double[:, ::1] cost = cost_arr
    u_arr = np.zeros(n + 1)
    v_arr = np.zeros(n + 1)
    minv_arr = np.empty(n + 1)
    p_arr = np.zeros(n + 1, dtype=np.int64)
    way_arr = np.zeros(n + 1, dtype=np.int64)
    used_arr = np.zeros(n + 1, dtype=np.uint8)
    cdef double[::1] u = u_arr
    cdef double[::1] v = v_arr
    cdef double[::1] minv = minv_arr
    cdef cnp.int64_t[::1] p = p_arr
    cdef cnp.int64_t[::1] way = way_arr
    cdef unsigned char[::1] used = used_arr
    cdef Py_ssize_t i, j, i0, j0, j1
    cdef double delta, cur
    with nogil:
        for i in range(n):
            for j in range(n):
                cost[i, j] = top - S[i, j]
        for i in range(1, n + 1):
            p[0] = i
            j0 = 0
            for j in range(n + 1):
                minv[j] = INFINITY
                used[j] = 0
            while True:
                used[j0] = 1
                i0 = p[j0]
                delta = INFINITY
                j1 = 0
                for j in range(1, n + 1):
                    if not used[j]:
                        cur = cost[i0 - 1, j - 1] - u[i0] - v[j]
                        if cur < minv[j]:
                            minv[j] = cur
                            way[j] = j0
                        if minv[j] < delta:
                            delta = minv[j]
                            j1 = j
                for j in range(n + 1):
                    if used[j]:
                        u[p[j]] = u[p[j]] + delta
                        v[j] = v[j] - delta
                    else:
                        minv[j] = minv[j] - delta
                j0 = j1
                if p[j0] == 0:
                    break
            while True:
                j1 = way[j0]
                p[j0] = p[j1]
                j0 = j1
                if j0 == 0:
                    break
        for j in range(1, n + 1):
            perm[p[j] - 1] = j - 1
    return perm_arr
