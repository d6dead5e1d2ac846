# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Gini split scan.

Bit-identical counterpart of ``pysplit.scan_best_split``: integer class
counts, one float division per side per boundary, first-wins ties over
(column order, ascending boundary position). Keep the two in sync.
"""

from libc.string cimport memset
from libc.stdlib cimport malloc, free

import numpy as np


def scan_best_split(xf, order, y, n_classes, min_leaf=1):
    xf = np.ascontiguousarray(xf, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    y = np.ascontiguousarray(y, dtype=np.int32)
    return _scan(xf, order, y, int(n_classes), int(min_leaf))


cdef _scan(const double[:, ::1] xf, const long long[:, ::1] order,
           const int[::1] y, int n_classes, long long min_leaf):
    cdef Py_ssize_t n = xf.shape[0]
    cdef Py_ssize_t m = xf.shape[1]
    cdef Py_ssize_t i, j
    cdef int c, k
    cdef long long nl, nr, sumsq_l, sumsq_r, total_sumsq
    cdef long long *cl
    cdef long long *cr
    cdef long long *ct
    cdef double v_prev, v_cur, g, thr
    cdef double best_good = -np.inf
    cdef double best_thr = 0.0
    cdef Py_ssize_t best_col = -1

    if n < 2:
        return -1, 0.0, best_good

    cl = <long long *> malloc(n_classes * sizeof(long long))
    cr = <long long *> malloc(n_classes * sizeof(long long))
    ct = <long long *> malloc(n_classes * sizeof(long long))
    if cl == NULL or cr == NULL or ct == NULL:
        free(cl); free(cr); free(ct)
        raise MemoryError()

    try:
        with nogil:
            memset(ct, 0, n_classes * sizeof(long long))
            total_sumsq = 0
            for i in range(n):
                c = y[i]
                ct[c] += 1
            for k in range(n_classes):
                total_sumsq += ct[k] * ct[k]

            for j in range(m):
                memset(cl, 0, n_classes * sizeof(long long))
                for k in range(n_classes):
                    cr[k] = ct[k]
                sumsq_l = 0
                sumsq_r = total_sumsq
                for i in range(1, n):
                    c = y[order[i - 1, j]]
                    cl[c] += 1
                    sumsq_l += 2 * cl[c] - 1
                    sumsq_r -= 2 * cr[c] - 1
                    cr[c] -= 1
                    v_prev = xf[order[i - 1, j], j]
                    v_cur = xf[order[i, j], j]
                    if v_cur != v_prev:
                        nl = i
                        nr = n - i
                        if nl >= min_leaf and nr >= min_leaf:
                            g = (<double> sumsq_l) / nl + (<double> sumsq_r) / nr
                            if g > best_good:
                                thr = (v_prev + v_cur) / 2.0
                                if thr >= v_cur:
                                    thr = v_prev
                                best_good = g
                                best_thr = thr
                                best_col = j
    finally:
        free(cl)
        free(cr)
        free(ct)

    return int(best_col), float(best_thr), float(best_good)
