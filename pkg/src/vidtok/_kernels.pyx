# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-frame spatial kernels. Mirrors ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double EPS = 1e-12


def abs_row_sums(const double[:, ::1] frame):
    cdef Py_ssize_t N = frame.shape[0], D = frame.shape[1], n, d
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(N)
    cdef double[::1] o = out
    cdef double acc
    for n in range(N):
        acc = 0.0
        for d in range(D):
            acc += fabs(frame[n, d])
        o[n] = acc
    return out


def row_cosine(const double[:, ::1] frame, const double[:, ::1] mem, const cnp.npy_bool[::1] touched):
    cdef Py_ssize_t N = frame.shape[0], D = frame.shape[1], n, d
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(N)
    cdef double[::1] o = out
    cdef double dot, nf, nm, x, m, c
    for n in range(N):
        if not touched[n]:
            continue
        dot = 0.0
        nf = 0.0
        nm = 0.0
        for d in range(D):
            x = frame[n, d]
            m = mem[n, d]
            dot += x * m
            nf += x * x
            nm += m * m
        nf = sqrt(nf)
        nm = sqrt(nm)
        if nf < EPS or nm < EPS:
            continue
        c = dot / (nf * nm)
        if c > 1.0:
            c = 1.0
        elif c < -1.0:
            c = -1.0
        o[n] = c
    return out


cdef inline bint _before(const double[::1] s, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    # strict ordering: higher score first, lower index on ties
    return s[i] > s[j] or (s[i] == s[j] and i < j)


cdef void _merge_sort(Py_ssize_t* idx, Py_ssize_t* tmp, Py_ssize_t n, const double[::1] s) noexcept nogil:
    cdef Py_ssize_t width = 1, lo, mid, hi, i, j, k
    cdef Py_ssize_t* src = idx
    cdef Py_ssize_t* dst = tmp
    cdef Py_ssize_t* swap
    while width < n:
        lo = 0
        while lo < n:
            mid = lo + width if lo + width < n else n
            hi = lo + 2 * width if lo + 2 * width < n else n
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if _before(s, src[j], src[i]):
                    dst[k] = src[j]
                    j += 1
                else:
                    dst[k] = src[i]
                    i += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
            lo += 2 * width
        swap = src
        src = dst
        dst = swap
        width *= 2
    if src != idx:
        for i in range(n):
            idx[i] = src[i]


def topk_per_patch(const double[::1] scores, const cnp.int64_t[::1] bounds, const cnp.int64_t[::1] counts):
    cdef Py_ssize_t N = scores.shape[0], P = counts.shape[0], p, a, b, m, i, k
    cdef cnp.ndarray[cnp.npy_bool, ndim=1] out = np.zeros(N, dtype=bool)
    cdef cnp.npy_bool[::1] mask = out
    cdef Py_ssize_t* idx = <Py_ssize_t*> malloc(N * sizeof(Py_ssize_t))
    cdef Py_ssize_t* tmp = <Py_ssize_t*> malloc(N * sizeof(Py_ssize_t))
    if idx == NULL or tmp == NULL:
        free(idx)
        free(tmp)
        raise MemoryError()
    try:
        for p in range(P):
            k = counts[p]
            if k <= 0:
                continue
            a = bounds[p]
            b = bounds[p + 1]
            m = b - a
            if k >= m:
                for i in range(a, b):
                    mask[i] = 1
                continue
            for i in range(m):
                idx[i] = a + i
            _merge_sort(idx, tmp, m, scores)
            for i in range(k):
                mask[idx[i]] = 1
    finally:
        free(idx)
        free(tmp)
    return out


def ema_rows_update(double[:, ::1] mem, cnp.npy_bool[::1] touched, const double[:, ::1] frame,
                    const cnp.npy_bool[::1] mask, double alpha):
    cdef Py_ssize_t N = frame.shape[0], D = frame.shape[1], n, d
    cdef double keep = 1.0 - alpha
    for n in range(N):
        if not mask[n]:
            continue
        for d in range(D):
            mem[n, d] = keep * mem[n, d] + alpha * frame[n, d]
        touched[n] = 1
