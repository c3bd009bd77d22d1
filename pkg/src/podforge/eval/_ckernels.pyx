# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sliding-window kernels; see ``_pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log2

cnp.import_array()


def distinct_sum(codes, Py_ssize_t n_codes, Py_ssize_t span, Py_ssize_t stride,
                 Py_ssize_t count):
    cdef const long long[::1] cv = np.ascontiguousarray(codes, dtype=np.int64)
    cdef long long[::1] counts = np.zeros(n_codes, dtype=np.int64)
    cdef Py_ssize_t unique = 0, lo = 0, hi = 0, w, i, start, end
    cdef long long c
    cdef double total = 0.0
    for w in range(count):
        start = w * stride
        end = start + span
        for i in range(lo, min(start, hi)):
            c = cv[i]
            counts[c] -= 1
            if counts[c] == 0:
                unique -= 1
        for i in range(max(hi, start), end):
            c = cv[i]
            if counts[c] == 0:
                unique += 1
            counts[c] += 1
        lo = start
        hi = end
        total += <double>unique / <double>span
    return total


def entropy_sum(codes, is_stop, Py_ssize_t n_codes, Py_ssize_t span,
                Py_ssize_t stride, Py_ssize_t count):
    cdef const long long[::1] cv = np.ascontiguousarray(codes, dtype=np.int64)
    cdef const unsigned char[::1] stop = np.ascontiguousarray(is_stop, dtype=np.uint8)
    cdef long long[::1] counts = np.zeros(n_codes, dtype=np.int64)
    cdef unsigned char[::1] seen = np.zeros(n_codes, dtype=np.uint8)
    cdef long long[::1] firsts = np.zeros(max(span, 1), dtype=np.int64)
    cdef Py_ssize_t lo = 0, hi = 0, w, i, j, start, end, nf, valid = 0
    cdef long long c, k, m
    cdef double s, total = 0.0
    for w in range(count):
        start = w * stride
        end = start + span
        for i in range(lo, min(start, hi)):
            counts[cv[i]] -= 1
        for i in range(max(hi, start), end):
            counts[cv[i]] += 1
        lo = start
        hi = end

        m = 0
        s = 0.0
        nf = 0
        for i in range(start, end):
            c = cv[i]
            if stop[c] or seen[c]:
                continue
            seen[c] = 1
            firsts[nf] = c
            nf += 1
            k = counts[c]
            m += k
            s += <double>k * log2(<double>k)
        for j in range(nf):
            seen[firsts[j]] = 0
        if m == 0:
            continue
        total += log2(<double>m) - s / <double>m
        valid += 1
    return total, valid
