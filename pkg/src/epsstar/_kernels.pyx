# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Signatures and results match ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, fabs, lgamma, INFINITY, isnan

cnp.import_array()

cdef double _EPS = 1e-16
cdef double _FPMIN = 1e-300
cdef Py_ssize_t _MAX_ITER = 100000


def count_le(const double[::1] sorted_values, const double[::1] queries):
    """Number of ``sorted_values`` that are <= each query (binary search)."""
    cdef Py_ssize_t n = sorted_values.shape[0]
    cdef Py_ssize_t m = queries.shape[0]
    cdef Py_ssize_t i, lo, hi, mid
    cdef double q
    out = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] res = out
    for i in range(m):
        q = queries[i]
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) >> 1
            if sorted_values[mid] <= q:
                lo = mid + 1
            else:
                hi = mid
        res[i] = lo
    return out


def ks_statistic(const double[::1] a_sorted, const double[::1] b_sorted):
    """Two-sample KS distance by a merged sweep over pre-sorted samples."""
    cdef Py_ssize_t na = a_sorted.shape[0]
    cdef Py_ssize_t nb = b_sorted.shape[0]
    cdef Py_ssize_t i = 0, j = 0
    cdef double x
    cdef long long gap, best = 0
    while i < na or j < nb:
        if j >= nb or (i < na and a_sorted[i] <= b_sorted[j]):
            x = a_sorted[i]
        else:
            x = b_sorted[j]
        while i < na and a_sorted[i] <= x:
            i += 1
        while j < nb and b_sorted[j] <= x:
            j += 1
        gap = <long long>i * nb - <long long>j * na
        if gap < 0:
            gap = -gap
        if gap > best:
            best = gap
    return <double>best / (<double>na * <double>nb)


def discrete_max(const double[::1] t, const double[::1] t_c,
                 const double[::1] eta, const double[::1] eta_c, double delta):
    """Largest of the four hypothesis-test ratios over all pairs."""
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t i, b
    cdef double num, den, r
    cdef double best = -INFINITY
    cdef Py_ssize_t best_i = -1, best_b = -1
    cdef double branch_best
    cdef Py_ssize_t branch_i
    for b in range(4):
        branch_best = -INFINITY
        branch_i = -1
        for i in range(n):
            if b == 0:
                num = eta_c[i] - delta
                den = t[i]
            elif b == 1:
                num = t_c[i] - delta
                den = eta[i]
            elif b == 2:
                num = eta[i] - delta
                den = t_c[i]
            else:
                num = t[i] - delta
                den = eta_c[i]
            if den > 0:
                r = num / den
                if not isnan(r) and (branch_i < 0 or r > branch_best):
                    branch_best = r
                    branch_i = i
        if branch_i >= 0 and branch_best > best:
            best = branch_best
            best_i = branch_i
            best_b = b
    return best, best_i, best_b


cdef void _gammainc_one(double k, double x, double lg, double* p, double* q) noexcept nogil:
    cdef double ap, term, total, b, c, d, h, an, step
    cdef Py_ssize_t i
    if x <= 0:
        p[0] = 0.0
        q[0] = 1.0
        return
    if x < k + 1:
        ap = k
        term = 1.0 / ap
        total = term
        for i in range(_MAX_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if fabs(term) < fabs(total) * _EPS:
                break
        p[0] = total * exp(-x + k * log(x) - lg)
        q[0] = 1.0 - p[0]
    else:
        b = x + 1.0 - k
        c = 1.0 / _FPMIN
        d = 1.0 / b
        h = d
        for i in range(1, _MAX_ITER):
            an = -i * (i - k)
            b += 2.0
            d = an * d + b
            if fabs(d) < _FPMIN:
                d = _FPMIN
            c = b + an / c
            if fabs(c) < _FPMIN:
                c = _FPMIN
            d = 1.0 / d
            step = d * c
            h *= step
            if fabs(step - 1.0) < _EPS:
                break
        q[0] = exp(-x + k * log(x) - lg) * h
        p[0] = 1.0 - q[0]


def gammainc_pq(double k, x):
    """Regularized lower and upper incomplete gamma ``(P(k, x), Q(k, x))``."""
    cdef double[::1] xv = np.ascontiguousarray(np.atleast_1d(x), dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    p_out = np.empty(n, dtype=np.float64)
    q_out = np.empty(n, dtype=np.float64)
    cdef double[::1] pv = p_out
    cdef double[::1] qv = q_out
    cdef double lg = lgamma(k)
    cdef Py_ssize_t i
    with nogil:
        for i in range(n):
            _gammainc_one(k, xv[i], lg, &pv[i], &qv[i])
    return p_out, q_out
