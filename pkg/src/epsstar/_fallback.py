"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` function for function and are used when the
compiled extension is unavailable (or when ``EPSSTAR_PURE=1``).
"""
from __future__ import annotations

import numpy as np
from scipy.special import gammaln

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 100_000


def count_le(sorted_values, queries):
    """Number of ``sorted_values`` that are <= each query."""
    return np.searchsorted(sorted_values, queries, side="right").astype(np.int64)


def ks_statistic(a_sorted, b_sorted) -> float:
    """Two-sample KS distance for pre-sorted samples."""
    a_sorted = np.asarray(a_sorted, dtype=np.float64)
    b_sorted = np.asarray(b_sorted, dtype=np.float64)
    na, nb = a_sorted.size, b_sorted.size
    pts = np.concatenate([a_sorted, b_sorted])
    ca = np.searchsorted(a_sorted, pts, side="right")
    cb = np.searchsorted(b_sorted, pts, side="right")
    # Integer cross-multiplied gap, one division at the end: D is correctly rounded.
    gap = np.abs(ca.astype(np.int64) * nb - cb.astype(np.int64) * na)
    return float(gap.max()) / (na * nb)


def discrete_max(t, t_c, eta, eta_c, delta: float):
    """Largest of the four hypothesis-test ratios over all pairs.

    ``t_c`` and ``eta_c`` are the complements ``1 - t`` and ``1 - eta``; they
    are passed separately so callers with exact complements keep them.

    Returns ``(best, index, branch)`` with branch in 0..3, or
    ``(-inf, -1, -1)`` when every ratio has a zero denominator.
    """
    t = np.asarray(t, dtype=np.float64)
    t_c = np.asarray(t_c, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    eta_c = np.asarray(eta_c, dtype=np.float64)
    pairs = (
        (eta_c - delta, t),
        (t_c - delta, eta),
        (eta - delta, t_c),
        (t - delta, eta_c),
    )
    best, best_i, best_b = -np.inf, -1, -1
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for b, (num, den) in enumerate(pairs):
            r = np.where(den > 0, num / np.where(den > 0, den, 1.0), -np.inf)
            r[np.isnan(r)] = -np.inf
            if r.size == 0:
                continue
            i = int(np.argmax(r))
            if r[i] > best:
                best, best_i, best_b = float(r[i]), i, b
    return best, best_i, best_b


def gammainc_pq(k: float, x):
    """Regularized lower and upper incomplete gamma ``(P(k, x), Q(k, x))``.

    Series expansion below ``k + 1``, Lentz continued fraction above; each
    side computes the small tail directly so both keep relative accuracy.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    p = np.zeros_like(x)
    q = np.ones_like(x)
    pos = x > 0
    lg = gammaln(k)

    ser = pos & (x < k + 1)
    if ser.any():
        xs = x[ser]
        ap = np.full_like(xs, k)
        term = 1.0 / ap
        total = term.copy()
        active = np.ones(xs.shape, dtype=bool)
        for _ in range(_MAX_ITER):
            ap = ap + 1.0
            term = np.where(active, term * xs / ap, 0.0)
            total = total + term
            active &= np.abs(term) >= np.abs(total) * _EPS
            if not active.any():
                break
        ps = total * np.exp(-xs + k * np.log(xs) - lg)
        p[ser] = ps
        q[ser] = 1.0 - ps

    cf = pos & ~ser
    if cf.any():
        xc = x[cf]
        b = xc + 1.0 - k
        c = np.full_like(xc, 1.0 / _FPMIN)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xc.shape, dtype=bool)
        for i in range(1, _MAX_ITER):
            an = -i * (i - k)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
            c = b + an / c
            c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
            d = 1.0 / d
            step = np.where(active, d * c, 1.0)
            h = h * step
            active &= np.abs(step - 1.0) >= _EPS
            if not active.any():
                break
        qs = np.exp(-xc + k * np.log(xc) - lg) * h
        q[cf] = qs
        p[cf] = 1.0 - qs
    return p, q
