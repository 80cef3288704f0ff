"""Selects the compiled kernels when importable, else the numpy fallback.

Set ``EPSSTAR_PURE=1`` to force the fallback (used by the benchmark and by
the cross-backend tests).
"""
from __future__ import annotations

import os

import numpy as np

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _kernels
except ImportError:  # extension not built
    _kernels = None
else:
    BACKENDS["compiled"] = _kernels

if _kernels is not None and os.environ.get("EPSSTAR_PURE", "") not in ("1", "true"):
    NAME = "compiled"
else:
    NAME = "python"

_impl = BACKENDS[NAME]


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def count_le(sorted_values, queries):
    return _impl.count_le(_f64(sorted_values), _f64(queries))


def ks_statistic(a_sorted, b_sorted) -> float:
    return float(_impl.ks_statistic(_f64(a_sorted), _f64(b_sorted)))


def discrete_max(t, t_c, eta, eta_c, delta):
    return _impl.discrete_max(_f64(t), _f64(t_c), _f64(eta), _f64(eta_c), float(delta))


def gammainc_pq(k, x):
    return _impl.gammainc_pq(float(k), _f64(x))
