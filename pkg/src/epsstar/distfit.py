"""Distribution machinery: empirical CDFs, Normal and 1-D GMM fits, Gamma oracles.

Every continuous family exposes the same vectorized surface::

    cdf(x), sf(x), pdf(x), quantile(t), upper_quantile(u)

where ``sf = 1 - cdf`` and ``upper_quantile(u) = quantile(1 - u)``. The
survival function and the upper quantile are computed directly rather than
by complementing, so both tails keep relative accuracy down to ~1e-300.
"""
from __future__ import annotations

import dataclasses
import math
from typing import Protocol

import numpy as np
from scipy.special import erfc, gammaln

from . import _backend
from .errors import DegenerateSampleError, DomainError, EmptySampleError, InsufficientDataError

_SQRT2 = math.sqrt(2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
MAX_COMPONENTS = 20
VARIANCE_FLOOR = 1e-9


class FittedDistribution(Protocol):
    def cdf(self, x): ...

    def sf(self, x): ...

    def quantile(self, t): ...

    def upper_quantile(self, u): ...


def _scalar_or_array(out, like):
    return float(out) if np.ndim(like) == 0 else out


def _check_open_unit(t) -> np.ndarray:
    arr = np.asarray(t, dtype=np.float64)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError(f"probability must lie in (0, 1), got {t!r}")
    return arr


# ---------------------------------------------------------------------------
# Standard normal helpers

def std_normal_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=np.float64) / _SQRT2)


def std_normal_sf(z):
    return 0.5 * erfc(np.asarray(z, dtype=np.float64) / _SQRT2)


def std_normal_pdf(z):
    z = np.asarray(z, dtype=np.float64)
    return np.exp(-0.5 * z * z - _LOG_SQRT_2PI)


# Acklam's rational approximation, relative error ~1.2e-9.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _lower_std_quantile(t: np.ndarray) -> np.ndarray:
    """Standard normal quantile for t in (0, 0.5]."""
    x = np.empty_like(t)
    tail = t < _P_LOW
    if tail.any():
        q = np.sqrt(-2.0 * np.log(t[tail]))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        x[tail] = num / den
    mid = ~tail
    if mid.any():
        q = t[mid] - 0.5
        r = q * q
        num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
        den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        x[mid] = num / den
    for _ in range(2):
        x = x - (std_normal_cdf(x) - t) / std_normal_pdf(x)
    return x


def std_normal_quantile(t):
    """Inverse standard normal CDF; two Newton steps after Acklam's start."""
    t = _check_open_unit(t)
    flat = np.atleast_1d(t).astype(np.float64)
    out = np.empty_like(flat)
    low = flat <= 0.5
    out[low] = _lower_std_quantile(flat[low])
    # 1 - t is exact for t >= 0.5
    out[~low] = -_lower_std_quantile(1.0 - flat[~low])
    return out.reshape(t.shape) if t.ndim else out[0]


# ---------------------------------------------------------------------------
# Normal

@dataclasses.dataclass(frozen=True)
class NormalParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma!r}")
        if not math.isfinite(self.mu):
            raise DomainError(f"mu must be finite, got {self.mu!r}")

    def cdf(self, x):
        return _scalar_or_array(std_normal_cdf((np.asarray(x) - self.mu) / self.sigma), x)

    def sf(self, x):
        return _scalar_or_array(std_normal_sf((np.asarray(x) - self.mu) / self.sigma), x)

    def pdf(self, x):
        return _scalar_or_array(std_normal_pdf((np.asarray(x) - self.mu) / self.sigma) / self.sigma, x)

    def quantile(self, t):
        return self.mu + self.sigma * std_normal_quantile(t)

    def upper_quantile(self, u):
        return self.mu - self.sigma * std_normal_quantile(u)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.normal(self.mu, self.sigma, size=n)


def normal_cdf(x, p: NormalParams):
    """Phi((x - mu) / sigma) via erfc, accurate in relative terms deep into the tail."""
    return p.cdf(x)


def normal_quantile(t, p: NormalParams):
    return p.quantile(t)


def fit_normal(samples) -> NormalParams:
    """Maximum-likelihood Normal fit (sigma divides by n, not n - 1)."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 2:
        raise DegenerateSampleError(f"need at least 2 samples to fit a Normal, got {x.size}")
    mu = float(np.mean(x))
    var = float(np.mean((x - mu) ** 2))
    if not var > 0:
        raise DegenerateSampleError("sample variance is zero")
    return NormalParams(mu, math.sqrt(var))


# ---------------------------------------------------------------------------
# Empirical

@dataclasses.dataclass(frozen=True)
class EmpiricalDistribution:
    """Right-continuous step CDF of a finite sample."""

    sorted_values: np.ndarray

    def __post_init__(self):
        vals = np.sort(np.asarray(self.sorted_values, dtype=np.float64).ravel())
        if vals.size == 0:
            raise EmptySampleError("empirical distribution needs at least one value")
        vals.setflags(write=False)
        object.__setattr__(self, "sorted_values", vals)

    @property
    def n(self) -> int:
        return self.sorted_values.size

    def count_le(self, x) -> np.ndarray:
        return _backend.count_le(self.sorted_values, np.atleast_1d(x))

    def cdf(self, x):
        out = self.count_le(x) / self.n
        return _scalar_or_array(out if np.ndim(x) else out[0], x)

    def sf(self, x):
        out = (self.n - self.count_le(x)) / self.n
        return _scalar_or_array(out if np.ndim(x) else out[0], x)

    def quantile(self, t):
        """Generalized inverse: smallest sample value v with cdf(v) >= t."""
        t = _check_open_unit(t)
        idx = np.ceil(np.atleast_1d(t) * self.n).astype(np.int64) - 1
        out = self.sorted_values[np.clip(idx, 0, self.n - 1)]
        return out.reshape(t.shape) if t.ndim else float(out[0])

    def upper_quantile(self, u):
        return self.quantile(1.0 - _check_open_unit(u))


def ecdf_eval(d: EmpiricalDistribution, x):
    """Fraction of the sample that is <= x."""
    return d.cdf(x)


# ---------------------------------------------------------------------------
# Monotone inversion shared by Gamma and GMM quantiles

def _invert(cdf_fn, sf_fn, pdf_fn, target, upper: bool, lo, hi, x0, log_scale: bool):
    """Vectorized safeguarded Newton solve of cdf(x) = t (or sf(x) = u).

    Works on ``log cdf`` / ``-log sf`` so tail targets converge in relative
    terms. With ``log_scale`` the unknown is ``y = log x`` (positive support).
    Bisection takes over whenever a Newton step leaves the bracket.
    """
    tgt = np.log(target)
    to_x = np.exp if log_scale else (lambda y: y)

    def g(y):
        x = to_x(y)
        with np.errstate(divide="ignore"):
            if upper:
                val = -(np.log(sf_fn(x)) - tgt)
            else:
                val = np.log(cdf_fn(x)) - tgt
        return val, x

    def dg(y, x):
        dens = pdf_fn(x) * (x if log_scale else 1.0)
        denom = sf_fn(x) if upper else cdf_fn(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return dens / denom

    lo = np.asarray(lo, dtype=np.float64).copy()
    hi = np.asarray(hi, dtype=np.float64).copy()
    y = np.clip(np.asarray(x0, dtype=np.float64), lo, hi)
    for _ in range(200):
        val, x = g(y)
        done = np.abs(val) < 1e-15
        lo = np.where(val < 0, y, lo)
        hi = np.where(val > 0, y, hi)
        if np.all(done | (hi - lo <= 4e-16 * np.maximum(1.0, np.abs(y)))):
            break
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            step = y - val / dg(y, x)
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi)
        y = np.where(done, y, np.where(bad, 0.5 * (lo + hi), step))
    return to_x(y)


# ---------------------------------------------------------------------------
# Gamma

@dataclasses.dataclass(frozen=True)
class GammaParams:
    shape_k: float
    scale_theta: float

    def __post_init__(self):
        if not (self.shape_k > 0 and self.scale_theta > 0):
            raise DomainError(f"Gamma parameters must be positive, got {self!r}")

    def cdf(self, x):
        return gamma_cdf(x, self)

    def sf(self, x):
        return gamma_sf(x, self)

    def pdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        k, th = self.shape_k, self.scale_theta
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(
                x > 0,
                np.exp((k - 1) * np.log(np.where(x > 0, x, 1.0)) - x / th - gammaln(k) - k * math.log(th)),
                0.0,
            )
        return _scalar_or_array(out, x)

    def quantile(self, t):
        return gamma_quantile(t, self)

    def upper_quantile(self, u):
        return gamma_quantile(u, self, upper=True)

    @property
    def mean(self) -> float:
        return self.shape_k * self.scale_theta


def _gamma_pq(x, p: GammaParams):
    x = np.asarray(x, dtype=np.float64)
    lower, upper = _backend.gammainc_pq(p.shape_k, np.atleast_1d(x).ravel() / p.scale_theta)
    return lower.reshape(x.shape), upper.reshape(x.shape)


def gamma_cdf(x, p: GammaParams):
    """Regularized lower incomplete gamma P(k, x / theta); 0 for x <= 0."""
    return _scalar_or_array(_gamma_pq(x, p)[0], x)


def gamma_sf(x, p: GammaParams):
    return _scalar_or_array(_gamma_pq(x, p)[1], x)


def gamma_quantile(t, p: GammaParams, upper: bool = False):
    """Solve gamma_cdf(x) = t (or gamma_sf(x) = t with ``upper=True``)."""
    t = _check_open_unit(t)
    flat = np.atleast_1d(t).astype(np.float64)
    k, th = p.shape_k, p.scale_theta
    # Start from the small-x series x^k / Gamma(k + 1) in the lower tail and a
    # Wilson-Hilferty guess elsewhere.
    lower_prob = 1.0 - flat if upper else flat
    z = std_normal_quantile(np.clip(lower_prob, 1e-300, 1 - 1e-16))
    wh = k * np.maximum(1.0 - 1.0 / (9 * k) + z / (3 * math.sqrt(k)), 1e-3) ** 3
    small = np.exp((np.log(np.maximum(lower_prob, 1e-300)) + gammaln(k + 1)) / k)
    guess = np.where(lower_prob < 0.1, np.minimum(small, wh), wh)
    hi = np.log(np.maximum(k + 50.0 * math.sqrt(k) + 800.0, 2 * guess))
    lo = np.full_like(flat, -745.0)
    x = _invert(
        lambda v: _backend.gammainc_pq(k, v)[0],
        lambda v: _backend.gammainc_pq(k, v)[1],
        lambda v: GammaParams(k, 1.0).pdf(v),
        flat, upper, lo, hi, np.log(guess), log_scale=True,
    )
    out = x * th
    return out.reshape(t.shape) if t.ndim else float(out[0])


def sample_gamma(p: GammaParams, n: int, seed) -> np.ndarray:
    """Draw ``n`` Gamma variates with the Marsaglia-Tsang squeeze sampler.

    Shapes below 1 use the boost ``G(k) = G(k + 1) * U**(1/k)``. ``seed`` is
    an int, SeedSequence or Generator; output depends only on it.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    k = p.shape_k
    boost = k < 1
    kk = k + 1.0 if boost else k
    d = kk - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        m = int((n - filled) * 1.05) + 16
        z = rng.standard_normal(m)
        u = rng.random(m)
        v = (1.0 + c * z) ** 3
        ok = v > 0
        with np.errstate(invalid="ignore", divide="ignore"):
            squeeze = u < 1.0 - 0.0331 * z**4
            full = np.log(u) < 0.5 * z * z + d * (1.0 - v + np.log(v))
        acc = ok & (squeeze | full)
        draws = (d * v)[acc][: n - filled]
        out[filled:filled + draws.size] = draws
        filled += draws.size
    if boost:
        out *= rng.random(n) ** (1.0 / k)
    return out * p.scale_theta


# ---------------------------------------------------------------------------
# Gaussian mixture

@dataclasses.dataclass(frozen=True)
class GmmParams:
    """1-D Gaussian mixture.

    ``floored`` records that the variance floor was hit during EM;
    ``loglik_history`` is the per-iteration log-likelihood of the chosen run.
    """

    weights: np.ndarray
    means: np.ndarray
    sigmas: np.ndarray
    loglik: float = float("nan")
    n_iter: int = 0
    converged: bool = True
    floored: bool = False
    loglik_history: tuple[float, ...] = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        mu = np.asarray(self.means, dtype=np.float64).ravel()
        s = np.asarray(self.sigmas, dtype=np.float64).ravel()
        if not (w.size == mu.size == s.size) or w.size == 0:
            raise DomainError("weights, means and sigmas must have equal non-zero length")
        if w.size > MAX_COMPONENTS:
            raise DomainError(f"at most {MAX_COMPONENTS} components, got {w.size}")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
            raise DomainError("weights must be positive and sum to 1")
        if np.any(s <= 0):
            raise DomainError("component sigmas must be positive")
        for name, arr in (("weights", w), ("means", mu), ("sigmas", s)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.weights.size

    @property
    def components(self) -> list[tuple[float, float, float]]:
        return [(float(w), float(m), float(s)) for w, m, s in zip(self.weights, self.means, self.sigmas)]

    def _z(self, x):
        x = np.asarray(x, dtype=np.float64)
        return (x[..., None] - self.means) / self.sigmas

    def cdf(self, x):
        return _scalar_or_array(std_normal_cdf(self._z(x)) @ self.weights, x)

    def sf(self, x):
        return _scalar_or_array(std_normal_sf(self._z(x)) @ self.weights, x)

    def pdf(self, x):
        return _scalar_or_array(std_normal_pdf(self._z(x)) @ (self.weights / self.sigmas), x)

    def _invert(self, t, upper):
        t = _check_open_unit(t)
        flat = np.atleast_1d(t).astype(np.float64)
        z = std_normal_quantile(flat)
        span = np.sqrt(np.sum(self.weights * (self.sigmas**2 + self.means**2)) - np.dot(self.weights, self.means) ** 2)
        center = float(np.dot(self.weights, self.means))
        guess = center + (-z if upper else z) * span
        lo = np.full_like(flat, float(np.min(self.means - 40 * self.sigmas)))
        hi = np.full_like(flat, float(np.max(self.means + 40 * self.sigmas)))
        x = _invert(self.cdf, self.sf, self.pdf, flat, upper, lo, hi, guess, log_scale=False)
        return x.reshape(t.shape) if t.ndim else float(x[0])

    def quantile(self, t):
        return self._invert(t, upper=False)

    def upper_quantile(self, u):
        return self._invert(u, upper=True)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        return rng.normal(self.means[comp], self.sigmas[comp])


def _em_run(x, means, sigmas, weights, max_iter, tol):
    n = x.size
    var = sigmas**2
    history = []
    floored = False
    prev = -np.inf
    converged = False
    for it in range(max_iter + 1):
        log_dens = (
            np.log(weights)
            - 0.5 * np.log(2 * np.pi * var)
            - 0.5 * (x[:, None] - means) ** 2 / var
        )
        top = log_dens.max(axis=1, keepdims=True)
        lse = top[:, 0] + np.log(np.exp(log_dens - top).sum(axis=1))
        ll = float(lse.sum())
        history.append(ll)
        # tolerance on the per-sample mean so it does not scale with n
        if abs(ll - prev) < tol * n:
            converged = True
            break
        if it == max_iter:
            break
        prev = ll
        resp = np.exp(log_dens - lse[:, None])
        nk = resp.sum(axis=0)
        alive = nk > 1e-12 * n
        safe = np.where(alive, nk, 1.0)
        new_means = np.where(alive, resp.T @ x / safe, means)
        new_var = np.where(alive, np.einsum("ij,ij->j", resp, (x[:, None] - new_means) ** 2) / safe, var)
        if np.any(new_var < VARIANCE_FLOOR) or not alive.all():
            floored = True
        means = new_means
        var = np.maximum(new_var, VARIANCE_FLOOR)
        weights = np.maximum(nk / n, 1e-300)
        weights = weights / weights.sum()
    return weights, means, np.sqrt(var), ll, it, converged, floored, history


def fit_gmm_1d(samples, n_components: int, seed=0, *, n_restarts: int = 5,
               max_iter: int = 500, tol: float = 1e-8) -> GmmParams:
    """Fit a 1-D Gaussian mixture by EM, keeping the best of several restarts.

    The first restart places means at equally spaced sample quantiles; the
    others draw the quantile levels at random from ``seed``. Every restart
    starts from sigma = sample sigma / n_components and equal weights.
    """
    if not 1 <= n_components <= MAX_COMPONENTS:
        raise DomainError(f"n_components must be in [1, {MAX_COMPONENTS}], got {n_components}")
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 10 * n_components:
        raise InsufficientDataError(f"need >= {10 * n_components} samples for {n_components} components, got {x.size}")
    spread = float(np.std(x))
    if not spread > 0:
        raise DegenerateSampleError("sample has zero spread")
    rng = np.random.default_rng(seed)
    best = None
    for r in range(n_restarts):
        if r == 0:
            levels = (np.arange(n_components) + 0.5) / n_components
        else:
            levels = np.sort(rng.uniform(size=n_components))
        means = np.quantile(x, levels)
        sigmas = np.full(n_components, spread / n_components)
        weights = np.full(n_components, 1.0 / n_components)
        run = _em_run(x, means, sigmas, weights, max_iter, tol)
        if best is None or run[3] > best[3]:
            best = run
    w, mu, s, ll, it, conv, floored, hist = best
    if np.any(s < math.sqrt(VARIANCE_FLOOR) * (1 - 1e-12)):
        raise DegenerateSampleError("a mixture component collapsed")
    return GmmParams(w, mu, s, ll, it, conv, floored, tuple(hist))
