"""Epsilon*: empirical privacy-loss lower bounds from FPR/FNR curves.

For a threshold attack that flags a record as "training" when its loss is at
or below ``q_t`` (the t-quantile of the population losses), ``t`` is the
false positive rate and ``eta`` the false negative rate. Epsilon* is

    log max(1, max_i max((1-delta-eta_i)/t_i, (1-delta-t_i)/eta_i,
                         (eta_i-delta)/(1-t_i), (t_i-delta)/(1-eta_i)))

The four ratios are called branches m1..m4 throughout.

Three estimators are provided: on an explicit curve (discrete), on empirical
CDFs of two loss samples (ecdf), and as a supremum over all thresholds of
two fitted continuous distributions (parametric).
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import _backend
from .config import AuditConfig, check_delta
from .distfit import EmpiricalDistribution, FittedDistribution, fit_normal
from .errors import DomainError, EmptyCurveError
from .loss_model import LossSet, TransformedLossSet, _as_values, transform_losses

BRANCHES = ("m1", "m2", "m3", "m4")
UNIT = "unit"
SOURCES = ("ecdf", "parametric", "oracle")
# Smallest probability the parametric search will resolve when delta is 0.
PROB_FLOOR = 1e-300
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclasses.dataclass(frozen=True)
class RatePair:
    t: float
    eta: float


@dataclasses.dataclass(frozen=True)
class RateCurve:
    """FPR levels ``t`` with matching FNRs ``eta``.

    ``t_c`` and ``eta_c`` hold ``1 - t`` and ``1 - eta``. Callers that know
    the complements exactly (counts, survival functions) should pass them;
    otherwise they are computed by subtraction.
    """

    t: np.ndarray
    eta: np.ndarray
    source: str = "parametric"
    t_c: np.ndarray | None = None
    eta_c: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.float64).ravel()
        eta = np.asarray(self.eta, dtype=np.float64).ravel()
        if t.shape != eta.shape:
            raise DomainError("t and eta must have the same length")
        if self.source not in SOURCES:
            raise DomainError(f"unknown curve source {self.source!r}")
        for name, arr in (("t", t), ("eta", eta)):
            if np.any(~((arr >= 0) & (arr <= 1))):
                raise DomainError(f"{name} values must lie in [0, 1]")
        dt = np.diff(t)
        if self.source == "ecdf":
            if np.any(dt < 0):
                raise DomainError("t must be non-decreasing")
        else:
            if np.any(dt <= 0):
                raise DomainError("t must be strictly increasing")
            if np.any(np.diff(eta) > 0):
                raise DomainError("eta must be non-increasing along the curve")
        t_c = 1.0 - t if self.t_c is None else np.asarray(self.t_c, dtype=np.float64).ravel()
        eta_c = 1.0 - eta if self.eta_c is None else np.asarray(self.eta_c, dtype=np.float64).ravel()
        if t_c.shape != t.shape or eta_c.shape != t.shape:
            raise DomainError("complement arrays must match t in length")
        for name, arr in (("t", t), ("eta", eta), ("t_c", t_c), ("eta_c", eta_c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.t.size

    @property
    def pairs(self) -> list[RatePair]:
        return [RatePair(float(a), float(b)) for a, b in zip(self.t, self.eta)]


@dataclasses.dataclass(frozen=True)
class EpsilonStarResult:
    epsilon_star: float
    delta: float
    method: str
    argmax_branch: str
    argmax_t: float
    clamp_window: tuple[float, float]
    diagnostics: dict = dataclasses.field(default_factory=dict)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["clamp_window"] = list(self.clamp_window)
        return out


def _branch_name(b: int) -> str:
    return BRANCHES[b] if b >= 0 else UNIT


def epsilon_star_discrete(curve: RateCurve, delta: float = 0.0) -> EpsilonStarResult:
    """Epsilon* over the finite set of (t, eta) pairs in ``curve``.

    A ratio with a zero denominator is skipped rather than treated as an error.
    """
    delta = check_delta(delta)
    if len(curve) == 0:
        raise EmptyCurveError("rate curve is empty")
    best, idx, branch = _backend.discrete_max(curve.t, curve.t_c, curve.eta, curve.eta_c, delta)
    if best > 1.0:
        eps = math.log(best)
        name = _branch_name(branch)
    else:
        eps = 0.0
        name = UNIT
    zero_den = int(np.count_nonzero(curve.t == 0) + np.count_nonzero(curve.eta == 0)
                   + np.count_nonzero(curve.t_c == 0) + np.count_nonzero(curve.eta_c == 0))
    return EpsilonStarResult(
        epsilon_star=eps,
        delta=delta,
        method="discrete",
        argmax_branch=name,
        argmax_t=float(curve.t[idx]) if idx >= 0 else float("nan"),
        clamp_window=(0.0, 1.0),
        diagnostics={
            "n_pairs": len(curve),
            "n_zero_denominators": zero_den,
            "best_ratio": best if math.isfinite(best) else None,
            "best_ratio_branch": _branch_name(branch),
        },
    )


def rate_curve_from_distributions(F_pop: FittedDistribution, F_tr: FittedDistribution,
                                  t_grid, source: str = "parametric") -> RateCurve:
    """Pairs ``(t, 1 - F_tr(F_pop^-1(t)))`` for each level in ``t_grid``."""
    t = np.asarray(t_grid, dtype=np.float64).ravel()
    if t.size and (np.any(np.diff(t) <= 0)):
        raise DomainError("t_grid must be strictly increasing")
    q = np.asarray(F_pop.quantile(t), dtype=np.float64)
    eta = np.asarray(F_tr.sf(q), dtype=np.float64)
    eta_c = np.asarray(F_tr.cdf(q), dtype=np.float64)
    # Guard against +/-1 ulp wiggles of monotone CDFs.
    eta = np.minimum.accumulate(eta)
    eta_c = np.maximum.accumulate(eta_c)
    return RateCurve(t, eta, source, t_c=1.0 - t, eta_c=eta_c)


def clamp_curve(curve: RateCurve, lo: float, hi: float) -> RateCurve:
    """Keep only pairs with both rates inside the open window (lo, hi).

    The upper bound is checked on the complements so pairs within one ulp of
    1 - delta are judged with full precision.
    """
    keep = ((curve.t > lo) & (curve.t_c > 1.0 - hi) & (curve.eta > lo) & (curve.eta_c > 1.0 - hi))
    return RateCurve(curve.t[keep], curve.eta[keep], curve.source,
                     t_c=curve.t_c[keep], eta_c=curve.eta_c[keep])


def default_t_grid(size: int, delta: float = 0.0, floor: float = 1e-9) -> np.ndarray:
    """Strictly increasing t-levels in (delta, 1 - delta), dense near both ends."""
    lo = max(delta, floor) * (1 + 1e-9)
    half = max(size // 2, 1)
    left = np.geomspace(lo, 0.5, half)
    right = 1.0 - left[::-1]
    return np.unique(np.concatenate([left, right]))


def epsilon_star_ecdf(train, pop, delta: float = 0.0, grid_size: int = 2_000_000,
                      clamp: tuple[float, float] = (0.001, 0.999)) -> EpsilonStarResult:
    """Epsilon* from the empirical CDFs of two loss samples.

    Thresholds are ``grid_size / 2`` equally spaced quantiles of each sample;
    pairs whose FPR or FNR falls outside the open ``clamp`` window are
    dropped before maximizing.
    """
    delta = check_delta(delta)
    tr = EmpiricalDistribution(_as_values(train))
    po = EmpiricalDistribution(_as_values(pop))
    half = max(int(grid_size) // 2, 1)
    levels = (np.arange(half) + 0.5) / half
    thresholds = np.unique(np.concatenate([tr.quantile(levels), po.quantile(levels)]))
    c_pop = po.count_le(thresholds)
    c_tr = tr.count_le(thresholds)
    t = c_pop / po.n
    t_c = (po.n - c_pop) / po.n
    eta = (tr.n - c_tr) / tr.n
    eta_c = c_tr / tr.n
    lo, hi = clamp
    keep = (t > lo) & (t < hi) & (eta > lo) & (eta < hi)
    n_kept = int(np.count_nonzero(keep))
    if n_kept == 0:
        raise EmptyCurveError(
            f"no (FPR, FNR) pairs inside {clamp}; samples too small or indistinguishable"
        )
    curve = RateCurve(t[keep], eta[keep], "ecdf", t_c=t_c[keep], eta_c=eta_c[keep])
    res = epsilon_star_discrete(curve, delta)
    diag = dict(res.diagnostics)
    diag.update(grid_size=int(grid_size), n_thresholds=int(thresholds.size),
                n_clamped=int(thresholds.size - n_kept), n_train=tr.n, n_pop=po.n)
    return dataclasses.replace(res, method="ecdf", clamp_window=(float(lo), float(hi)), diagnostics=diag)


def _log_fractions(F_pop, F_tr, x, delta):
    """Log of the four branch ratios at thresholds ``x``; shape (4, len(x)).

    With Fp, Sp, Ft, St the population/training CDF and survival values:
    m1 = (Ft - d)/Fp, m2 = (Sp - d)/St, m3 = (St - d)/Sp, m4 = (Fp - d)/Ft.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    fp = np.asarray(F_pop.cdf(x), dtype=np.float64)
    sp = np.asarray(F_pop.sf(x), dtype=np.float64)
    ft = np.asarray(F_tr.cdf(x), dtype=np.float64)
    st = np.asarray(F_tr.sf(x), dtype=np.float64)
    num = np.stack([ft - delta, sp - delta, st - delta, fp - delta])
    den = np.stack([fp, st, sp, ft])
    ok = (num > 0) & (den > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(ok, np.log(np.where(ok, num, 1.0)) - np.log(np.where(ok, den, 1.0)), -np.inf)
    return out


def _golden_max(F_pop, F_tr, delta, a, c, tol_t, max_iter=300):
    """Golden-section maximization of each branch on its own bracket.

    ``a``/``c`` are length-4 arrays (one bracket per branch). Stops once every
    probability involved changes by less than ``tol_t`` in relative terms
    across the bracket, or the bracket is at floating resolution.
    """
    a = a.astype(np.float64).copy()
    c = c.astype(np.float64).copy()
    rows = np.arange(4)

    def f(x):
        return _log_fractions(F_pop, F_tr, x, delta)[rows, rows]

    x1 = c - _GOLDEN * (c - a)
    x2 = a + _GOLDEN * (c - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        probs = np.stack([
            F_pop.cdf(np.stack([a, c])), F_pop.sf(np.stack([a, c])),
            F_tr.cdf(np.stack([a, c])), F_tr.sf(np.stack([a, c])),
        ])
        with np.errstate(divide="ignore", invalid="ignore"):
            rel = np.abs(np.log(probs[:, 0]) - np.log(probs[:, 1]))
        rel = np.where(np.isfinite(rel), rel, 0.0)
        tight = np.all(rel < tol_t, axis=0) | (c - a <= 4 * np.spacing(np.maximum(np.abs(a), np.abs(c))))
        if tight.all():
            break
        left = f1 >= f2
        # left: maximum lies in [a, x2]; otherwise in [x1, c].
        na = np.where(left, a, x1)
        nc = np.where(left, x2, c)
        nx1 = np.where(left, nc - _GOLDEN * (nc - na), x2)
        nx2 = np.where(left, x1, na + _GOLDEN * (nc - na))
        fp = f(np.where(left, nx1, nx2))
        nf1 = np.where(left, fp, f2)
        nf2 = np.where(left, f1, fp)
        a, c = np.where(tight, a, na), np.where(tight, c, nc)
        x1, x2 = np.where(tight, x1, nx1), np.where(tight, x2, nx2)
        f1, f2 = np.where(tight, f1, nf1), np.where(tight, f2, nf2)
    xs = np.stack([a, x1, x2, c])
    vals = np.stack([f(xi) for xi in xs])
    pick = np.argmax(vals, axis=0)
    return xs[pick, rows], vals[pick, rows]


def epsilon_star_parametric(F_pop: FittedDistribution, F_tr: FittedDistribution,
                            delta: float, *, n_scan: int = 10_000,
                            tol_t: float = 1e-12) -> EpsilonStarResult:
    """Supremum form of Epsilon* for two continuous distributions.

    Thresholds are restricted so that both the FPR and the FNR lie in
    ``[delta, 1 - delta]`` (for ``delta = 0`` a floor of 1e-300 stands in).
    Each branch is scanned on ``n_scan`` thresholds taken at log-spaced tail
    levels of both distributions, then refined by golden-section search
    around the best scan point. All ratios are evaluated in log space from
    directly computed CDF and survival values.
    """
    delta = check_delta(delta)
    window = (delta, 1.0 - delta)
    floor = max(delta, PROB_FLOOR)

    def unit(diag):
        return EpsilonStarResult(0.0, delta, "parametric", UNIT, 0.5, window, diag)

    if floor >= 0.5:
        return unit({"window_empty": True})
    x_lo = max(float(F_pop.quantile(floor)), float(F_tr.quantile(floor)))
    x_hi = min(float(F_pop.upper_quantile(floor)), float(F_tr.upper_quantile(floor)))
    if not x_lo < x_hi:
        return unit({"window_empty": True})

    levels = np.geomspace(floor, 0.5, max(n_scan // 4, 2))
    cand = np.concatenate([
        np.atleast_1d(F_pop.quantile(levels)), np.atleast_1d(F_pop.upper_quantile(levels)),
        np.atleast_1d(F_tr.quantile(levels)), np.atleast_1d(F_tr.upper_quantile(levels)),
    ])
    inside = (cand >= x_lo) & (cand <= x_hi)
    xs = np.unique(np.concatenate([cand[inside], [x_lo, x_hi]]))
    lf = _log_fractions(F_pop, F_tr, xs, delta)

    idx = np.argmax(lf, axis=1)
    lo_i = np.maximum(idx - 1, 0)
    hi_i = np.minimum(idx + 1, xs.size - 1)
    x_ref, v_ref = _golden_max(F_pop, F_tr, delta, xs[lo_i], xs[hi_i], tol_t)
    scan_best = lf[np.arange(4), idx]
    use_ref = v_ref > scan_best
    x_best = np.where(use_ref, x_ref, xs[idx])
    v_best = np.where(use_ref, v_ref, scan_best)

    # Each ratio tends to 1 - delta at one end of (0, 1).
    log_limit = math.log1p(-delta)
    m_log = np.maximum(v_best, log_limit)
    b = int(np.argmax(m_log))
    diag = {
        "n_scan_points": int(xs.size),
        "n_outside_window": int(cand.size - np.count_nonzero(inside)),
        "log_m": {name: float(v) for name, v in zip(BRANCHES, m_log)},
        "threshold": float(x_best[b]),
    }
    if m_log[b] > 0:
        t_star = float(F_pop.cdf(x_best[b]))
        return EpsilonStarResult(float(m_log[b]), delta, "parametric", BRANCHES[b],
                                 min(max(t_star, delta), 1.0 - delta), window, diag)
    t_star = float(F_pop.cdf(x_best[b])) if np.isfinite(v_best[b]) else 0.5
    return EpsilonStarResult(0.0, delta, "parametric", UNIT, min(max(t_star, delta), 1.0 - delta), window, diag)


def epsilon_star_audit(train_losses, pop_losses, config: AuditConfig | None = None) -> EpsilonStarResult:
    """End-to-end audit of one model instance from its two loss samples.

    The parametric method transforms both loss sets with shared bounds, fits a
    Normal to each and takes the supremum. ``discrete`` evaluates the same
    fits on a finite t-grid of ``config.grid_size`` levels; ``ecdf`` works on
    the raw losses.
    """
    config = config or AuditConfig()
    train = train_losses if isinstance(train_losses, LossSet) else LossSet(train_losses, "training")
    pop = pop_losses if isinstance(pop_losses, LossSet) else LossSet(pop_losses, "population")
    delta = config.resolve_delta(len(train))
    base = {"n_train": len(train), "n_pop": len(pop)}

    if config.method == "ecdf":
        res = epsilon_star_ecdf(train, pop, delta, config.grid_size, tuple(config.ecdf_clamp))
        return dataclasses.replace(res, diagnostics={**res.diagnostics, **base})

    tr_t, po_t = transform_losses(train, pop, config.alpha_shift)
    fit_tr = fit_normal(tr_t.values)
    fit_po = fit_normal(po_t.values)
    base.update(
        norm_min=tr_t.norm_min, norm_max=tr_t.norm_max, shift_alpha=tr_t.shift_alpha,
        fit_train={"mu": fit_tr.mu, "sigma": fit_tr.sigma},
        fit_pop={"mu": fit_po.mu, "sigma": fit_po.sigma},
    )
    if config.method == "discrete":
        curve = rate_curve_from_distributions(fit_po, fit_tr, default_t_grid(config.grid_size, delta))
        # same window on both rates as the parametric supremum
        kept = clamp_curve(curve, delta, 1.0 - delta)
        if len(kept) == 0:
            raise EmptyCurveError("no grid pair has both rates inside (delta, 1 - delta)")
        res = epsilon_star_discrete(kept, delta)
        res = dataclasses.replace(res, clamp_window=(delta, 1.0 - delta), diagnostics={
            **res.diagnostics, "n_clamped": len(curve) - len(kept)})
    else:
        res = epsilon_star_parametric(fit_po, fit_tr, delta)
    return dataclasses.replace(res, diagnostics={**res.diagnostics, **base})
