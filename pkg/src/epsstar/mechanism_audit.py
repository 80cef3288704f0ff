"""Mechanism-level bound over an ensemble of model instances.

Averaging each model's FNR curve over the ensemble and plugging the mean into
the Epsilon* formula gives the mechanism-level bound ``eps_bar``. Because the
Epsilon* ratio is convex in the FNR, Jensen's inequality gives

    eps_bar <= log mean_j exp(eps*_j)

which :func:`jensen_check` verifies numerically.
"""
from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence

import numpy as np

from .distfit import fit_normal
from .epsilon_core import RateCurve, epsilon_star_discrete
from .errors import DomainError, EmptyEnsembleError
from .loss_model import transform_losses


@dataclasses.dataclass(frozen=True)
class EnsembleRates:
    """FNR curves of several model instances on one shared FPR grid.

    ``per_model_fnr[j, i]`` is model j's FNR at ``t_grid[i]``.
    """

    t_grid: np.ndarray
    per_model_fnr: np.ndarray
    source: str = "parametric"

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=np.float64).ravel()
        fnr = np.atleast_2d(np.asarray(self.per_model_fnr, dtype=np.float64))
        if fnr.shape[0] == 0 or fnr.size == 0:
            raise EmptyEnsembleError("ensemble has no model rows")
        if fnr.shape[1] != t.size:
            raise DomainError(f"FNR rows have {fnr.shape[1]} columns but t_grid has {t.size} levels")
        if np.any(~((fnr >= 0) & (fnr <= 1))) or np.any(~((t >= 0) & (t <= 1))):
            raise DomainError("rates must lie in [0, 1]")
        object.__setattr__(self, "t_grid", t)
        object.__setattr__(self, "per_model_fnr", fnr)

    @property
    def n_models(self) -> int:
        return self.per_model_fnr.shape[0]

    @property
    def mean_fnr(self) -> np.ndarray:
        # Contiguous rows of the transpose so numpy's pairwise summation runs
        # along the model axis in a fixed order.
        return np.ascontiguousarray(self.per_model_fnr.T).mean(axis=1)

    def curve(self, fnr) -> RateCurve:
        return RateCurve(self.t_grid, fnr, self.source)


def ensemble_from_distributions(pairs, t_grid) -> EnsembleRates:
    """Build an ensemble from ``(F_pop, F_tr)`` fitted-distribution pairs."""
    t = np.asarray(t_grid, dtype=np.float64)
    rows = []
    for F_pop, F_tr in pairs:
        eta = np.minimum.accumulate(np.asarray(F_tr.sf(F_pop.quantile(t)), dtype=np.float64))
        rows.append(eta)
    if not rows:
        raise EmptyEnsembleError("no model instances supplied")
    return EnsembleRates(t, np.vstack(rows))


def ensemble_from_losses(loss_pairs, t_grid, alpha: float = 1.0) -> EnsembleRates:
    """Transform and Normal-fit each model's (train, pop) losses, then tabulate FNRs."""
    fits = []
    for train, pop in loss_pairs:
        tr, po = transform_losses(train, pop, alpha)
        fits.append((fit_normal(po.values), fit_normal(tr.values)))
    return ensemble_from_distributions(fits, t_grid)


def per_model_epsilon_star(ensemble: EnsembleRates, delta: float) -> list[float]:
    return [epsilon_star_discrete(ensemble.curve(row), delta).epsilon_star
            for row in ensemble.per_model_fnr]


def epsilon_bar(ensemble: EnsembleRates, delta: float) -> float:
    """Epsilon* formula applied to the ensemble-mean FNR curve."""
    if ensemble.n_models == 0:
        raise EmptyEnsembleError("ensemble has no model rows")
    return epsilon_star_discrete(ensemble.curve(ensemble.mean_fnr), delta).epsilon_star


def log_mean_exp(values: Sequence[float]) -> float:
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyEnsembleError("no values")
    top = float(np.max(v))
    if not math.isfinite(top):
        return top
    return top + math.log(float(np.mean(np.exp(v - top))))


def jensen_check(per_model_eps: Sequence[float], eps_bar: float,
                 tol: float = 1e-9) -> tuple[float, bool]:
    """Return ``(log mean exp(eps*), eps_bar <= bound + tol)``."""
    bound = log_mean_exp(per_model_eps)
    return bound, bool(eps_bar <= bound + tol)
