"""Monte-Carlo validation of the Epsilon* estimators on known Gamma losses.

Training losses are drawn from Gamma(k1, theta1) and population losses from
Gamma(k1 + d, theta1). For every (d, n, repeat) cell three estimates are
recorded:

* ``true_cdf``   -- supremum over the exact generating CDFs (no sampling),
* ``ecdf``       -- empirical CDFs with the (0.001, 0.999) clamp,
* ``parametric`` -- transform + Normal fit, the same pipeline as a real audit.
"""
from __future__ import annotations

import dataclasses
import functools
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import AuditConfig, ECDF_CLAMP, check_delta
from .distfit import GammaParams, sample_gamma
from .epsilon_core import epsilon_star_audit, epsilon_star_ecdf, epsilon_star_parametric
from .errors import DomainError

METHODS = ("true_cdf", "ecdf", "parametric")


@dataclasses.dataclass(frozen=True)
class SimConfig:
    k1: float = 2.0
    theta1: float = 5.0
    d_values: tuple[float, ...] = (0, 1, 2, 3)
    n_values: tuple[int, ...] = (1_000, 10_000, 100_000)
    repeats: int = 10
    delta: float = 1e-5
    seed: int = 0
    ecdf_grid: int = 2_000_000
    ecdf_clamp: tuple[float, float] = ECDF_CLAMP

    def __post_init__(self):
        object.__setattr__(self, "d_values", tuple(self.d_values))
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "ecdf_clamp", tuple(self.ecdf_clamp))
        check_delta(self.delta)
        if not (self.k1 > 0 and self.theta1 > 0):
            raise DomainError("k1 and theta1 must be positive")
        if any(d < 0 for d in self.d_values) or not self.d_values:
            raise DomainError("d_values must be a non-empty list of non-negative shifts")
        if any(n < 1 for n in self.n_values) or not self.n_values:
            raise DomainError("n_values must be a non-empty list of positive sizes")
        if self.repeats < 1:
            raise DomainError("repeats must be >= 1")
        if self.ecdf_grid < 2:
            raise DomainError("ecdf_grid must be >= 2")

    def grid_for(self, n: int) -> int:
        """ECDF threshold count, scaled down for small samples to bound runtime."""
        return min(self.ecdf_grid, 200 * n)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("d_values", "n_values", "ecdf_clamp"):
            d[key] = list(d[key])
        return d


@dataclasses.dataclass(frozen=True)
class SimResult:
    """Per-repeat estimates plus mean/std per (d, n, method).

    ``rows`` holds one dict per (d, n, method, repeat) in a fixed order.
    """

    config: SimConfig
    rows: tuple[dict, ...]

    def values(self, d, n, method) -> np.ndarray:
        return np.array([r["epsilon_star"] for r in self.rows
                         if r["d"] == d and r["n"] == n and r["method"] == method])

    def mean(self, d, n, method) -> float:
        return float(np.mean(self.values(d, n, method)))

    def std(self, d, n, method) -> float:
        return float(np.std(self.values(d, n, method)))

    def summary(self) -> list[dict]:
        out = []
        for d in self.config.d_values:
            for n in self.config.n_values:
                for m in METHODS:
                    v = self.values(d, n, m)
                    out.append({"d": d, "n": n, "method": m, "mean": float(np.mean(v)),
                                "std": float(np.std(v)), "values": [float(x) for x in v]})
        return out


def cell_seed(seed: int, d, n: int, repeat: int) -> np.random.SeedSequence:
    """Seed for one cell, independent of evaluation order."""
    # d may be fractional; scale to an integer key.
    return np.random.SeedSequence([int(seed), int(round(float(d) * 1_000_000)), int(n), int(repeat)])


@functools.lru_cache(maxsize=256)
def true_epsilon_star_gamma(k1: float, theta1: float, d: float, delta: float) -> float:
    """Epsilon* of Gamma(k1, theta1) training vs Gamma(k1 + d, theta1) population."""
    if d == 0:
        return 0.0
    res = epsilon_star_parametric(GammaParams(k1 + d, theta1), GammaParams(k1, theta1), delta)
    return res.epsilon_star


def _run_cell(cfg: SimConfig, d, n: int, repeat: int) -> list[dict]:
    train_seq, pop_seq = cell_seed(cfg.seed, d, n, repeat).spawn(2)
    train = sample_gamma(GammaParams(cfg.k1, cfg.theta1), n, train_seq)
    pop = sample_gamma(GammaParams(cfg.k1 + d, cfg.theta1), n, pop_seq)
    grid = cfg.grid_for(n)
    eps = {
        "true_cdf": true_epsilon_star_gamma(cfg.k1, cfg.theta1, d, cfg.delta),
        "ecdf": epsilon_star_ecdf(train, pop, cfg.delta, grid, cfg.ecdf_clamp).epsilon_star,
        "parametric": epsilon_star_audit(train, pop, AuditConfig(delta=cfg.delta)).epsilon_star,
    }
    return [
        {"d": d, "n": n, "method": m, "repeat": repeat, "epsilon_star": float(eps[m]),
         "ecdf_grid": grid if m == "ecdf" else None}
        for m in METHODS
    ]


def _cells(cfg: SimConfig):
    for d in cfg.d_values:
        for n in cfg.n_values:
            for r in range(cfg.repeats):
                yield d, n, r


def run_shift_experiment(cfg: SimConfig, workers: int = 1) -> SimResult:
    """Run every (d, n, repeat) cell; rows come back in cell order regardless of ``workers``."""
    cells = list(_cells(cfg))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell, [cfg] * len(cells), *zip(*cells)))
    else:
        chunks = [_run_cell(cfg, *c) for c in cells]
    rows = tuple(row for chunk in chunks for row in chunk)
    return SimResult(cfg, rows)


def run_identity_experiment(cfg: SimConfig, workers: int = 1) -> SimResult:
    """Identical training and population distributions (true Epsilon* is 0)."""
    return run_shift_experiment(dataclasses.replace(cfg, d_values=(0,)), workers)


def check_properties(result: SimResult, tolerance: float = 0.1) -> dict[str, bool]:
    """Orderings the estimators are expected to satisfy on a finished run.

    Returns a name -> bool map; nothing is raised so callers can report.
    """
    cfg = result.config
    ns = sorted(cfg.n_values)
    out = {}
    for d in cfg.d_values:
        for n in ns:
            par, emp = result.mean(d, n, "parametric"), result.mean(d, n, "ecdf")
            true = result.mean(d, n, "true_cdf")
            out[f"nonnegative[d={d},n={n}]"] = bool(np.all(result.values(d, n, "parametric") >= 0)
                                                    and np.all(result.values(d, n, "ecdf") >= 0))
            if d == 0:
                out[f"parametric<ecdf[d=0,n={n}]"] = par < emp
            else:
                out[f"ecdf<=parametric<=true+tol[d={d},n={n}]"] = emp <= par <= true + tolerance
        if d == 0 and len(ns) > 1:
            for m in ("parametric", "ecdf"):
                means = [result.mean(0, n, m) for n in ns]
                out[f"{m}_decreasing_in_n[d=0]"] = all(a > b for a, b in zip(means, means[1:]))
    trues = [true_epsilon_star_gamma(cfg.k1, cfg.theta1, d, cfg.delta) for d in sorted(cfg.d_values)]
    out["true_increasing_in_d"] = all(a < b for a, b in zip(trues, trues[1:]))
    return out


def is_finite_result(result: SimResult) -> bool:
    return all(math.isfinite(r["epsilon_star"]) for r in result.rows)


def rows_to_csv(result: SimResult) -> str:
    lines = ["d,n,method,repeat,epsilon_star,ecdf_grid"]
    for r in result.rows:
        grid = "" if r["ecdf_grid"] is None else str(r["ecdf_grid"])
        lines.append(f"{r['d']!r},{r['n']},{r['method']},{r['repeat']},{r['epsilon_star']!r},{grid}")
    return "\n".join(lines) + "\n"


def render_svg(result: SimResult) -> str:
    """Mean Epsilon* against d, one polyline per (method, n)."""
    W, H, M = 640, 480, 60
    cfg = result.config
    ds = sorted(cfg.d_values)
    series = {(m, n): [result.mean(d, n, m) for d in ds] for m in METHODS for n in cfg.n_values}
    top = max(max(v) for v in series.values()) or 1.0
    d_lo, d_hi = ds[0], ds[-1] if ds[-1] > ds[0] else ds[0] + 1

    def sx(d):
        return M + (d - d_lo) / (d_hi - d_lo) * (W - 2 * M)

    def sy(e):
        return H - M - e / top * (H - 2 * M)

    colours = {"true_cdf": "black", "ecdf": "orange", "parametric": "blue"}
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<line x1="{M}" y1="{H - M}" x2="{W - M}" y2="{H - M}" stroke="black"/>',
        f'<line x1="{M}" y1="{M}" x2="{M}" y2="{H - M}" stroke="black"/>',
        f'<text x="{W / 2}" y="{H - 20}" text-anchor="middle">d (shape shift)</text>',
        f'<text x="20" y="{H / 2}" transform="rotate(-90 20 {H / 2})" text-anchor="middle">'
        f'mean Epsilon* (max {top:.3g})</text>',
    ]
    for (m, n), vals in series.items():
        pts = " ".join(f"{sx(d):.2f},{sy(v):.2f}" for d, v in zip(ds, vals))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colours[m]}">'
                     f'<title>{m} n={n}</title></polyline>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
