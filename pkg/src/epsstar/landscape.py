"""Privacy-utility landscape: Pareto frontier, KDE marginals and report emission."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from collections.abc import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import DegenerateSampleError, DomainError, ParseError, UnknownFormatError

SCHEMA = "epsstar.landscape"
SCHEMA_VERSION = 1
FORMATS = ("json", "csv", "svg")
DP_TAG = "dp_epsilon"


@dataclasses.dataclass(frozen=True)
class StrategyPoint:
    id: str
    utility: float
    eps_star_mean: float
    eps_star_min: float
    eps_star_max: float
    tags: Mapping[str, object] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        for name in ("utility", "eps_star_mean", "eps_star_min", "eps_star_max"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{self.id}: {name} must be finite")
            object.__setattr__(self, name, v)
        if not (0 <= self.eps_star_min <= self.eps_star_mean <= self.eps_star_max):
            raise DomainError(f"{self.id}: need 0 <= eps_star_min <= eps_star_mean <= eps_star_max")
        object.__setattr__(self, "tags", dict(self.tags))

    @classmethod
    def from_repeats(cls, id, utility, eps_values, tags=None) -> "StrategyPoint":
        v = np.asarray(eps_values, dtype=np.float64)
        if v.size == 0:
            raise DomainError(f"{id}: no repeats")
        return cls(id, utility, float(np.mean(v)), float(v.min()), float(v.max()), tags or {})

    def to_dict(self) -> dict:
        return {"id": self.id, "utility": self.utility, "eps_star_mean": self.eps_star_mean,
                "eps_star_min": self.eps_star_min, "eps_star_max": self.eps_star_max,
                "tags": dict(self.tags)}

    @classmethod
    def from_dict(cls, d) -> "StrategyPoint":
        return cls(d["id"], d["utility"], d["eps_star_mean"], d["eps_star_min"],
                   d["eps_star_max"], d.get("tags", {}))


@dataclasses.dataclass(frozen=True)
class Frontier:
    dominance_set: tuple[str, ...]
    hull_set: tuple[str, ...]
    metric: str = "mean"


def _eps(p: StrategyPoint, use_max: bool) -> float:
    return p.eps_star_max if use_max else p.eps_star_mean


def pareto_frontier(points: Sequence[StrategyPoint], use_max: bool = False) -> Frontier:
    """Nondominated set and its upper-left convex hull.

    Utility is maximised and Epsilon* minimised. ``use_max`` ranks strategies
    by their worst repeat instead of the mean. Ids come back sorted by
    (eps, -utility, id) so the result does not depend on input order.
    """
    if not points:
        raise DomainError("landscape has no points")
    ids = [p.id for p in points]
    if len(set(ids)) != len(ids):
        raise DomainError("strategy ids must be unique")
    order = sorted(points, key=lambda p: (_eps(p, use_max), -p.utility, p.id))

    # Sweep by eps; a point survives if it beats every strictly-lower-eps
    # utility and ties the best utility in its own eps group.
    dominant = []
    best_before = -math.inf
    i = 0
    while i < len(order):
        e = _eps(order[i], use_max)
        j = i
        while j < len(order) and _eps(order[j], use_max) == e:
            j += 1
        top = order[i].utility
        if top > best_before:
            dominant.extend(p for p in order[i:j] if p.utility == top)
        best_before = max(best_before, top)
        i = j

    # Upper hull over distinct coordinates, increasing eps (and so utility).
    coords = []
    for p in dominant:
        c = (_eps(p, use_max), p.utility)
        if not coords or coords[-1] != c:
            coords.append(c)
    hull: list[tuple[float, float]] = []
    for c in coords:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (c[1] - y0) - (y1 - y0) * (c[0] - x0) >= 0:
                hull.pop()
            else:
                break
        hull.append(c)
    on_hull = set(hull)
    hull_ids = tuple(p.id for p in dominant if (_eps(p, use_max), p.utility) in on_hull)
    return Frontier(tuple(p.id for p in dominant), hull_ids, "max" if use_max else "mean")


def silverman_bandwidth(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    return 1.06 * float(np.std(v, ddof=1)) * v.size ** (-0.2)


def kde_marginal(values, grid) -> np.ndarray:
    """Gaussian KDE with Silverman's rule-of-thumb bandwidth, evaluated on ``grid``."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise DegenerateSampleError("KDE needs at least two values")
    if not np.all(np.isfinite(v)):
        raise DomainError("KDE values must be finite")
    if np.ptp(v) == 0:
        raise DegenerateSampleError("KDE values have zero spread")
    h = silverman_bandwidth(v)
    g = np.asarray(grid, dtype=np.float64)
    z = (g[..., None] - v) / h
    return np.exp(-0.5 * z * z).sum(axis=-1) / (v.size * h * math.sqrt(2 * math.pi))


def category_of(point: StrategyPoint, tag: str = DP_TAG) -> str:
    return "dp" if tag in point.tags else "baseline"


def build_marginals(points: Sequence[StrategyPoint], n_grid: int = 200, tag: str = DP_TAG) -> dict:
    """KDE curves of eps_star_mean and utility per category.

    Categories with fewer than two points or no spread are skipped; their
    absence from the output is the signal.
    """
    out: dict = {}
    axes = {"eps_star": [p.eps_star_mean for p in points], "utility": [p.utility for p in points]}
    cats = sorted({category_of(p, tag) for p in points})
    for axis, allv in axes.items():
        lo, hi = min(allv), max(allv)
        pad = 0.25 * (hi - lo) if hi > lo else 1.0
        grid = np.linspace(lo - pad, hi + pad, n_grid)
        for cat in cats:
            vals = [v for v, p in zip(allv, points) if category_of(p, tag) == cat]
            try:
                dens = kde_marginal(vals, grid)
            except DegenerateSampleError:
                continue
            out.setdefault(cat, {})[axis] = {"grid": grid.tolist(), "density": dens.tolist()}
    return out


def _json_doc(points, frontier, marginals) -> dict:
    return {
        "schema": SCHEMA,
        "schema_version": SCHEMA_VERSION,
        "frontier_metric": frontier.metric,
        "points": [p.to_dict() for p in points],
        "frontier": {"dominance_set": list(frontier.dominance_set), "hull_set": list(frontier.hull_set)},
        "marginals": marginals,
    }


def _csv_doc(points, frontier) -> str:
    dom, hull = set(frontier.dominance_set), set(frontier.hull_set)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "utility", "eps_star_mean", "eps_star_min", "eps_star_max",
                "nondominated", "on_hull", "tags"])
    for p in points:
        w.writerow([p.id, repr(p.utility), repr(p.eps_star_mean), repr(p.eps_star_min),
                    repr(p.eps_star_max), str(p.id in dom).lower(), str(p.id in hull).lower(),
                    json.dumps(p.tags, sort_keys=True)])
    return buf.getvalue()


def _svg_doc(points, frontier) -> str:
    W, H, M = 640, 480, 60
    eps_lo = min(p.eps_star_min for p in points)
    eps_hi = max(p.eps_star_max for p in points)
    u_lo = min(p.utility for p in points)
    u_hi = max(p.utility for p in points)
    if eps_hi == eps_lo:
        eps_hi = eps_lo + 1.0
    if u_hi == u_lo:
        u_hi = u_lo + 1.0

    def sx(e):
        return M + (e - eps_lo) / (eps_hi - eps_lo) * (W - 2 * M)

    def sy(u):
        return H - M - (u - u_lo) / (u_hi - u_lo) * (H - 2 * M)

    by_id = {p.id: p for p in points}
    use_max = frontier.metric == "max"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
        f'<line x1="{M}" y1="{H - M}" x2="{W - M}" y2="{H - M}" stroke="black"/>',
        f'<line x1="{M}" y1="{M}" x2="{M}" y2="{H - M}" stroke="black"/>',
        f'<text x="{W / 2}" y="{H - 20}" text-anchor="middle">Epsilon* ({eps_lo:.3g} to {eps_hi:.3g})</text>',
        f'<text x="20" y="{H / 2}" transform="rotate(-90 20 {H / 2})" text-anchor="middle">'
        f'utility ({u_lo:.3g} to {u_hi:.3g})</text>',
    ]
    hull_pts = sorted({(_eps(by_id[i], use_max), by_id[i].utility) for i in frontier.hull_set})
    if len(hull_pts) > 1:
        poly = " ".join(f"{sx(e):.2f},{sy(u):.2f}" for e, u in hull_pts)
        parts.append(f'<polyline points="{poly}" fill="none" stroke="red"/>')
    for p in points:
        y = sy(p.utility)
        colour = "blue" if category_of(p) == "dp" else "black"
        parts.append(f'<line x1="{sx(p.eps_star_min):.2f}" y1="{y:.2f}" x2="{sx(p.eps_star_max):.2f}" '
                     f'y2="{y:.2f}" stroke="{colour}" stroke-opacity="0.5"/>')
        parts.append(f'<circle cx="{sx(p.eps_star_mean):.2f}" cy="{y:.2f}" r="3" fill="{colour}">'
                     f'<title>{escape(p.id)}</title></circle>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_landscape(points, frontier: Frontier, marginals: Mapping | None, format: str = "json") -> str:
    """Render the landscape as a JSON, CSV or SVG document (returned as text)."""
    if format not in FORMATS:
        raise UnknownFormatError(f"unknown landscape format {format!r}; expected one of {FORMATS}")
    known = {p.id for p in points}
    if not set(frontier.dominance_set) <= known or not set(frontier.hull_set) <= known:
        raise DomainError("frontier references ids not present in points")
    if format == "json":
        return json.dumps(_json_doc(points, frontier, dict(marginals or {})), indent=2) + "\n"
    if format == "csv":
        return _csv_doc(points, frontier)
    return _svg_doc(points, frontier)


def parse_landscape_json(text: str):
    """Inverse of the JSON emitter: ``(points, frontier, marginals)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"landscape JSON: {exc}") from exc
    if doc.get("schema") != SCHEMA or doc.get("schema_version") != SCHEMA_VERSION:
        raise ParseError("not a version-1 landscape document")
    points = [StrategyPoint.from_dict(d) for d in doc["points"]]
    fr = doc["frontier"]
    frontier = Frontier(tuple(fr["dominance_set"]), tuple(fr["hull_set"]), doc.get("frontier_metric", "mean"))
    return points, frontier, doc.get("marginals", {})


def points_from_simulation(result, method: str = "parametric", utility=None) -> list[StrategyPoint]:
    """Pseudo-strategies from a simulation run, one per (d, n) cell.

    ``utility`` maps ``(d, n)`` to a utility value; by default a larger shift
    counts as a more useful (more overfit) model, ``0.5 + 0.1 d``.
    """
    utility = utility or (lambda d, n: 0.5 + 0.1 * float(d))
    out = []
    for d in result.config.d_values:
        for n in result.config.n_values:
            v = np.maximum(result.values(d, n, method), 0.0)
            out.append(StrategyPoint.from_repeats(f"d{d}_n{n}", utility(d, n), v,
                                                  {"d": d, "n": n, "method": method}))
    return out
