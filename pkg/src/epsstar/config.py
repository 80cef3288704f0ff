"""Audit configuration shared by the library entry points and the CLI."""
from __future__ import annotations

import dataclasses
import math

from .errors import DomainError

METHODS = ("parametric", "ecdf", "discrete")
DEFAULT_GRID_SIZE = 2_000_000
ECDF_CLAMP = (0.001, 0.999)


def auto_delta(n: int) -> float:
    """Default delta ``1 / (n ln n)`` for a training set of ``n`` records."""
    if n < 2:
        raise DomainError(f"automatic delta needs a training set of at least 2 records, got {n}")
    return 1.0 / (n * math.log(n))


def check_delta(delta) -> float:
    try:
        d = float(delta)
    except (TypeError, ValueError):
        raise DomainError(f"delta must be a probability or 'auto', got {delta!r}") from None
    if not 0.0 <= d < 1.0:
        raise DomainError(f"delta must lie in [0, 1), got {d!r}")
    return d


@dataclasses.dataclass(frozen=True)
class AuditConfig:
    """Knobs for a single-model audit.

    ``delta="auto"`` resolves to ``1 / (n ln n)`` with n the training-set size.
    ``grid_size`` is the threshold count for the ecdf method and the t-grid
    size for the discrete method; the parametric method ignores it.
    """

    delta: float | str = "auto"
    method: str = "parametric"
    grid_size: int = DEFAULT_GRID_SIZE
    alpha_shift: float = 1.0
    clip_predictions: bool = True
    seed: int = 0
    ecdf_clamp: tuple[float, float] = ECDF_CLAMP

    def __post_init__(self):
        if self.delta != "auto":
            object.__setattr__(self, "delta", check_delta(self.delta))
        if self.method not in METHODS:
            raise DomainError(f"method must be one of {METHODS}, got {self.method!r}")
        if int(self.grid_size) < 2:
            raise DomainError(f"grid_size must be >= 2, got {self.grid_size}")
        if not (math.isfinite(self.alpha_shift) and self.alpha_shift >= 0):
            raise DomainError(f"alpha_shift must be finite and >= 0, got {self.alpha_shift}")
        lo, hi = self.ecdf_clamp
        if not 0 <= lo < hi <= 1:
            raise DomainError(f"invalid ecdf clamp window {self.ecdf_clamp}")

    def resolve_delta(self, n_train: int) -> float:
        return auto_delta(n_train) if self.delta == "auto" else float(self.delta)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["ecdf_clamp"] = list(self.ecdf_clamp)
        return d
