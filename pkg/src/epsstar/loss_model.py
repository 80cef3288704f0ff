"""Per-record losses and the logit transform applied before Normal fitting.

The loss used for auditing is the signed log-odds of the model's prediction
for the true class, so that training records (which the model fits well)
tend to receive smaller losses than population records.
"""
from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence

import numpy as np

from .errors import DegenerateLossesError, DomainError, EmptySampleError, ShapeError

CLIP_EPS = 1e-12

TRAINING = "training"
POPULATION = "population"


@dataclasses.dataclass(frozen=True)
class PredictionRecord:
    """One model output together with its label.

    Attributes:
      prediction: Class probabilities. A single value means binary
        classification (probability of label 1).
      label: Class index, 0/1 for binary, or a one-hot vector.
    """

    prediction: tuple[float, ...]
    label: int | tuple[int, ...]

    def __post_init__(self):
        pred = self.prediction
        if np.isscalar(pred):
            pred = (float(pred),)
        object.__setattr__(self, "prediction", tuple(float(v) for v in pred))
        if not np.isscalar(self.label):
            object.__setattr__(self, "label", tuple(int(v) for v in self.label))
        if len(self.prediction) < 1:
            raise ShapeError("prediction must have at least one component")

    @property
    def n_classes(self) -> int:
        return len(self.prediction)

    def hot_index(self) -> int:
        """Index of the true class for a multi-class record."""
        if isinstance(self.label, tuple):
            if len(self.label) != len(self.prediction):
                raise ShapeError(
                    f"label length {len(self.label)} != prediction length "
                    f"{len(self.prediction)}"
                )
            hot = [j for j, v in enumerate(self.label) if v == 1]
            if len(hot) != 1 or any(v not in (0, 1) for v in self.label):
                raise ShapeError(f"label is not one-hot: {self.label}")
            return hot[0]
        idx = int(self.label)
        if not 0 <= idx < len(self.prediction):
            raise ShapeError(f"label index {idx} out of range for {len(self.prediction)} classes")
        return idx


@dataclasses.dataclass(frozen=True)
class LossSet:
    """Scalar losses for one role (training or population)."""

    values: np.ndarray
    role: str = TRAINING
    source_id: str = ""

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).ravel()
        if vals.size == 0:
            raise EmptySampleError(f"loss set {self.source_id!r} is empty")
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"loss set {self.source_id!r} contains NaN or infinite values")
        if self.role not in (TRAINING, POPULATION):
            raise DomainError(f"unknown role {self.role!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return self.values.size


@dataclasses.dataclass(frozen=True)
class TransformedLossSet:
    """Losses after the normalize/shift/exp/logit pipeline.

    ``norm_min``/``norm_max`` are the joint bounds used for normalization;
    keep them to transform held-out losses consistently.
    """

    values: np.ndarray
    norm_min: float
    norm_max: float
    shift_alpha: float = 1.0
    role: str = TRAINING

    def __len__(self) -> int:
        return self.values.size


def _check_prob(f: float) -> None:
    if not (0.0 < f < 1.0):
        raise DomainError(f"prediction {f!r} is not strictly inside (0, 1)")


def clip_prediction(f, eps: float = CLIP_EPS):
    """Clip saturated probabilities into ``[eps, 1 - eps]``."""
    return np.clip(f, eps, 1.0 - eps)


def binary_loss(f: float, y: int) -> float:
    """Loss ``(1 - 2y) * (log f - log(1 - f))`` for a binary prediction."""
    f = float(f)
    _check_prob(f)
    if y not in (0, 1):
        raise DomainError(f"binary label must be 0 or 1, got {y!r}")
    return (1 - 2 * y) * (math.log(f) - math.log1p(-f))


def multiclass_loss(prediction: Sequence[float], label) -> float:
    """Negative log-odds of the true class.

    ``label`` may be a class index or a one-hot vector. Only the hot component
    contributes, so the result is ``-(log f_h - log(1 - f_h))``.
    """
    rec = PredictionRecord(tuple(prediction), label)
    for f in rec.prediction:
        _check_prob(f)
    fh = rec.prediction[rec.hot_index()]
    return -(math.log(fh) - math.log1p(-fh))


def record_loss(record: PredictionRecord) -> float:
    if record.n_classes == 1:
        if isinstance(record.label, tuple):
            raise ShapeError("binary records take a scalar 0/1 label")
        return binary_loss(record.prediction[0], record.label)
    return multiclass_loss(record.prediction, record.label)


def losses_from_predictions(predictions, labels, clip: bool = True) -> np.ndarray:
    """Vectorized losses for a batch of predictions.

    Args:
      predictions: Shape ``(n,)`` for binary models or ``(n, C)`` with C >= 2.
      labels: Shape ``(n,)`` class indices (0/1 for binary) or ``(n, C)``
        one-hot rows.
      clip: Clip saturated predictions to ``[1e-12, 1 - 1e-12]`` first. With
        ``clip=False`` any prediction outside (0, 1) raises DomainError.
    """
    preds = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels)
    if preds.ndim == 2 and preds.shape[1] == 1:
        preds = preds[:, 0]
    if clip:
        preds = clip_prediction(preds)
    elif np.any((preds <= 0) | (preds >= 1)) or not np.all(np.isfinite(preds)):
        raise DomainError("predictions must lie strictly inside (0, 1)")

    if preds.ndim == 1:
        y = labels.astype(np.int64).ravel()
        if y.shape != preds.shape:
            raise ShapeError("labels and predictions differ in length")
        if np.any((y != 0) & (y != 1)):
            raise DomainError("binary labels must be 0 or 1")
        return (1 - 2 * y) * (np.log(preds) - np.log1p(-preds))

    n, c = preds.shape
    if labels.ndim == 2:
        if labels.shape != preds.shape:
            raise ShapeError(f"one-hot labels have shape {labels.shape}, predictions {preds.shape}")
        if np.any((labels != 0) & (labels != 1)) or np.any(labels.sum(axis=1) != 1):
            raise ShapeError("labels are not one-hot")
        hot = np.argmax(labels, axis=1)
    else:
        hot = labels.astype(np.int64).ravel()
        if hot.size != n:
            raise ShapeError("labels and predictions differ in length")
        if np.any((hot < 0) | (hot >= c)):
            raise ShapeError("label index out of range")
    fh = preds[np.arange(n), hot]
    return -(np.log(fh) - np.log1p(-fh))


def _as_values(losses) -> np.ndarray:
    if isinstance(losses, (LossSet, TransformedLossSet)):
        return losses.values
    vals = np.asarray(losses, dtype=np.float64).ravel()
    if vals.size == 0:
        raise EmptySampleError("empty loss set")
    return vals


def apply_transform(values, norm_min: float, norm_max: float, alpha: float = 1.0) -> np.ndarray:
    """Map raw losses through normalize -> +alpha -> exp(-.) -> logit.

    Values outside ``[norm_min, norm_max]`` (held-out data) are transformed
    with the same affine map and are not clipped.
    """
    if not norm_min < norm_max:
        raise DegenerateLossesError("normalization range has zero width")
    x = (np.asarray(values, dtype=np.float64) - norm_min) / (norm_max - norm_min)
    shifted = x + alpha
    p = np.exp(-shifted)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("transformed probabilities left (0, 1); alpha too small for these losses")
    # log(p) - log(1 - p) with log(p) = -shifted exactly.
    return -shifted - np.log(-np.expm1(-shifted))


def transform_losses(train, pop, alpha: float = 1.0) -> tuple[TransformedLossSet, TransformedLossSet]:
    """Transform training and population losses with shared bounds."""
    tr = _as_values(train)
    po = _as_values(pop)
    lo = float(min(tr.min(), po.min()))
    hi = float(max(tr.max(), po.max()))
    if not lo < hi:
        raise DegenerateLossesError(f"all losses equal {lo!r}; nothing to fit")
    return (
        TransformedLossSet(apply_transform(tr, lo, hi, alpha), lo, hi, alpha, TRAINING),
        TransformedLossSet(apply_transform(po, lo, hi, alpha), lo, hi, alpha, POPULATION),
    )
