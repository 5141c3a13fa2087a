"""ID classification accuracy and threshold-free OOD detection metrics.

Scores follow one convention everywhere: higher means more in-distribution,
and ID samples are the positive class.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError


@dataclass(frozen=True)
class ScoreSet:
    id_scores: np.ndarray
    ood_scores: np.ndarray

    def __post_init__(self):
        ids = np.asarray(self.id_scores, dtype=np.float64).ravel()
        oods = np.asarray(self.ood_scores, dtype=np.float64).ravel()
        if ids.size == 0 or oods.size == 0:
            raise ValidationError("both ID and OOD score sets must be non-empty")
        if not (np.all(np.isfinite(ids)) and np.all(np.isfinite(oods))):
            raise ValidationError("scores must be finite")
        object.__setattr__(self, "id_scores", ids)
        object.__setattr__(self, "ood_scores", oods)


def _as_scores(scores, ood_scores=None) -> ScoreSet:
    if ood_scores is not None:
        return ScoreSet(scores, ood_scores)
    return scores if isinstance(scores, ScoreSet) else ScoreSet(*scores)


def auroc(scores, ood_scores=None) -> float:
    """P(id > ood) + 0.5 P(id == ood), via average ranks."""
    s = _as_scores(scores, ood_scores)
    n1, n0 = s.id_scores.size, s.ood_scores.size
    ranks = rankdata(np.concatenate([s.id_scores, s.ood_scores]))
    u = ranks[:n1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


def _counts_at_or_above(sorted_values: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    return sorted_values.size - np.searchsorted(sorted_values, thresholds, side="left")


def aupr(scores, ood_scores=None) -> float:
    """Area under the precision-recall curve with ID positive.

    Every distinct score is a threshold (predict ID when score >= t); the
    area is ``sum (recall_j - recall_{j-1}) * precision_j`` over thresholds
    in decreasing order, starting from recall 0.
    """
    s = _as_scores(scores, ood_scores)
    ids, oods = np.sort(s.id_scores), np.sort(s.ood_scores)
    thresholds = np.unique(np.concatenate([ids, oods]))[::-1]
    tp = _counts_at_or_above(ids, thresholds)
    fp = _counts_at_or_above(oods, thresholds)
    recall = tp / ids.size
    precision = tp / (tp + fp)
    steps = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(steps * precision))


def tnr_at_tpr(scores, ood_scores=None, level: float = 0.85) -> float:
    """OOD rejection rate at the largest threshold keeping TPR >= level.

    TPR(t) is the fraction of ID scores >= t; the threshold is the largest
    score value reaching the level, and the result is the fraction of OOD
    scores strictly below it.
    """
    if not 0 < level < 1:
        raise ValidationError("level must lie in (0, 1)")
    s = _as_scores(scores, ood_scores)
    ids = np.sort(s.id_scores)
    candidates = np.unique(ids)
    tpr = _counts_at_or_above(ids, candidates) / ids.size
    tau = candidates[tpr >= level].max()
    return float(np.mean(s.ood_scores < tau))


def detection_accuracy(scores, ood_scores=None) -> float:
    """max over thresholds of 0.5 (TPR + TNR), thresholds at every distinct
    score and at +-inf."""
    s = _as_scores(scores, ood_scores)
    ids, oods = np.sort(s.id_scores), np.sort(s.ood_scores)
    thresholds = np.concatenate([[-np.inf], np.unique(np.concatenate([ids, oods])), [np.inf]])
    tpr = _counts_at_or_above(ids, thresholds) / ids.size
    tnr = np.searchsorted(oods, thresholds, side="left") / oods.size
    return float(np.max(0.5 * (tpr + tnr)))


def classification_accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValidationError(f"length mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ValidationError("no predictions")
    return float(np.mean(predictions == labels))


@dataclass(frozen=True)
class MetricsReport:
    classification_accuracy: float | None  # None for detectors without a classifier
    tnr_at_tpr85: float
    auroc: float
    aupr_id_positive: float
    detection_accuracy: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__})


METRIC_NAMES = list(MetricsReport.__dataclass_fields__)


def evaluate(id_scores, ood_scores, predictions=None, labels=None) -> MetricsReport:
    s = ScoreSet(id_scores, ood_scores)
    acc = None if predictions is None else classification_accuracy(predictions, labels)
    return MetricsReport(
        classification_accuracy=acc,
        tnr_at_tpr85=tnr_at_tpr(s, level=0.85),
        auroc=auroc(s),
        aupr_id_positive=aupr(s),
        detection_accuracy=detection_accuracy(s),
    )


def average_reports(reports) -> MetricsReport:
    """Field-wise mean; a field that is None in any report stays None."""
    reports = list(reports)
    if not reports:
        raise ValidationError("nothing to average")
    values = {}
    for name in METRIC_NAMES:
        column = [getattr(r, name) for r in reports]
        values[name] = None if any(v is None for v in column) else float(np.mean(column))
    return MetricsReport(**values)
