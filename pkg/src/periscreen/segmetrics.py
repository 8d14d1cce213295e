"""Pixel-wise evaluation of segmentation output against ground truth.

ROC and PR curves pool the individual pixel predictions of every image;
intersection-over-union is computed per image and then averaged. That
split treatment is deliberate and matches how the supported study
evaluated its classifier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .masks import BinaryMask, ProbabilityMap

__all__ = [
    "ConfusionCounts",
    "RocCurve",
    "PrCurve",
    "confusion_counts",
    "pooled_roc",
    "auc_trapezoid",
    "pr_curve",
    "iou",
    "mean_iou",
    "implied_prevalence",
]


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel-level confusion totals.

    The rate accessors return None when their denominator is zero, so a
    0/0 is reported as undefined instead of masquerading as a number.
    """

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValidationError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def fpr(self) -> float | None:
        neg = self.fp + self.tn
        return self.fp / neg if neg else None

    @property
    def precision(self) -> float | None:
        predicted = self.tp + self.fp
        return self.tp / predicted if predicted else None

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn
        )


@dataclass(frozen=True)
class RocCurve:
    """(fpr, tpr) points, monotone from (0, 0) to (1, 1), with thresholds."""

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]

    def __post_init__(self):
        if len(self.points) != len(self.thresholds):
            raise ValidationError("points and thresholds must align")
        if len(self.points) < 2:
            raise ValidationError("an ROC curve needs at least two points")
        if self.points[0] != (0.0, 0.0) or self.points[-1] != (1.0, 1.0):
            raise ValidationError("ROC curve must run from (0,0) to (1,1)")
        last = (-1.0, -1.0)
        for x, y in self.points:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValidationError(f"ROC point ({x}, {y}) outside the unit square")
            if x < last[0] or y < last[1]:
                raise ValidationError("ROC points must be monotone non-decreasing")
            last = (x, y)


@dataclass(frozen=True)
class PrCurve:
    """(recall, precision) points with matching thresholds.

    Precision at zero predicted positives is taken as 1.0 by convention
    so the curve is total; the flag records that the convention fired.
    """

    points: tuple[tuple[float, float], ...]
    thresholds: tuple[float, ...]
    zero_prediction_convention: bool = False

    def __post_init__(self):
        if len(self.points) != len(self.thresholds):
            raise ValidationError("points and thresholds must align")
        for r, p in self.points:
            if not (0.0 <= r <= 1.0 and 0.0 <= p <= 1.0):
                raise ValidationError(f"PR point ({r}, {p}) outside the unit square")


def _check_same_dims(pred, truth) -> None:
    if (pred.width, pred.height) != (truth.width, truth.height):
        raise ValidationError(
            f"dimension mismatch: prediction {pred.width}x{pred.height} "
            f"vs truth {truth.width}x{truth.height}"
        )


def confusion_counts(pred: BinaryMask, truth: BinaryMask) -> ConfusionCounts:
    """Pixel-wise confusion between a predicted and a ground-truth mask."""
    _check_same_dims(pred, truth)
    p, t = pred.pixels, truth.pixels
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    tn = p.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def _pool(preds: Sequence[ProbabilityMap | BinaryMask], truths: Sequence[BinaryMask]):
    if not preds:
        raise ValidationError("need at least one prediction/truth pair")
    if len(preds) != len(truths):
        raise ValidationError(f"{len(preds)} predictions vs {len(truths)} truths")
    scores, labels = [], []
    for pred, truth in zip(preds, truths):
        if isinstance(pred, BinaryMask):
            pred = ProbabilityMap.from_mask(pred)
        _check_same_dims(pred, truth)
        scores.append(pred.scores.ravel())
        labels.append(truth.pixels.ravel())
    return np.concatenate(scores), np.concatenate(labels)


def _threshold_sweep(scores: np.ndarray, labels: np.ndarray):
    """Cumulative tp/fp at each descending unique score.

    Pixels sharing a score enter together at one threshold; there is no
    interpolation inside a tie group.
    """
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    cum_tp = np.cumsum(sorted_labels)
    cum_fp = np.cumsum(~sorted_labels)
    # Last index of each tie group marks the operating point at that threshold.
    boundary = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.append(boundary, scores.size - 1)
    return sorted_scores[idx], cum_tp[idx], cum_fp[idx]


def pooled_roc(
    preds: Sequence[ProbabilityMap | BinaryMask], truths: Sequence[BinaryMask]
) -> RocCurve:
    """ROC over the pooled pixels of all images.

    Thresholds are the descending unique scores; the anchors (0,0) and
    (1,1) bound the curve. Binary masks act as degenerate score maps and
    yield a single interior operating point.
    """
    scores, labels = _pool(preds, truths)
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise ValidationError("pooled ROC needs at least one positive and one negative pixel")
    thresholds, cum_tp, cum_fp = _threshold_sweep(scores, labels)
    points = [(0.0, 0.0)]
    out_thresholds = [math.inf]
    for thr, tp, fp in zip(thresholds, cum_tp, cum_fp):
        point = (fp / neg, tp / pos)
        if point == points[-1]:
            continue
        points.append(point)
        out_thresholds.append(float(thr))
    # The lowest threshold admits every pixel, so the curve always ends at (1,1).
    return RocCurve(points=tuple(points), thresholds=tuple(out_thresholds))


def auc_trapezoid(curve: RocCurve) -> float:
    """Trapezoidal area under the ROC curve over fpr in [0, 1]."""
    xs = np.array([p[0] for p in curve.points])
    ys = np.array([p[1] for p in curve.points])
    return float(np.trapezoid(ys, xs))


def pr_curve(
    preds: Sequence[ProbabilityMap | BinaryMask], truths: Sequence[BinaryMask]
) -> PrCurve:
    """Precision/recall over the pooled pixels, one point per threshold."""
    scores, labels = _pool(preds, truths)
    pos = int(labels.sum())
    if pos == 0:
        raise ValidationError("PR curve needs at least one positive ground-truth pixel")
    thresholds, cum_tp, cum_fp = _threshold_sweep(scores, labels)
    points = [(0.0, 1.0)]  # zero predicted positives: precision 1.0 by convention
    out_thresholds = [math.inf]
    for thr, tp, fp in zip(thresholds, cum_tp, cum_fp):
        recall = tp / pos
        precision = tp / (tp + fp)
        points.append((recall, precision))
        out_thresholds.append(float(thr))
    return PrCurve(
        points=tuple(points),
        thresholds=tuple(out_thresholds),
        zero_prediction_convention=True,
    )


def iou(pred: BinaryMask, truth: BinaryMask) -> float:
    """Intersection over union; two empty masks score 1.0 by convention
    (nothing predicted where nothing was marked is a perfect outcome).
    """
    _check_same_dims(pred, truth)
    inter = int(np.count_nonzero(pred.pixels & truth.pixels))
    union = int(np.count_nonzero(pred.pixels | truth.pixels))
    if union == 0:
        return 1.0
    return inter / union


def mean_iou(pairs: Sequence[tuple[BinaryMask, BinaryMask]]) -> tuple[float, float]:
    """Per-image IOU, then sample mean and sample sd (n - 1 denominator).

    A singleton list has no sample variance and reports sd = 0.
    """
    if not pairs:
        raise ValidationError("mean_iou needs at least one mask pair")
    values = [iou(pred, truth) for pred, truth in pairs]
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def implied_prevalence(tpr: float, fpr: float, precision: float) -> float:
    """Positive-pixel prevalence implied by an operating point.

    Solves precision = tpr*pi / (tpr*pi + fpr*(1 - pi)) for pi. All three
    inputs must lie strictly inside (0, 1); the solution then does too.
    """
    for name, v in (("tpr", tpr), ("fpr", fpr), ("precision", precision)):
        if not (isinstance(v, (int, float)) and 0.0 < v < 1.0):
            raise ValidationError(f"{name} must lie strictly in (0, 1), got {v!r}")
    pi = precision * fpr / (precision * fpr + tpr * (1.0 - precision))
    if not 0.0 < pi < 1.0:
        raise ValidationError(
            f"inconsistent operating point: implied prevalence {pi} outside (0, 1)"
        )
    return pi
