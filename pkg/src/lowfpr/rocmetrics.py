"""ROC construction, (partial) AUC, threshold selection and the combined metric.

The decision rule everywhere is ``score >= threshold  =>  predict positive``.
ROC curves carry one operating point per distinct score value plus the two
boundary sentinels (+inf scoring nothing positive, -inf scoring everything).
Partial AUC is unnormalized: the raw integral of TPR over FPR in [0, fpr_max],
so its value lies in [0, fpr_max].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class OperatingPoint:
    """One thresholded operating point. threshold may be +inf (reject all)."""

    threshold: float
    tpr: float
    fpr: float


@dataclass(frozen=True)
class RocCurve:
    """Operating points sorted by descending threshold (ascending FPR)."""

    thresholds: np.ndarray
    tprs: np.ndarray
    fprs: np.ndarray
    n_pos: int
    n_neg: int

    def __len__(self) -> int:
        return int(self.thresholds.shape[0])

    def point(self, i: int) -> OperatingPoint:
        return OperatingPoint(float(self.thresholds[i]), float(self.tprs[i]), float(self.fprs[i]))

    @property
    def points(self) -> list[OperatingPoint]:
        return [self.point(i) for i in range(len(self))]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "tpr", "fpr"])
            for i in range(len(self)):
                writer.writerow([repr(float(self.thresholds[i])), repr(float(self.tprs[i])), repr(float(self.fprs[i]))])


def _score_label_arrays(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(np.int64)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in length: {s.shape[0]} vs {y.shape[0]}")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if np.any((y != 0) & (y != 1)):
        raise ValueError("labels must be 0 or 1")
    return s, y


def _distinct_counts(s: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cumulative TP/FP counts at each distinct score, descending."""
    order = np.argsort(-s, kind="stable")
    ss = s[order]
    yy = y[order]
    last = np.ones(ss.size, dtype=bool)
    last[:-1] = ss[1:] != ss[:-1]
    tp = np.cumsum(yy)[last]
    fp = np.cumsum(1 - yy)[last]
    return ss[last], tp, fp


def roc_curve(scores, labels) -> RocCurve:
    """Build the empirical ROC curve. Requires both classes present."""
    s, y = _score_label_arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc_curve needs at least one positive and one negative sample")
    thr, tp, fp = _distinct_counts(s, y)
    thresholds = np.concatenate(([np.inf], thr, [-np.inf]))
    tprs = np.concatenate(([0.0], tp / n_pos, [1.0]))
    fprs = np.concatenate(([0.0], fp / n_neg, [1.0]))
    for col in (thresholds, tprs, fprs):
        col.setflags(write=False)
    return RocCurve(thresholds=thresholds, tprs=tprs, fprs=fprs, n_pos=n_pos, n_neg=n_neg)


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under the curve; equals the tie-corrected rank statistic."""
    return float(np.trapezoid(curve.tprs, curve.fprs))


def partial_auc(curve: RocCurve, fpr_max: float) -> float:
    """Unnormalized area under TPR over FPR in [0, fpr_max].

    The curve is linearly interpolated at fpr_max, so the result is in
    [0, fpr_max] and partial_auc(curve, 1.0) == auc(curve).
    """
    if not (0.0 < fpr_max <= 1.0):
        raise ValueError(f"fpr_max must be in (0, 1], got {fpr_max!r}")
    f, t = curve.fprs, curve.tprs
    k = int(np.searchsorted(f, fpr_max, side="right"))
    ff, tt = f[:k], t[:k]
    if ff[-1] < fpr_max:
        f0, f1 = f[k - 1], f[k]
        t0, t1 = t[k - 1], t[k]
        ti = t0 + (t1 - t0) * (fpr_max - f0) / (f1 - f0)
        ff = np.concatenate((ff, [fpr_max]))
        tt = np.concatenate((tt, [ti]))
    return float(np.trapezoid(tt, ff))


def select_threshold(scores, labels, target_fpr: float) -> OperatingPoint:
    """Pick the threshold maximizing TPR subject to FPR <= target_fpr.

    Candidates are the observed score values plus +inf. TPR ties break toward
    the larger (more conservative) threshold. When no candidate with positive
    TPR fits the budget the +inf sentinel (TPR 0, FPR 0) is returned.
    """
    if not (0.0 < target_fpr < 1.0):
        raise ValueError(f"target_fpr must be in (0, 1), got {target_fpr!r}")
    s, y = _score_label_arrays(scores, labels)
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_neg == 0:
        raise ValueError("select_threshold needs at least one negative sample")
    thr, tp, fp = _distinct_counts(s, y)
    thresholds = np.concatenate(([np.inf], thr))
    tprs = np.concatenate(([0.0], tp / n_pos if n_pos else np.zeros_like(tp, dtype=np.float64)))
    fprs = np.concatenate(([0.0], fp / n_neg))
    # FPR is nondecreasing along candidates, so the feasible set is a prefix.
    j = int(np.searchsorted(fprs, target_fpr, side="right")) - 1
    best = tprs[j]
    i = int(np.searchsorted(tprs[: j + 1], best, side="left"))
    return OperatingPoint(float(thresholds[i]), float(tprs[i]), float(fprs[i]))


def evaluate_at_threshold(scores, labels, threshold: float) -> OperatingPoint:
    """TPR and FPR of ``score >= threshold`` on the given samples.

    A class with no samples contributes a rate of 0.0.
    """
    s, y = _score_label_arrays(scores, labels)
    positive = s >= threshold
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    tp = int(np.count_nonzero(positive & (y == 1)))
    fp = int(np.count_nonzero(positive & (y == 0)))
    tpr = tp / n_pos if n_pos else 0.0
    fpr = fp / n_neg if n_neg else 0.0
    return OperatingPoint(float(threshold), tpr, fpr)


def combined_metric(tpr: float, actualized_fpr: float, target_fpr: float) -> float:
    """TPR penalized by relative FPR overshoot.

    C = TPR - max(actualized_fpr - target_fpr, 0) / target_fpr. Equal to TPR
    when the budget is met; decreases without bound as FPR overshoots.
    """
    if target_fpr <= 0.0:
        raise ValueError(f"target_fpr must be positive, got {target_fpr!r}")
    return float(tpr - max(actualized_fpr - target_fpr, 0.0) / target_fpr)


def accuracy(scores, labels, threshold: float) -> float:
    """Fraction of correct ``score >= threshold`` decisions."""
    s, y = _score_label_arrays(scores, labels)
    if s.size == 0:
        raise ValueError("accuracy of an empty sample set is undefined")
    return float(np.mean((s >= threshold).astype(np.int64) == y))
