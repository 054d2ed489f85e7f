"""Comparative analyses: ensemble versus members, uncertainty splits,
a self-contained Wilcoxon signed-rank test and histogram binning.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import PredictionDataset
from .rocmetrics import accuracy, auc, partial_auc, roc_curve
from .uncertainty import compute_uncertainties

MEASURES = ("predictive", "aleatoric", "epistemic")


@dataclass(frozen=True)
class ComparisonRow:
    model_name: str
    accuracy: float
    auc: float
    partial_auc: float
    is_ensemble: bool


def ensemble_vs_members(
    ds: PredictionDataset, fpr_max: float, accuracy_threshold: float = 0.5
) -> tuple[ComparisonRow, ComparisonRow]:
    """Score the ensemble mean against the average individual member.

    Returns (ensemble_row, member_row) where the member row holds each metric
    averaged over the T members. Requires T >= 2; with one member there is
    nothing to ensemble.
    """
    if ds.member_count < 2:
        raise ValueError("ensemble comparison needs at least 2 members")
    labels = ds.labels

    def metrics(scores: np.ndarray) -> tuple[float, float, float]:
        curve = roc_curve(scores, labels)
        return accuracy(scores, labels, accuracy_threshold), auc(curve), partial_auc(curve, fpr_max)

    ens = metrics(ds.scores.mean(axis=1))
    per_member = np.array([metrics(ds.scores[:, j]) for j in range(ds.member_count)])
    avg = per_member.mean(axis=0)
    return (
        ComparisonRow("ensemble", ens[0], ens[1], ens[2], True),
        ComparisonRow("member_mean", float(avg[0]), float(avg[1]), float(avg[2]), False),
    )


def write_comparison_csv(rows: tuple[ComparisonRow, ...], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "accuracy", "auc", "partial_auc", "is_ensemble"])
        for r in rows:
            writer.writerow(
                [r.model_name, repr(r.accuracy), repr(r.auc), repr(r.partial_auc), "true" if r.is_ensemble else "false"]
            )


@dataclass(frozen=True)
class GroupSplit:
    """Uncertainty values split into two labeled groups of samples."""

    measure: str
    labels: tuple[str, str]
    sample_ids: tuple[np.ndarray, np.ndarray]
    values: tuple[np.ndarray, np.ndarray]

    @property
    def has_empty_group(self) -> bool:
        """Warning flag: one side of the split has no samples."""
        return any(v.size == 0 for v in self.values)

    def mean(self, group: str) -> float:
        i = self.labels.index(group)
        return float(self.values[i].mean())

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "group", "value"])
            for label, ids, vals in zip(self.labels, self.sample_ids, self.values):
                for sid, v in zip(ids, vals):
                    writer.writerow([sid, label, repr(float(v))])


def uncertainty_by_correctness(ds: PredictionDataset, threshold: float, measure: str = "epistemic") -> GroupSplit:
    """Split one uncertainty measure by whether ``yhat >= threshold`` is correct.

    An empty group is not an error; check has_empty_group on the result.
    """
    table = compute_uncertainties(ds)
    values = table.measure(measure)
    predicted = (table.yhat >= threshold).astype(np.int64)
    correct = predicted == ds.labels
    return GroupSplit(
        measure=measure,
        labels=("correct", "incorrect"),
        sample_ids=(ds.sample_ids[correct], ds.sample_ids[~correct]),
        values=(values[correct], values[~correct]),
    )


def uncertainty_by_novelty(ds: PredictionDataset, known_families, measure: str = "epistemic") -> GroupSplit:
    """Split malicious samples by family membership in a known set.

    Benign samples are excluded. Raises when no sample carries a family tag.
    """
    known = set(known_families)
    table = compute_uncertainties(ds)
    values = table.measure(measure)
    tagged = np.array([f is not None for f in ds.families], dtype=bool)
    malicious = (ds.labels == 1) & tagged
    if not malicious.any():
        raise ValueError("no family-tagged malicious samples to split")
    seen = malicious & np.array([f in known for f in ds.families], dtype=bool)
    unseen = malicious & ~seen
    return GroupSplit(
        measure=measure,
        labels=("seen", "unseen"),
        sample_ids=(ds.sample_ids[seen], ds.sample_ids[unseen]),
        values=(values[seen], values[unseen]),
    )


@dataclass(frozen=True)
class WilcoxonResult:
    """Signed-rank statistic W+ and its two-sided p-value.

    n counts the nonzero differences. degenerate marks the all-zero input,
    which is reported as p = 1.
    """

    statistic: float
    p_value: float
    n: int
    degenerate: bool


def _average_ranks(x: np.ndarray) -> np.ndarray:
    _, inverse, counts = np.unique(x, return_inverse=True, return_counts=True)
    start = np.cumsum(counts) - counts
    avg = start + (counts + 1) / 2.0
    return avg[inverse]


def _exact_two_sided(ranks: np.ndarray, w_plus: float) -> float:
    # Ranks are multiples of 1/2; double them and walk the integer subset-sum
    # distribution. Counts stay below 2^n <= 2^20, exact in float64.
    doubled = np.rint(2.0 * ranks).astype(np.int64)
    total = int(doubled.sum())
    dist = np.zeros(total + 1, dtype=np.float64)
    dist[0] = 1.0
    for r in doubled:
        dist[r:] += dist[: total + 1 - r].copy()
    w2 = int(round(2.0 * w_plus))
    denom = 2.0 ** len(ranks)
    p_le = float(dist[: w2 + 1].sum()) / denom
    p_ge = float(dist[w2:].sum()) / denom
    return min(1.0, 2.0 * min(p_le, p_ge))


def _normal_two_sided(ranks: np.ndarray, w_plus: float, n: int) -> float:
    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(ranks, return_counts=True)
    var -= float((counts.astype(np.float64) ** 3 - counts).sum()) / 48.0
    if var <= 0.0:
        return 1.0
    z = (abs(w_plus - mu) - 0.5) / math.sqrt(var)  # continuity correction
    if z < 0.0:
        z = 0.0
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def wilcoxon_signed_rank(paired_diffs) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped; tied magnitudes get average ranks. The null
    distribution is enumerated exactly for n <= 20 nonzero differences and
    approximated by the continuity-corrected normal beyond that.
    """
    d = np.asarray(paired_diffs, dtype=np.float64).ravel()
    if d.size == 0:
        raise ValueError("paired_diffs is empty")
    if not np.all(np.isfinite(d)):
        raise ValueError("paired_diffs must be finite")
    nonzero = d[d != 0.0]
    if nonzero.size == 0:
        return WilcoxonResult(statistic=0.0, p_value=1.0, n=0, degenerate=True)
    ranks = _average_ranks(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0.0].sum())
    n = int(nonzero.size)
    if n <= 20:
        p = _exact_two_sided(ranks, w_plus)
    else:
        p = _normal_two_sided(ranks, w_plus, n)
    return WilcoxonResult(statistic=w_plus, p_value=p, n=n, degenerate=False)


@dataclass(frozen=True)
class HistogramSpec:
    """bin_count bins over [lo, hi); the final bin also includes hi."""

    bin_count: int
    lo: float = 0.0
    hi: float = math.log(2.0)
    normalization: str = "count"

    def __post_init__(self) -> None:
        if self.bin_count < 1:
            raise ValueError("bin_count must be at least 1")
        if not (self.lo < self.hi):
            raise ValueError(f"histogram range must satisfy lo < hi, got ({self.lo!r}, {self.hi!r})")
        if self.normalization not in ("count", "density"):
            raise ValueError(f"normalization must be 'count' or 'density', got {self.normalization!r}")


@dataclass(frozen=True)
class HistogramResult:
    edges: np.ndarray
    values: np.ndarray
    underflow: int
    overflow: int
    normalization: str

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["bin_lo", "bin_hi", "value"])
            for k in range(self.values.size):
                writer.writerow([repr(float(self.edges[k])), repr(float(self.edges[k + 1])), repr(float(self.values[k]))])
            writer.writerow(["underflow", "", self.underflow])
            writer.writerow(["overflow", "", self.overflow])


def histogram(values, spec: HistogramSpec) -> HistogramResult:
    """Bin values using the given HistogramSpec; out-of-range values go to underflow/overflow.

    Density normalization divides by (total count * bin width) including the
    out-of-range values, so densities * width sum to the in-range fraction.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    counts, edges = np.histogram(v, bins=spec.bin_count, range=(spec.lo, spec.hi))
    underflow = int(np.count_nonzero(v < spec.lo))
    overflow = int(np.count_nonzero(v > spec.hi))
    if spec.normalization == "density":
        width = (spec.hi - spec.lo) / spec.bin_count
        out = counts / (v.size * width) if v.size else counts.astype(np.float64)
    else:
        out = counts
    out = np.asarray(out)
    out.setflags(write=False)
    edges.setflags(write=False)
    return HistogramResult(
        edges=edges, values=out, underflow=underflow, overflow=overflow, normalization=spec.normalization
    )
