"""Ranking metrics for exact and set-level anomaly labels.

Two AUC variants live here.  empirical_auc counts strictly-winning
anomaly/normal score pairs (ties count zero); this is the metric of
record.  roc_curve reports the trapezoidal area, which credits ties
with one half, so the two can differ on tied scores -- both behaviors
are intentional and documented.

The set-level variant replaces each weakly labeled group of scores by
its maximum before pair counting: a group "fires" if any member does.
"""

import csv
from dataclasses import dataclass

import numpy as np


class EmptyScoresError(ValueError):
    """Raised when a rate is requested over an empty score collection."""


def _check_scores(name, scores):
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise EmptyScoresError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def empirical_auc(anomaly_scores, normal_scores):
    """Fraction of (anomaly, normal) pairs where the anomaly scores strictly higher.

    Computed by sorting the normal scores once, so the cost is
    O((m+n) log(m+n)) rather than the quadratic pair sum.
    """
    a = _check_scores("anomaly_scores", anomaly_scores)
    n = _check_scores("normal_scores", normal_scores)
    sorted_n = np.sort(n)
    wins = np.searchsorted(sorted_n, a, side="left").sum()
    return float(wins) / (a.size * n.size)


def set_max_scores(sets):
    """Maximum score per weakly labeled set, order preserving."""
    out = np.empty(len(sets))
    for k, s in enumerate(sets):
        arr = np.asarray(s, dtype=np.float64)
        if arr.size == 0:
            raise EmptyScoresError(f"set {k} is empty")
        out[k] = arr.max()
    return out


def empirical_inexact_auc(sets, normal_scores):
    """Pairwise AUC with each weakly labeled set represented by its max score."""
    if len(sets) == 0:
        raise EmptyScoresError("sets must be nonempty")
    return empirical_auc(set_max_scores(sets), normal_scores)


@dataclass
class RocCurve:
    """ROC points ordered by descending threshold, plus trapezoidal area."""

    thresholds: np.ndarray
    fpr: np.ndarray
    tpr: np.ndarray
    auc: float

    @property
    def points(self):
        return list(zip(self.fpr, self.tpr))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["threshold", "fpr", "tpr"])
            for h, f, t in zip(self.thresholds, self.fpr, self.tpr):
                writer.writerow([repr(float(h)), repr(float(f)), repr(float(t))])


def roc_curve(anomaly_scores, normal_scores):
    """Sweep thresholds over all distinct scores and collect (FPR, TPR) points.

    The curve always starts at (0, 0) and ends at (1, 1).  The reported
    area is trapezoidal, equivalent to counting tied pairs as one half.
    """
    a = _check_scores("anomaly_scores", anomaly_scores)
    n = _check_scores("normal_scores", normal_scores)
    levels = np.unique(np.concatenate([a, n]))[::-1]
    sorted_a = np.sort(a)
    sorted_n = np.sort(n)
    # strict '>' at threshold h: count of scores above h
    tpr = (a.size - np.searchsorted(sorted_a, levels, side="right")) / a.size
    fpr = (n.size - np.searchsorted(sorted_n, levels, side="right")) / n.size
    thresholds = np.concatenate([[np.inf], levels, [-np.inf]])
    fpr = np.concatenate([[0.0], fpr, [1.0]])
    tpr = np.concatenate([[0.0], tpr, [1.0]])
    auc = float(np.trapezoid(tpr, fpr))
    return RocCurve(thresholds=thresholds, fpr=fpr, tpr=tpr, auc=auc)
