"""Explanation-quality and classification metrics with bootstrap
standard errors.

Overlap metrics: IoU and DSC between boolean masks. Two empty masks score
1 by convention (a degenerate case; evaluation skips samples without
annotations, so it only matters for direct library use).

AUROC is the Mann-Whitney statistic with ties counted 1/2, which equals
the trapezoidal area under the ROC curve. AUPRC uses step-wise
interpolation (precision at each achieved recall level), never linear
interpolation in PR space.

Bootstrap SEs are the ddof-1 standard deviation of the statistic over B
resamples drawn with replacement. Resample i draws from spawned
substream i of the seed, so results do not depend on execution order. A
resample on which the statistic is undefined (raises ValueError) is
redrawn from the same substream, with a global cap of 10*B attempts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import NumericError

CLASSIFICATION_METRIC_NAMES = (
    "auroc",
    "auprc",
    "accuracy",
    "sensitivity",
    "specificity",
    "ppv",
    "npv",
)


def _check_pair(a: np.ndarray, b: np.ndarray):
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype != bool or b.dtype != bool or a.ndim != 2 or b.ndim != 2:
        raise ValueError("masks must be 2-D boolean arrays")
    if a.shape != b.shape:
        raise ValueError(f"mask dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def iou(region: np.ndarray, annotation: np.ndarray) -> float:
    """|R & A| / |R | A|; 1.0 when both masks are empty."""
    region, annotation = _check_pair(region, annotation)
    union = np.logical_or(region, annotation).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(region, annotation).sum() / union)


def dsc(region: np.ndarray, annotation: np.ndarray) -> float:
    """2|R & A| / (|R| + |A|); 1.0 when both masks are empty."""
    region, annotation = _check_pair(region, annotation)
    total = int(region.sum()) + int(annotation.sum())
    if total == 0:
        return 1.0
    return float(2 * np.logical_and(region, annotation).sum() / total)


def _split_scores(scores, labels):
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError(f"scores and labels must be 1-D and aligned, got {scores.shape} vs {labels.shape}")
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError(f"need both classes, got {len(pos)} positive and {len(neg)} negative")
    return scores, labels, pos, neg


def auroc(scores, labels) -> float:
    """Mann-Whitney statistic: P(score_pos > score_neg) + 0.5 P(equal)."""
    scores, labels, pos, neg = _split_scores(scores, labels)
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores))
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # midrank, 1-based
        i = j + 1
    n_pos, n_neg = len(pos), len(neg)
    rank_sum = ranks[np.asarray(labels) == 1].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def roc_curve(scores, labels) -> list[tuple[float, float, float]]:
    """(threshold, fpr, tpr) points, thresholds descending from +inf.

    Predicted positive means score >= threshold, so the curve starts at
    (0, 0) and ends at (1, 1).
    """
    scores, labels, pos, neg = _split_scores(scores, labels)
    thresholds = np.concatenate(([np.inf], np.unique(scores)[::-1]))
    points = []
    for t in thresholds:
        tp = (pos >= t).sum()
        fp = (neg >= t).sum()
        points.append((float(t), float(fp / len(neg)), float(tp / len(pos))))
    return points


def pr_curve(scores, labels) -> list[tuple[float, float, float]]:
    """(threshold, recall, precision) at each distinct score, descending."""
    scores, labels, pos, neg = _split_scores(scores, labels)
    points = []
    for t in np.unique(scores)[::-1]:
        tp = (pos >= t).sum()
        fp = (neg >= t).sum()
        points.append((float(t), float(tp / len(pos)), float(tp / (tp + fp))))
    return points


def auprc(scores, labels) -> float:
    """Area under the precision-recall curve with step interpolation."""
    points = pr_curve(scores, labels)
    area = 0.0
    prev_recall = 0.0
    for _, recall, precision in points:
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return float(area)


def classification_metrics(scores, labels, cutoff: float) -> dict[str, float | None]:
    """Confusion-matrix metrics with predicted positive = score >= cutoff.

    Metrics whose denominator is empty (e.g. PPV with no predicted
    positives) are reported as None, never as 0.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    predicted = scores >= cutoff
    actual = labels == 1
    tp = int(np.sum(predicted & actual))
    fp = int(np.sum(predicted & ~actual))
    fn = int(np.sum(~predicted & actual))
    tn = int(np.sum(~predicted & ~actual))

    def ratio(num, den):
        return num / den if den > 0 else None

    return {
        "accuracy": ratio(tp + tn, tp + tn + fp + fn),
        "sensitivity": ratio(tp, tp + fn),
        "specificity": ratio(tn, tn + fp),
        "ppv": ratio(tp, tp + fp),
        "npv": ratio(tn, tn + fn),
    }


def select_cutoff(scores, labels) -> float:
    """Cutoff closest to the ROC upper-left corner.

    Candidates are the midpoints between adjacent distinct scores plus
    -inf and +inf; the candidate minimizing sqrt((1-sens)^2 + (1-spec)^2)
    wins, with ties resolved toward the smaller cutoff.
    """
    scores, labels, pos, neg = _split_scores(scores, labels)
    distinct = np.unique(scores)
    candidates = [-np.inf]
    candidates.extend((distinct[:-1] + distinct[1:]) / 2)
    candidates.append(np.inf)
    best_cutoff, best_dist = None, None
    for c in candidates:  # ascending, so ties keep the smaller cutoff
        sens = (pos >= c).sum() / len(pos)
        spec = (neg < c).sum() / len(neg)
        dist = float(np.hypot(1 - sens, 1 - spec))
        if best_dist is None or dist < best_dist:
            best_cutoff, best_dist = float(c), dist
    return best_cutoff


def bootstrap_se(rows, statistic, n_resamples: int, seed: int) -> float:
    """Standard error of `statistic` over resamples of `rows`.

    rows: sequence indexable by an integer array (an ndarray of values,
    or of (score, label) pairs). statistic: callable on the resampled
    rows. One resample (of a singleton dataset or otherwise) returns 0.0
    by convention; a statistic raising ValueError triggers a redraw.
    """
    rows = np.asarray(rows)
    n = rows.shape[0]
    if n < 1:
        raise ValueError("need at least one row to bootstrap")
    if n_resamples < 1:
        raise ValueError(f"n_resamples must be >= 1, got {n_resamples}")
    if n_resamples == 1:
        return 0.0
    streams = np.random.SeedSequence(seed).spawn(n_resamples)
    values = np.empty(n_resamples)
    attempts = 0
    cap = 10 * n_resamples
    for i, stream in enumerate(streams):
        rng = np.random.Generator(np.random.PCG64(stream))
        while True:
            attempts += 1
            if attempts > cap:
                raise NumericError(
                    f"bootstrap exceeded {cap} attempts; statistic undefined on too many resamples"
                )
            idx = rng.integers(0, n, size=n)
            try:
                values[i] = statistic(rows[idx])
            except ValueError:
                continue
            break
    return float(np.std(values, ddof=1))


@dataclass
class EvalReport:
    """Per-sample overlap scores and their bootstrap-backed aggregates."""

    rows: list[tuple[str, float, float]]  # (sample_id, iou, dsc)
    mean_iou: float
    se_iou: float
    mean_dsc: float
    se_dsc: float
    n_resamples: int
    seed: int
    skipped: int  # positive samples dropped for want of an annotation


def explanation_quality(
    entries,
    n_resamples: int = 1000,
    seed: int = 0,
) -> EvalReport:
    """Score focus regions against annotations.

    entries: iterable of (sample_id, focus_mask, annotation_or_None).
    Samples without an annotation are skipped and counted. Aggregates are
    means over the scored samples with bootstrap SEs over the per-sample
    values.
    """
    rows = []
    skipped = 0
    for sample_id, focus, annotation in entries:
        if annotation is None:
            skipped += 1
            continue
        rows.append((str(sample_id), iou(focus, annotation), dsc(focus, annotation)))
    if not rows:
        raise ValueError("no samples with annotations to evaluate")
    ious = np.array([r[1] for r in rows])
    dscs = np.array([r[2] for r in rows])
    return EvalReport(
        rows=rows,
        mean_iou=float(ious.mean()),
        se_iou=bootstrap_se(ious, np.mean, n_resamples, seed),
        mean_dsc=float(dscs.mean()),
        se_dsc=bootstrap_se(dscs, np.mean, n_resamples, seed),
        n_resamples=n_resamples,
        seed=seed,
        skipped=skipped,
    )


# ---------------------------------------------------------------------------
# CSV emission. Floats are written with repr so that equal runs produce
# identical bytes.

def write_sample_report(path, tagged_reports) -> None:
    """tagged_reports: iterable of (method, guided, EvalReport)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "method", "guided", "iou", "dsc"])
        for method, guided, report in tagged_reports:
            for sample_id, iou_value, dsc_value in report.rows:
                writer.writerow([sample_id, method, guided, repr(iou_value), repr(dsc_value)])


def write_aggregate_report(path, tagged_reports) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "guided", "metric", "mean", "se", "B", "seed"])
        for method, guided, report in tagged_reports:
            writer.writerow(
                [method, guided, "iou", repr(report.mean_iou), repr(report.se_iou),
                 report.n_resamples, report.seed]
            )
            writer.writerow(
                [method, guided, "dsc", repr(report.mean_dsc), repr(report.se_dsc),
                 report.n_resamples, report.seed]
            )


def write_roc_csv(path, scores, labels) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "fpr", "tpr"])
        for threshold, fpr, tpr in roc_curve(scores, labels):
            writer.writerow([repr(threshold), repr(fpr), repr(tpr)])


def write_pr_csv(path, scores, labels) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "recall", "precision"])
        for threshold, recall, precision in pr_curve(scores, labels):
            writer.writerow([repr(threshold), repr(recall), repr(precision)])
