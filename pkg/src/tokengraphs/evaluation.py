"""Classification metrics, ROC/AUC, cross-validation and scan reports."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import LabeledDataset
from .features import FeatureVector
from .model import Model, TrainConfig, predict_proba, train


class UndefinedAUCError(ValueError):
    """ROC/AUC need both classes in the truth labels."""


class LeakageError(AssertionError):
    """A model was evaluated on rows it was standardized/trained on."""


class VariantMismatchError(ValueError):
    pass


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)


def confusion(predicted: Sequence[int], truth: Sequence[int]) -> ConfusionCounts:
    counts = ConfusionCounts()
    for pred, actual in zip(predicted, truth, strict=True):
        if actual == 1:
            if pred == 1:
                counts.tp += 1
            else:
                counts.fn += 1
        else:
            if pred == 1:
                counts.fp += 1
            else:
                counts.tn += 1
    return counts


def metrics(counts: ConfusionCounts) -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, F1), with 0 conventions for empty denominators."""
    total = counts.total
    if total == 0:
        raise ValueError("metrics of zero evaluated rows are undefined")
    accuracy = (counts.tp + counts.tn) / total
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return accuracy, precision, recall, f1


def roc_auc(
    scores: Sequence[float], truth: Sequence[int],
) -> tuple[list[tuple[float, float]], float]:
    """ROC points and trapezoidal AUC, grouping tied scores into one step.

    With ties grouped, the trapezoid rule equals the pairwise definition
    P(score+ > score-) + P(score+ = score-)/2 exactly.
    """
    y = np.asarray(truth, dtype=np.int64)
    s = np.asarray(scores, dtype=np.float64)
    if y.size != s.size or y.size == 0:
        raise ValueError("scores and truth must be equal-length and non-empty")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAUCError("both classes are required for a ROC curve")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]

    points: list[tuple[float, float]] = [(0.0, 0.0)]
    auc = 0.0
    tp = fp = 0
    i = 0
    while i < y_sorted.size:
        j = i
        while j < y_sorted.size and s_sorted[j] == s_sorted[i]:
            j += 1
        pos_in_group = int(y_sorted[i:j].sum())
        neg_in_group = (j - i) - pos_in_group
        prev_tpr = tp / n_pos
        prev_fpr = fp / n_neg
        tp += pos_in_group
        fp += neg_in_group
        tpr = tp / n_pos
        fpr = fp / n_neg
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0
        points.append((fpr, tpr))
        i = j
    return points, auc


@dataclass
class EvalReport:
    label: str
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    roc: list[tuple[float, float]] = field(repr=False, default_factory=list)
    breakdown: list["EvalReport"] = field(default_factory=list)


def _evaluate(label: str, scores: np.ndarray, truth: Sequence[int]) -> EvalReport:
    predicted = [1 if p >= 0.5 else 0 for p in scores]
    counts = confusion(predicted, truth)
    accuracy, precision, recall, f1 = metrics(counts)
    roc, auc = roc_auc(scores, truth)
    return EvalReport(label=label, counts=counts, accuracy=accuracy,
                      precision=precision, recall=recall, f1=f1,
                      auc=auc, roc=roc)


def evaluate_model(model: Model, dataset: LabeledDataset, label: str = "eval",
                   check_leakage: bool = False) -> EvalReport:
    if check_leakage and model.train_row_ids is not None:
        overlap = model.train_row_ids.intersection(dataset.row_ids())
        if overlap:
            raise LeakageError(f"{len(overlap)} evaluation rows were used in training")
    scores = predict_proba(model, dataset.vectors)
    return _evaluate(label, scores, dataset.labels)


def stratified_folds(labels: Sequence[int], k: int, seed: int) -> list[int]:
    """Seeded stratified fold assignment; returns a fold id per row.

    Rows of each class are shuffled and dealt round-robin; the second class
    starts dealing where the first left off so fold sizes stay within one
    row of each other (and exact when k divides the row count).
    """
    y = np.asarray(labels, dtype=np.int64)
    for cls in (0, 1):
        if int((y == cls).sum()) < k:
            raise ValueError(f"class {cls} has fewer than {k} rows")
    rng = np.random.default_rng(seed)
    assignment = np.empty(y.size, dtype=np.int64)
    offset = 0
    for cls in (1, 0):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for position, row in enumerate(idx):
            assignment[row] = (position + offset) % k
        offset += idx.size
    return assignment.tolist()


def _subset(dataset: LabeledDataset, keep: Sequence[bool]) -> LabeledDataset:
    rows = [row for row, flag in zip(dataset.rows, keep) if flag]
    return LabeledDataset(rows=rows, windows=list(dataset.windows))


def kfold_cv(
    dataset: LabeledDataset,
    k: int = 5,
    seed: int = 0,
    config: TrainConfig | None = None,
    variant: str = "full",
) -> EvalReport:
    """Stratified k-fold cross-validation; metrics averaged over folds.

    For every fold the standardizer and coefficients are fitted on the other
    k-1 folds only; scoring a fold any model has seen raises LeakageError.
    """
    assignment = stratified_folds(dataset.labels, k, seed)
    folds: list[EvalReport] = []
    for fold_id in range(k):
        test_mask = [a == fold_id for a in assignment]
        train_set = _subset(dataset, [not m for m in test_mask])
        test_set = _subset(dataset, test_mask)
        model = train(train_set, config, variant)
        folds.append(evaluate_model(model, test_set, label=f"fold-{fold_id + 1}",
                                    check_leakage=True))

    pooled = ConfusionCounts()
    for fold in folds:
        pooled = pooled + fold.counts
    mean = lambda attr: float(np.mean([getattr(f, attr) for f in folds]))
    return EvalReport(
        label=f"cv-{k}fold",
        counts=pooled,
        accuracy=mean("accuracy"),
        precision=mean("precision"),
        recall=mean("recall"),
        f1=mean("f1"),
        auc=mean("auc"),
        breakdown=folds,
    )


def cross_window_eval(
    train_set: LabeledDataset,
    eval_sets: Sequence[LabeledDataset],
    config: TrainConfig | None = None,
    variant: str = "full",
    labels: Sequence[str] | None = None,
) -> tuple[Model, list[EvalReport]]:
    """Train once on one window, apply the frozen model to other windows.

    The standardizer is fitted on the training window only and reused
    unchanged everywhere, so later windows are scored exactly as production
    scoring would.
    """
    model = train(train_set, config, variant)
    reports: list[EvalReport] = []
    for i, eval_set in enumerate(eval_sets):
        name = labels[i] if labels else f"window-{i + 1}"
        reports.append(evaluate_model(model, eval_set, label=name))
    return model, reports


@dataclass
class ScanReport:
    total: int
    predicted_scam: int
    scam_share: float
    share_over_100_nodes: float
    share_lifetime_under_1000: float


def unlabeled_scan(
    model: Model,
    vectors: Sequence[FeatureVector],
    max_nodes: int = 500,
) -> ScanReport:
    """Score small (sub-threshold) graphs with a size-free model.

    Requires a reduced-variant model; size-dependent features would
    extrapolate far outside their training range on these graphs.
    """
    if model.variant not in ("reduced", "reduced-no-lifetime"):
        raise VariantMismatchError(
            f"scan requires a reduced-variant model, got {model.variant!r}")
    small = [fv for fv in vectors if fv.num_nodes <= max_nodes]
    if not small:
        return ScanReport(0, 0, 0.0, 0.0, 0.0)
    scores = predict_proba(model, small)
    flagged = scores >= 0.5

    def share(mask: np.ndarray) -> float:
        selected = int(mask.sum())
        return float(flagged[mask].sum() / selected) if selected else 0.0

    over_100 = np.array([fv.num_nodes > 100 for fv in small])
    young = np.array([fv.lifetime < 1000 for fv in small])
    return ScanReport(
        total=len(small),
        predicted_scam=int(flagged.sum()),
        scam_share=float(flagged.mean()),
        share_over_100_nodes=share(over_100),
        share_lifetime_under_1000=share(young),
    )


# ---------------------------------------------------------------------------
# report files

def _fmt(x: float) -> str:
    return format(x, ".10g")


def write_report(report: EvalReport, path: str | os.PathLike) -> None:
    """Per-fold/per-window rows plus the averaged row, comma separated."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("label,tp,fp,fn,tn,accuracy,precision,recall,f1,auc\n")
        for row in (*report.breakdown, report):
            c = row.counts
            handle.write(",".join((
                row.label, str(c.tp), str(c.fp), str(c.fn), str(c.tn),
                _fmt(row.accuracy), _fmt(row.precision), _fmt(row.recall),
                _fmt(row.f1), _fmt(row.auc),
            )) + "\n")


def write_window_reports(reports: Sequence[EvalReport], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("label,tp,fp,fn,tn,accuracy,precision,recall,f1,auc\n")
        for row in reports:
            c = row.counts
            handle.write(",".join((
                row.label, str(c.tp), str(c.fp), str(c.fn), str(c.tn),
                _fmt(row.accuracy), _fmt(row.precision), _fmt(row.recall),
                _fmt(row.f1), _fmt(row.auc),
            )) + "\n")


def write_roc(points: Sequence[tuple[float, float]], path: str | os.PathLike) -> None:
    """Two-column ROC point file for external plotting."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("fpr,tpr\n")
        for fpr, tpr in points:
            handle.write(f"{_fmt(fpr)},{_fmt(tpr)}\n")


def write_scan_report(report: ScanReport, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("metric,value\n")
        handle.write(f"total_scanned,{report.total}\n")
        handle.write(f"predicted_scam,{report.predicted_scam}\n")
        handle.write(f"predicted_scam_share,{_fmt(report.scam_share)}\n")
        handle.write(f"share_over_100_nodes,{_fmt(report.share_over_100_nodes)}\n")
        handle.write(f"share_lifetime_under_1000,{_fmt(report.share_lifetime_under_1000)}\n")
