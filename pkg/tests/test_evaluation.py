from __future__ import annotations

import numpy as np
import pytest

from tokengraphs.dataset import LabeledDataset
from tokengraphs.evaluation import (
    ConfusionCounts,
    LeakageError,
    UndefinedAUCError,
    VariantMismatchError,
    confusion,
    cross_window_eval,
    evaluate_model,
    kfold_cv,
    metrics,
    roc_auc,
    stratified_folds,
    unlabeled_scan,
    write_report,
    write_roc,
    write_scan_report,
)
from tokengraphs.ingest import BlockWindow
from tokengraphs.model import train

from oracles import pairwise_auc
from test_model import toy_dataset, _vector

WINDOW = BlockWindow(18_000_000, 18_100_000)


# --- confusion metrics ----------------------------------------------------------

def test_hand_case_metrics():
    counts = ConfusionCounts(tp=5, fp=1, fn=3, tn=11)
    accuracy, precision, recall, f1 = metrics(counts)
    assert accuracy == pytest.approx(0.8)
    assert precision == pytest.approx(5 / 6)
    assert recall == pytest.approx(0.625)
    assert f1 == pytest.approx(5 / 7, abs=5e-5)  # 0.7142857...


def test_no_predicted_positives_uses_zero_conventions():
    accuracy, precision, recall, f1 = metrics(ConfusionCounts(tp=0, fp=0, fn=4, tn=6))
    assert (precision, recall, f1) == (0.0, 0.0, 0.0)
    assert accuracy == pytest.approx(0.6)


def test_all_correct_is_all_ones():
    assert metrics(ConfusionCounts(tp=4, fp=0, fn=0, tn=6)) == (1.0, 1.0, 1.0, 1.0)


def test_zero_rows_is_an_error():
    with pytest.raises(ValueError):
        metrics(ConfusionCounts())


def test_confusion_matches_definitions():
    counts = confusion([1, 1, 0, 0, 1], [1, 0, 1, 0, 1])
    assert (counts.tp, counts.fp, counts.fn, counts.tn) == (2, 1, 1, 1)
    assert counts.total == 5


# --- roc / auc --------------------------------------------------------------------

def test_perfect_separation_is_auc_one():
    _, auc = roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
    assert auc == pytest.approx(1.0)


def test_all_tied_scores_is_auc_half():
    points, auc = roc_auc([0.5] * 6, [1, 0, 1, 0, 1, 0])
    assert auc == pytest.approx(0.5)
    assert points == [(0.0, 0.0), (1.0, 1.0)]


def test_single_class_truth_is_undefined():
    with pytest.raises(UndefinedAUCError):
        roc_auc([0.1, 0.9], [1, 1])


def test_roc_endpoints_and_monotonicity():
    rng = np.random.default_rng(0)
    scores = rng.random(50).round(1).tolist()  # heavy ties
    truth = (rng.random(50) < 0.4).astype(int).tolist()
    points, _ = roc_auc(scores, truth)
    assert points[0] == (0.0, 0.0) and points[-1] == (1.0, 1.0)
    for (fpr0, tpr0), (fpr1, tpr1) in zip(points, points[1:]):
        assert fpr1 >= fpr0 and tpr1 >= tpr0


def test_trapezoid_equals_pairwise_oracle_with_ties():
    rng = np.random.default_rng(17)
    for _ in range(100):
        n = int(rng.integers(5, 31))
        scores = (rng.integers(0, 7, size=n) / 6.0).tolist()  # many exact ties
        truth = (rng.random(n) < 0.5).astype(int).tolist()
        if sum(truth) in (0, n):
            truth[0] = 1 - truth[0]
        _, auc = roc_auc(scores, truth)
        assert auc == pytest.approx(pairwise_auc(scores, truth), abs=1e-12)


# --- folds ------------------------------------------------------------------------

def test_hundred_rows_make_five_equal_folds():
    labels = [1] * 35 + [0] * 65
    assignment = stratified_folds(labels, 5, seed=0)
    sizes = [assignment.count(f) for f in range(5)]
    assert sizes == [20] * 5


def test_uneven_class_counts_stay_within_one_row():
    labels = [1] * 33 + [0] * 67
    assignment = stratified_folds(labels, 5, seed=1)
    sizes = [assignment.count(f) for f in range(5)]
    assert max(sizes) - min(sizes) <= 1


def test_stratification_keeps_class_share_per_fold():
    labels = [1] * 30 + [0] * 70
    assignment = stratified_folds(labels, 5, seed=2)
    for fold in range(5):
        positives = sum(1 for lab, a in zip(labels, assignment)
                        if a == fold and lab == 1)
        assert positives == 6  # 30% of 20, exactly divisible here


def test_fold_assignment_is_seeded_and_deterministic():
    labels = [1] * 40 + [0] * 60
    assert stratified_folds(labels, 5, seed=7) == stratified_folds(labels, 5, seed=7)
    assert stratified_folds(labels, 5, seed=7) != stratified_folds(labels, 5, seed=8)


def test_class_smaller_than_k_is_rejected():
    with pytest.raises(ValueError):
        stratified_folds([1, 0, 0, 0, 0, 0], 5, seed=0)


def test_folds_partition_every_row():
    labels = [1] * 13 + [0] * 29
    assignment = stratified_folds(labels, 5, seed=3)
    assert len(assignment) == 42
    assert set(assignment) == set(range(5))


# --- cross validation ----------------------------------------------------------------

def test_cv_report_shape_and_averaging():
    dataset = toy_dataset(30)
    report = kfold_cv(dataset, k=5, seed=0)
    assert len(report.breakdown) == 5
    for attr in ("accuracy", "precision", "recall", "f1", "auc"):
        mean = float(np.mean([getattr(f, attr) for f in report.breakdown]))
        assert getattr(report, attr) == pytest.approx(mean, abs=1e-12)
    total = sum(f.counts.total for f in report.breakdown)
    assert total == len(dataset)


def test_cv_is_deterministic_for_a_seed():
    dataset = toy_dataset(25)
    r1 = kfold_cv(dataset, k=5, seed=4)
    r2 = kfold_cv(dataset, k=5, seed=4)
    assert r1.accuracy == r2.accuracy
    assert [f.counts.tp for f in r1.breakdown] == [f.counts.tp for f in r2.breakdown]


def test_evaluating_training_rows_trips_the_leakage_guard():
    dataset = toy_dataset(20)
    model = train(dataset)
    with pytest.raises(LeakageError):
        evaluate_model(model, dataset, check_leakage=True)


# --- cross-window ----------------------------------------------------------------------

def test_eval_on_train_window_reproduces_in_sample_metrics():
    dataset = toy_dataset(30)
    model, reports = cross_window_eval(dataset, [dataset])
    in_sample = evaluate_model(model, dataset)
    assert reports[0].accuracy == in_sample.accuracy
    assert reports[0].counts.tp == in_sample.counts.tp


def test_standardizer_is_frozen_across_windows():
    train_set = toy_dataset(30, seed=0)
    shifted = toy_dataset(30, seed=1)
    model, reports = cross_window_eval(train_set, [shifted])
    direct = evaluate_model(model, shifted)
    assert reports[0].accuracy == direct.accuracy


def test_inverted_class_balance_hits_precision_not_accuracy():
    train_set = toy_dataset(40, seed=0)
    # evaluation window with scams rare: false positives hurt precision more
    rare = LabeledDataset(rows=[r for r in toy_dataset(40, seed=2).rows
                                if r[1] == 0]
                          + [r for r in toy_dataset(5, seed=3).rows if r[1] == 1])
    model, reports = cross_window_eval(train_set, [rare])
    report = reports[0]
    assert report.accuracy >= 0.8


# --- scans -------------------------------------------------------------------------------

def small_vector(token, nodes, lifetime, std=None, amount=10 ** 19):
    return _vector(token, {
        "num_nodes": nodes, "num_edges": nodes + 10, "num_components": 5,
        "avg_comp_size": nodes / 5, "lifetime": lifetime,
        "transfer_std_dev": std if std is not None else lifetime / 4 + 1.0,
        "amount": amount,
    })


def test_scan_requires_reduced_model():
    dataset = toy_dataset(20)
    full_model = train(dataset, variant="full")
    with pytest.raises(VariantMismatchError):
        unlabeled_scan(full_model, [small_vector("0x" + "1" * 40, 50, 500)])


def test_scan_empty_input_is_all_zeros():
    model = train(toy_dataset(20), variant="reduced")
    report = unlabeled_scan(model, [])
    assert (report.total, report.predicted_scam) == (0, 0)
    assert report.scam_share == report.share_over_100_nodes == 0.0
    assert report.share_lifetime_under_1000 == 0.0


def test_scan_ignores_graphs_above_the_size_cut():
    model = train(toy_dataset(20), variant="reduced")
    vectors = [small_vector("0x" + "2" * 40, 2000, 500),
               small_vector("0x" + "3" * 40, 400, 500)]
    report = unlabeled_scan(model, vectors, max_nodes=500)
    assert report.total == 1


def test_scan_strata_shares():
    model = train(toy_dataset(30), variant="reduced")
    vectors = [small_vector("0x" + format(i, "040x"), 50 + 100 * (i % 3),
                            400 if i % 2 else 40_000)
               for i in range(20)]
    report = unlabeled_scan(model, vectors)
    assert report.total == 20
    assert 0.0 <= report.scam_share <= 1.0
    assert 0.0 <= report.share_over_100_nodes <= 1.0
    assert 0.0 <= report.share_lifetime_under_1000 <= 1.0


# --- report files ----------------------------------------------------------------------------

def test_report_file_has_breakdown_plus_average_row(tmp_path):
    dataset = toy_dataset(30)
    report = kfold_cv(dataset, k=5, seed=0)
    path = tmp_path / "report.csv"
    write_report(report, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("label,tp,fp,fn,tn,accuracy")
    assert len(lines) == 7  # header + 5 folds + averaged row
    assert lines[-1].startswith(report.label)


def test_roc_file_is_two_columns(tmp_path):
    points, _ = roc_auc([0.9, 0.4, 0.35, 0.8], [1, 0, 0, 1])
    path = tmp_path / "roc.csv"
    write_roc(points, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "fpr,tpr"
    assert len(lines) == len(points) + 1


def test_scan_report_file_fields(tmp_path):
    model = train(toy_dataset(20), variant="reduced")
    report = unlabeled_scan(model, [small_vector("0x" + "4" * 40, 120, 700)])
    path = tmp_path / "scan.csv"
    write_scan_report(report, path)
    text = path.read_text()
    for key in ("total_scanned", "predicted_scam_share", "share_over_100_nodes",
                "share_lifetime_under_1000"):
        assert key in text
