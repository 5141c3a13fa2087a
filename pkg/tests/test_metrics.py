import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mcdd.errors import ValidationError
from mcdd.metrics import (METRIC_NAMES, MetricsReport, ScoreSet, aupr, auroc, average_reports,
                          classification_accuracy, detection_accuracy, evaluate, tnr_at_tpr)

from oracles import aupr_thresholds, auroc_pairs, detection_accuracy_enumerate, tnr_at_tpr_enumerate

METRICS = [auroc, aupr, tnr_at_tpr, detection_accuracy]


def score_sets(max_size=100):
    # small integer grid so ties are common
    values = st.lists(st.integers(-10, 10).map(float), min_size=1, max_size=max_size)
    return st.tuples(values, values)


@pytest.mark.parametrize("metric", METRICS)
def test_perfect_separation(metric):
    assert metric([3.0, 4.0, 5.0], [0.0, 1.0]) == 1.0


def test_identical_distributions():
    s = [0.1, 0.5, 0.5, 0.9]
    assert auroc(s, s) == 0.5
    assert detection_accuracy(s, s) == 0.5


def test_twenty_point_identical_case():
    s = list(range(20))
    # 17 of 20 ID scores are >= 3, so tau = 3 and OOD scores 0, 1, 2 fall below it
    assert tnr_at_tpr(s, s) == pytest.approx(0.15, abs=1e-15)
    assert tnr_at_tpr(s, s) <= 1 - 0.85 + 1 / 20


@settings(max_examples=200, deadline=None)
@given(score_sets())
def test_metrics_match_brute_force(pair):
    ids, oods = pair
    assert abs(auroc(ids, oods) - auroc_pairs(ids, oods)) <= 1e-12
    assert abs(aupr(ids, oods) - aupr_thresholds(ids, oods)) <= 1e-12
    assert abs(tnr_at_tpr(ids, oods) - tnr_at_tpr_enumerate(ids, oods)) <= 1e-12
    assert abs(detection_accuracy(ids, oods) - detection_accuracy_enumerate(ids, oods)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(score_sets())
def test_metrics_bounded(pair):
    for metric in METRICS:
        assert 0.0 <= metric(*pair) <= 1.0


@settings(max_examples=100, deadline=None)
@given(score_sets(), st.sampled_from(["exp", "cube", "affine"]))
def test_monotone_transform_invariance(pair, kind):
    ids, oods = np.array(pair[0]), np.array(pair[1])
    f = {"exp": np.exp, "cube": lambda v: v ** 3, "affine": lambda v: 3.0 * v + 7.0}[kind]
    for metric in METRICS:
        assert metric(f(ids), f(oods)) == pytest.approx(metric(ids, oods), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(score_sets())
def test_auroc_swap_symmetry(pair):
    ids, oods = pair
    assert auroc(oods, ids) == pytest.approx(1.0 - auroc(ids, oods), abs=1e-12)


def test_aupr_random_scores_near_half():
    values = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        values.append(aupr(rng.normal(size=2000), rng.normal(size=2000)))
    assert all(abs(v - 0.5) < 0.1 for v in values)
    assert abs(np.mean(values) - 0.5) < 0.03


def test_tnr_level_validation():
    with pytest.raises(ValidationError):
        tnr_at_tpr([1.0], [0.0], level=1.0)


def test_score_set_validation():
    with pytest.raises(ValidationError):
        ScoreSet([], [1.0])
    with pytest.raises(ValidationError):
        ScoreSet([np.nan], [1.0])
    s = ScoreSet([1, 2], [0])
    assert auroc(s) == 1.0


def test_classification_accuracy():
    assert classification_accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert classification_accuracy([0, 1, 2, 3], [0, 1, 0, 0]) == 0.5
    with pytest.raises(ValidationError):
        classification_accuracy([0, 1], [0])


def test_evaluate_and_average():
    a = evaluate([2.0, 3.0], [0.0, 1.0], [0, 1], [0, 1])
    b = evaluate([0.0, 1.0], [2.0, 3.0], [0, 1], [1, 1])
    assert a.to_dict() == {m: 1.0 for m in METRIC_NAMES}
    mean = average_reports([a, b])
    assert mean.auroc == pytest.approx(0.5)
    assert mean.classification_accuracy == pytest.approx(0.75)
    assert MetricsReport.from_dict(mean.to_dict()) == mean


def test_average_keeps_missing_accuracy_missing():
    a = evaluate([2.0], [0.0])
    assert a.classification_accuracy is None
    assert average_reports([a, a]).classification_accuracy is None
    with pytest.raises(ValidationError):
        average_reports([])
