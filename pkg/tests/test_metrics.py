import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conformal_ordinal import (
    THREE_BAND,
    ConformalModel,
    MetricError,
    PredictionSet,
    RecordSet,
    accuracy,
    avg_set_size,
    coverage,
    evaluate,
    macro_f1,
    point_prediction,
    predict_batch,
    qwk,
    singleton_rate,
    uacc,
)
from conformal_ordinal.metrics import EvalReport, format_table, point_predictions
from oracles import qwk_direct


def _sets(*members):
    return [PredictionSet(str(i), tuple(m)) for i, m in enumerate(members)]


@pytest.mark.parametrize("probs, label", [([0.1, 0.8, 0.1], 1), ([0.5, 0.5, 0.0], 0), ([1 / 11] * 11, 0)])
def test_point_prediction(probs, label):
    assert point_prediction(probs) == label


def test_accuracy():
    assert accuracy([2, 1, 0], [2, 1, 0]) == 1.0
    assert accuracy([0, 0], [1, 2]) == 0.0
    assert accuracy([0, 1, 2, 0], [0, 1, 0, 0]) == 0.75


@pytest.mark.parametrize("fn", [accuracy, lambda p, t: macro_f1(p, t, 3), lambda p, t: qwk(p, t, 3),
                                lambda p, t: coverage(_sets(*[[0]] * len(p)), t)])
def test_length_and_empty_errors(fn):
    with pytest.raises(MetricError):
        fn([0, 1], [0])
    with pytest.raises(MetricError):
        fn([], [])


def test_macro_f1():
    assert macro_f1([0, 1, 2, 1], [0, 1, 2, 1], 3) == 1.0
    # class 0: P=0.5, R=1 -> 2/3; class 1: 0 -> mean 1/3
    assert macro_f1([0, 0, 0, 0], [0, 0, 1, 1], 2) == pytest.approx(1 / 3)
    assert macro_f1([1, 0], [0, 1], 2) == 0.0


def test_macro_f1_against_sklearn():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(0)
    for _ in range(20):
        p, t = rng.integers(0, 5, 40), rng.integers(0, 5, 40)
        ref = sklearn_metrics.f1_score(t, p, labels=range(5), average="macro", zero_division=0)
        assert macro_f1(p, t, 5) == pytest.approx(ref, abs=1e-12)


def test_qwk_examples():
    assert qwk([0, 1, 2, 2], [0, 1, 2, 2], 3) == 1.0
    assert qwk([2, 0], [0, 2], 3) == -1.0
    assert qwk([1, 1, 1], [1, 1, 1], 3) == 1.0


def test_qwk_random_tables_match_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        K = int(rng.choice([3, 11]))
        p, t = rng.integers(0, K, 50), rng.integers(0, K, 50)
        assert abs(qwk(p, t, K) - qwk_direct(list(p), list(t), K)) <= 1e-12


def test_qwk_against_sklearn():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = np.random.default_rng(3)
    for _ in range(20):
        p, t = rng.integers(0, 11, 60), rng.integers(0, 11, 60)
        ref = sklearn_metrics.cohen_kappa_score(t, p, weights="quadratic", labels=range(11))
        assert qwk(p, t, 11) == pytest.approx(ref, abs=1e-12)


labels_pairs = st.integers(2, 11).flatmap(
    lambda K: st.tuples(
        st.just(K),
        st.lists(st.tuples(st.integers(0, K - 1), st.integers(0, K - 1)), min_size=2, max_size=40),
    )
)


@given(labels_pairs)
def test_qwk_symmetry_and_reversal(case):
    K, pairs = case
    p, t = [a for a, _ in pairs], [b for _, b in pairs]
    try:
        k = qwk(p, t, K)
    except MetricError:
        return
    assert qwk(t, p, K) == pytest.approx(k, abs=1e-12)
    assert qwk([K - 1 - x for x in p], [K - 1 - x for x in t], K) == pytest.approx(k, abs=1e-12)
    assert -1 - 1e-12 <= k <= 1 + 1e-12
    if p != t:
        assert k < 1


@given(st.integers(2, 11), st.integers(1, 30))
def test_qwk_opposite_constants(K, n):
    assert qwk([0] * n, [K - 1] * n, K) <= 0


def test_coverage():
    assert coverage(_sets((0, 1, 2), (0, 1, 2)), [0, 2]) == 1.0
    assert coverage(_sets((), ()), [0, 2]) == 0.0
    assert coverage(_sets((0,), (1, 2), (2,)), [0, 0, 2]) == pytest.approx(2 / 3)


def test_set_sizes():
    assert avg_set_size(_sets((0,), (1,))) == 1.0
    assert avg_set_size(_sets((0,), (0, 1), (0, 1, 2))) == 2.0
    assert avg_set_size(_sets((0, 1, 2), (0, 1, 2), (0, 1, 2), (0, 1))) == 2.75
    assert singleton_rate(_sets((0,), (2,))) == 1.0
    assert singleton_rate(_sets((0,), (1, 2))) == 0.5
    assert singleton_rate(_sets((0,), (1,), (0, 1, 2), ())) == 0.5
    with pytest.raises(MetricError):
        avg_set_size([])
    with pytest.raises(MetricError):
        singleton_rate([])


@pytest.mark.parametrize(
    "acc, K, avg, expected",
    [(0.54, 11, 2.74, 1.08), (0.77, 3, 1.29, 1.17), (0.65, 3, 2.30, 0.74)],
)
def test_uacc_published_rows(acc, K, avg, expected):
    assert uacc(acc, K, avg) == pytest.approx(expected, abs=0.005)


def test_uacc_edge_cases():
    assert uacc(1.0, 5, 5.0) == 1.0
    with pytest.raises(MetricError):
        uacc(0.5, 3, 0.0)
    with pytest.raises(MetricError):
        uacc(1.5, 3, 1.0)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(2, 20), st.floats(0.1, 20))
def test_uacc_increasing_in_accuracy(a1, a2, K, avg):
    assume(a1 < a2)
    assert uacc(a1, K, avg) < uacc(a2, K, avg)


@given(st.floats(0.01, 1), st.integers(2, 20), st.floats(0.1, 20), st.floats(0.1, 20))
def test_uacc_decreasing_in_size(acc, K, s1, s2):
    assume(s1 < s2 * (1 - 1e-9))
    assert uacc(acc, K, s1) > uacc(acc, K, s2)


@given(st.lists(st.lists(st.floats(0.01, 1), min_size=3, max_size=3), min_size=1, max_size=30),
       st.data())
def test_singleton_coverage_equals_accuracy(rows, data):
    probs = np.array(rows)
    pred = point_predictions(probs)
    truth = data.draw(st.lists(st.integers(0, 2), min_size=len(rows), max_size=len(rows)))
    sets = [PredictionSet(str(i), (int(p),)) for i, p in enumerate(pred)]
    assert coverage(sets, truth) == accuracy(pred, truth)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=30))
def test_macro_f1_equals_accuracy_on_diagonal(labels):
    # requires every class to appear, otherwise absent classes pull macro-F1 below 1
    labels = labels + [0, 1, 2, 3]
    assert macro_f1(labels, labels, 4) == accuracy(labels, labels) == 1.0


def test_metrics_are_pure():
    rng = np.random.default_rng(9)
    p, t = rng.integers(0, 11, 500), rng.integers(0, 11, 500)
    assert qwk(p, t, 11) == qwk(p.copy(), t.copy(), 11)
    assert macro_f1(p, t, 11) == macro_f1(p, t, 11)


# -- evaluate ----------------------------------------------------------------


def _model(q, space=THREE_BAND, force=False):
    return ConformalModel(0.1, q, 100, space, force)


def test_evaluate_confident_and_correct():
    probs = np.eye(3)[[0, 1, 2, 1]]
    rs = RecordSet(THREE_BAND, list("abcd"), probs, [0, 1, 2, 1])
    r = evaluate(_model(0.0), rs)
    assert (r.accuracy, r.coverage, r.avg_set_size, r.singleton_rate) == (1.0, 1.0, 1.0, 1.0)
    assert r.uacc == pytest.approx(math.sqrt(3))
    assert r.n_test == 4 and r.alpha == 0.1


def test_evaluate_empty_errors():
    with pytest.raises(MetricError):
        evaluate(_model(0.5), RecordSet(THREE_BAND, [], np.empty((0, 3))))


def test_evaluate_needs_truth():
    rs = RecordSet(THREE_BAND, ["nolabel"], [[0.2, 0.3, 0.5]])
    with pytest.raises(MetricError, match="nolabel"):
        evaluate(_model(0.5), rs)


def test_evaluate_all_empty_sets_errors():
    rs = RecordSet(THREE_BAND, ["a"], [[0.4, 0.3, 0.3]], [0])
    with pytest.raises(MetricError, match="UAcc"):
        evaluate(_model(0.1), rs)


def test_evaluate_is_composition():
    rng = np.random.default_rng(4)
    rs = RecordSet(THREE_BAND, [str(i) for i in range(300)], rng.dirichlet(np.ones(3), 300),
                   rng.integers(0, 3, 300))
    model = _model(0.6)
    report = evaluate(model, rs)
    pred = [point_prediction(p) for p in rs.probs]
    sets = predict_batch(model, rs)
    acc = accuracy(pred, rs.labels)
    assert report.accuracy == acc
    assert report.macro_f1 == macro_f1(pred, rs.labels, 3)
    assert report.qwk == qwk(pred, rs.labels, 3)
    assert report.coverage == coverage(sets, rs.labels)
    assert report.avg_set_size == avg_set_size(sets)
    assert report.singleton_rate == singleton_rate(sets)
    assert report.uacc == uacc(acc, 3, avg_set_size(sets))


def test_report_round_trip_and_table():
    r = EvalReport(0.54, 0.52, 0.82, 0.91, 2.74, 0.3, 1.0823, 267, 11, 0.1, 0.9,
                   dataset="ASAP P1", system="Llama-2 7B")
    assert EvalReport.from_dict(r.to_dict()) == r
    table = format_table([r, EvalReport(**{**r.to_dict(), "system": "Other"})])
    lines = table.splitlines()
    assert lines[0].split() == ["Dataset", "Model", "QWK", "Acc.", "F1", "Coverage", "Avg", "|C|", "UAcc"]
    assert "1.08" in lines[2] and "2.74" in lines[2]
    assert not lines[3].startswith("ASAP")
