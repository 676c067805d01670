import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmnet.errors import ContractError
from bmnet.evaluation import (
    ConfusionCounts,
    aggregate_folds,
    confusion,
    evaluate,
    metrics,
    roc_auc,
    roc_curve,
    trapezoid_auc,
)


def mann_whitney(scores, labels):
    """O(n^2) pair counting, ties worth one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p in pos for n in neg)
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_simple(self):
        assert confusion([0.9, 0.1], [1, 0]) == ConfusionCounts(tp=1, fp=0, tn=1, fn=0)

    def test_tie_is_positive(self):
        assert confusion([0.5], [0]).fp == 1

    def test_matches_loop(self, rng):
        s, y = rng.uniform(size=50), rng.integers(0, 2, size=50)
        c = confusion(s, y)
        tally = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
        for si, yi in zip(s, y):
            key = ("t" if (si >= 0.5) == (yi == 1) else "f") + ("p" if si >= 0.5 else "n")
            tally[key] += 1
        assert c == ConfusionCounts(**tally)
        assert c.total == 50

    def test_empty(self):
        with pytest.raises(ContractError):
            confusion([], [])


class TestMetrics:
    def test_perfect(self):
        m = metrics(ConfusionCounts(tp=1, fp=0, tn=1, fn=0))
        assert all(v == 1.0 for v in m.values())

    def test_undefined_ppv(self):
        m = metrics(ConfusionCounts(tp=0, fp=0, tn=3, fn=2))
        assert m["ppv"] is None and m["f1"] is None
        assert m["sen"] == 0.0

    def test_hand_case(self):
        m = metrics(ConfusionCounts(tp=8, fp=4, tn=6, fn=2))
        assert m["acc"] == pytest.approx(0.7)
        assert m["sen"] == pytest.approx(0.8)
        assert m["spe"] == pytest.approx(0.6)
        assert m["ppv"] == pytest.approx(2 / 3)
        assert m["f1"] == pytest.approx(0.7273, abs=5e-5)

    def test_zero_total(self):
        with pytest.raises(ContractError):
            metrics(ConfusionCounts(0, 0, 0, 0))


counts = st.integers(0, 200)


@settings(max_examples=500, deadline=None)
@given(counts, counts, counts, counts)
def test_metric_identities(tp, fp, tn, fn):
    c = ConfusionCounts(tp, fp, tn, fn)
    if c.total == 0:
        return
    m = metrics(c)
    p, n = tp + fn, tn + fp
    sen = m["sen"] if m["sen"] is not None else 0.0
    spe = m["spe"] if m["spe"] is not None else 0.0
    assert m["acc"] == pytest.approx((sen * p + spe * n) / (p + n), rel=1e-12, abs=1e-15)
    if m["f1"] is not None:
        assert m["f1"] == pytest.approx(2 * m["ppv"] * m["sen"] / (m["ppv"] + m["sen"]), rel=1e-12)
    for v in m.values():
        assert v is None or 0.0 <= v <= 1.0


class TestRoc:
    def test_separated(self):
        auc, pts = roc_auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])
        assert auc == 1.0
        assert (0.0, 1.0) in pts

    def test_all_ties(self):
        auc, pts = roc_auc([0.3] * 6, [1, 0, 1, 0, 0, 1])
        assert auc == 0.5
        assert pts == [(0.0, 0.0), (1.0, 1.0)]

    def test_random_n30_matches_pair_counting(self, rng):
        s = np.round(rng.uniform(size=30), 1)  # coarse grid forces ties
        y = np.r_[np.ones(12, int), np.zeros(18, int)]
        assert roc_auc(s, y)[0] == mann_whitney(s, y)

    def test_curve_shape(self, rng):
        s, y = rng.normal(size=40), rng.integers(0, 2, size=40)
        y[:2] = [0, 1]
        auc, curve = roc_curve(s, y)
        assert len(curve.fpr) == len(np.unique(s)) + 1
        assert curve.thresholds[0] == np.inf
        assert (curve.fpr[0], curve.tpr[0]) == (0.0, 0.0) and (curve.fpr[-1], curve.tpr[-1]) == (1.0, 1.0)
        assert np.all(np.diff(curve.fpr) >= 0) and np.all(np.diff(curve.tpr) >= 0)
        assert trapezoid_auc(curve.fpr, curve.tpr) == pytest.approx(auc, abs=1e-12)

    def test_single_class(self):
        with pytest.raises(ContractError):
            roc_auc([0.1, 0.2], [1, 1])


@settings(max_examples=300, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_auc_equals_pair_counting(n, seed, levels):
    rng = np.random.Generator(np.random.PCG64(seed))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    s = rng.integers(0, levels, size=n) / levels
    assert roc_auc(s, y)[0] == mann_whitney(s, y)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
def test_auc_monotone_invariance(seed, scale, offset):
    rng = np.random.Generator(np.random.PCG64(seed))
    s = rng.integers(0, 15, size=40) / 15.0
    y = rng.integers(0, 2, size=40)
    y[:2] = [0, 1]
    base = roc_auc(s, y)[0]
    assert roc_auc(np.exp(s), y)[0] == base
    assert roc_auc(scale * s + offset, y)[0] == base


class TestEvaluateAndAggregate:
    def test_evaluate_single_class_auc_none(self):
        r = evaluate([0.7, 0.2], [1, 1])
        assert r.auc is None and r.spe is None and r.n_neg == 0

    def test_single_fold(self):
        r = evaluate([0.9, 0.2, 0.6, 0.4], [1, 0, 0, 1])
        agg = aggregate_folds([r])
        assert agg["acc"] == {"mean": r.acc, "std": 0.0, "n": 1}

    def test_identical(self):
        r = evaluate([0.9, 0.2, 0.6, 0.4], [1, 0, 0, 1])
        assert all(v["std"] == 0.0 for v in aggregate_folds([r, r, r]).values())

    def test_hand_three_folds(self):
        reports = [
            evaluate([0.9, 0.1], [1, 0]),  # acc 1
            evaluate([0.9, 0.9], [1, 0]),  # acc 0.5, spe 0
            evaluate([0.1, 0.1], [1, 0]),  # acc 0.5, ppv undefined
        ]
        agg = aggregate_folds(reports)
        assert agg["acc"]["mean"] == pytest.approx(2 / 3)
        assert agg["acc"]["std"] == pytest.approx(np.std([1, 0.5, 0.5], ddof=1))
        assert agg["ppv"]["n"] == 2 and agg["ppv"]["mean"] == pytest.approx(0.75)

    def test_empty(self):
        with pytest.raises(ContractError):
            aggregate_folds([])
