import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import js_oracle

from soicf.classifier import Classifier
from soicf.objectives import changed_fraction, evaluate, f1, f1_from_probs, f2, f2_batch, norm_ratio
from soicf.reference import SAME_LABEL_DISTANCE, ReferenceSet

T4 = np.ones(4)
C4 = np.array([1.0, 1.0, 1.0, 3.0])


def test_f2_hand_arithmetic():
    assert changed_fraction(C4, T4)[0] == 0.25
    l2 = 2 / (2 + math.sqrt(12))
    assert norm_ratio(C4, T4)[0] == pytest.approx(l2, rel=1e-15)
    assert f2(C4, T4) == pytest.approx((0.25 + l2) / 2, rel=1e-15)
    assert f2(C4, T4) == pytest.approx(0.3080127018922193, abs=1e-12)


def test_f2_bounds():
    assert f2(T4, T4) == 0.0
    assert f2(-C4, C4) == 1.0
    assert f2(np.zeros(3), np.zeros(3)) == 0.0
    with pytest.raises(ValueError):
        f2(np.ones(3), np.ones(4))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 30))
def test_f2_in_unit_interval_and_batch_consistent(seed, m):
    rng = np.random.default_rng(seed)
    t = rng.standard_normal(m)
    C = t + rng.standard_normal((5, m)) * (rng.random((5, m)) < 0.3)
    batch = f2_batch(C, t)
    assert np.all((0 <= batch) & (batch <= 1))
    assert batch.tolist() == [f2(c, t) for c in C]


class Lookup(Classifier):
    def __init__(self, table):
        self.table = table
        self.n_classes = 2
        self.length = None

    def _predict_proba(self, X):
        return np.array([self.table[float(r[0])] for r in X])


def _refs(probs, label):
    probs = np.atleast_2d(probs)
    return ReferenceSet(
        series=np.zeros((probs.shape[0], 2)),
        probs=probs,
        distances=np.zeros(probs.shape[0]),
        pool_indices=np.arange(probs.shape[0]),
        requested=probs.shape[0],
        degenerate=False,
        target_probs=np.array([0.9, 0.1]),
        target_label=label,
    )


def test_f1_unchanged_prediction_is_sentinel():
    f = Lookup({0.0: [0.9, 0.1]})
    assert f1(np.zeros(2), np.zeros(2), _refs([0.2, 0.8], 0), f) == SAME_LABEL_DISTANCE


def test_f1_zero_when_matching_a_reference():
    f = Lookup({0.0: [0.9, 0.1], 1.0: [0.2, 0.8]})
    assert f1(np.ones(2), np.zeros(2), _refs([[0.3, 0.7], [0.2, 0.8]], 0), f) == 0.0


def test_f1_minimum_over_references():
    cand = np.array([[0.1, 0.9]])
    refs = np.array([[0.3, 0.7], [0.45, 0.55], [0.0, 1.0]])
    expected = min(js_oracle(cand[0], r) for r in refs)
    assert f1_from_probs(cand, 0, refs)[0] == pytest.approx(expected, abs=1e-12)


def test_f1_min_of_hand_distances():
    # references placed so their distances to the candidate are 0.3 and 0.6
    from scipy.optimize import brentq

    cand = np.array([0.0, 1.0])

    def at(dist):
        x = brentq(lambda a: js_oracle(cand, [a, 1 - a]) - dist, 0.0, 1.0)
        return [x, 1 - x]

    refs = np.array([at(0.6), at(0.3)])
    assert f1_from_probs(cand[None, :], 0, refs)[0] == pytest.approx(0.3, abs=1e-10)


def test_evaluate_shape_and_columns():
    f = Lookup({0.0: [0.9, 0.1], 1.0: [0.2, 0.8]})
    refs = _refs([0.2, 0.8], 0)
    C = np.array([[0.0, 0.0], [1.0, 0.0]])
    F = evaluate(C, np.zeros(2), refs, f)
    assert F.shape == (2, 2)
    assert F[0].tolist() == [SAME_LABEL_DISTANCE, 0.0]
    assert F[1, 0] == 0.0 and F[1, 1] == f2(C[1], np.zeros(2))
    assert evaluate(np.empty((0, 2)), np.zeros(2), refs, f).shape == (0, 2)
