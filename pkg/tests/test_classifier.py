import io
import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

from soicf.classifier import (
    ExternalClassifier,
    ProtocolError,
    TransportError,
    check_proba,
    fit_knn_softmax,
    from_spec,
    predict,
    serve,
)
from soicf.timeseries import Dataset

STUB = str(Path(__file__).with_name("stub_classifier.py"))


def stub(*args, **kw):
    return ExternalClassifier([sys.executable, STUB, *args], **kw)


@pytest.fixture
def two_points():
    return Dataset(np.array([[0.0, 0.0], [1.0, 1.0]]), [0, 1])


def test_knn_softmax_hand_computed(two_points):
    f = fit_knn_softmax(two_points)
    p = f.predict_proba([[0.0, 0.0]])[0]
    w = np.array([1.0, math.exp(-math.sqrt(2.0))])
    np.testing.assert_allclose(p, w / w.sum(), rtol=1e-14)
    assert abs(p[0] - 0.805) < 1e-3


def test_equidistant_query_is_uniform(two_points):
    p = fit_knn_softmax(two_points).predict_proba([[0.5, 0.5]])[0]
    np.testing.assert_allclose(p, [0.5, 0.5], rtol=1e-15)


def test_low_temperature_is_one_hot(two_points):
    p = fit_knn_softmax(two_points, temperature=1e-6).predict_proba([[0.2, 0.1]])[0]
    np.testing.assert_array_equal(p, [1.0, 0.0])


def test_k_neighbors_averages_per_class(tiny_two_class):
    f = fit_knn_softmax(tiny_two_class, k_neighbors=2)
    d = f.class_distances([[0.0, 0.0, 0.0, 0.0]])[0]
    brute0 = np.mean([np.linalg.norm(r) for r in tiny_two_class.X[:2]])
    brute1 = np.mean([np.linalg.norm(r) for r in tiny_two_class.X[2:]])
    np.testing.assert_allclose(d, [brute0, brute1], rtol=1e-12)


def test_training_exemplars_predict_their_label(cbf_small, knn_small):
    train = cbf_small[0]
    assert np.array_equal(knn_small.predict(train.X), train.y)


def test_empty_batch_duplicates_and_batching(cbf_small, knn_small):
    test = cbf_small[1]
    assert knn_small.predict_proba(np.empty((0, 128))).shape == (0, 3)
    P = knn_small.predict_proba(np.stack([test.X[0], test.X[0]]))
    np.testing.assert_array_equal(P[0], P[1])
    whole = knn_small.predict_proba(test.X)
    parts = np.vstack([knn_small.predict_proba(test.X[i : i + 1]) for i in range(len(test))])
    np.testing.assert_allclose(whole, parts, rtol=0, atol=1e-15)
    np.testing.assert_allclose(whole.sum(axis=1), 1.0, atol=1e-12)


def test_length_mismatch(knn_small):
    with pytest.raises(ValueError):
        knn_small.predict_proba(np.zeros((1, 50)))


def test_fit_errors(tiny_two_class):
    with pytest.raises(ValueError):
        fit_knn_softmax(tiny_two_class, temperature=0.0)
    with pytest.raises(ValueError):
        fit_knn_softmax(tiny_two_class, k_neighbors=0)


def test_predict_argmax_lowest_on_ties(two_points):
    f = fit_knn_softmax(two_points)
    assert predict(f, [[0.5, 0.5]]).tolist() == [0]


def test_check_proba():
    np.testing.assert_allclose(check_proba([[0.7, 0.3]], 1), [[0.7, 0.3]])
    for bad in ([[0.7, 0.4]], [[1.2, -0.2]], [[0.5, np.nan]], [[1.0]], "x"):
        with pytest.raises(ProtocolError):
            check_proba(bad, 1)
    with pytest.raises(ProtocolError):
        check_proba([[0.5, 0.5]], 1, n_classes=3)


def test_external_uniform():
    with stub("uniform", "3") as f:
        P = f.predict_proba(np.zeros((4, 10)))
        np.testing.assert_allclose(P, 1 / 3)
        assert f.n_classes == 3
        np.testing.assert_allclose(f.predict_proba(np.ones((1, 10))), 1 / 3)


def test_external_pass_through():
    with stub("fixed", "0.7", "0.3") as f:
        np.testing.assert_allclose(f.predict_proba(np.zeros((2, 5))), [[0.7, 0.3]] * 2, rtol=1e-15)


@pytest.mark.parametrize(
    "args,kw",
    [
        (("fixed", "0.7", "0.4"), {}),
        (("fixed", "0.5", "0.5"), {"n_classes": 3}),
        (("badid",), {}),
        (("garbage",), {}),
    ],
)
def test_external_protocol_errors(args, kw):
    with stub(*args, **kw) as f:
        with pytest.raises(ProtocolError):
            f.predict_proba(np.zeros((1, 5)))


def test_external_transport_errors():
    with stub("die") as f:
        with pytest.raises(TransportError):
            f.predict_proba(np.zeros((1, 5)))
    with pytest.raises(TransportError):
        ExternalClassifier(["/nonexistent/classifier-binary"])


def test_serve_round_trip(two_points):
    f = fit_knn_softmax(two_points)
    stdin = io.StringIO(json.dumps({"id": 4, "series": [[0.0, 0.0], [0.5, 0.5]]}) + "\n\n")
    stdout = io.StringIO()
    serve(f.predict_proba, stdin, stdout)
    msg = json.loads(stdout.getvalue())
    assert msg["id"] == 4
    np.testing.assert_allclose(msg["probs"], f.predict_proba([[0.0, 0.0], [0.5, 0.5]]), rtol=1e-15)


def test_from_spec(tiny_two_class):
    f = from_spec("knn:k=2,temp=0.5", tiny_two_class)
    assert (f.k_neighbors, f.temperature) == (2, 0.5)
    with pytest.raises(ValueError):
        from_spec("knn:q=1", tiny_two_class)
    with pytest.raises(ValueError):
        from_spec("svm", tiny_two_class)
    with from_spec(f"ext:{sys.executable} {STUB} sign", tiny_two_class) as g:
        assert g.predict(np.array([[1.0, 0, 0, 0], [-1.0, 0, 0, 0]])).tolist() == [0, 1]
