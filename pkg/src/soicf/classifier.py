"""Probabilistic classifiers: the contract, a kNN-softmax model and a subprocess bridge.

Any object with ``n_classes``, ``length`` and ``predict_proba(X) -> (n, k)`` can be
explained. Predicted labels are always the argmax of the probability rows, with
ties resolved to the lowest class id.
"""
from __future__ import annotations

import json
import shlex
import subprocess
import sys
import threading

import numpy as np

from . import kernels
from .timeseries import Dataset

PROB_ATOL = 1e-6


class ClassifierError(RuntimeError):
    pass


class ProtocolError(ClassifierError):
    """The external classifier answered with something that is not a valid batch."""


class TransportError(ClassifierError):
    """The external classifier process died or its pipes broke."""


def predict(model, X) -> np.ndarray:
    """Predicted labels: argmax of ``predict_proba`` (lowest id on ties)."""
    return np.argmax(model.predict_proba(X), axis=1)


def check_proba(P, n_rows, n_classes=None, atol=PROB_ATOL) -> np.ndarray:
    """Validate a probability matrix and renormalise rows exactly; raises ProtocolError."""
    try:
        P = np.array(P, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ProtocolError(f"probabilities are not numeric: {exc}") from None
    if P.ndim != 2 or P.shape[0] != n_rows:
        raise ProtocolError(f"expected {n_rows} probability rows, got shape {P.shape}")
    if n_classes is not None and P.shape[1] != n_classes:
        raise ProtocolError(f"expected {n_classes} classes, got {P.shape[1]}")
    if P.shape[1] < 2:
        raise ProtocolError("need at least 2 class probabilities per row")
    if not np.all(np.isfinite(P)) or P.min(initial=0.0) < -atol or P.max(initial=0.0) > 1 + atol:
        raise ProtocolError("probabilities must lie in [0, 1]")
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > atol)
    if bad.size:
        raise ProtocolError(f"row {bad[0]} sums to {sums[bad[0]]:.6g}, not 1")
    P = np.clip(P, 0.0, 1.0)
    return P / P.sum(axis=1, keepdims=True)


class Classifier:
    """Base class. Subclasses implement ``_predict_proba`` on a validated ``(n, m)`` batch."""

    n_classes: int
    length: int | None

    def _check_batch(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2:
            raise ValueError(f"batch must be (n, m), got shape {X.shape}")
        if self.length is not None and X.shape[0] and X.shape[1] != self.length:
            raise ValueError(f"series length {X.shape[1]} does not match model length {self.length}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_batch(X)
        if X.shape[0] == 0:
            return np.empty((0, self.n_classes))
        return self._predict_proba(X)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)


class KNNSoftmaxClassifier(Classifier):
    """Softmax over negative per-class Euclidean neighbour distances.

    The per-class distance is the mean of that class's ``k_neighbors`` nearest
    training distances (all of them if the class is smaller).
    """

    def __init__(self, X, y, n_classes, k_neighbors=1, temperature=1.0):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.length = int(self.X.shape[1])
        self.k_neighbors = int(k_neighbors)
        self.temperature = float(temperature)
        self._members = [np.flatnonzero(self.y == c) for c in range(self.n_classes)]

    def class_distances(self, X) -> np.ndarray:
        X = self._check_batch(X)
        d = np.sqrt(np.maximum(kernels.sqeuclidean(np.ascontiguousarray(X), self.X), 0.0))
        out = np.full((X.shape[0], self.n_classes), np.inf)
        for c, idx in enumerate(self._members):
            if idx.size == 0:
                continue
            k = min(self.k_neighbors, idx.size)
            dc = d[:, idx]
            if k == 1:
                out[:, c] = dc.min(axis=1)
            else:
                out[:, c] = np.sort(dc, axis=1)[:, :k].mean(axis=1)
        return out

    def _predict_proba(self, X):
        logits = -self.class_distances(X) / self.temperature
        logits -= logits.max(axis=1, keepdims=True)
        w = np.exp(logits)
        return w / w.sum(axis=1, keepdims=True)


def fit_knn_softmax(train: Dataset, k_neighbors=1, temperature=1.0) -> KNNSoftmaxClassifier:
    if len(train) == 0:
        raise ValueError("cannot fit a classifier on an empty training set")
    if not 1 <= k_neighbors <= len(train):
        raise ValueError(f"k_neighbors must be in [1, {len(train)}], got {k_neighbors}")
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    return KNNSoftmaxClassifier(train.X, train.y, train.n_classes, k_neighbors, temperature)


class ExternalClassifier(Classifier):
    """Bridge to a classifier running in a subprocess.

    Speaks line-delimited JSON over the child's stdin/stdout: each request is
    ``{"id": n, "series": [[...], ...]}`` and the matching response is
    ``{"id": n, "probs": [[...], ...]}``. One bridge serialises its calls; use
    several bridges for parallelism.
    """

    def __init__(self, command, n_classes=None, length=None, timeout=None):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.n_classes = n_classes
        self.length = length
        self._next_id = 0
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TransportError(f"cannot start {self.command!r}: {exc}") from exc

    def predict_proba(self, X) -> np.ndarray:
        X = self._check_batch(X)
        if X.shape[0] == 0:
            return np.empty((0, self.n_classes or 0))
        with self._lock:
            P = self._roundtrip(X)
        if self.n_classes is None:
            self.n_classes = P.shape[1]
        if self.length is None:
            self.length = X.shape[1]
        return P

    def _roundtrip(self, X):
        rid = self._next_id
        self._next_id += 1
        request = json.dumps({"id": rid, "series": X.tolist()})
        try:
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError, ValueError) as exc:
            raise TransportError(f"classifier process pipe failed: {exc}") from exc
        if not line:
            code = self._proc.poll()
            raise TransportError(f"classifier process closed its output (exit status {code})")
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"response is not JSON: {exc}") from None
        if not isinstance(msg, dict) or "probs" not in msg:
            raise ProtocolError("response lacks a 'probs' field")
        if msg.get("id") != rid:
            raise ProtocolError(f"response id {msg.get('id')!r} does not match request id {rid}")
        return check_proba(msg["probs"], X.shape[0], self.n_classes)

    def close(self):
        proc = getattr(self, "_proc", None)
        if proc is None or proc.poll() is not None:
            return
        try:
            proc.stdin.close()
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def __del__(self):
        try:
            self.close()
        except Exception:
            pass


def serve(predict_proba, stdin=None, stdout=None):
    """Answer bridge requests with ``predict_proba`` until stdin closes.

    Lets any Python model run as an external classifier::

        serve(model.predict_proba)
    """
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    for line in stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        probs = np.asarray(predict_proba(np.asarray(req["series"], dtype=np.float64)))
        stdout.write(json.dumps({"id": req["id"], "probs": probs.tolist()}) + "\n")
        stdout.flush()


def from_spec(spec: str, train: Dataset | None = None) -> Classifier:
    """Build a classifier from ``knn:k=1,temp=1.0`` or ``ext:<command line>``."""
    kind, _, rest = spec.partition(":")
    if kind == "knn":
        if train is None:
            raise ValueError("knn classifier needs training data")
        opts = {"k": "1", "temp": "1.0"}
        for item in filter(None, (s.strip() for s in rest.split(","))):
            key, eq, value = item.partition("=")
            if not eq or key not in opts:
                raise ValueError(f"bad knn option {item!r} (expected k=<int> or temp=<float>)")
            opts[key] = value
        return fit_knn_softmax(train, int(opts["k"]), float(opts["temp"]))
    if kind == "ext":
        if not rest.strip():
            raise ValueError("ext classifier needs a command line")
        n_classes = train.n_classes if train is not None else None
        length = train.length if train is not None else None
        return ExternalClassifier(rest, n_classes=n_classes, length=length)
    raise ValueError(f"unknown classifier spec {spec!r}")
