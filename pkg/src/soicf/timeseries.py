"""Series and dataset containers, UCR text ingestion and the CBF generator."""
from __future__ import annotations

import io
import os
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CBF_CLASSES = ("cylinder", "bell", "funnel")
# shortest series that always holds an event starting at 32 and lasting 32 steps
CBF_MIN_LENGTH = 65

_SEP = re.compile(r"[\t,]")


class UCRFormatError(ValueError):
    """Malformed UCR text. ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None):
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


def as_series(values) -> np.ndarray:
    """Validate ``values`` as a time series and return a read-only float copy."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"time series must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 2:
        raise ValueError("time series needs at least 2 observations")
    if not np.all(np.isfinite(arr)):
        raise ValueError("time series contains NaN or infinite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Dataset:
    """Equal-length univariate series with contiguous integer labels.

    ``X`` has shape ``(n, m)``; ``y`` holds class ids in ``[0, k)`` and
    ``classes[y]`` recovers the original label values.
    """

    X: np.ndarray
    y: np.ndarray
    classes: np.ndarray = field(default=None)

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        y = np.array(self.y, dtype=np.int64)
        if X.ndim != 2:
            raise ValueError("dataset series must form an (n, m) array")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} series but {y.shape[0]} labels")
        if X.shape[1] < 2:
            raise ValueError("series length must be at least 2")
        if not np.all(np.isfinite(X)):
            raise ValueError("dataset contains NaN or infinite values")
        classes = self.classes
        if classes is None:
            classes = np.arange(int(y.max()) + 1 if y.size else 2)
        classes = np.array(classes)
        if classes.shape[0] < 2:
            raise ValueError("a dataset needs at least 2 classes")
        if y.size and (y.min() < 0 or y.max() >= classes.shape[0]):
            raise ValueError("labels must lie in [0, k)")
        for arr in (X, y, classes):
            arr.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "classes", classes)

    @property
    def n_classes(self) -> int:
        return int(self.classes.shape[0])

    @property
    def length(self) -> int:
        return int(self.X.shape[1])

    def __len__(self):
        return int(self.X.shape[0])

    def normalized(self) -> "Dataset":
        """Per-series z-normalised copy (constant series are only centred)."""
        mu = self.X.mean(axis=1, keepdims=True)
        sd = self.X.std(axis=1, keepdims=True)
        sd[sd == 0] = 1.0
        return Dataset((self.X - mu) / sd, self.y, self.classes)


def _parse_number(token, line, column):
    try:
        return float(token)
    except ValueError:
        raise UCRFormatError(f"non-numeric token {token!r}", line, column) from None


def parse_ucr(text, normalize=False) -> Dataset:
    """Parse UCR archive text: one series per line, label first.

    Fields may be separated by tabs or commas; blank lines are skipped. Labels
    are remapped to ``0..k-1`` in ascending order of their original value.
    """
    if not isinstance(text, str):
        text = text.read()
    labels, rows, m = [], [], None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = [tok.strip() for tok in _SEP.split(line)]
        values = [_parse_number(tok, lineno, col) for col, tok in enumerate(tokens, start=1)]
        if len(values) < 3:
            raise UCRFormatError("expected a label and at least 2 values", lineno)
        if m is None:
            m = len(values) - 1
        elif len(values) - 1 != m:
            raise UCRFormatError(f"ragged row: {len(values) - 1} values, expected {m}", lineno)
        labels.append(values[0])
        rows.append(values[1:])
    if not rows:
        raise UCRFormatError("no records found")
    raw_labels = np.array(labels)
    classes, y = np.unique(raw_labels, return_inverse=True)
    if np.all(classes == np.round(classes)):
        classes = classes.astype(np.int64)
    if classes.shape[0] < 2:
        raise UCRFormatError(f"need at least 2 distinct labels, found {classes.shape[0]}")
    ds = Dataset(np.array(rows), y, classes)
    return ds.normalized() if normalize else ds


def load_ucr(path, normalize=False) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_ucr(fh.read(), normalize=normalize)


def serialize_ucr(dataset: Dataset) -> str:
    """Tab-separated UCR text with 17 significant digits (round-trips exactly)."""
    out = io.StringIO()
    for label, row in zip(dataset.classes[dataset.y], dataset.X):
        out.write("\t".join([_fmt(label)] + [format(v, ".17g") for v in row]))
        out.write("\n")
    return out.getvalue()


def _fmt(label):
    if isinstance(label, (np.integer, int)):
        return str(int(label))
    return format(float(label), ".17g")


def write_ucr(dataset: Dataset, path) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(serialize_ucr(dataset))
    os.replace(tmp, path)


def _cbf_one(kind, length, rng):
    a = int(rng.integers(16, 33))
    b = a + int(rng.integers(32, 97))
    eta = rng.standard_normal()
    noise = rng.standard_normal(length)
    t = np.arange(length)
    inside = (t >= a) & (t <= b)
    if kind == 0:
        shape = np.ones(length)
    elif kind == 1:
        shape = (t - a) / (b - a)
    else:
        shape = (b - t) / (b - a)
    return (6.0 + eta) * inside * shape + noise, a, b


def generate_cbf(n_per_class, length=128, seed=0, return_intervals=False):
    """Synthetic Cylinder-Bell-Funnel dataset.

    Each series is ``(6 + eta) * shape(t) + noise(t)`` on an event window
    ``[a, b]`` with ``a`` uniform in 16..32 and ``b - a`` uniform in 32..96;
    the window is truncated at the series end. ``n_per_class`` may be one count
    or three per-class counts. ``seed`` is anything ``numpy.random.default_rng``
    accepts. With ``return_intervals`` the ``(n, 2)`` array of ``(a, b)`` is also
    returned.
    """
    if length < CBF_MIN_LENGTH:
        raise ValueError(f"CBF series need length >= {CBF_MIN_LENGTH}, got {length}")
    counts = _per_class(n_per_class)
    rng = np.random.default_rng(seed)
    X, y, intervals = [], [], []
    for kind, count in enumerate(counts):
        for _ in range(count):
            values, a, b = _cbf_one(kind, length, rng)
            X.append(values)
            y.append(kind)
            intervals.append((a, b))
    ds = Dataset(np.array(X).reshape(len(X), length), np.array(y, dtype=np.int64), np.arange(3))
    if return_intervals:
        return ds, np.array(intervals, dtype=np.int64).reshape(-1, 2)
    return ds


def _per_class(n_per_class) -> Sequence[int]:
    if np.ndim(n_per_class) == 0:
        counts = [int(n_per_class)] * 3
    else:
        counts = [int(c) for c in n_per_class]
    if len(counts) != 3 or min(counts) < 0 or sum(counts) < 1:
        raise ValueError(f"invalid CBF class counts {n_per_class!r}")
    return counts


def split_counts(total, k=3):
    """Balanced per-class counts summing to ``total`` (earlier classes get the remainder)."""
    base, extra = divmod(int(total), k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def cbf_train_test(n_train, n_test, length=128, seed=0):
    """Independent train and test CBF sets of the given total sizes."""
    train_ss, test_ss = np.random.SeedSequence(seed).spawn(2)
    train = generate_cbf(split_counts(n_train), length, train_ss)
    test = generate_cbf(split_counts(n_test), length, test_ss)
    return train, test
