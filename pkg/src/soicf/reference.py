"""Distance in classifier space and reference selection."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .timeseries import Dataset

SAME_LABEL_DISTANCE = 1.01


class NoReferenceError(ValueError):
    """No pool member is predicted to a class other than the target's."""


def js_distance(p, q) -> float:
    """Jensen-Shannon distance with base-2 logs; bounded by 1."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"probability vectors differ in shape: {p.shape} vs {q.shape}")
    return float(kernels.js_rows(p[None, :], q[None, :])[0])


def js_to_many(P, q) -> np.ndarray:
    """Distance from every row of ``P`` to ``q``."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(np.broadcast_to(np.asarray(q, dtype=np.float64), P.shape))
    return kernels.js_rows(P, Q)


@dataclass(frozen=True)
class ReferenceSet:
    """Selected references, nearest first.

    ``degenerate`` is set when fewer than the requested number of pool members
    were predicted to a different class.
    """

    series: np.ndarray  # (K, m)
    probs: np.ndarray  # (K, k)
    distances: np.ndarray  # (K,)
    pool_indices: np.ndarray  # (K,)
    requested: int
    degenerate: bool
    target_probs: np.ndarray  # (k,)
    target_label: int

    def __len__(self):
        return int(self.series.shape[0])


def classifier_distances(target_probs, target_label, pool_probs) -> np.ndarray:
    """Distance of each pool member to the target; same-label members get 1.01."""
    labels = np.argmax(pool_probs, axis=1)
    d = js_to_many(pool_probs, target_probs)
    d[labels == target_label] = SAME_LABEL_DISTANCE
    return d


def select_references(target, pool: Dataset, f, K: int, pool_probs=None) -> ReferenceSet:
    """The ``K`` pool members nearest to ``target`` in classifier space among those
    predicted to another class. Ties go to the lower pool index.

    If no pool member qualifies the result is empty and flagged degenerate;
    explaining with such a set fails with :class:`NoReferenceError`.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if len(pool) == 0:
        raise ValueError("reference pool is empty")
    target = np.asarray(target, dtype=np.float64)
    t_probs = f.predict_proba(target[None, :])[0]
    t_label = int(np.argmax(t_probs))
    if pool_probs is None:
        pool_probs = f.predict_proba(pool.X)
    d = classifier_distances(t_probs, t_label, pool_probs)
    order = np.argsort(d, kind="stable")
    qualifying = order[d[order] < SAME_LABEL_DISTANCE]
    chosen = qualifying[:K]
    return ReferenceSet(
        series=np.ascontiguousarray(pool.X[chosen]),
        probs=pool_probs[chosen],
        distances=d[chosen],
        pool_indices=chosen,
        requested=K,
        degenerate=bool(chosen.size < K),
        target_probs=t_probs,
        target_label=t_label,
    )
