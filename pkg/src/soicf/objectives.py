"""The two minimised objectives: classifier-space validity/closeness and sparse proximity."""
import numpy as np

from .reference import SAME_LABEL_DISTANCE, ReferenceSet, js_to_many


def _as_rows(C):
    C = np.asarray(C, dtype=np.float64)
    return C[None, :] if C.ndim == 1 else C


def changed_fraction(C, target) -> np.ndarray:
    """Fraction of positions differing exactly from ``target``, per row."""
    return np.count_nonzero(_as_rows(C) != np.asarray(target), axis=1) / np.shape(target)[0]


def norm_ratio(C, target, ord=2) -> np.ndarray:
    """``|c - t| / (|c| + |t|)`` per row under the given vector norm, with 0/0 = 0."""
    C = _as_rows(C)
    target = np.asarray(target, dtype=np.float64)
    num = np.linalg.norm(C - target, ord=ord, axis=1)
    den = np.linalg.norm(C, ord=ord, axis=1) + np.linalg.norm(target, ord=ord)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def f2_batch(C, target) -> np.ndarray:
    return (changed_fraction(C, target) + norm_ratio(C, target)) / 2.0


def f2(candidate, target) -> float:
    """Mean of the changed-point fraction and the relative L2 change."""
    candidate = np.asarray(candidate, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if candidate.shape != target.shape:
        raise ValueError("candidate and target lengths differ")
    return float(f2_batch(candidate, target)[0])


def f1_from_probs(cand_probs, target_label, ref_probs) -> np.ndarray:
    """1.01 where the predicted label is unchanged, else the distance to the nearest reference."""
    cand_probs = np.atleast_2d(np.asarray(cand_probs, dtype=np.float64))
    best = np.full(cand_probs.shape[0], np.inf)
    for q in np.atleast_2d(ref_probs):
        np.minimum(best, js_to_many(cand_probs, q), out=best)
    best[np.argmax(cand_probs, axis=1) == target_label] = SAME_LABEL_DISTANCE
    return best


def f1(candidate, target, refs: ReferenceSet, f) -> float:
    if len(refs) == 0:
        raise ValueError("F1 needs at least one reference")
    probs = f.predict_proba(np.stack([np.asarray(candidate, float), np.asarray(target, float)]))
    return float(f1_from_probs(probs[:1], int(np.argmax(probs[1])), refs.probs)[0])


def evaluate(C, target, refs: ReferenceSet, f) -> np.ndarray:
    """Objective pairs ``(F1, F2)`` for every candidate row; shape ``(n, 2)``."""
    C = _as_rows(C)
    out = np.empty((C.shape[0], 2))
    if C.shape[0] == 0:
        return out
    out[:, 0] = f1_from_probs(f.predict_proba(C), refs.target_label, refs.probs)
    out[:, 1] = f2_batch(C, target)
    return out
