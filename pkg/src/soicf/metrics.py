"""Counterfactual quality metrics and their per-dataset aggregation.

Works on any counterfactuals, not only this package's: pass the target series,
candidate series and the classifier they should flip.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .objectives import changed_fraction, norm_ratio

PAIR_METRICS = ("l1_proximity", "l2_proximity", "validity", "sparsity")


def _pair(target, candidate):
    t = np.asarray(target, dtype=np.float64)
    c = np.asarray(candidate, dtype=np.float64)
    if t.shape != c.shape:
        raise ValueError(f"length mismatch: target {t.shape} vs candidate {c.shape}")
    return t, c


def l1_proximity(target, candidate) -> float:
    t, c = _pair(target, candidate)
    return float(norm_ratio(c, t, ord=1)[0])


def l2_proximity(target, candidate) -> float:
    t, c = _pair(target, candidate)
    return float(norm_ratio(c, t, ord=2)[0])


def sparsity(target, candidate) -> float:
    t, c = _pair(target, candidate)
    return float(changed_fraction(c, t)[0])


def validity(target, candidate, f) -> int:
    t, c = _pair(target, candidate)
    labels = np.argmax(f.predict_proba(np.stack([t, c])), axis=1)
    return int(labels[0] != labels[1])


def diversity(target, candidates, f) -> int:
    """Number of distinct (bitwise) candidates that flip the prediction."""
    t = np.asarray(target, dtype=np.float64)
    C = np.asarray(candidates, dtype=np.float64).reshape(-1, t.shape[0]) if len(candidates) else None
    if C is None:
        return 0
    labels = np.argmax(f.predict_proba(np.vstack([t[None, :], C])), axis=1)
    valid = C[labels[1:] != labels[0]]
    return len({row.tobytes() for row in valid})


def score_candidates(target, candidates, f) -> list:
    """Pair-metric dicts for each candidate row (one classifier call)."""
    t = np.asarray(target, dtype=np.float64)
    C = np.asarray(candidates, dtype=np.float64).reshape(-1, t.shape[0])
    if C.shape[0] == 0:
        return []
    labels = np.argmax(f.predict_proba(np.vstack([t[None, :], C])), axis=1)
    l1 = norm_ratio(C, t, ord=1)
    l2 = norm_ratio(C, t, ord=2)
    sp = changed_fraction(C, t)
    return [
        {
            "l1_proximity": float(l1[i]),
            "l2_proximity": float(l2[i]),
            "validity": int(labels[i + 1] != labels[0]),
            "sparsity": float(sp[i]),
        }
        for i in range(C.shape[0])
    ]


@dataclass
class MetricReport:
    """Per-pair rows, per-target diversity and mean/std aggregates (population std)."""

    rows: list = field(default_factory=list)  # dicts: target_id, candidate_id, metrics
    diversity: dict = field(default_factory=dict)  # target_id -> count
    aggregates: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.DictWriter(out, fieldnames=["target_id", "candidate_id", *PAIR_METRICS], lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return out.getvalue()

    def summary(self) -> dict:
        return {
            "n_targets": len(self.diversity),
            "n_pairs": len(self.rows),
            "validity_rate": self.aggregates.get("validity", {}).get("mean"),
            "mean_diversity": self.aggregates.get("diversity", {}).get("mean"),
            "metrics": self.aggregates,
            "diversity_per_target": {str(k): v for k, v in self.diversity.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(arr.mean()), "std": float(arr.std()), "n": int(arr.size)}


def evaluate_run(targets, results, f, target_ids=None) -> MetricReport:
    """Score every (target, candidate) pair.

    ``targets`` is a sequence of series; ``results[i]`` is the candidate list
    (or ``(n, m)`` array) for ``targets[i]``. ``target_ids`` labels the rows and
    defaults to ``0..len(targets)-1``.
    """
    targets = list(targets)
    results = list(results)
    if len(targets) != len(results):
        raise ValueError(f"{len(targets)} targets but {len(results)} result lists")
    ids = list(range(len(targets))) if target_ids is None else list(target_ids)
    report = MetricReport()
    for tid, target, cands in zip(ids, targets, results):
        t = np.asarray(target, dtype=np.float64)
        C = np.asarray(cands, dtype=np.float64)
        if C.size == 0:
            C = C.reshape(0, t.shape[0])
        if C.ndim != 2 or C.shape[1] != t.shape[0]:
            raise ValueError(f"target {tid}: candidates have length {C.shape[-1]}, expected {t.shape[0]}")
        for cid, scores in enumerate(score_candidates(t, C, f)):
            report.rows.append({"target_id": tid, "candidate_id": cid, **scores})
        report.diversity[tid] = diversity(t, C, f)
    for name in PAIR_METRICS:
        report.aggregates[name] = _mean_std([row[name] for row in report.rows])
    report.aggregates["diversity"] = _mean_std(list(report.diversity.values()))
    return report
