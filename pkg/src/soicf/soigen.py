"""Candidate values on the subsequence of interest via an AR model of the
reference-minus-target difference.

The AR(p) model carries an intercept and is fitted by least squares on the
one-step residuals, which is the conditional maximum-likelihood estimate under
Gaussian errors. Its one-step fitted values, not free-running forecasts, are
added to the target on the SoI; everything outside the SoI is copied
unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class ARModel:
    coef: np.ndarray
    intercept: float

    @property
    def order(self) -> int:
        return int(self.coef.shape[0])


def fit_ar(series, p: int) -> ARModel:
    """Least-squares AR(p) with intercept.

    The order drops to the largest one the series can support (at least as
    many regression rows as unknowns). Under length 3 this is the mean-only
    model with one zero coefficient. Singular normal equations are retried with
    a 1e-8 ridge.
    """
    if p < 1:
        raise ValueError("AR order must be >= 1")
    z = np.ascontiguousarray(series, dtype=np.float64)
    coef, c = kernels.ar_fit(z, int(p))
    return ARModel(np.asarray(coef), float(c))


def predict_insample(model: ARModel, series) -> np.ndarray:
    z = np.ascontiguousarray(series, dtype=np.float64)
    return kernels.ar_fitted(z, np.ascontiguousarray(model.coef), float(model.intercept))


def context_window(start, end, p, m):
    """Half-open index window around ``[start, end)`` extended by ``p`` each side."""
    return max(start - p, 0), min(end + p, m)


def _chrom_array(chroms):
    arr = np.ascontiguousarray(np.asarray(chroms, dtype=np.int64).reshape(-1, 3))
    return arr


def generate_many(target, ref_series, chroms, p: int) -> np.ndarray:
    """Candidates for many ``(start, end, ref_idx)`` rows at once; shape ``(n, m)``."""
    target = np.ascontiguousarray(target, dtype=np.float64)
    ref_series = np.ascontiguousarray(ref_series, dtype=np.float64)
    chroms = _chrom_array(chroms)
    m = target.shape[0]
    if chroms.size and (
        chroms[:, 0].min() < 0
        or chroms[:, 1].max() > m
        or np.any(chroms[:, 0] >= chroms[:, 1])
        or chroms[:, 2].min() < 0
        or chroms[:, 2].max() >= ref_series.shape[0]
    ):
        raise ValueError("chromosome out of range for this target and reference set")
    return kernels.generate_batch(target, ref_series, chroms, int(p))


def generate(target, chrom, refs, p: int) -> np.ndarray:
    """One candidate: ``target`` with ``reference - target`` smoothed onto the SoI.

    ``refs`` is a :class:`~soicf.reference.ReferenceSet` or a ``(K, m)`` array.
    """
    series = getattr(refs, "series", refs)
    return generate_many(target, series, [tuple(chrom)], p)[0]
