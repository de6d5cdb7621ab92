"""Pure-numpy implementations of the hot kernels.

Each function here has a numba twin in ``_numba`` with the same signature and
the same semantics. Results agree to rounding; integer outputs agree exactly.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

# Cholesky pivot below this fraction of its diagonal entry counts as singular.
SINGULAR_RTOL = 1e-10
RIDGE = 1e-8


def sqeuclidean(A, B):
    """Squared Euclidean distances between the rows of ``A`` and ``B``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    out = np.empty((A.shape[0], B.shape[0]))
    # bounded memory for large batches
    step = max(1, 2_000_000 // max(1, B.shape[0] * A.shape[1]))
    for lo in range(0, A.shape[0], step):
        diff = A[lo:lo + step, None, :] - B[None, :, :]
        out[lo:lo + step] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def js_rows(P, Q):
    """Row-wise Jensen-Shannon distance (log base 2) between ``P`` and ``Q``."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    S = P + Q  # 2 * midpoint; stays positive where either side is, even for subnormals
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_p = np.where(P > 0, P * np.log2(2.0 * P / S), 0.0)
        kl_q = np.where(Q > 0, Q * np.log2(2.0 * Q / S), 0.0)
    # add the two terms per class first so swapping P and Q is bitwise symmetric
    total = (kl_p + kl_q).sum(axis=-1)
    return np.sqrt(np.clip(total / 2.0, 0.0, 1.0))


def nondominated_ranks(F):
    """Front index of every row of the (n, 2) objective matrix ``F`` (minimisation)."""
    F = np.asarray(F, dtype=np.float64)
    n = F.shape[0]
    le = np.all(F[:, None, :] <= F[None, :, :], axis=2)
    lt = np.any(F[:, None, :] < F[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    ranks = np.full(n, -1, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    rank = 0
    while remaining.any():
        front = remaining & (count == 0)
        ranks[front] = rank
        remaining &= ~front
        count = count - dom[front].sum(axis=0)
        rank += 1
    return ranks


def crowding_distance(F, ranks):
    """Crowding distance within each front; front extremes get ``inf``."""
    F = np.asarray(F, dtype=np.float64)
    n, n_obj = F.shape
    dist = np.zeros(n)
    for r in range(int(ranks.max()) + 1 if n else 0):
        idx = np.flatnonzero(ranks == r)
        if idx.size <= 2:
            dist[idx] = np.inf
            continue
        for k in range(n_obj):
            order = idx[np.argsort(F[idx, k], kind="mergesort")]
            vals = F[order, k]
            span = vals[-1] - vals[0]
            dist[order[0]] = np.inf
            dist[order[-1]] = np.inf
            if span > 0:
                dist[order[1:-1]] += (vals[2:] - vals[:-2]) / span
    return dist


def _cholesky_solve(A, b):
    d = A.shape[0]
    L = np.zeros_like(A)
    for j in range(d):
        s = A[j, j] - L[j, :j] @ L[j, :j]
        if not s > SINGULAR_RTOL * A[j, j]:
            return None
        L[j, j] = np.sqrt(s)
        L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    y = np.empty(d)
    for i in range(d):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.empty(d)
    for i in range(d - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def fittable_order(n, p):
    """Largest order <= p with at least as many regression rows as unknowns."""
    return min(p, (n - 1) // 2)


def ar_fit(z, p):
    """Least-squares AR fit with intercept; returns ``(coef, intercept)``.

    The order is reduced when ``z`` is too short; below length 3 the result is
    the mean-only model with a single zero coefficient.
    """
    z = np.asarray(z, dtype=np.float64)
    q = fittable_order(z.shape[0], p)
    if q < 1:
        return np.zeros(1), float(z.mean()) if z.size else 0.0
    win = sliding_window_view(z, q + 1)
    X = np.empty((win.shape[0], q + 1))
    X[:, 0] = 1.0
    X[:, 1:] = win[:, -2::-1]
    y = win[:, -1]
    A = X.T @ X
    b = X.T @ y
    beta = _cholesky_solve(A, b)
    if beta is None:
        beta = _cholesky_solve(A + RIDGE * np.eye(q + 1), b)
    if beta is None:
        return np.zeros(1), float(z.mean())
    return beta[1:].copy(), float(beta[0])


def ar_fitted(z, coef, intercept):
    """One-step-ahead fitted values; the first ``len(coef)`` positions pass through."""
    z = np.asarray(z, dtype=np.float64)
    q = coef.shape[0]
    out = z.copy()
    if z.shape[0] > q:
        win = sliding_window_view(z[:-1], q)
        out[q:] = intercept + win[:, ::-1] @ coef
    return out


def generate_batch(target, refs, chroms, p):
    """Counterfactual candidates for every chromosome row ``(start, end, ref_idx)``."""
    target = np.asarray(target, dtype=np.float64)
    m = target.shape[0]
    out = np.empty((chroms.shape[0], m))
    for r in range(chroms.shape[0]):
        s, e, k = int(chroms[r, 0]), int(chroms[r, 1]), int(chroms[r, 2])
        i, j = max(s - p, 0), min(e + p, m)
        zeta = refs[k, i:j] - target[i:j]
        coef, c = ar_fit(zeta, p)
        smooth = ar_fitted(zeta, coef, c)
        out[r] = target
        out[r, s:e] = target[s:e] + smooth[s - i:e - i]
    return out
