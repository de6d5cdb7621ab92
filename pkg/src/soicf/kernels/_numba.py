"""numba-compiled twins of the kernels in ``_numpy``."""
import math

import numpy as np
from numba import njit

from ._numpy import RIDGE, SINGULAR_RTOL


@njit(cache=True)
def sqeuclidean(A, B):
    n, m = A.shape
    out = np.empty((n, B.shape[0]))
    for i in range(n):
        for j in range(B.shape[0]):
            acc = 0.0
            for t in range(m):
                d = A[i, t] - B[j, t]
                acc += d * d
            out[i, j] = acc
    return out


@njit(cache=True)
def js_rows(P, Q):
    n, k = P.shape
    out = np.empty(n)
    for r in range(n):
        total = 0.0
        for i in range(k):
            s = P[r, i] + Q[r, i]
            a = 0.0
            b = 0.0
            if P[r, i] > 0:
                a = P[r, i] * math.log2(2.0 * P[r, i] / s)
            if Q[r, i] > 0:
                b = Q[r, i] * math.log2(2.0 * Q[r, i] / s)
            total += a + b
        out[r] = math.sqrt(min(max(total / 2.0, 0.0), 1.0))
    return out


@njit(cache=True)
def nondominated_ranks(F):
    n = F.shape[0]
    count = np.zeros(n, dtype=np.int64)
    dominated = np.zeros((n, n), dtype=np.bool_)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            le = True
            lt = False
            for k in range(F.shape[1]):
                if F[i, k] > F[j, k]:
                    le = False
                    break
                if F[i, k] < F[j, k]:
                    lt = True
            if le and lt:
                dominated[i, j] = True
                count[j] += 1
    ranks = np.full(n, -1, dtype=np.int64)
    current = np.empty(n, dtype=np.int64)
    size = 0
    for i in range(n):
        if count[i] == 0:
            ranks[i] = 0
            current[size] = i
            size += 1
    rank = 0
    nxt = np.empty(n, dtype=np.int64)
    while size > 0:
        nsize = 0
        for a in range(size):
            i = current[a]
            for j in range(n):
                if dominated[i, j]:
                    count[j] -= 1
                    if count[j] == 0:
                        ranks[j] = rank + 1
                        nxt[nsize] = j
                        nsize += 1
        current, nxt = nxt, current
        size = nsize
        rank += 1
    return ranks


@njit(cache=True)
def crowding_distance(F, ranks):
    n, n_obj = F.shape
    dist = np.zeros(n)
    if n == 0:
        return dist
    for r in range(ranks.max() + 1):
        idx = np.flatnonzero(ranks == r)
        if idx.size <= 2:
            for i in idx:
                dist[i] = np.inf
            continue
        for k in range(n_obj):
            order = idx[np.argsort(F[idx, k], kind="mergesort")]
            lo = F[order[0], k]
            span = F[order[-1], k] - lo
            dist[order[0]] = np.inf
            dist[order[-1]] = np.inf
            if span > 0:
                for a in range(1, order.size - 1):
                    dist[order[a]] += (F[order[a + 1], k] - F[order[a - 1], k]) / span
    return dist


@njit(cache=True)
def _cholesky_solve(A, b, out):
    d = A.shape[0]
    L = np.zeros_like(A)
    for j in range(d):
        s = A[j, j]
        for t in range(j):
            s -= L[j, t] * L[j, t]
        if not s > SINGULAR_RTOL * A[j, j]:
            return False
        L[j, j] = math.sqrt(s)
        for i in range(j + 1, d):
            acc = A[i, j]
            for t in range(j):
                acc -= L[i, t] * L[j, t]
            L[i, j] = acc / L[j, j]
    y = np.empty(d)
    for i in range(d):
        acc = b[i]
        for t in range(i):
            acc -= L[i, t] * y[t]
        y[i] = acc / L[i, i]
    for i in range(d - 1, -1, -1):
        acc = y[i]
        for t in range(i + 1, d):
            acc -= L[t, i] * out[t]
        out[i] = acc / L[i, i]
    return True


@njit(cache=True)
def ar_fit(z, p):
    n = z.shape[0]
    q = min(p, (n - 1) // 2)
    if q < 1:
        mean = z.mean() if n > 0 else 0.0
        return np.zeros(1), mean
    d = q + 1
    A = np.zeros((d, d))
    b = np.zeros(d)
    row = np.empty(d)
    for t in range(q, n):
        row[0] = 1.0
        for i in range(1, d):
            row[i] = z[t - i]
        for a in range(d):
            b[a] += row[a] * z[t]
            for c in range(d):
                A[a, c] += row[a] * row[c]
    beta = np.empty(d)
    if not _cholesky_solve(A, b, beta):
        for a in range(d):
            A[a, a] += RIDGE
        if not _cholesky_solve(A, b, beta):
            return np.zeros(1), z.mean()
    return beta[1:].copy(), beta[0]


@njit(cache=True)
def ar_fitted(z, coef, intercept):
    q = coef.shape[0]
    out = z.copy()
    for t in range(q, z.shape[0]):
        acc = intercept
        for i in range(q):
            acc += coef[i] * z[t - 1 - i]
        out[t] = acc
    return out


@njit(cache=True)
def generate_batch(target, refs, chroms, p):
    m = target.shape[0]
    out = np.empty((chroms.shape[0], m))
    for r in range(chroms.shape[0]):
        s = chroms[r, 0]
        e = chroms[r, 1]
        k = chroms[r, 2]
        i = max(s - p, 0)
        j = min(e + p, m)
        zeta = refs[k, i:j] - target[i:j]
        coef, c = ar_fit(zeta, p)
        smooth = ar_fitted(zeta, coef, c)
        out[r, :] = target
        for t in range(s, e):
            out[r, t] = target[t] + smooth[t - i]
    return out
