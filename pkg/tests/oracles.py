"""Slow, obviously-correct reference implementations used by the tests."""
import math

import numpy as np


def kl2(p, q):
    return sum(a * math.log2(a / b) for a, b in zip(p, q) if a > 0)


def js_oracle(p, q):
    mix = [(a + b) / 2 for a, b in zip(p, q)]
    return math.sqrt(min(max((kl2(p, mix) + kl2(q, mix)) / 2, 0.0), 1.0))


def dominates(a, b):
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def peel_fronts(points):
    """Fronts by repeatedly removing the non-dominated set."""
    left = list(range(len(points)))
    fronts = []
    while left:
        front = [i for i in left if not any(dominates(points[j], points[i]) for j in left if j != i)]
        fronts.append(front)
        left = [i for i in left if i not in front]
    return fronts


def crowding_oracle(points, front):
    dist = {i: 0.0 for i in front}
    if len(front) <= 2:
        return {i: math.inf for i in front}
    for k in range(len(points[0])):
        order = sorted(front, key=lambda i: (points[i][k], i))
        lo, hi = points[order[0]][k], points[order[-1]][k]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for a, b, c in zip(order, order[1:], order[2:]):
            dist[b] += (points[c][k] - points[a][k]) / (hi - lo)
    return dist


def ar_oracle(z, p):
    """Least squares with intercept from an explicit lag matrix."""
    z = np.asarray(z, dtype=np.float64)
    rows = [[1.0] + [z[t - j] for j in range(1, p + 1)] for t in range(p, len(z))]
    Xm = np.array(rows)
    beta = np.linalg.solve(Xm.T @ Xm, Xm.T @ z[p:])
    return beta[1:], beta[0]
