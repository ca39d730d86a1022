"""Pure-Python versions of the alignment kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``CCABOOT_PURE_PYTHON=1`` is set. Both implementations perform the same
floating point operations in the same order so they agree bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between the columns of ``a`` and ``b``."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    d, ka = a.shape
    kb = b.shape[1]
    na = [0.0] * ka
    nb = [0.0] * kb
    for i in range(ka):
        s = 0.0
        for r in range(d):
            s += a[r, i] * a[r, i]
        na[i] = math.sqrt(s)
    for j in range(kb):
        s = 0.0
        for r in range(d):
            s += b[r, j] * b[r, j]
        nb[j] = math.sqrt(s)
    out = np.empty((ka, kb))
    for i in range(ka):
        for j in range(kb):
            s = 0.0
            for r in range(d):
                s += a[r, i] * b[r, j]
            v = s / (na[i] * nb[j])
            out[i, j] = min(1.0, max(-1.0, v))
    return out


def assignment_max(score: np.ndarray) -> np.ndarray:
    """Hungarian algorithm; returns ``perm`` maximising ``sum(score[i, perm[i]])``.

    Runs the O(n^3) shortest augmenting path variant on the cost matrix
    ``max(score) - score``.
    """
    score = np.ascontiguousarray(score, dtype=np.float64)
    n = score.shape[0]
    top = float(score.max()) if n else 0.0
    cost = [[top - float(score[i, j]) for j in range(n)] for i in range(n)]
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    p = [0] * (n + 1)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = cost[i0 - 1][j - 1] - u[i0] - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while True:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
            if j0 == 0:
                break
    perm = np.empty(n, dtype=np.int64)
    for j in range(1, n + 1):
        perm[p[j] - 1] = j - 1
    return perm
