"""Numba-compiled inner loops for PAM and SOM.

Every parallel kernel writes each output cell from exactly one thread with a
fixed sequential reduction order, so results are bit-identical to the
single-threaded evaluation regardless of thread count.  No fastmath: IEEE
operation order is part of the determinism contract.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def pairwise_distances_into(X, D):
    """Full symmetric (n, n) Euclidean distance matrix into preallocated D."""
    n, d = X.shape
    for i in prange(n):
        D[i, i] = 0.0
        for j in range(i + 1, n):
            s = 0.0
            for c in range(d):
                diff = X[i, c] - X[j, c]
                s += diff * diff
            D[i, j] = np.sqrt(s)
    for i in prange(n):
        for j in range(i):
            D[i, j] = D[j, i]
    return D


@njit(cache=True, parallel=True)
def build_first_scores(D):
    """Total distance from each candidate to all points (BUILD step 1)."""
    n = D.shape[0]
    scores = np.empty(n, dtype=np.float64)
    for c in prange(n):
        s = 0.0
        for j in range(n):
            s += D[c, j]
        scores[c] = s
    return scores


@njit(cache=True, parallel=True)
def build_gain_scores(D, d1, selected):
    """Cost reduction achieved by adding each candidate medoid.

    gain(c) = sum_j max(d1[j] - D[c, j], 0); already-selected candidates get
    -inf.  Rows of D are used (D is symmetric) for contiguous access.
    """
    n = D.shape[0]
    scores = np.empty(n, dtype=np.float64)
    for c in prange(n):
        if selected[c]:
            scores[c] = -np.inf
            continue
        s = 0.0
        for j in range(n):
            diff = d1[j] - D[c, j]
            if diff > 0.0:
                s += diff
        scores[c] = s
    return scores


@njit(cache=True, parallel=True)
def nearest_two(D, medoids):
    """Per point: index of nearest medoid (into the medoid list, first wins),
    its distance d1, and the second-nearest distance d2."""
    n = D.shape[0]
    k = medoids.shape[0]
    nearest = np.empty(n, dtype=np.int64)
    d1 = np.empty(n, dtype=np.float64)
    d2 = np.empty(n, dtype=np.float64)
    for j in prange(n):
        b1 = np.inf
        b2 = np.inf
        bi = 0
        for i in range(k):
            dist = D[medoids[i], j]
            if dist < b1:
                b2 = b1
                b1 = dist
                bi = i
            elif dist < b2:
                b2 = dist
        nearest[j] = bi
        d1[j] = b1
        d2[j] = b2
    return nearest, d1, d2


@njit(cache=True, parallel=True)
def swap_deltas(D, nearest, d1, d2, is_medoid, k):
    """Cost change of every (medoid i, candidate h) swap, FastPAM-style.

    delta[i, h] = sum over points of the reassignment change when medoid i is
    replaced by point h.  Columns of current medoids are +inf.  O(n^2) total.
    """
    n = D.shape[0]
    delta = np.empty((k, n), dtype=np.float64)
    for h in prange(n):
        if is_medoid[h]:
            for i in range(k):
                delta[i, h] = np.inf
            continue
        total = 0.0                       # sum_j min(D[h,j] - d1[j], 0)
        per_removed = np.zeros(k, dtype=np.float64)
        for j in range(n):
            dhj = D[h, j]
            gain = dhj - d1[j]
            if gain < 0.0:
                total += gain
            i = nearest[j]
            # j loses its nearest medoid: moves to min(d2[j], D[h,j]);
            # remove the generic term and add the true change
            loss = min(d2[j], dhj) - d1[j]
            if gain < 0.0:
                per_removed[i] += loss - gain
            else:
                per_removed[i] += loss
        for i in range(k):
            delta[i, h] = total + per_removed[i]
    return delta


@njit(cache=True, parallel=True)
def assign_nearest(X, centers):
    """Label each point with its nearest center (first index wins ties)."""
    n = X.shape[0]
    k, d = centers.shape
    labels = np.empty(n, dtype=np.int64)
    dists = np.empty(n, dtype=np.float64)
    for j in prange(n):
        best = np.inf
        bi = 0
        for i in range(k):
            s = 0.0
            for c in range(d):
                diff = X[j, c] - centers[i, c]
                s += diff * diff
            if s < best:
                best = s
                bi = i
        labels[j] = bi
        dists[j] = np.sqrt(best)
    return labels, dists


@njit(cache=True)
def som_train(X, W, orders, topo2, lr0, lr_final, radius0, radius_final):
    """Online Kohonen training, strictly sequential.

    orders is (epochs, n) of point indices (one seeded shuffle per epoch).
    topo2[a, b] is the squared topological distance between nodes a and b.
    lr and radius decay exponentially from initial to final over all steps.
    """
    epochs, n = orders.shape
    m, d = W.shape
    total = epochs * n
    denom = total - 1 if total > 1 else 1
    lr_ratio = lr_final / lr0
    r_ratio = radius_final / radius0
    step = 0
    for e in range(epochs):
        for s in range(n):
            frac = step / denom
            lr = lr0 * lr_ratio ** frac
            radius = radius0 * r_ratio ** frac
            x = X[orders[e, s]]
            # best-matching unit, smaller index wins ties
            best = np.inf
            bmu = 0
            for i in range(m):
                acc = 0.0
                for c in range(d):
                    diff = x[c] - W[i, c]
                    acc += diff * diff
                if acc < best:
                    best = acc
                    bmu = i
            inv = 1.0 / (2.0 * radius * radius)
            for i in range(m):
                h = np.exp(-topo2[bmu, i] * inv)
                step_size = lr * h
                for c in range(d):
                    W[i, c] += step_size * (x[c] - W[i, c])
            step += 1
    return W
