"""K-medoids (PAM) and Kohonen SOM over d-dimensional feature vectors.

Both algorithms are written here from scratch (numba-jitted inner loops, see
``_kernels``) because their exact behavior is the contract:

* PAM = BUILD (greedy seeding) + SWAP (best-improvement, first-index
  tie-break), the Kaufman-Rousseeuw formulation.  Restarts differ only in
  rng perturbation of the BUILD selections (exact ties always, plus a
  widening near-tie slack per restart), which lets SWAP reach the
  enumeration optimum on small instances; restart 0 is pure greedy.
* SOM = online training with exponential learning-rate and radius decay,
  Gaussian neighborhood over a ring or grid topology, BMU ties to the
  smaller node index.

Everything is deterministic given (X, config): fixed seeds, fixed tie-break
rules, fixed summation order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .seeding import derive_seed


@dataclass
class KMedoidsConfig:
    k: int
    restarts: int = 5
    max_swap_iters: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")


@dataclass
class SomConfig:
    topology: str = "ring"          # ring | grid
    nodes: int = 25                 # ring size; ignored for grid
    rows: int = 5                   # grid shape
    cols: int = 5
    epochs: int = 50
    lr0: float = 0.5
    lr_final: float = 0.01
    radius0: Optional[float] = None  # default nodes/2 (ring) or max(rows, cols)/2 (grid)
    radius_final: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.topology not in ("ring", "grid"):
            raise ValueError(f"topology must be ring or grid, got {self.topology!r}")
        if self.n_nodes < 1:
            raise ValueError("SOM needs at least one node")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (self.lr0 >= self.lr_final > 0):
            raise ValueError("need lr0 >= lr_final > 0")
        if self.radius0 is None:
            self.radius0 = (self.nodes / 2.0 if self.topology == "ring"
                            else max(self.rows, self.cols) / 2.0)
        if not (self.radius0 >= self.radius_final > 0):
            raise ValueError("need radius0 >= radius_final > 0")

    @property
    def n_nodes(self) -> int:
        return self.nodes if self.topology == "ring" else self.rows * self.cols


@dataclass(eq=False)
class ClusterResult:
    """Labels plus per-cluster model data.

    centers are medoid coordinates (rows of the input) for K-medoids and node
    weight vectors for SOM; cost is the sum of point-to-assigned-center
    Euclidean distances.  medoid_indices is None for SOM.
    """

    labels: np.ndarray
    centers: np.ndarray
    cost: float
    sizes: np.ndarray
    empty_clusters: int
    medoid_indices: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return len(self.centers)


def _finalize(X: np.ndarray, centers: np.ndarray,
              medoid_indices: Optional[np.ndarray] = None) -> ClusterResult:
    labels, dists = _kernels.assign_nearest(X, centers)
    sizes = np.bincount(labels, minlength=len(centers))
    return ClusterResult(
        labels=labels,
        centers=centers.copy(),
        cost=float(dists.sum()),
        sizes=sizes,
        empty_clusters=int((sizes == 0).sum()),
        medoid_indices=medoid_indices,
    )


# ---------------------------------------------------------------------------
# K-medoids (PAM)
# ---------------------------------------------------------------------------

# relative greedy slack of BUILD restart r; restart 0 is pure greedy
BUILD_SLACK_PER_RESTART = 0.1


def _distance_matrix(X: np.ndarray) -> np.ndarray:
    n = len(X)
    return _kernels.pairwise_distances_into(X, np.empty((n, n), dtype=np.float64))


def _choose(indices: np.ndarray, rng: np.random.Generator) -> int:
    """First index normally; rng pick when several candidates remain."""
    if len(indices) == 1:
        return int(indices[0])
    return int(indices[rng.integers(0, len(indices))])


def _build(D: np.ndarray, k: int, rng: np.random.Generator, slack: float = 0.0):
    """Greedy BUILD seeding.

    slack widens each greedy selection to candidates within a relative
    margin of the best score; slack 0 keeps pure greedy with rng-broken
    exact ties.  Restarts use a growing slack so they explore different
    near-greedy seeds and SWAP can escape the pure-greedy local optimum.
    """
    n = D.shape[0]
    scores = _kernels.build_first_scores(D)
    lo = scores.min()
    first = _choose(np.flatnonzero(scores <= lo + slack * abs(lo)), rng)
    medoids = [first]
    d1 = D[first].astype(np.float64)
    selected = np.zeros(n, dtype=np.bool_)
    selected[first] = True
    while len(medoids) < k:
        gains = _kernels.build_gain_scores(D, d1, selected)
        hi = gains.max()
        cut = hi if slack == 0.0 or hi <= 0 else hi * (1.0 - slack)
        nxt = _choose(np.flatnonzero(gains >= cut), rng)
        medoids.append(nxt)
        selected[nxt] = True
        d1 = np.minimum(d1, D[nxt])
    return np.asarray(medoids, dtype=np.int64)


def _swap(D: np.ndarray, medoids: np.ndarray, max_iters: int):
    """Best-improvement SWAP until no strictly improving swap remains."""
    n = D.shape[0]
    k = len(medoids)
    medoids = medoids.copy()
    is_medoid = np.zeros(n, dtype=np.bool_)
    is_medoid[medoids] = True
    nearest, d1, d2 = _kernels.nearest_two(D, medoids)
    cost = float(d1.sum())
    if k >= n:
        return medoids, cost
    for _ in range(max_iters):
        delta = _kernels.swap_deltas(D, nearest, d1, d2, is_medoid, k)
        flat = int(np.argmin(delta))          # row-major: first (i, h) wins ties
        i, h = divmod(flat, n)
        if not delta[i, h] < -1e-9 * (1.0 + abs(cost)):
            break
        is_medoid[medoids[i]] = False
        medoids[i] = h
        is_medoid[h] = True
        nearest, d1, d2 = _kernels.nearest_two(D, medoids)
        cost = float(d1.sum())
    return medoids, cost


def kmedoids_fit(X: np.ndarray, cfg: KMedoidsConfig) -> ClusterResult:
    """PAM clustering: BUILD + SWAP, best of cfg.restarts runs by cost."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2:
        raise ValueError(f"X must be 2D, got shape {X.shape}")
    n = len(X)
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds number of points n={n}")
    D = _distance_matrix(X)
    best_medoids = None
    best_cost = np.inf
    for r in range(cfg.restarts):
        rng = np.random.default_rng(derive_seed(cfg.seed, r))
        medoids = _build(D, cfg.k, rng, slack=BUILD_SLACK_PER_RESTART * r)
        medoids, cost = _swap(D, medoids, cfg.max_swap_iters)
        if cost < best_cost:
            best_cost = cost
            best_medoids = medoids
    order = np.sort(best_medoids)
    return _finalize(X, X[order], medoid_indices=order)


def kmedoids_assign(centers: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Nearest-center labels, Euclidean, ties to the smaller index."""
    centers = np.ascontiguousarray(np.asarray(centers, dtype=np.float64))
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if len(centers) == 0:
        raise ValueError("centers must be nonempty")
    labels, _ = _kernels.assign_nearest(X, centers)
    return labels


def pairwise_cost(labels: np.ndarray, centers: np.ndarray, X: np.ndarray) -> float:
    """Sum of point-to-assigned-center Euclidean distances (PAM objective)."""
    labels = np.asarray(labels)
    centers = np.asarray(centers, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if len(labels) != len(X):
        raise ValueError("labels and X disagree in length")
    if labels.size and (labels.min() < 0 or labels.max() >= len(centers)):
        raise ValueError("label out of range")
    return float(np.linalg.norm(X - centers[labels], axis=1).sum())


# ---------------------------------------------------------------------------
# SOM
# ---------------------------------------------------------------------------

def _topology_sq_distances(cfg: SomConfig) -> np.ndarray:
    """Squared topological node-to-node distances for the neighborhood."""
    m = cfg.n_nodes
    if cfg.topology == "ring":
        idx = np.arange(m)
        diff = np.abs(idx[:, None] - idx[None, :])
        d = np.minimum(diff, m - diff).astype(np.float64)
    else:
        r, c = np.divmod(np.arange(m), cfg.cols)
        d = (np.abs(r[:, None] - r[None, :]) + np.abs(c[:, None] - c[None, :])).astype(np.float64)
    return d * d


def som_fit(X: np.ndarray, cfg: SomConfig) -> ClusterResult:
    """Online Kohonen SOM; empty nodes are allowed and counted."""
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or len(X) == 0:
        raise ValueError(f"X must be a nonempty 2D array, got shape {X.shape}")
    n = len(X)
    m = cfg.n_nodes
    rng = np.random.default_rng(cfg.seed)
    # seed weights from actual input points: keeps nodes on the data manifold
    replace = n < m
    init_idx = rng.choice(n, size=m, replace=replace)
    W = X[init_idx].astype(np.float64).copy()
    if cfg.epochs > 0:
        orders = np.stack([rng.permutation(n) for _ in range(cfg.epochs)]).astype(np.int64)
        topo2 = _topology_sq_distances(cfg)
        W = _kernels.som_train(X, W, orders, topo2,
                               float(cfg.lr0), float(cfg.lr_final),
                               float(cfg.radius0), float(cfg.radius_final))
    return _finalize(X, W, medoid_indices=None)
