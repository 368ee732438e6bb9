"""End-to-end clustering strategies over helical scans.

Two routes:

* baseline: cluster the raw 3D coordinates of the whole (single-turn) cloud;
* proposed: split the cloud turn-wise, cluster the 2D (x, y) projection of
  each turn, then merge labels back onto the 3D points by index, encoding
  ``global = turn * k + local`` so one label always means one vertical slice
  of one turn.

``sequence_label`` covers the scan regime where no clustering is needed at
all: a fixed number of points per cross-section labels itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import clustering
from .clustering import ClusterResult, KMedoidsConfig, SomConfig
from .geometry import TWO_PI, HelixParams, PointCloud, project_to_centerline_many
from .seeding import derive_seed


@dataclass
class MethodInfo:
    algo: str        # kmedoids | som | sequence
    features: str    # xy | xyz | index
    turn_split: str  # model | zslab | truth | none


@dataclass
class LabeledCloud:
    """Cloud plus per-point global labels; floor(label / k_per_turn) is the turn."""

    cloud: PointCloud
    labels: np.ndarray
    k_per_turn: int
    method: MethodInfo
    results: Optional[list[ClusterResult]] = None   # per turn group, in turn order

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.labels) != len(self.cloud):
            raise ValueError("labels and cloud disagree in length")


def turn_split(cloud: PointCloud, p: HelixParams, method: str = "model"):
    """Partition point indices by helix turn.

    model: nearest-centerline sweep parameter decides the turn;
    zslab:  slab index of z above the cloud minimum, pitch-sized slabs;
    truth:  ground-truth turn (synthetic clouds only).
    Returns [(turn_index, index_array), ...] ordered by turn, empty turns
    omitted.  Turn indices are clamped to [0, ceil(turns) - 1].
    """
    if method not in ("model", "zslab", "truth"):
        raise ValueError(f"unknown split method {method!r}")
    if len(cloud) == 0:
        return []
    last = p.n_turns - 1
    if method == "truth":
        if not cloud.has_truth:
            raise ValueError("split method 'truth' needs ground-truth fields")
        turns = np.clip(cloud.turn, 0, last)
    elif method == "zslab":
        z = cloud.xyz[:, 2]
        turns = np.clip(np.floor((z - z.min()) / p.pitch).astype(np.int64), 0, last)
    else:
        t_star = project_to_centerline_many(cloud.xyz, p)
        turns = np.clip(np.floor(t_star / TWO_PI).astype(np.int64), 0, last)
    return [(int(u), np.flatnonzero(turns == u)) for u in np.unique(turns)]


def project_xy(cloud: PointCloud, indices) -> np.ndarray:
    """(m, 2) matrix of the x, y coordinates of the selected points."""
    indices = np.asarray(indices, dtype=np.int64)
    return cloud.xyz[indices, :2].copy()


def _fit_group(X: np.ndarray, algo: str, k: int, seed: int,
               kmedoids_cfg: Optional[KMedoidsConfig],
               som_cfg: Optional[SomConfig]) -> ClusterResult:
    if algo == "kmedoids":
        base = kmedoids_cfg if kmedoids_cfg is not None else KMedoidsConfig(k=k)
        return clustering.kmedoids_fit(X, replace(base, k=k, seed=seed))
    if algo == "som":
        base = som_cfg if som_cfg is not None else som_config_for(k, "ring")
        if base.n_nodes != k:
            base = som_config_for(k, base.topology, like=base)
        return clustering.som_fit(X, replace(base, seed=seed))
    raise ValueError(f"unknown algorithm {algo!r}")


def som_config_for(k: int, topology: str, like: Optional[SomConfig] = None) -> SomConfig:
    """A SOM layout with exactly k nodes: a k-ring, or the most nearly
    square grid factorization of k (upsized analogue of the 5x5 map).
    Training-schedule fields are copied from ``like`` when given; the
    neighborhood radius is re-derived for the new layout."""
    if topology == "ring":
        rows, cols = 1, k
    else:
        rows, cols = 1, k
        for r in range(1, int(math.isqrt(k)) + 1):
            if k % r == 0:
                rows, cols = r, k // r
    kw = {}
    if like is not None:
        kw = dict(epochs=like.epochs, lr0=like.lr0, lr_final=like.lr_final,
                  radius_final=like.radius_final, seed=like.seed)
    return SomConfig(topology=topology, nodes=k, rows=rows, cols=cols, **kw)


def vertical_cluster(cloud: PointCloud, p: HelixParams, algo: str, k: int,
                     split_method: str = "model", seed: int = 0,
                     kmedoids_cfg: Optional[KMedoidsConfig] = None,
                     som_cfg: Optional[SomConfig] = None,
                     features: str = "xy") -> LabeledCloud:
    """Turn-wise 2D clustering with merge-back (the proposed strategy).

    Every turn group needs at least k points; each group is fitted on its
    (x, y) projection with an rng seeded by (seed, turn index), and local
    labels are merged back as turn * k + local.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if features not in ("xy", "xyz"):
        raise ValueError(f"features must be xy or xyz, got {features!r}")
    if split_method == "none":
        groups = [(0, np.arange(len(cloud), dtype=np.int64))]
    else:
        groups = turn_split(cloud, p, split_method)
    for turn, idx in groups:
        if len(idx) < k:
            raise ValueError(f"turn {turn} has only {len(idx)} points, need k={k}")
    labels = np.empty(len(cloud), dtype=np.int64)
    results = []
    for turn, idx in groups:
        X = project_xy(cloud, idx) if features == "xy" else cloud.xyz[idx].copy()
        res = _fit_group(X, algo, k, derive_seed(seed, turn), kmedoids_cfg, som_cfg)
        labels[idx] = turn * k + res.labels
        results.append(res)
    return LabeledCloud(cloud, labels, k,
                        MethodInfo(algo, features, split_method), results)


def baseline_cluster3d(cloud: PointCloud, algo: str, k: int, seed: int = 0,
                       kmedoids_cfg: Optional[KMedoidsConfig] = None,
                       som_cfg: Optional[SomConfig] = None) -> LabeledCloud:
    """Conventional route: one fit on the raw (x, y, z) of the whole cloud."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(cloud) < k:
        raise ValueError(f"cloud has {len(cloud)} points, need k={k}")
    if som_cfg is None and algo == "som":
        som_cfg = som_config_for(k, "grid")
    res = _fit_group(cloud.xyz.copy(), algo, k, seed, kmedoids_cfg, som_cfg)
    return LabeledCloud(cloud, res.labels.copy(), k,
                        MethodInfo(algo, "xyz", "none"), [res])


def sequence_label(cloud: PointCloud, points_per_section: int) -> LabeledCloud:
    """Index-based labeling for sequence-depending scans; no clustering."""
    if points_per_section < 1:
        raise ValueError("points_per_section must be >= 1")
    n = len(cloud)
    if n % points_per_section != 0:
        raise ValueError(
            f"{n} points do not divide into sections of {points_per_section}; "
            "sequence labeling requires the fixed per-section count the scan promised")
    labels = np.arange(n, dtype=np.int64) // points_per_section
    return LabeledCloud(cloud, labels, n // points_per_section,
                        MethodInfo("sequence", "index", "none"), None)
