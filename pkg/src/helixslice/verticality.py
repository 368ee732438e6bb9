"""Verticality metrics and the threshold-number search.

A clustering at level k is "vertical" when every nonempty cluster occupies a
thin angular sector of the helix sweep: the maximum circular span of member
sweep angles (t mod 2pi) must stay within alpha * 2pi / k.  Empty clusters
never fail the verdict.  The threshold number of a scenario is the largest k
on the search grid whose pass fraction over repeated trials reaches rho.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import geometry, pipeline
from .clustering import KMedoidsConfig, SomConfig
from .geometry import TWO_PI, HelixParams
from .pipeline import LabeledCloud
from .seeding import derive_seed

DEFAULT_ALPHA = 1.5


def circular_span(angles) -> float:
    """Width of the smallest arc containing all angles (2pi minus the
    largest circular gap); a single angle spans 0."""
    a = np.sort(np.mod(np.asarray(angles, dtype=np.float64).ravel(), TWO_PI))
    m = len(a)
    if m == 0:
        raise ValueError("circular_span of an empty angle set")
    if m == 1:
        return 0.0
    gaps = np.empty(m)
    gaps[:-1] = a[1:] - a[:-1]
    gaps[-1] = (a[0] - a[-1]) + TWO_PI   # wrap-around gap
    g = int(np.argmax(gaps))
    # the covering arc runs from the angle after the largest gap to the one
    # before it; computing it as a mod difference keeps the all-equal case
    # exactly zero
    start = a[(g + 1) % m]
    end = a[g]
    return float(np.mod(end - start, TWO_PI))


@dataclass
class VerticalityReport:
    k: int
    nonempty: int
    per_cluster_span: np.ndarray
    max_span: float
    alpha: float
    vertical: bool
    purity: float


def verticality_report(lc: LabeledCloud, alpha: float = DEFAULT_ALPHA) -> VerticalityReport:
    """Angular spans per cluster plus the verdict at level k = lc.k_per_turn.

    Needs ground-truth sweep angles; external clouds without truth are
    rejected (generate a synthetic scan, or supply truth columns).
    """
    if not lc.cloud.has_truth:
        raise ValueError("verticality needs ground-truth t; this cloud has none "
                         "(use a synthetic scan or a CSV with turn,t,phi columns)")
    if alpha < 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")
    k = lc.k_per_turn
    t_mod = np.mod(lc.cloud.t, TWO_PI)
    labels = lc.labels
    spans = []
    for lab in np.unique(labels):
        spans.append(circular_span(t_mod[labels == lab]))
    spans = np.asarray(spans)
    max_span = float(spans.max())
    vertical = bool(max_span <= alpha * TWO_PI / k)

    # purity: does a point's own ideal sector match its cluster's majority
    # sector?  Sectors are the k equal angular bins of one turn.
    sector = np.minimum((t_mod / (TWO_PI / k)).astype(np.int64), k - 1)
    purity_hits = 0
    for lab in np.unique(labels):
        members = labels == lab
        counts = np.bincount(sector[members], minlength=k)
        majority = int(np.argmax(counts))        # ties to the smaller sector
        purity_hits += int(counts[majority])
    return VerticalityReport(
        k=k,
        nonempty=len(spans),
        per_cluster_span=spans,
        max_span=max_span,
        alpha=float(alpha),
        vertical=vertical,
        purity=float(purity_hits / len(labels)),
    )


# ---------------------------------------------------------------------------
# Threshold search
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    """Everything needed to run one end-to-end trial, minus k and the seeds."""

    params: HelixParams = field(default_factory=HelixParams)
    scan_mode: str = "flexible"            # flexible | sequential
    n_points: int = 3600                   # flexible scan size
    sections_per_turn: int = 72            # sequential scan layout
    points_per_section: int = 50
    noise_sigma: float = 0.05
    algo: str = "kmedoids"                 # kmedoids | som
    features: str = "xy"                   # xy | xyz
    split: str = "model"                   # model | zslab | truth | none
    som_topology: str = "auto"             # auto: ring for xy, grid for xyz
    seed: int = 0
    kmedoids_restarts: int = 2             # sweep default; single fits default to 5
    kmedoids_cfg: Optional[KMedoidsConfig] = None
    som_cfg: Optional[SomConfig] = None

    def topology(self) -> str:
        if self.som_topology != "auto":
            return self.som_topology
        return "ring" if self.features == "xy" else "grid"

    def scan(self, seed: int) -> geometry.PointCloud:
        if self.scan_mode == "flexible":
            return geometry.scan_flexible(self.params, self.n_points, self.noise_sigma, seed)
        if self.scan_mode == "sequential":
            return geometry.scan_sequential(self.params, self.sections_per_turn,
                                            self.points_per_section, self.noise_sigma, seed)
        raise ValueError(f"unknown scan mode {self.scan_mode!r}")

    def cluster(self, cloud: geometry.PointCloud, k: int, seed: int) -> LabeledCloud:
        som_cfg = self.som_cfg
        if self.algo == "som" and som_cfg is None:
            som_cfg = pipeline.som_config_for(k, self.topology())
        km_cfg = self.kmedoids_cfg
        if self.algo == "kmedoids" and km_cfg is None:
            km_cfg = KMedoidsConfig(k=k, restarts=self.kmedoids_restarts)
        if self.features == "xyz" and self.split == "none":
            return pipeline.baseline_cluster3d(cloud, self.algo, k, seed=seed,
                                               kmedoids_cfg=km_cfg, som_cfg=som_cfg)
        return pipeline.vertical_cluster(cloud, self.params, self.algo, k,
                                         split_method=self.split, seed=seed,
                                         kmedoids_cfg=km_cfg, som_cfg=som_cfg,
                                         features=self.features)


@dataclass
class ThresholdResult:
    grid: list[int]
    verdicts: list[float]            # per-k fraction of vertical trials
    threshold: int                   # largest k with fraction >= rho, else 0
    first_fail: Optional[int]        # smallest k with fraction < rho
    error_counts: list[int]          # trials that errored (counted as failed)
    mean_max_span: list[float]       # diagnostic, NaN where every trial errored
    trials: int = 0
    rho: float = 0.0
    alpha: float = DEFAULT_ALPHA


def _trial_outcome(scenario: Scenario, k: int, trial: int, alpha: float):
    """One end-to-end trial: (vertical, errored, max_span)."""
    scan_seed = derive_seed(scenario.seed, k, trial, 0)
    fit_seed = derive_seed(scenario.seed, k, trial, 1)
    try:
        cloud = scenario.scan(scan_seed)
        lc = scenario.cluster(cloud, k, fit_seed)
        report = verticality_report(lc, alpha)
    except ValueError:
        return False, True, float("nan")
    return report.vertical, False, report.max_span


def threshold_search(scenario: Scenario, grid, trials: int = 5, rho: float = 0.6,
                     alpha: float = DEFAULT_ALPHA, workers: int = 1) -> ThresholdResult:
    """Run trials at every k on the grid and locate the threshold number.

    Each trial gets a fresh scan seed and fit seed derived from the scenario
    seed, shared across scenarios that differ only in algorithm/features so
    comparisons see the same clouds.  Per-trial errors (for instance a turn
    group smaller than k) count as failed trials and are tallied separately.
    No monotonicity in k is assumed.  Trials are independent given their
    derived seeds, so workers > 1 spreads them over processes without
    changing any result.
    """
    grid = [int(k) for k in grid]
    if sorted(grid) != grid:
        raise ValueError("grid must be sorted ascending")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not (0 < rho <= 1):
        raise ValueError("rho must be in (0, 1]")
    tasks = [(k, trial) for k in grid for trial in range(trials)]
    if workers > 1:
        import multiprocessing
        from concurrent.futures import ProcessPoolExecutor
        # spawn, not fork: the numba OpenMP runtime in this process makes
        # forking unsafe once any parallel kernel has executed
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = {t: pool.submit(_trial_outcome, scenario, t[0], t[1], alpha)
                       for t in tasks}
            outcomes = {t: f.result() for t, f in futures.items()}
    else:
        outcomes = {t: _trial_outcome(scenario, t[0], t[1], alpha) for t in tasks}
    verdicts, error_counts, mean_spans = [], [], []
    for k in grid:
        results = [outcomes[(k, trial)] for trial in range(trials)]
        passes = sum(1 for vertical, _, _ in results if vertical)
        errors = sum(1 for _, errored, _ in results if errored)
        spans = [s for _, errored, s in results if not errored]
        verdicts.append(passes / trials)
        error_counts.append(errors)
        mean_spans.append(float(np.mean(spans)) if spans else float("nan"))
    threshold = 0
    first_fail = None
    for k, frac in zip(grid, verdicts):
        if frac >= rho:
            threshold = max(threshold, k)
        elif first_fail is None:
            first_fail = k
    return ThresholdResult(grid=grid, verdicts=verdicts, threshold=threshold,
                           first_fail=first_fail, error_counts=error_counts,
                           mean_max_span=mean_spans, trials=trials, rho=rho,
                           alpha=alpha)
