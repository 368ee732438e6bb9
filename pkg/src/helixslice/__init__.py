"""Vertical clustering of elliptical helical point clouds."""

from .geometry import (
    HelixParams,
    PointCloud,
    Provenance,
    SurfacePoint,
    centerline,
    local_frame,
    project_to_centerline,
    scan_flexible,
    scan_sequential,
    surface_point,
)
from .clustering import (
    ClusterResult,
    KMedoidsConfig,
    SomConfig,
    kmedoids_assign,
    kmedoids_fit,
    pairwise_cost,
    som_fit,
)
from .pipeline import (
    LabeledCloud,
    MethodInfo,
    baseline_cluster3d,
    project_xy,
    sequence_label,
    som_config_for,
    turn_split,
    vertical_cluster,
)
from .verticality import (
    Scenario,
    ThresholdResult,
    VerticalityReport,
    circular_span,
    threshold_search,
    verticality_report,
)

__version__ = "0.1.0"

__all__ = [
    "HelixParams", "PointCloud", "Provenance", "SurfacePoint",
    "centerline", "local_frame", "project_to_centerline",
    "scan_flexible", "scan_sequential", "surface_point",
    "ClusterResult", "KMedoidsConfig", "SomConfig",
    "kmedoids_assign", "kmedoids_fit", "pairwise_cost", "som_fit",
    "LabeledCloud", "MethodInfo", "baseline_cluster3d", "project_xy",
    "sequence_label", "som_config_for", "turn_split", "vertical_cluster",
    "Scenario", "ThresholdResult", "VerticalityReport",
    "circular_span", "threshold_search", "verticality_report",
    "__version__",
]
