"""Elliptical-helix tube model and synthetic scan generation.

The scanned object is a tube of elliptical cross-section whose centerline is
an elliptical helix::

    C(t) = (A cos t, B sin t, pitch * t / 2pi),   t in [0, 2pi * turns)

Surface points are placed on the tube cross-section at sweep parameter t and
cross-section angle phi, using a singularity-free local frame (the horizontal
normal comes from C'(t) x e_z, never a Frenet normal, which flips for
elliptical footprints).  Two scan regimes are provided: ``scan_sequential``
(fixed number of points per cross-section, in section order) and
``scan_flexible`` (asynchronous, uniform random t and phi).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass
class HelixParams:
    """Geometry of the helix centerline and the tube cross-section (mm)."""

    footprint_a: float = 30.0   # semi-axis of the footprint ellipse along X
    footprint_b: float = 26.0   # semi-axis along Y
    pitch: float = 10.0         # Z rise per full turn
    turns: float = 1.0          # number of turns (positive, may be fractional)
    tube_a: float = 0.5         # tube-ellipse semi-axis along the horizontal normal
    tube_b: float = 4.0         # tube-ellipse semi-axis along the binormal

    def __post_init__(self):
        for name in ("footprint_a", "footprint_b", "pitch", "turns", "tube_a", "tube_b"):
            if not getattr(self, name) > 0:
                raise ValueError(f"HelixParams.{name} must be > 0, got {getattr(self, name)}")
        if self.tube_b >= self.pitch / 2:
            warnings.warn(
                f"tube_b={self.tube_b} >= pitch/2={self.pitch / 2}: adjacent turns may "
                "overlap in Z and turn separation becomes unreliable",
                stacklevel=2,
            )

    @property
    def t_max(self) -> float:
        return TWO_PI * self.turns

    @property
    def n_turns(self) -> int:
        """Number of (possibly partial) turns, i.e. distinct turn indices."""
        return max(1, int(math.ceil(self.turns - 1e-12)))


@dataclass
class SurfacePoint:
    """One 3D sample; truth fields are None for external (real-scan) data."""

    x: float
    y: float
    z: float
    turn: Optional[int] = None
    t: Optional[float] = None
    phi: Optional[float] = None

    @property
    def has_truth(self) -> bool:
        return self.t is not None


@dataclass
class Provenance:
    mode: str = "external"          # sequential | flexible | external
    seed: Optional[int] = None
    noise_sigma: Optional[float] = None


@dataclass
class PointCloud:
    """Ordered, index-addressable point set.

    ``xyz`` is (n, 3) float64.  Ground truth, when present, is carried as
    parallel arrays ``turn`` (int64), ``t`` and ``phi`` (float64); labels
    produced downstream join back purely by row index.
    """

    xyz: np.ndarray
    turn: Optional[np.ndarray] = None
    t: Optional[np.ndarray] = None
    phi: Optional[np.ndarray] = None
    provenance: Provenance = field(default_factory=Provenance)

    def __post_init__(self):
        self.xyz = np.asarray(self.xyz, dtype=np.float64)
        if self.xyz.ndim != 2 or self.xyz.shape[1] != 3:
            raise ValueError(f"xyz must be (n, 3), got {self.xyz.shape}")
        truth = [self.turn, self.t, self.phi]
        if any(a is not None for a in truth) and any(a is None for a in truth):
            raise ValueError("truth arrays turn/t/phi must be all present or all absent")
        if self.t is not None:
            self.turn = np.asarray(self.turn, dtype=np.int64)
            self.t = np.asarray(self.t, dtype=np.float64)
            self.phi = np.asarray(self.phi, dtype=np.float64)
            for name, a in (("turn", self.turn), ("t", self.t), ("phi", self.phi)):
                if a.shape != (len(self.xyz),):
                    raise ValueError(f"truth array {name} has shape {a.shape}, want ({len(self.xyz)},)")

    def __len__(self) -> int:
        return len(self.xyz)

    @property
    def has_truth(self) -> bool:
        return self.t is not None

    def point(self, i: int) -> SurfacePoint:
        x, y, z = self.xyz[i]
        if self.has_truth:
            return SurfacePoint(x, y, z, int(self.turn[i]), float(self.t[i]), float(self.phi[i]))
        return SurfacePoint(x, y, z)


# ---------------------------------------------------------------------------
# Centerline and local frame
# ---------------------------------------------------------------------------

def centerline(t, p: HelixParams) -> np.ndarray:
    """Centerline point C(t); accepts a scalar or an array of t values."""
    t = np.asarray(t, dtype=np.float64)
    out = np.stack(
        [
            p.footprint_a * np.cos(t),
            p.footprint_b * np.sin(t),
            p.pitch * t / TWO_PI,
        ],
        axis=-1,
    )
    return out


def centerline_velocity(t, p: HelixParams) -> np.ndarray:
    """dC/dt; never zero since pitch > 0."""
    t = np.asarray(t, dtype=np.float64)
    return np.stack(
        [
            -p.footprint_a * np.sin(t),
            p.footprint_b * np.cos(t),
            np.full_like(t, p.pitch / TWO_PI),
        ],
        axis=-1,
    )


def _frame_arrays(t: np.ndarray, p: HelixParams):
    """Vectorized orthonormal frame: tangent, n1 (horizontal), n2."""
    v = centerline_velocity(t, p)
    tangent = v / np.linalg.norm(v, axis=-1, keepdims=True)
    # v x e_z = (v_y, -v_x, 0): horizontal, nonzero because the footprint is
    # an ellipse traversed at nonzero speed in XY
    n1 = np.stack([v[..., 1], -v[..., 0], np.zeros_like(v[..., 0])], axis=-1)
    n1 = n1 / np.linalg.norm(n1, axis=-1, keepdims=True)
    n2 = np.cross(tangent, n1)
    n2 = n2 / np.linalg.norm(n2, axis=-1, keepdims=True)
    return tangent, n1, n2


def local_frame(t: float, p: HelixParams):
    """Orthonormal (tangent, n1, n2) at sweep parameter t.

    n1 = normalized C'(t) x e_z lies in the XY plane; n2 completes the
    right-handed frame and carries most of the vertical direction.
    """
    tt = np.asarray([float(t)], dtype=np.float64)
    tangent, n1, n2 = _frame_arrays(tt, p)
    return tangent[0], n1[0], n2[0]


def _surface_xyz(t: np.ndarray, phi: np.ndarray, p: HelixParams) -> np.ndarray:
    """Noise-free tube surface points for parallel arrays t, phi."""
    c = centerline(t, p)
    _, n1, n2 = _frame_arrays(t, p)
    return c + p.tube_a * np.cos(phi)[..., None] * n1 + p.tube_b * np.sin(phi)[..., None] * n2


def surface_point(t: float, phi: float, p: HelixParams, noise_sigma: float = 0.0,
                  rng: Optional[np.random.Generator] = None) -> SurfacePoint:
    """Sample one tube-surface point at (t, phi) with isotropic Gaussian noise."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    xyz = _surface_xyz(np.asarray([float(t)]), np.asarray([float(phi)]), p)[0]
    if noise_sigma > 0:
        if rng is None:
            raise ValueError("noise_sigma > 0 requires an rng")
        xyz = xyz + rng.normal(0.0, noise_sigma, size=3)
    return SurfacePoint(float(xyz[0]), float(xyz[1]), float(xyz[2]),
                        int(math.floor(t / TWO_PI)), float(t), float(phi))


# ---------------------------------------------------------------------------
# Scan regimes
# ---------------------------------------------------------------------------

def scan_sequential(p: HelixParams, sections_per_turn: int, points_per_section: int,
                    noise_sigma: float = 0.0, seed: int = 0) -> PointCloud:
    """Sequence-depending scan: fixed cross-sections, fixed count per section.

    Sections sit at t_s = 2pi * s / sections_per_turn for every s with
    t_s < 2pi * turns; within a section the phi values are equally spaced on
    [0, 2pi).  Output is section-major, so all points of one cross-section
    are contiguous and labeling by index is possible downstream.
    """
    if sections_per_turn < 1 or points_per_section < 1:
        raise ValueError("sections_per_turn and points_per_section must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    n_sections = int(math.ceil(sections_per_turn * p.turns - 1e-12))
    s = np.arange(n_sections)
    t_sections = TWO_PI * (s / sections_per_turn)
    turn_sections = s // sections_per_turn  # exact integer arithmetic at turn boundaries

    t = np.repeat(t_sections, points_per_section)
    turn = np.repeat(turn_sections, points_per_section)
    phi = np.tile(TWO_PI * np.arange(points_per_section) / points_per_section, n_sections)

    xyz = _surface_xyz(t, phi, p)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        xyz = xyz + rng.normal(0.0, noise_sigma, size=xyz.shape)
    return PointCloud(xyz, turn=turn, t=t, phi=phi,
                      provenance=Provenance("sequential", seed, noise_sigma))


def scan_flexible(p: HelixParams, n_points: int, noise_sigma: float = 0.0,
                  seed: int = 0) -> PointCloud:
    """Flexible (asynchronous) scan: t ~ U[0, 2pi*turns), phi ~ U[0, 2pi)."""
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.0, p.t_max, size=n_points)
    phi = rng.uniform(0.0, TWO_PI, size=n_points)
    xyz = _surface_xyz(t, phi, p)
    if noise_sigma > 0:
        xyz = xyz + rng.normal(0.0, noise_sigma, size=xyz.shape)
    turn = np.floor(t / TWO_PI).astype(np.int64)
    return PointCloud(xyz, turn=turn, t=t, phi=phi,
                      provenance=Provenance("flexible", seed, noise_sigma))


# ---------------------------------------------------------------------------
# Centerline projection
# ---------------------------------------------------------------------------

GRID_PER_TURN = 720
REFINE_TOL = 1e-6


def project_to_centerline_many(q: np.ndarray, p: HelixParams) -> np.ndarray:
    """t* minimizing |q - C(t)| over [0, 2pi*turns] for each row of q.

    Dense grid scan (GRID_PER_TURN samples per turn, ties to smaller t)
    followed by vectorized ternary refinement of every point's bracket down
    to REFINE_TOL radians.
    """
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    n_grid = int(round(GRID_PER_TURN * p.turns)) + 1
    n_grid = max(n_grid, 2)
    grid = np.linspace(0.0, p.t_max, n_grid)
    cpts = centerline(grid, p)                       # (g, 3)
    # (n, g) squared distances; argmin picks the first (smallest t) on ties
    d2 = ((q[:, None, :] - cpts[None, :, :]) ** 2).sum(axis=2)
    best = np.argmin(d2, axis=1)
    step = grid[1] - grid[0]
    lo = np.clip(grid[best] - step, 0.0, p.t_max)
    hi = np.clip(grid[best] + step, 0.0, p.t_max)

    def f(tv):
        return ((q - centerline(tv, p)) ** 2).sum(axis=1)

    while np.max(hi - lo) > REFINE_TOL:
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        keep_lo = f(m1) <= f(m2)     # <= biases the bracket toward smaller t
        hi = np.where(keep_lo, m2, hi)
        lo = np.where(keep_lo, lo, m1)
    return 0.5 * (lo + hi)


def project_to_centerline(q, p: HelixParams) -> float:
    """Scalar wrapper around :func:`project_to_centerline_many`."""
    return float(project_to_centerline_many(np.asarray(q, dtype=np.float64).reshape(1, 3), p)[0])
