"""Rule-based affordance annotation of part point clouds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose

MIN_POINTS = 8
FACES = ("+x", "-x", "+y", "-y", "+z", "-z")


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class PartPointCloud:
    """Points of one segmented part; ``frame`` names the coordinate frame."""

    points: np.ndarray
    frame: str = "part"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def transformed(self, pose: Pose, frame: str) -> "PartPointCloud":
        return PartPointCloud(pose.apply(self.points), frame)


def as_points(part) -> np.ndarray:
    if isinstance(part, PartPointCloud):
        return part.points
    pts = np.asarray(part, dtype=np.float64).reshape(-1, 3)
    if not np.all(np.isfinite(pts)):
        raise ValueError("point coordinates must be finite")
    return pts


@dataclass(frozen=True)
class SurfaceSpec:
    """Which bounding-box face carries the affordance.

    The box is axis-aligned in ``frame``; ``frame`` maps that frame into the
    cloud's coordinates, so rotating a cloud and its spec together leaves the
    labels unchanged.
    """

    face: str = "+z"
    tolerance: float = 1e-3
    frame: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if self.face not in FACES:
            raise ValueError(f"face must be one of {FACES}, got {self.face!r}")
        if not self.tolerance > 0:
            raise ValueError("face tolerance must be positive")

    @property
    def axis(self) -> int:
        return "xyz".index(self.face[1])

    @property
    def sign(self) -> float:
        return 1.0 if self.face[0] == "+" else -1.0

    def moved(self, pose: Pose) -> "SurfaceSpec":
        """The same spec after applying ``pose`` to the cloud."""
        return SurfaceSpec(self.face, self.tolerance, pose @ self.frame)


def refined_center(part) -> np.ndarray:
    """Midpoint of the point centroid and the axis-aligned bounding-box centre."""
    pts = as_points(part)
    if len(pts) < MIN_POINTS:
        raise AnnotationError(f"need at least {MIN_POINTS} points, got {len(pts)}")
    centroid = pts.mean(axis=0)
    box_center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    return 0.5 * (centroid + box_center)


def face_membership(pts_local: np.ndarray, surface: SurfaceSpec) -> np.ndarray:
    ax = surface.axis
    face = pts_local[:, ax].max() if surface.sign > 0 else pts_local[:, ax].min()
    return np.abs(pts_local[:, ax] - face) <= surface.tolerance


def annotate_part(part, surface: SurfaceSpec | None = None, radius_factor: float = 0.5) -> np.ndarray:
    """Binary labels: face points within a disc around the refined centre.

    The disc radius is ``radius_factor`` times the smaller in-face half
    extent of the bounding box.
    """
    surface = surface or SurfaceSpec()
    if not 0.0 < radius_factor <= 1.0:
        raise ValueError("radius_factor must lie in (0, 1]")
    pts = as_points(part)
    if len(pts) < MIN_POINTS:
        raise AnnotationError(f"need at least {MIN_POINTS} points, got {len(pts)}")
    local = surface.frame.inverse().apply(pts)
    on_face = face_membership(local, surface)
    if not on_face.any():
        raise AnnotationError("empty affordance surface")
    center = refined_center(local)
    inface = [a for a in range(3) if a != surface.axis]
    half = 0.5 * (local.max(axis=0) - local.min(axis=0))[inface]
    radius = radius_factor * half.min()
    dist = np.linalg.norm(local[:, inface] - center[inface], axis=1)
    labels = (on_face & (dist <= radius)).astype(np.int8)
    if not labels.any():
        raise AnnotationError("empty affordance surface: no face point inside the affordance radius")
    return labels
