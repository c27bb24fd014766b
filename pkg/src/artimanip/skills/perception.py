"""Contact selection, surface normals and grasp frames."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..affordance.annotate import as_points
from ..affordance.model import AffordanceMap
from ..geometry import normalize, quat_from_matrix, quat_to_matrix
from .control import SkillError

WORLD_UP = np.array([0.0, 0.0, 1.0])
WORLD_X = np.array([1.0, 0.0, 0.0])
UP_FALLBACK = 0.99
_RANK_EPS = 1e-12


@dataclass(frozen=True)
class GraspPose:
    position: np.ndarray
    orientation: np.ndarray  # unit quaternion; z approaches, y spans the fingers

    def __post_init__(self):
        q = np.asarray(self.orientation, dtype=np.float64)
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise ValueError("grasp orientation must be a unit quaternion")
        object.__setattr__(self, "orientation", q)
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))

    def frame(self) -> np.ndarray:
        """Columns x, y, z of the gripper frame in world coordinates."""
        return quat_to_matrix(self.orientation)


def _scores(m) -> np.ndarray:
    return m.scores if isinstance(m, AffordanceMap) else np.asarray(m, dtype=np.float64)


def select_contact(amap, cloud, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Indices scoring at least ``eps`` and the mean of those points."""
    scores = _scores(amap)
    pts = as_points(cloud)
    if len(scores) != len(pts):
        raise ValueError(f"affordance map has {len(scores)} scores for {len(pts)} points")
    idx = np.flatnonzero(scores >= eps)
    if len(idx) == 0:
        raise SkillError(f"no actionable points (max score {scores.max() if len(scores) else 'n/a'} < eps {eps})")
    return idx, pts[idx].mean(axis=0)


def estimate_normal(cloud, at, k: int, view_dir) -> np.ndarray:
    """Smallest-variance direction of the k points nearest ``at``, facing the viewer."""
    pts = as_points(cloud)
    if len(pts) <= k:
        raise SkillError(f"normal estimation needs more than k={k} points, got {len(pts)}")
    _, idx = cKDTree(pts).query(np.asarray(at, dtype=np.float64), k=k)
    nb = pts[np.atleast_1d(idx)]
    q = nb - nb.mean(axis=0)
    w, V = np.linalg.eigh(q.T @ q / k)
    if w[2] <= 0.0 or w[1] <= _RANK_EPS * w[2]:
        raise SkillError(f"rank-deficient neighbourhood at {np.asarray(at)}: eigenvalues {w}")
    n = V[:, 0]
    if n @ np.asarray(view_dir, dtype=np.float64) > 0.0:
        n = -n
    return normalize(n)


def grasp_frame(normal, up=WORLD_UP) -> np.ndarray:
    z = -normalize(normal)
    ref = np.asarray(up, dtype=np.float64)
    if abs(ref @ z) > UP_FALLBACK:
        ref = WORLD_X
    y = normalize(ref - (ref @ z) * z)
    x = np.cross(y, z)
    return np.column_stack([x, y, z])


def compute_grasp(position, normal) -> GraspPose:
    """Approach along ``-normal`` with the fingers spread along world up (or world x)."""
    return GraspPose(np.asarray(position, dtype=np.float64), quat_from_matrix(grasp_frame(normal)))
