"""Per-point geometric descriptors used in place of a learned point encoder.

Each row holds 13 values:

    0-2    coordinates normalized to the cloud's bounding box, in [0, 1]
    3      distance to the refined centre over the bounding-box diagonal
    4-6    local PCA eigenvalue ratios l2/l1, l3/l1, l3/l2 (0/0 -> 0)
    7-9    local normal (smallest eigenvector) facing the viewer
    10-12  per-axis rank fraction (share of points with a smaller coordinate)
"""

from __future__ import annotations

from collections import Counter

import numpy as np
from scipy.spatial import cKDTree

from .. import kernels
from .annotate import as_points, refined_center

FEATURE_DIM = 13
DEFAULT_VIEW = (0.0, 0.0, -1.0)

_DEGENERATE_EVAL = 1e-24


def knn(points: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k nearest points (the point itself included)."""
    _, idx = cKDTree(points).query(points, k=k)
    return np.asarray(idx, dtype=np.int64).reshape(len(points), k)


def _ratio(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros_like(a)
    nz = b > 0.0
    out[nz] = a[nz] / b[nz]
    return out


def orient_normals(normals, view_dir, points=None, center=None) -> np.ndarray:
    """Flip normals so that ``dot(n, view_dir) < 0``.

    Normals perpendicular to the view direction are oriented away from
    ``center`` when one is given.
    """
    n = np.array(normals, dtype=np.float64)
    v = np.asarray(view_dir, dtype=np.float64)
    s = n @ v
    flip = s > 1e-9
    if points is not None and center is not None:
        side = np.abs(s) <= 1e-9
        out = np.einsum("ij,ij->i", n, np.asarray(points) - center)
        flip |= side & (out < 0.0)
    n[flip] *= -1.0
    return n


def rank_fractions(pts: np.ndarray) -> np.ndarray:
    n = len(pts)
    out = np.empty_like(pts)
    for ax in range(3):
        srt = np.sort(pts[:, ax])
        out[:, ax] = np.searchsorted(srt, pts[:, ax], side="left") / n
    return out


def extract_features(part, k: int = 16, view_dir=DEFAULT_VIEW, stats: Counter | None = None, backend=None) -> np.ndarray:
    pts = as_points(part)
    n = len(pts)
    if not (n > k >= 4):
        raise ValueError(f"feature extraction needs N > k >= 4 (N={n}, k={k})")
    view = np.asarray(view_dir, dtype=np.float64)
    view = view / np.linalg.norm(view)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    ext = hi - lo
    safe = np.where(ext > 0.0, ext, 1.0)
    norm_xyz = np.where(ext > 0.0, (pts - lo) / safe, 0.0)
    center = refined_center(pts)
    diag = float(np.linalg.norm(ext))
    dist = np.linalg.norm(pts - center, axis=1) / (diag if diag > 0.0 else 1.0)

    pca = kernels.local_pca if backend is None else backend.local_pca
    evals, small = pca(pts, knn(pts, k))
    l1, l2, l3 = evals[:, 0], evals[:, 1], evals[:, 2]
    ratios = np.column_stack([_ratio(l2, l1), _ratio(l3, l1), _ratio(l3, l2)])
    normals = orient_normals(small, view, pts, center)
    degenerate = l1 <= _DEGENERATE_EVAL
    if degenerate.any():
        ratios[degenerate] = 0.0
        normals[degenerate] = -view
        if stats is not None:
            stats["degenerate_neighborhoods"] += int(degenerate.sum())

    return np.column_stack([norm_xyz, dist, ratios, normals, rank_fractions(pts)])
