"""Analytic primitives: surface sampling, surface distance, face areas."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose

KINDS = ("box", "cylinder", "capsule")
KIND_CODE = {"box": 0, "cylinder": 1, "capsule": 2}


@dataclass(frozen=True)
class PartShape:
    """One primitive in its part frame.

    ``box`` dims are full extents (x, y, z).  ``cylinder`` dims are
    (radius, height) along local z.  ``capsule`` (capped cylinder) dims are
    (radius, segment height); hemispherical ends add ``radius`` at each end.
    ``pose`` places the part frame relative to its parent frame.
    """

    kind: str
    dims: tuple
    pose: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown primitive kind {self.kind!r}; expected one of {KINDS}")
        dims = tuple(float(d) for d in self.dims)
        expected = 3 if self.kind == "box" else 2
        if len(dims) != expected:
            raise ValueError(f"{self.kind} takes {expected} dimensions, got {len(dims)}")
        if not all(np.isfinite(d) and d > 0.0 for d in dims):
            raise ValueError(f"dimensions must be strictly positive, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def code(self) -> int:
        return KIND_CODE[self.kind]

    def kernel_params(self) -> tuple[float, float, float]:
        if self.kind == "box":
            return (self.dims[0] / 2, self.dims[1] / 2, self.dims[2] / 2)
        return (self.dims[0], self.dims[1] / 2, 0.0)

    def patches(self) -> list[tuple[str, float]]:
        """Surface patches and their areas, in a fixed order."""
        if self.kind == "box":
            x, y, z = self.dims
            return [
                ("+x", y * z), ("-x", y * z),
                ("+y", x * z), ("-y", x * z),
                ("+z", x * y), ("-z", x * y),
            ]
        r, h = self.dims
        if self.kind == "cylinder":
            return [("side", 2 * np.pi * r * h), ("+z", np.pi * r * r), ("-z", np.pi * r * r)]
        return [("side", 2 * np.pi * r * h), ("+cap", 2 * np.pi * r * r), ("-cap", 2 * np.pi * r * r)]

    def area(self) -> float:
        return float(sum(a for _, a in self.patches()))

    def half_extents(self) -> np.ndarray:
        if self.kind == "box":
            return np.asarray(self.dims) / 2
        r, h = self.dims
        if self.kind == "cylinder":
            return np.array([r, r, h / 2])
        return np.array([r, r, h / 2 + r])


def sample_patch(shape: PartShape, patch: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` uniform points on one patch, in the shape's local frame."""
    if n <= 0:
        return np.zeros((0, 3))
    if shape.kind == "box":
        h = np.asarray(shape.dims) / 2
        ax = "xyz".index(patch[1])
        sign = 1.0 if patch[0] == "+" else -1.0
        pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
        pts[:, ax] = sign * h[ax]
        return pts
    r, height = shape.dims
    hh = height / 2
    if patch == "side":
        phi = rng.uniform(0.0, 2 * np.pi, n)
        z = rng.uniform(-hh, hh, n)
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    if patch in ("+z", "-z"):
        rho = r * np.sqrt(rng.uniform(0.0, 1.0, n))
        phi = rng.uniform(0.0, 2 * np.pi, n)
        z = np.full(n, hh if patch == "+z" else -hh)
        return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    # hemispherical caps of the capsule
    g = rng.normal(size=(n, 3))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    g[:, 2] = np.abs(g[:, 2]) if patch == "+cap" else -np.abs(g[:, 2])
    pts = r * g
    pts[:, 2] += hh if patch == "+cap" else -hh
    return pts


def sample_shape(shape: PartShape, density: float, rng: np.random.Generator) -> np.ndarray:
    """Points on every patch, ``round(area * density)`` per patch (local frame)."""
    chunks = [sample_patch(shape, p, int(round(a * density)), rng) for p, a in shape.patches()]
    return np.concatenate(chunks, axis=0) if chunks else np.zeros((0, 3))


def sample_shape_count(shapes, poses, n_points: int, rng: np.random.Generator) -> np.ndarray:
    """About ``n_points`` points spread over several shapes by area (given frame)."""
    areas = np.array([s.area() for s in shapes])
    density = n_points / areas.sum()
    out = [pose.apply(sample_shape(s, density, rng)) for s, pose in zip(shapes, poses)]
    return np.concatenate(out, axis=0)


def surface_distance(shape: PartShape, pts_local) -> np.ndarray:
    """Unsigned distance from local-frame points to the primitive's surface."""
    p = np.atleast_2d(np.asarray(pts_local, dtype=np.float64))
    if shape.kind == "box":
        h = np.asarray(shape.dims) / 2
        q = np.abs(p) - h
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return np.abs(outside + inside)
    r, height = shape.dims
    hh = height / 2
    rad = np.hypot(p[:, 0], p[:, 1])
    if shape.kind == "cylinder":
        dr = rad - r
        dz = np.abs(p[:, 2]) - hh
        outside = np.hypot(np.maximum(dr, 0.0), np.maximum(dz, 0.0))
        inside = np.minimum(np.maximum(dr, dz), 0.0)
        return np.abs(outside + inside)
    zc = np.clip(p[:, 2], -hh, hh)
    return np.abs(np.hypot(rad, p[:, 2] - zc) - r)
