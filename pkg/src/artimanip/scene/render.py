"""Pinhole camera, ray-cast observations, and their on-disk formats."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import kernels
from ..geometry import Pose, look_at, normalize
from .objects import ArticulatedObject, affordance_face_center, load_templates

BACKGROUND = kernels.BACKGROUND


@dataclass(frozen=True)
class CameraModel:
    """Pinhole intrinsics plus the camera-to-world pose (optical frame: x right, y down, z forward)."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def position(self) -> np.ndarray:
        return self.pose.translation

    @property
    def optical_axis(self) -> np.ndarray:
        return self.pose.rotation[:, 2].copy()

    def project(self, pts_world) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pixel coordinates (u, v) and depth of world points."""
        pc = self.pose.inverse().apply(pts_world)
        z = pc[:, 2]
        return self.fx * pc[:, 0] / z + self.cx, self.fy * pc[:, 1] / z + self.cy, z


@dataclass(frozen=True)
class ObservationFrame:
    depth: np.ndarray  # float32 (H, W), meters along the optical axis, 0 = no hit
    part_ids: np.ndarray  # uint16 (H, W), BACKGROUND where nothing was hit
    camera: CameraModel

    def __post_init__(self):
        if self.depth.shape != self.part_ids.shape:
            raise ValueError("depth and part-id images must share dimensions")
        if self.depth.shape != (self.camera.height, self.camera.width):
            raise ValueError("image size does not match the camera")

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    def mask_of(self, pid: int) -> np.ndarray:
        return self.part_ids == pid


def default_camera(obj: ArticulatedObject, templates=None) -> CameraModel:
    """Camera aimed at the actionable part's affordance face from the object's front."""
    cfg = templates if templates is not None else load_templates()
    sec = cfg["camera"]
    w, h = int(sec["width"]), int(sec["height"])
    fx, fy = float(sec["fx"]), float(sec["fy"])
    target = affordance_face_center(obj)
    front = obj.base.apply_dir(np.array([0.0, -1.0, 0.0]))
    el = float(obj.meta["camera_elevation"])
    direction = normalize(np.cos(el) * front + np.array([0.0, 0.0, np.sin(el)]))
    eye = target + float(obj.meta["camera_distance"]) * direction
    return CameraModel(fx, fy, (w - 1) / 2, (h - 1) / 2, w, h, Pose(look_at(eye, target), eye))


def scene_arrays(obj: ArticulatedObject):
    """Primitive table in kernel layout, ordered by part id."""
    kinds, params, w2l, origins, ids = [], [], [], [], []
    for part in obj.parts:
        pose = obj.part_pose(part.part_id)
        kinds.append(part.shape.code)
        params.append(part.shape.kernel_params())
        w2l.append(pose.rotation.T)
        origins.append(pose.translation)
        ids.append(part.part_id)
    return (
        np.asarray(kinds, dtype=np.int32),
        np.asarray(params, dtype=np.float64).reshape(-1, 3),
        np.asarray(w2l, dtype=np.float64).reshape(-1, 3, 3),
        np.asarray(origins, dtype=np.float64).reshape(-1, 3),
        np.asarray(ids, dtype=np.uint16),
    )


def render_observation(obj: ArticulatedObject, cam: CameraModel, backend=None) -> ObservationFrame:
    """Nearest analytic hit per pixel; ties go to the lower part id."""
    raycast = kernels.raycast if backend is None else backend.raycast
    depth, ids = raycast(
        cam.pose.rotation, cam.pose.translation, cam.fx, cam.fy, cam.cx, cam.cy,
        cam.width, cam.height, *scene_arrays(obj),
    )
    return ObservationFrame(np.asarray(depth, np.float32), np.asarray(ids, np.uint16), cam)


# --- serialization ---------------------------------------------------------

_HEADER = struct.Struct("<II")


def frame_to_bytes(frame: ObservationFrame) -> bytes:
    """Flat layout: uint32 width, uint32 height, float32 depth, uint16 ids (LE, row-major)."""
    h, w = frame.shape
    return (
        _HEADER.pack(w, h)
        + frame.depth.astype("<f4").tobytes()
        + frame.part_ids.astype("<u2").tobytes()
    )


def frame_from_bytes(data: bytes, camera: CameraModel) -> ObservationFrame:
    w, h = _HEADER.unpack_from(data, 0)
    n = w * h
    expected = _HEADER.size + 4 * n + 2 * n
    if len(data) != expected:
        raise ValueError(f"frame payload is {len(data)} bytes, expected {expected}")
    depth = np.frombuffer(data, "<f4", n, _HEADER.size).reshape(h, w).astype(np.float32)
    ids = np.frombuffer(data, "<u2", n, _HEADER.size + 4 * n).reshape(h, w).astype(np.uint16)
    return ObservationFrame(depth, ids, camera)


def write_pgm(path: str | Path, image: np.ndarray) -> None:
    """Binary 16-bit portable graymap (big-endian samples, lossless for uint16)."""
    img = np.asarray(image)
    if img.dtype != np.uint16:
        raise TypeError("write_pgm expects a uint16 image")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(img.astype(">u2").tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    pos += 1
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != "P5":
        raise ValueError(f"not a binary graymap: {magic}")
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(data, dtype, w * h, pos).reshape(h, w).astype(np.uint16)


def depth_to_u16(depth: np.ndarray, scale: float = 1e4) -> np.ndarray:
    """Quantized depth for debug dumps (0.1 mm units by default)."""
    return np.clip(np.round(depth * scale), 0, 65535).astype(np.uint16)
