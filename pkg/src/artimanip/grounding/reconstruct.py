"""Depth back-projection, mask IoU, bitmap IO and the chained grounding call."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..affordance.annotate import MIN_POINTS, PartPointCloud
from ..scene.render import ObservationFrame
from .types import BBox, GroundingError, ImageRef, Mask


def _raster(m) -> np.ndarray:
    return m.data if isinstance(m, Mask) else np.asarray(m, dtype=bool)


def backproject_pixels(mask, frame: ObservationFrame) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """World points of masked pixels with depth > 0, plus their (u, v) pixel coordinates."""
    m = _raster(mask)
    if m.shape != frame.shape:
        raise ValueError(f"mask {m.shape} does not match frame {frame.shape}")
    v, u = np.nonzero(m & (frame.depth > 0))
    d = frame.depth[v, u].astype(np.float64)
    cam = frame.camera
    pc = np.column_stack([(u - cam.cx) * d / cam.fx, (v - cam.cy) * d / cam.fy, d])
    return cam.pose.apply(pc), u, v


def backproject(mask, frame: ObservationFrame) -> PartPointCloud:
    pts, _, _ = backproject_pixels(mask, frame)
    if len(pts) < MIN_POINTS:
        raise GroundingError("backproject", f"insufficient part points ({len(pts)} < {MIN_POINTS})")
    return PartPointCloud(pts, frame="world")


def mask_iou(a, b) -> float:
    """|a & b| / |a | b|; two empty masks count as a perfect match."""
    x, y = _raster(a), _raster(b)
    if x.shape != y.shape:
        raise ValueError(f"mask shapes differ: {x.shape} vs {y.shape}")
    union = np.count_nonzero(x | y)
    if union == 0:
        return 1.0
    return np.count_nonzero(x & y) / union


# --- portable bitmap ---------------------------------------------------------


def mask_to_pbm(mask) -> str:
    """Plain (P1) portable bitmap text; 1 = inside the mask."""
    m = _raster(mask)
    h, w = m.shape
    rows = (" ".join("1" if b else "0" for b in row) for row in m)
    return f"P1\n{w} {h}\n" + "\n".join(rows) + "\n"


def mask_from_pbm(text: str) -> Mask:
    tokens = []
    for line in text.splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P1":
        raise ValueError("not a plain portable bitmap")
    try:
        w, h = int(tokens[1]), int(tokens[2])
    except (IndexError, ValueError):
        raise ValueError("bitmap header lacks width/height") from None
    body = "".join(tokens[3:])
    if len(body) != w * h or set(body) - {"0", "1"}:
        raise ValueError(f"bitmap body has {len(body)} samples, expected {w * h} binary digits")
    return Mask(np.frombuffer(body.encode("ascii"), dtype=np.uint8).reshape(h, w) == ord("1"))


def write_pbm(path: str | Path, mask) -> None:
    Path(path).write_text(mask_to_pbm(mask), encoding="ascii")


def read_pbm(path: str | Path) -> Mask:
    return mask_from_pbm(Path(path).read_text(encoding="ascii"))


# --- chained call ------------------------------------------------------------


@dataclass
class GroundingResult:
    description: str
    box: BBox
    mask: Mask
    cloud: PartPointCloud


def ground_part(providers, image: ImageRef, task: str) -> GroundingResult:
    """describe -> ground -> segment -> back-project.

    Any failure raises :class:`GroundingError` naming the failing stage; no
    partial result is returned.
    """

    def run(stage, fn, *args):
        try:
            return fn(*args)
        except GroundingError:
            raise
        except Exception as exc:  # provider bugs are attributed to their stage
            raise GroundingError(stage, f"{type(exc).__name__}: {exc}") from exc

    text = run("describe", providers.describe, image, task)
    box = run("ground", providers.ground, image, text)
    mask = run("segment", providers.segment, image, box)
    if mask.shape != image.part_ids.shape:
        raise GroundingError("segment", "mask size differs from the image")
    cloud = run("backproject", backproject, mask, image.frame)
    return GroundingResult(text, box, mask, cloud)
