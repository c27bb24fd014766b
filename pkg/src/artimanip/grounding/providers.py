"""Describe / ground / segment providers.

Offline providers read simulator metadata and the part-ID image.  Perturbed
providers model an imprecise detector (dilated boxes) and an imprecise
segmenter (dominant visible part, eroded by a pixel).  Remote providers send
one JSON request per stage; see :mod:`artimanip.grounding.remote`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..scene.render import BACKGROUND
from .remote import RemoteClient
from .types import BBox, GroundingError, ImageRef, Mask, ProviderConfig, limit_sentences

def describe_template(image: ImageRef) -> str:
    m = image.metadata
    try:
        what, category = m["archetype"], m["category"].replace("_", " ")
    except KeyError as exc:
        raise GroundingError("describe", f"image metadata lacks {exc}") from None
    name = m.get("part_name", what)
    text = f"The movable {what} on the {category}, distinct from fixed parts."
    if name != what:
        text += f" It is the part named {name}."
    return text


def tight_box(mask: np.ndarray) -> BBox | None:
    rows = np.flatnonzero(mask.any(axis=1))
    if len(rows) == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return BBox(cols[0], rows[0], cols[-1] + 1, rows[-1] + 1)


def dilate_box(box: BBox, fraction: float, width: int, height: int) -> BBox:
    """Grow each side by ``round(fraction * side length)`` pixels, clamped to the image."""
    dx = int(np.floor(fraction * box.width + 0.5))
    dy = int(np.floor(fraction * box.height + 0.5))
    return BBox(max(box.x0 - dx, 0), max(box.y0 - dy, 0), min(box.x1 + dx, width), min(box.y1 + dy, height))


def dominant_part(ids: np.ndarray, allowed) -> int | None:
    """Most frequent id among ``allowed``; ties go to the smaller id."""
    allowed = np.asarray(sorted(set(int(a) for a in allowed)), dtype=np.int64)
    if len(allowed) == 0:
        return None
    counts = np.array([np.count_nonzero(ids == a) for a in allowed])
    if counts.max() == 0:
        return None
    return int(allowed[int(np.argmax(counts))])


def erode(mask: np.ndarray, pixels: int) -> np.ndarray:
    if pixels <= 0:
        return mask.copy()
    return ndimage.binary_erosion(mask, iterations=pixels, border_value=0)


class OfflineDescriber:
    def __call__(self, image: ImageRef, task: str) -> str:
        return limit_sentences(describe_template(image))


class OfflineGrounder:
    def __init__(self, dilation: float = 0.0):
        self.dilation = float(dilation)

    def __call__(self, image: ImageRef, description: str) -> BBox:
        if not description.strip():
            raise GroundingError("ground", "empty description")
        if "target" not in image.metadata:
            raise GroundingError("ground", "image metadata lacks the target part")
        box = tight_box(image.part_ids == int(image.metadata["target"]))
        if box is None:
            raise GroundingError("ground", "part not visible")
        if self.dilation > 0:
            box = dilate_box(box, self.dilation, image.width, image.height)
        return box


class OfflineSegmenter:
    """Pixels of the dominant actionable part inside the box."""

    def __call__(self, image: ImageRef, box: BBox) -> Mask:
        box.check_fits(image.width, image.height)
        win = image.part_ids[box.window()]
        pid = dominant_part(win, image.actionable)
        if pid is None:
            raise GroundingError("segment", "no actionable part pixels inside the box")
        out = np.zeros(image.part_ids.shape, dtype=bool)
        out[box.window()] = win == pid
        return Mask(out)


class PerturbedSegmenter:
    """Dominant visible part inside the box, whatever it is, eroded by ``erosion`` pixels."""

    def __init__(self, erosion: int = 1):
        self.erosion = int(erosion)

    def __call__(self, image: ImageRef, box: BBox) -> Mask:
        box.check_fits(image.width, image.height)
        win = image.part_ids[box.window()]
        visible = np.unique(win[win != BACKGROUND])
        pid = dominant_part(win, visible)
        if pid is None:
            raise GroundingError("segment", "no part pixels inside the box")
        out = np.zeros(image.part_ids.shape, dtype=bool)
        out[box.window()] = win == pid
        out = erode(out, self.erosion)
        if not out.any():
            raise GroundingError("segment", "mask vanished under erosion")
        return Mask(out)


@dataclass
class Providers:
    describe: object
    ground: object
    segment: object


def make_providers(cfg: ProviderConfig | None = None) -> Providers:
    cfg = cfg or ProviderConfig()
    client = RemoteClient(cfg.endpoint, cfg.timeout, cfg.retries) if cfg.endpoint else None
    describe = {"offline": OfflineDescriber, "perturbed": OfflineDescriber}.get(cfg.describe)
    d = describe() if describe else client.describer()
    if cfg.ground == "remote":
        g = client.grounder()
    else:
        g = OfflineGrounder(cfg.dilation if cfg.ground == "perturbed" else 0.0)
    if cfg.segment == "remote":
        s = client.segmenter()
    elif cfg.segment == "perturbed":
        s = PerturbedSegmenter(cfg.erosion)
    else:
        s = OfflineSegmenter()
    return Providers(d, g, s)
