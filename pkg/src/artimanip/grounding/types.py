"""Image handles, boxes, masks and provider settings for part grounding."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..scene.render import BACKGROUND, ObservationFrame

PROVIDER_KINDS = ("offline", "perturbed", "remote")
STAGES = ("describe", "ground", "segment", "backproject")
MAX_SENTENCES = 3
_SENTENCE = re.compile(r"[^.!?]+[.!?]+|[^.!?]+$")


def limit_sentences(text: str, n: int = MAX_SENTENCES) -> str:
    """First ``n`` sentences of ``text``."""
    parts = [s.strip() for s in _SENTENCE.findall(text.strip()) if s.strip()]
    return " ".join(parts[:n])


class GroundingError(RuntimeError):
    """A grounding stage failed; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.reason = message


@dataclass(frozen=True)
class ImageRef:
    """An observation plus the simulator facts offline providers may read.

    ``metadata`` keys: ``category``, ``target`` (part id), ``part_name``,
    ``archetype`` and ``actionable`` (tuple of part ids).
    """

    frame: ObservationFrame
    metadata: dict = field(default_factory=dict)
    raster: bytes | None = None

    @property
    def width(self) -> int:
        return self.frame.shape[1]

    @property
    def height(self) -> int:
        return self.frame.shape[0]

    @property
    def part_ids(self) -> np.ndarray:
        return self.frame.part_ids

    @property
    def depth(self) -> np.ndarray:
        return self.frame.depth

    @property
    def actionable(self) -> tuple[int, ...]:
        return tuple(int(i) for i in self.metadata.get("actionable", ()))


def image_ref(frame: ObservationFrame, obj=None, raster: bytes | None = None) -> ImageRef:
    """ImageRef carrying metadata read from a simulator object."""
    meta = {}
    if obj is not None:
        part = obj.parts[obj.target]
        meta = {
            "category": obj.category,
            "target": obj.target,
            "part_name": part.name,
            "archetype": part.archetype or part.name,
            "actionable": tuple(obj.actionable_ids),
        }
    return ImageRef(frame, meta, raster)


@dataclass(frozen=True)
class BBox:
    """Pixel rectangle, ``x0 <= u < x1`` and ``y0 <= v < y1``."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            object.__setattr__(self, name, int(getattr(self, name)))
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ValueError(f"degenerate box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    def check_fits(self, width: int, height: int) -> None:
        if self.x1 > width or self.y1 > height:
            raise ValueError(f"box {self.as_tuple()} exceeds image {width}x{height}")

    def window(self):
        return (slice(self.y0, self.y1), slice(self.x0, self.x1))


@dataclass(frozen=True, eq=False)
class Mask:
    data: np.ndarray  # bool (H, W)

    def __post_init__(self):
        a = np.asarray(self.data)
        if a.ndim != 2:
            raise ValueError("mask must be two-dimensional")
        object.__setattr__(self, "data", a.astype(bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    def __eq__(self, other):
        if not isinstance(other, Mask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    __hash__ = None


def gt_mask(image: ImageRef, pid: int | None = None) -> Mask:
    pid = int(image.metadata["target"]) if pid is None else pid
    return Mask(image.part_ids == pid)


def foreground(image: ImageRef) -> np.ndarray:
    return image.part_ids != BACKGROUND


@dataclass(frozen=True)
class ProviderConfig:
    """Provider kind per stage and transport settings for remote stages."""

    describe: str = "offline"
    ground: str = "offline"
    segment: str = "offline"
    endpoint: str | None = None
    timeout: float = 10.0
    retries: int = 2
    dilation: float = 0.0
    erosion: int = 1

    def __post_init__(self):
        for stage in ("describe", "ground", "segment"):
            kind = getattr(self, stage)
            if kind not in PROVIDER_KINDS:
                raise ValueError(f"{stage} provider must be one of {PROVIDER_KINDS}, got {kind!r}")
            if kind == "remote" and not self.endpoint:
                raise ValueError(f"remote {stage} provider needs an endpoint")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0 or self.erosion < 0:
            raise ValueError("retries and erosion must be nonnegative")
        if not self.dilation >= 0:
            raise ValueError("dilation must be nonnegative")

    @classmethod
    def perturbed(cls, dilation: float, erosion: int = 1) -> "ProviderConfig":
        kind = "perturbed"
        return cls(describe="offline", ground=kind, segment=kind, dilation=dilation, erosion=erosion)
