"""Procedural part library and its line-delimited text format.

Record layout, one part per line, tab separated, UTF-8::

    category <TAB> archetype <TAB> N <TAB> x1 y1 z1 ... xN yN zN <TAB> l1 ... lN

Coordinates are decimal text with 9 significant digits; labels are 0/1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import Pose
from ..scene.shapes import PartShape, sample_shape_count
from .annotate import AnnotationError, SurfaceSpec, annotate_part

ARCHETYPES = ("cap", "handle-bar", "knob", "button", "lever")
SOURCE_CATEGORY = {
    "cap": "bottle",
    "handle-bar": "door",
    "knob": "coffee_machine",
    "button": "lamp",
    "lever": "window",
}
DEFAULT_POINTS = 512


class DatasetFormatError(ValueError):
    pass


@dataclass
class AffordanceEntry:
    points: np.ndarray
    labels: np.ndarray
    category: str
    archetype: str

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.labels = np.asarray(self.labels, dtype=np.int8).reshape(-1)
        if len(self.labels) != len(self.points):
            raise ValueError("labels length must equal point count")
        if np.any((self.labels != 0) & (self.labels != 1)):
            raise ValueError("labels must be 0 or 1")

    def __eq__(self, other):
        if not isinstance(other, AffordanceEntry):
            return NotImplemented
        return (
            self.category == other.category
            and self.archetype == other.archetype
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.labels, other.labels)
        )


class AffordanceDataset(list):
    """List of :class:`AffordanceEntry`."""

    def statistics(self) -> Counter:
        return Counter(e.archetype for e in self)

    def statistics_table(self) -> str:
        """``archetype: count`` rows in first-seen order."""
        stats = self.statistics()
        seen = list(dict.fromkeys(e.archetype for e in self))
        return "\n".join(f"{a}: {stats[a]}" for a in seen)

    def split(self, n_train: int) -> tuple["AffordanceDataset", "AffordanceDataset"]:
        return AffordanceDataset(self[:n_train]), AffordanceDataset(self[n_train:])


def _round9(a: np.ndarray) -> np.ndarray:
    return np.array([float(f"{x:.9g}") for x in np.asarray(a, dtype=np.float64).ravel()]).reshape(np.shape(a))


def archetype_shapes(archetype: str, rng: np.random.Generator) -> tuple[list[PartShape], tuple]:
    """Primitives of one random part with its affordance face on top (+z).

    Returns the shapes and the drawn dimension tuple.
    """
    u = rng.uniform
    if archetype == "cap":
        r, h = u(0.012, 0.03), u(0.012, 0.03)
        return [PartShape("cylinder", (r, h))], (r, h)
    if archetype == "knob":
        r, h = u(0.012, 0.025), u(0.012, 0.025)
        rs, hs = r * u(0.4, 0.6), u(0.008, 0.015)
        stem = Pose.from_translation((0, 0, -(h + hs) / 2))
        return [PartShape("cylinder", (r, h)), PartShape("cylinder", (rs, hs), stem)], (r, h, rs, hs)
    if archetype == "button":
        sx, sy, sz = u(0.012, 0.03), u(0.012, 0.03), u(0.005, 0.012)
        plate = Pose.from_translation((0, 0, -(sz + 0.003) / 2))
        return [PartShape("box", (sx, sy, sz)), PartShape("box", (sx + 0.01, sy + 0.01, 0.003), plate)], (sx, sy, sz)
    if archetype == "handle-bar":
        L, w, d = u(0.08, 0.14), u(0.015, 0.025), u(0.015, 0.025)
        ph = u(0.02, 0.03)
        shapes = [PartShape("box", (L, w, d))]
        for sx in (-1.0, 1.0):
            post = Pose.from_translation((sx * (L / 2 - w / 2), 0, -(d + ph) / 2))
            shapes.append(PartShape("box", (w, w, ph), post))
        return shapes, (L, w, d, ph)
    if archetype == "lever":
        L, w, t = u(0.05, 0.09), u(0.012, 0.02), u(0.006, 0.012)
        hub_r, hub_h = 0.8 * w, u(0.008, 0.015)
        hub = Pose.from_translation((-L / 2 + hub_r, 0, -(t + hub_h) / 2))
        return [PartShape("box", (L, w, t)), PartShape("cylinder", (hub_r, hub_h), hub)], (L, w, t, hub_h)
    raise ValueError(f"unknown archetype {archetype!r}; expected one of {ARCHETYPES}")


def _draw_part(archetype, rng, n_points, spec, radius_factor, attempts: int = 20):
    # thin parts can miss the small positive disc at low point counts; redraw
    for _ in range(attempts):
        shapes, _dims = archetype_shapes(archetype, rng)
        pts = _round9(sample_shape_count(shapes, [s.pose for s in shapes], n_points, rng))
        try:
            return pts, annotate_part(pts, spec, radius_factor)
        except AnnotationError:
            continue
    raise AnnotationError(f"could not draw a {archetype} with positive labels in {attempts} attempts")


def generate_part_library(
    archetypes, count: int, seed: int, n_points: int = DEFAULT_POINTS, radius_factor: float = 0.5
) -> AffordanceDataset:
    """``count`` labelled parts per archetype, interleaved archetype by archetype."""
    archetypes = list(archetypes)
    for a in archetypes:
        if a not in ARCHETYPES:
            raise ValueError(f"unknown archetype {a!r}; expected one of {ARCHETYPES}")
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    spec = SurfaceSpec("+z")
    out = AffordanceDataset()
    for _ in range(count):
        for a in archetypes:
            pts, labels = _draw_part(a, rng, n_points, spec, radius_factor)
            out.append(AffordanceEntry(pts, labels, SOURCE_CATEGORY[a], a))
    return out


# --- text persistence ------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def format_entry(e: AffordanceEntry) -> str:
    coords = " ".join(_fmt(x) for x in e.points.ravel())
    labels = " ".join(str(int(v)) for v in e.labels)
    return f"{e.category}\t{e.archetype}\t{len(e.points)}\t{coords}\t{labels}"


def parse_entry(line: str, lineno: int) -> AffordanceEntry:
    fields = line.rstrip("\n").split("\t")
    if len(fields) != 5:
        raise DatasetFormatError(f"line {lineno}: expected 5 tab-separated fields, got {len(fields)}")
    category, archetype, count, coords, labels = fields
    try:
        n = int(count)
        xyz = np.array([float(t) for t in coords.split()], dtype=np.float64)
        lab = np.array([int(t) for t in labels.split()], dtype=np.int8)
    except ValueError as exc:
        raise DatasetFormatError(f"line {lineno}: {exc}") from None
    if len(xyz) != 3 * n or len(lab) != n:
        raise DatasetFormatError(
            f"line {lineno}: point count {n} disagrees with {len(xyz)} coordinates / {len(lab)} labels"
        )
    try:
        return AffordanceEntry(xyz.reshape(n, 3), lab, category, archetype)
    except ValueError as exc:
        raise DatasetFormatError(f"line {lineno}: {exc}") from None


def write_dataset(data, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in data:
            fh.write(format_entry(e) + "\n")


def read_dataset(path: str | Path) -> AffordanceDataset:
    out = AffordanceDataset()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            out.append(parse_entry(line, lineno))
    return out
