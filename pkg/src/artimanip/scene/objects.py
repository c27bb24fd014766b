"""Articulated objects with hidden lock mechanisms.

Seven category templates (``templates.ini``) instantiate the same structure:
a fixed body, one actionable part carrying a joint, optional fixed children
that ride along with it, and one :class:`MechanismState` per actionable part.
The robot only ever observes the mechanism through :func:`step_mechanism`
outcomes.
"""

from __future__ import annotations

import configparser
import copy
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from ..geometry import Pose, axis_angle_matrix, normalize, rot_x, rot_z
from .shapes import PartShape, sample_shape

CATEGORIES = ("bottle", "pen", "pressure_cooker", "coffee_machine", "window", "door", "lamp")
JOINT_KINDS = ("revolute", "prismatic", "screw")
MECHANISM_KINDS = ("rotate-to-unlock", "latch", "free")
DIRECTIONS = ("cw", "ccw")

ROTATION_STEP = float(np.deg2rad(15.0))
"""Accumulated unlock-direction rotation per counter decrement."""

_ANGLE_EPS = 1e-9
_MOVE_EPS = 1e-9


class MechanismError(ValueError):
    """An action was addressed to something that cannot take it."""


def canonical_category(name: str) -> str:
    key = str(name).strip().lower().replace(" ", "_").replace("-", "_")
    if key not in CATEGORIES:
        raise ValueError(f"unknown category {name!r}; valid categories: {', '.join(CATEGORIES)}")
    return key


@dataclass
class JointSpec:
    """Joint of a part relative to its parent frame.

    ``value`` is radians for revolute joints and meters of axial travel for
    prismatic and screw joints.  A screw joint additionally turns its part by
    ``value / pitch`` radians about the axis.
    """

    kind: str
    axis: np.ndarray
    origin: np.ndarray
    lo: float
    hi: float
    value: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ValueError(f"unknown joint kind {self.kind!r}")
        self.axis = np.asarray(self.axis, dtype=np.float64).reshape(3)
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(self.axis) - 1.0) > 1e-9:
            raise ValueError("joint axis must be a unit vector")
        if not self.lo <= self.value <= self.hi:
            raise ValueError(f"joint value {self.value} outside limits [{self.lo}, {self.hi}]")
        if self.kind == "screw" and not self.pitch > 0.0:
            raise ValueError("screw joints need a positive pitch")

    @property
    def rotational(self) -> bool:
        return self.kind in ("revolute", "screw")

    def transform(self, value: float | None = None) -> Pose:
        q = self.value if value is None else value
        if self.kind == "prismatic":
            return Pose(np.eye(3), q * self.axis)
        angle = q if self.kind == "revolute" else q / self.pitch
        R = axis_angle_matrix(self.axis, angle)
        t = self.origin - R @ self.origin
        if self.kind == "screw":
            t = t + q * self.axis
        return Pose(R, t)


@dataclass
class MechanismState:
    kind: str
    counter: int
    unlock_direction: str
    accumulated: float = 0.0

    def __post_init__(self):
        if self.kind not in MECHANISM_KINDS:
            raise ValueError(f"unknown mechanism kind {self.kind!r}")
        if self.unlock_direction not in DIRECTIONS:
            raise ValueError(f"unlock direction must be cw or ccw, got {self.unlock_direction!r}")
        if int(self.counter) != self.counter or self.counter < 0:
            raise ValueError("mechanism counter must be a nonnegative integer")
        self.counter = int(self.counter)

    @property
    def unlocked(self) -> bool:
        return self.counter == 0


@dataclass
class Part:
    part_id: int
    name: str
    shape: PartShape
    actionable: bool = False
    parent: int = -1
    joint: JointSpec | None = None
    archetype: str = ""


@dataclass
class ArticulatedObject:
    category: str
    seed: int
    parts: list[Part]
    base: Pose = field(default_factory=Pose)
    mechanisms: dict[int, MechanismState] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [p.part_id for p in self.parts]
        if ids != list(range(len(self.parts))):
            raise ValueError("part ids must be unique and contiguous from 0")
        for p in self.parts:
            if not -1 <= p.parent < len(self.parts) or p.parent == p.part_id:
                raise ValueError(f"part {p.part_id} has invalid parent {p.parent}")
            if p.actionable and (p.joint is None or p.part_id not in self.mechanisms):
                raise ValueError(f"actionable part {p.part_id} needs a joint and a mechanism")
        for pid in self.mechanisms:
            if not self.parts[pid].actionable:
                raise ValueError(f"mechanism attached to non-actionable part {pid}")

    @property
    def joints(self) -> list[tuple[int, JointSpec]]:
        return [(p.part_id, p.joint) for p in self.parts if p.joint is not None]

    @property
    def actionable_ids(self) -> list[int]:
        return [p.part_id for p in self.parts if p.actionable]

    @property
    def target(self) -> int:
        """The actionable part the category task is about."""
        return int(self.meta.get("target", self.actionable_ids[0]))

    def part_pose(self, pid: int) -> Pose:
        part = self.parts[pid]
        parent = self.base if part.parent < 0 else self.part_pose(part.parent)
        if part.joint is not None:
            parent = parent @ part.joint.transform()
        return parent @ part.shape.pose

    def joint_world(self, pid: int) -> tuple[np.ndarray, np.ndarray]:
        """World-frame (axis, origin) of a part's joint at the current state."""
        part = self.parts[pid]
        if part.joint is None:
            raise MechanismError(f"part {pid} has no joint")
        frame = self.base if part.parent < 0 else self.part_pose(part.parent)
        return frame.apply_dir(part.joint.axis), frame.apply(part.joint.origin)

    def goal_reached(self, pid: int | None = None) -> bool:
        j = self.parts[self.target if pid is None else pid].joint
        return j is not None and j.value >= j.hi - 1e-9

    def to_record(self) -> dict:
        """Canonical, JSON-safe description (used for determinism checks)."""

        def arr(a):
            return [float(x) for x in np.asarray(a).ravel()]

        parts = []
        for p in self.parts:
            rec = {
                "id": p.part_id,
                "name": p.name,
                "kind": p.shape.kind,
                "dims": arr(p.shape.dims),
                "R": arr(p.shape.pose.rotation),
                "t": arr(p.shape.pose.translation),
                "actionable": p.actionable,
                "parent": p.parent,
                "archetype": p.archetype,
            }
            if p.joint is not None:
                j = p.joint
                rec["joint"] = {
                    "kind": j.kind, "axis": arr(j.axis), "origin": arr(j.origin),
                    "lo": j.lo, "hi": j.hi, "value": j.value, "pitch": j.pitch,
                }
            parts.append(rec)
        mech = {
            str(k): {"kind": m.kind, "counter": m.counter, "dir": m.unlock_direction, "acc": m.accumulated}
            for k, m in sorted(self.mechanisms.items())
        }
        return {
            "category": self.category,
            "seed": self.seed,
            "base": {"R": arr(self.base.rotation), "t": arr(self.base.translation)},
            "parts": parts,
            "mechanisms": mech,
            "meta": _jsonable(self.meta),
        }

    def to_bytes(self) -> bytes:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":")).encode()

    def digest(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def copy(self) -> "ArticulatedObject":
        return copy.deepcopy(self)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [float(v) for v in x.ravel()]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    return x


# --- templates -------------------------------------------------------------


def load_templates(path: str | Path | None = None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#",))
    if path is None:
        text = resources.files("artimanip.scene").joinpath("templates.ini").read_text("utf-8")
        cfg.read_string(text)
    else:
        with open(path, encoding="utf-8") as fh:
            cfg.read_file(fh)
    version = cfg.get("meta", "version", fallback=None)
    if version != "1":
        raise ValueError(f"unsupported template file version {version!r}")
    missing = [c for c in CATEGORIES if not cfg.has_section(c)]
    if missing:
        raise ValueError(f"template file lacks categories: {missing}")
    return cfg


class _Draw:
    """Draws template ranges in read order from one seeded stream."""

    def __init__(self, section, rng: np.random.Generator):
        self.section = section
        self.rng = rng

    def _range(self, key):
        toks = self.section[key].split()
        return toks

    def u(self, key) -> float:
        toks = self._range(key)
        if len(toks) == 1:
            return float(toks[0])
        lo, hi = float(toks[0]), float(toks[1])
        return float(self.rng.uniform(lo, hi))

    def i(self, key) -> int:
        toks = self._range(key)
        if len(toks) == 1:
            return int(toks[0])
        return int(self.rng.integers(int(toks[0]), int(toks[1]) + 1))

    def s(self, key) -> str:
        return self.section[key].strip()


@dataclass
class _Spec:
    name: str
    kind: str
    dims: tuple
    rest: Pose
    parent: str | None = None
    actionable: bool = False
    joint: dict | None = None
    archetype: str = ""


def _assemble(category, seed, specs: list[_Spec], base: Pose, mech: MechanismState, meta: dict):
    index = {s.name: i for i, s in enumerate(specs)}
    parts = []
    for i, s in enumerate(specs):
        parent = -1 if s.parent is None else index[s.parent]
        parent_rest = Pose() if s.parent is None else specs[parent].rest
        rel = parent_rest.inverse() @ s.rest
        joint = None
        if s.joint is not None:
            j = dict(s.joint)
            j["axis"] = parent_rest.rotation.T @ normalize(j["axis"])
            j["origin"] = parent_rest.inverse().apply(np.asarray(j["origin"], float))
            joint = JointSpec(**j)
        parts.append(Part(i, s.name, PartShape(s.kind, s.dims, rel), s.actionable, parent, joint, s.archetype))
    target = next(i for i, s in enumerate(specs) if s.actionable)
    meta = dict(meta)
    meta["target"] = target
    return ArticulatedObject(category, seed, parts, base, {target: mech}, meta)


_FACE_OUT = rot_x(np.pi / 2)  # local +z -> object -y (toward the front camera)


def _bottle(d: _Draw):
    rb, hb = d.u("body_radius"), d.u("body_height")
    rc, hc = rb * d.u("cap_radius_ratio"), d.u("cap_height")
    lift, pitch = d.u("lift"), d.u("pitch")
    body = _Spec("body", "cylinder", (rb, hb), Pose.from_translation((0, 0, hb / 2)))
    cap = _Spec(
        "cap", "cylinder", (rc, hc), Pose.from_translation((0, 0, hb + hc / 2)), "body", True,
        dict(kind="screw", axis=(0, 0, 1), origin=(0, 0, 0), lo=0.0, hi=lift, pitch=pitch), "cap",
    )
    return [body, cap]


def _pen(d: _Draw):
    r, L = d.u("body_radius"), d.u("body_length")
    rc, hc = r * d.u("cap_radius_ratio"), d.u("cap_height")
    lift, pitch = d.u("lift"), d.u("pitch")
    tip = 2 * r + L
    body = _Spec("barrel", "capsule", (r, L), Pose.from_translation((0, 0, r + L / 2)))
    cap = _Spec(
        "cap", "cylinder", (rc, hc), Pose.from_translation((0, 0, tip + 0.004 - hc / 2)), "barrel", True,
        dict(kind="screw", axis=(0, 0, 1), origin=(0, 0, 0), lo=0.0, hi=lift, pitch=pitch), "cap",
    )
    return [body, cap]


def _pressure_cooker(d: _Draw):
    r, h = d.u("body_radius"), d.u("body_height")
    lid_h = d.u("lid_height")
    hl, hw, hh = d.u("handle_length"), d.u("handle_width"), d.u("handle_height")
    sl = d.u("side_handle_length")
    lift = d.u("lift")
    body = _Spec("pot", "cylinder", (r, h), Pose.from_translation((0, 0, h / 2)))
    handle = _Spec(
        "lid handle", "box", (hl, hw, hh), Pose.from_translation((0, 0, h + lid_h + hh / 2)), "pot", True,
        dict(kind="prismatic", axis=(0, 0, 1), origin=(0, 0, h), lo=0.0, hi=lift), "handle-bar",
    )
    lid = _Spec("lid", "cylinder", (r + 0.005, lid_h), Pose.from_translation((0, 0, h + lid_h / 2)), "lid handle")
    side = _Spec(
        "side handle", "box", (sl, 0.03, 0.02), Pose.from_translation((r + sl / 2 - 0.005, 0, h - 0.03)), "pot"
    )
    return [body, handle, lid, side]


def _coffee_machine(d: _Draw):
    W, D, H = d.u("body_width"), d.u("body_depth"), d.u("body_height")
    lt = d.u("lid_thickness")
    hl, hw, hh = d.u("handle_length"), d.u("handle_width"), d.u("handle_height")
    open_angle = d.u("open_angle")
    body = _Spec("housing", "box", (W, D, H), Pose.from_translation((0, 0, H / 2)))
    handle_c = (0, -D / 2 + 0.03 + hw / 2, H + lt + hh / 2)
    handle = _Spec(
        "lid handle", "box", (hl, hw, hh), Pose.from_translation(handle_c), "housing", True,
        dict(kind="revolute", axis=(-1, 0, 0), origin=(0, D / 2, H), lo=0.0, hi=open_angle), "handle-bar",
    )
    lid = _Spec("lid", "box", (W, D, lt), Pose.from_translation((0, 0, H + lt / 2)), "lid handle")
    return [body, handle, lid]


def _window(d: _Draw):
    W, H = d.u("sash_width"), d.u("sash_height")
    hw, hl, hd = d.u("handle_width"), d.u("handle_length"), d.u("handle_depth")
    open_angle = d.u("open_angle")
    zc = 1.0
    wall = _Spec("frame", "box", (W + 0.12, 0.05, H + 0.12), Pose.from_translation((0, 0.03, zc)))
    sash = _Spec("sash", "box", (W, 0.03, H), Pose.from_translation((0, -0.01, zc)), "handle")
    handle_c = (W / 2 - 0.05, -0.025 - hd / 2, zc)
    handle = _Spec(
        "handle", "box", (hw, hl, hd), Pose(_FACE_OUT, handle_c), "frame", True,
        dict(kind="revolute", axis=(0, 0, 1), origin=(-W / 2, -0.025, zc), lo=0.0, hi=open_angle), "lever",
    )
    return [wall, handle, sash]


def _door(d: _Draw):
    W, H = d.u("door_width"), d.u("door_height")
    hl, hh, hd = d.u("handle_length"), d.u("handle_height"), d.u("handle_depth")
    open_angle = d.u("open_angle")
    wall = _Spec("frame", "box", (W + 0.3, 0.1, H + 0.15), Pose.from_translation((0, 0.07, (H + 0.15) / 2)))
    panel = _Spec("door panel", "box", (W, 0.04, H), Pose.from_translation((0, 0.0, H / 2)), "handle")
    handle_c = (W / 2 - 0.07 - hl / 2 + 0.03, -0.02 - hd / 2, 1.0)
    handle = _Spec(
        "handle", "box", (hl, hh, hd), Pose(_FACE_OUT, handle_c), "frame", True,
        dict(kind="revolute", axis=(0, 0, 1), origin=(-W / 2, -0.02, 0.0), lo=0.0, hi=open_angle), "lever",
    )
    return [wall, handle, panel]


def _lamp(d: _Draw):
    rb, hb = d.u("base_radius"), d.u("base_height")
    pl = d.u("pole_length")
    hw, hh, hd = d.u("head_width"), d.u("head_height"), d.u("head_depth")
    open_angle = d.u("open_angle")
    pr = 0.01
    top = hb + pl + pr
    base = _Spec("base", "cylinder", (rb, hb), Pose.from_translation((0, 0, hb / 2)))
    pole = _Spec("pole", "capsule", (pr, pl), Pose.from_translation((0, 0, hb + pr + pl / 2)), "base")
    head_c = (0, -(pr + 0.02 + hd / 2), top)
    head = _Spec(
        "head", "box", (hw, hh, hd), Pose(_FACE_OUT, head_c), "pole", True,
        dict(kind="revolute", axis=(0, 0, 1), origin=(0, 0, top), lo=0.0, hi=open_angle), "knob",
    )
    return [base, pole, head]


_BUILDERS = {
    "bottle": _bottle,
    "pen": _pen,
    "pressure_cooker": _pressure_cooker,
    "coffee_machine": _coffee_machine,
    "window": _window,
    "door": _door,
    "lamp": _lamp,
}


def build_object(category: str, seed: int, templates: configparser.ConfigParser | None = None) -> ArticulatedObject:
    """Deterministic object instance for ``(category, seed)``."""
    cat = canonical_category(category)
    cfg = templates if templates is not None else _default_templates()
    sec = cfg[cat]
    rng = np.random.default_rng([int(seed) & (2**64 - 1), CATEGORIES.index(cat)])
    d = _Draw(sec, rng)
    mech = MechanismState(d.s("mechanism"), d.i("counter"), d.s("unlock_direction"))
    if mech.kind == "free" and mech.counter != 0:
        raise ValueError(f"{cat}: free mechanisms start unlocked")
    yaw = d.u("yaw")
    specs = _BUILDERS[cat](d)
    cam_dist, cam_elev = d.u("camera_distance"), d.u("camera_elevation")
    base = Pose(rot_z(yaw), np.zeros(3))
    meta = {"face": "+z", "camera_distance": cam_dist, "camera_elevation": cam_elev, "yaw": yaw}
    obj = _assemble(cat, int(seed), specs, base, mech, meta)
    return obj


_TEMPLATE_CACHE: list = []


def _default_templates():
    if not _TEMPLATE_CACHE:
        _TEMPLATE_CACHE.append(load_templates())
    return _TEMPLATE_CACHE[0]


# --- mechanism stepping ----------------------------------------------------


@dataclass(frozen=True)
class PartAction:
    """One action on a part.

    ``kind`` is ``rotate``, ``pull`` or ``push``.  Rotations carry a
    direction and an angle in radians; pull/push carry a step in joint units
    (meters for prismatic and screw joints, radians for revolute joints).
    Pull increases the joint value.
    """

    kind: str
    part_id: int
    amount: float
    direction: str | None = None


@dataclass(frozen=True)
class ActionOutcome:
    success: bool
    achieved: float
    joint_value: float


def can_rotate(obj: ArticulatedObject, pid: int) -> bool:
    """Whether a grasped part yields to a rotation about the gripper axis.

    Parts turn when their joint has a rotational component or when they carry
    a turnable lock (rotate-to-unlock or latch).  A prismatic part with a free
    mechanism does not turn.
    """
    part = obj.parts[pid]
    mech = obj.mechanisms.get(pid)
    if part.joint is not None and part.joint.rotational:
        return True
    return mech is not None and mech.kind != "free"


def step_mechanism(obj: ArticulatedObject, action: PartAction) -> ActionOutcome:
    """Apply one action to an actionable part, mutating ``obj``."""
    pid = action.part_id
    if not 0 <= pid < len(obj.parts) or not obj.parts[pid].actionable:
        raise MechanismError(f"part {pid} is not actionable")
    joint = obj.parts[pid].joint
    mech = obj.mechanisms[pid]
    amount = float(action.amount)
    if not np.isfinite(amount) or amount < 0.0:
        raise MechanismError(f"action amount must be finite and nonnegative, got {amount}")

    if action.kind == "rotate":
        if action.direction not in DIRECTIONS:
            raise MechanismError(f"rotation direction must be cw or ccw, got {action.direction!r}")
        if not can_rotate(obj, pid):
            return ActionOutcome(False, 0.0, joint.value)
        if action.direction == mech.unlock_direction and mech.counter > 0:
            mech.accumulated += amount
            while mech.counter > 0 and mech.accumulated >= ROTATION_STEP - _ANGLE_EPS:
                mech.counter -= 1
                mech.accumulated -= ROTATION_STEP
            if mech.counter == 0:
                mech.accumulated = 0.0
            mech.accumulated = max(mech.accumulated, 0.0)
        return ActionOutcome(True, amount, joint.value)

    if action.kind not in ("pull", "push"):
        raise MechanismError(f"unknown action kind {action.kind!r}")
    if not mech.unlocked:
        return ActionOutcome(False, 0.0, joint.value)
    sign = 1.0 if action.kind == "pull" else -1.0
    new = float(np.clip(joint.value + sign * amount, joint.lo, joint.hi))
    achieved = abs(new - joint.value)
    joint.value = new
    return ActionOutcome(achieved >= amount - _MOVE_EPS and achieved > 0.0, achieved, new)


# --- surface sampling ------------------------------------------------------


@dataclass(frozen=True)
class LabeledCloud:
    points: np.ndarray
    part_ids: np.ndarray

    def __len__(self):
        return len(self.points)

    def part(self, pid: int) -> np.ndarray:
        return self.points[self.part_ids == pid]


def sample_surface_points(obj: ArticulatedObject, density: float, seed: int = 0) -> LabeledCloud:
    """World-frame points on every part surface, ``area * density`` per patch."""
    if not density > 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    pts, ids = [], []
    for part in obj.parts:
        local = sample_shape(part.shape, density, rng)
        pts.append(obj.part_pose(part.part_id).apply(local))
        ids.append(np.full(len(local), part.part_id, dtype=np.int64))
    return LabeledCloud(np.concatenate(pts), np.concatenate(ids))


def affordance_face_center(obj: ArticulatedObject, pid: int | None = None) -> np.ndarray:
    """World position of the centre of the actionable part's +z face."""
    pid = obj.target if pid is None else pid
    shape = obj.parts[pid].shape
    h = shape.half_extents()
    return obj.part_pose(pid).apply(np.array([0.0, 0.0, h[2]]))
