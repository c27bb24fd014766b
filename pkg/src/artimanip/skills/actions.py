"""Atomic end-effector actions against the kinematic simulator.

Interaction is kinematic with caps: the grasped part's joint is moved by
:func:`~artimanip.scene.step_mechanism` and the end effector then tracks the
moved contact with the impedance law.  A locked or saturated joint caps the
motion, which the skill reports as ``success=False``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose, axis_angle_matrix, normalize, quat_angle, quat_from_axis_angle, quat_from_matrix, quat_mul, quat_normalize, quat_to_matrix
from ..scene.objects import ActionOutcome, ArticulatedObject, PartAction, can_rotate, step_mechanism
from ..scene.shapes import surface_distance
from .control import EndEffectorState, SkillConfig, SkillError, track
from .perception import GraspPose, compute_grasp, estimate_normal, select_contact

TRANSLATION_AXES = ("gripper-z", "object-arc-y")
_MIN_ALIGNMENT = 0.5  # |cos| between the pull direction and a sliding joint axis


@dataclass(frozen=True)
class SkillResult:
    success: bool
    steps: int
    pose_error: float
    feedback: ActionOutcome | None = None

    def to_record(self) -> dict:
        fb = None
        if self.feedback is not None:
            fb = {"success": self.feedback.success, "achieved": self.feedback.achieved, "joint_value": self.feedback.joint_value}
        return {"success": self.success, "steps": self.steps, "pose_error": self.pose_error, "feedback": fb}


class SkillSim:
    """One episode's simulation handle: object, end effector and call log."""

    def __init__(self, obj: ArticulatedObject, cfg: SkillConfig | None = None, camera=None, home: EndEffectorState | None = None):
        self.obj = obj
        self.cfg = cfg or SkillConfig()
        if camera is not None:
            self.view_dir = np.asarray(camera.optical_axis, dtype=np.float64)
            default_home = EndEffectorState(camera.position, quat_from_matrix(camera.pose.rotation))
        else:
            self.view_dir = np.array([0.0, 0.0, -1.0])
            default_home = EndEffectorState(np.array([0.0, 0.0, 1.0]), quat_from_matrix(np.diag([1.0, -1.0, -1.0])))
        self.state = home or default_home
        self.clock = 0  # control steps so far
        self.log: list[dict] = []

    @property
    def grasped(self) -> int | None:
        return self.state.grasped

    def gripper_axes(self) -> np.ndarray:
        return quat_to_matrix(self.state.orientation)

    def record(self, name: str, params: dict, result: SkillResult) -> SkillResult:
        self.log.append({"t": self.clock, "call": len(self.log), "skill": name, "params": params, "result": result.to_record()})
        self.clock += result.steps
        return result

    def log_lines(self) -> str:
        return "".join(json.dumps(e, sort_keys=True, separators=(",", ":")) + "\n" for e in self.log)

    def nearest_part(self, point) -> tuple[int, float]:
        best, best_d = -1, np.inf
        for part in self.obj.parts:
            local = self.obj.part_pose(part.part_id).inverse().apply(np.asarray(point, dtype=np.float64)[None])
            d = float(surface_distance(part.shape, local)[0])
            if d < best_d:
                best, best_d = part.part_id, d
        return best, best_d


def _move_with_part(sim: SkillSim, before: Pose, after: Pose) -> tuple[np.ndarray, np.ndarray]:
    motion = after @ before.inverse()
    pos = motion.apply(sim.state.position[None])[0]
    quat = quat_normalize(quat_mul(quat_from_matrix(motion.rotation), sim.state.orientation))
    return pos, quat


def grasp(sim: SkillSim, amap, cloud, eps: float | None = None) -> SkillResult:
    """Move to the affordance contact and close on the part found there."""
    cfg = sim.cfg
    _, contact = select_contact(amap, cloud, cfg.eps if eps is None else eps)
    normal = estimate_normal(cloud, contact, cfg.k, sim.view_dir)
    return grasp_at(sim, compute_grasp(contact, normal))


def grasp_at(sim: SkillSim, pose: GraspPose) -> SkillResult:
    cfg = sim.cfg
    state, steps, err = track(sim.state.replace(grasped=None), pose.position, pose.orientation, cfg)
    pid, dist = sim.nearest_part(state.position)
    ok = err <= cfg.tol and dist <= cfg.grasp_reach and sim.obj.parts[pid].actionable
    sim.state = state.replace(velocity=np.zeros(3), grasped=pid if ok else None)
    return SkillResult(bool(ok), steps, err)


def release(sim: SkillSim) -> SkillResult:
    sim.state = sim.state.replace(grasped=None)
    return SkillResult(True, 0, 0.0)


def exec_translate(sim: SkillSim, axis: str, direction: int, cfg: SkillConfig | None = None) -> SkillResult:
    """Pull (+1) / push (-1) along the gripper axis, or an arc step (+1 opens) about the joint."""
    cfg = cfg or sim.cfg
    if axis not in TRANSLATION_AXES:
        raise SkillError(f"unknown translation axis {axis!r}")
    if direction not in (1, -1):
        raise SkillError("direction must be +1 or -1")
    pid = sim.grasped
    if pid is None:
        raise SkillError(f"{axis} translation needs a grasped part")
    joint = sim.obj.parts[pid].joint
    axis_w, origin_w = sim.obj.joint_world(pid)
    before = sim.obj.part_pose(pid)

    if axis == "gripper-z":
        if joint.kind == "revolute":
            raise SkillError(f"part {pid} turns on a revolute joint; translate along the arc instead")
        move = -direction * sim.gripper_axes()[:, 2]  # pulling backs away from the surface
        c = float(move @ axis_w)
        if abs(c) < _MIN_ALIGNMENT:
            raise SkillError(f"gripper axis is misaligned with the joint axis of part {pid} (cos {c:.3f})")
        kind = "pull" if c > 0 else "push"
        outcome = step_mechanism(sim.obj, PartAction(kind, pid, cfg.delta * abs(c)))
        target, quat = _move_with_part(sim, before, sim.obj.part_pose(pid))
        state, steps, err = track(sim.state, target, quat, cfg)
        sim.state = state
        return SkillResult(bool(outcome.success and err <= cfg.tol), steps, err, outcome)

    if joint.kind != "revolute":
        raise SkillError(f"arc moves need a revolute joint; part {pid} has a {joint.kind} joint")
    p0 = sim.state.position
    rel = p0 - origin_w
    radius = float(np.linalg.norm(rel - (rel @ axis_w) * axis_w))
    if radius < 1e-6:
        raise SkillError("grasp point lies on the joint axis")
    old = joint.value
    outcome = step_mechanism(sim.obj, PartAction("pull" if direction > 0 else "push", pid, cfg.delta / radius))
    sweep = outcome.joint_value - old
    state, steps, err = _track_arc(sim.state, origin_w, axis_w, radius, sweep, cfg)
    sim.state = state
    return SkillResult(bool(outcome.success and err <= cfg.tol), steps, err, outcome)


def _track_arc(state: EndEffectorState, origin, axis, radius: float, sweep: float, cfg: SkillConfig):
    """Impedance along the arc-length coordinate; the hand stays on the circle."""
    p0, q0 = state.position, state.orientation
    s_goal = radius * sweep
    s = v = 0.0
    steps = 0

    def at(s_):
        ang = s_ / radius
        pos = origin + axis_angle_matrix(axis, ang) @ (p0 - origin)
        return pos, quat_normalize(quat_mul(quat_from_axis_angle(axis, ang), q0))

    goal_pos, _ = at(s_goal)
    while steps < cfg.max_steps and abs(s_goal - s) > cfg.tol:
        a = (cfg.K * (s_goal - s) - cfg.D * v) / cfg.m
        v += cfg.dt * a
        s += cfg.dt * v
        steps += 1
    pos, quat = at(s)
    err = float(np.linalg.norm(goal_pos - pos))
    return state.replace(position=pos, orientation=quat, velocity=np.zeros(3)), steps, err


def exec_rotate(sim: SkillSim, direction: str, cfg: SkillConfig | None = None) -> SkillResult:
    """Turn the gripper about its own axis by ``cfg.theta``.

    ``ccw`` is counter-clockwise as seen by the viewer facing the grasped
    surface, i.e. a positive turn about the outward normal (-z of the
    gripper).  A turn that reaches ``theta`` within ``angle_tol`` is passed
    to the mechanism as one full step.
    """
    cfg = cfg or sim.cfg
    if direction not in ("cw", "ccw"):
        raise SkillError(f"rotation direction must be cw or ccw, got {direction!r}")
    pid = sim.grasped
    if pid is not None and not can_rotate(sim.obj, pid):
        outcome = step_mechanism(sim.obj, PartAction("rotate", pid, cfg.theta, direction))
        return SkillResult(False, 0, 0.0, outcome)
    z = sim.gripper_axes()[:, 2]
    angle = -cfg.theta if direction == "ccw" else cfg.theta
    q_start = sim.state.orientation
    q_goal = quat_normalize(quat_mul(quat_from_axis_angle(z, angle), q_start))
    state, steps, err = track(sim.state, sim.state.position, q_goal, cfg)
    sim.state = state
    achieved = quat_angle(q_start, state.orientation)
    ok = achieved >= cfg.theta - cfg.angle_tol and err <= cfg.tol
    if pid is None:
        return SkillResult(bool(ok), steps, err)
    outcome = step_mechanism(sim.obj, PartAction("rotate", pid, cfg.theta if ok else achieved, direction))
    return SkillResult(bool(ok and outcome.success), steps, err, outcome)
