"""End-effector state, skill settings and the impedance tracking law."""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from ..geometry import quat_angle, quat_conj, quat_from_axis_angle, quat_identity, quat_mul, quat_normalize, quat_to_axis_angle


class SkillError(RuntimeError):
    pass


@dataclass(frozen=True)
class SkillConfig:
    eps: float = 0.5  # affordance threshold
    delta: float = 0.02  # translation step, m
    theta: float = float(np.deg2rad(15.0))  # rotation step, rad
    k: int = 16  # normal-estimation neighbours
    K: float = 200.0  # stiffness, N/m
    D: float = 30.0  # damping, N s/m
    m: float = 1.0  # virtual mass, kg
    dt: float = 0.01  # s
    tol: float = 1e-3  # position tolerance, m
    max_steps: int = 500
    orientation_gain: float = 10.0  # 1/s
    angle_tol: float = 0.01  # rad
    grasp_reach: float = 5e-3  # contact distance that counts as a grasp, m

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{f.name} must be positive, got {v}")
        if not self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.k < 3 or int(self.k) != self.k or int(self.max_steps) != self.max_steps:
            raise ValueError("k and max_steps must be integers (k >= 3)")
        if self.D * self.D < 4.0 * self.K * self.m:
            raise ValueError(f"gains must be overdamped: D^2={self.D**2} < 4Km={4 * self.K * self.m}")

    @classmethod
    def from_mapping(cls, values: dict) -> "SkillConfig":
        known = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, raw in values.items():
            if key not in known:
                raise ValueError(f"unknown skill setting {key!r}")
            kw[key] = int(raw) if key in ("k", "max_steps") else float(raw)
        return cls(**kw)


@dataclass(frozen=True)
class EndEffectorState:
    position: np.ndarray
    orientation: np.ndarray = field(default_factory=quat_identity)  # (w, x, y, z)
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    grasped: int | None = None

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3)
        v = np.asarray(self.velocity, dtype=np.float64).reshape(3)
        q = np.asarray(self.orientation, dtype=np.float64).reshape(4)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v)) and np.all(np.isfinite(q))):
            raise SkillError(f"non-finite end-effector state: p={p}, v={v}, q={q}")
        if abs(np.linalg.norm(q) - 1.0) > 1e-9:
            raise SkillError(f"orientation is not a unit quaternion (norm {np.linalg.norm(q)})")
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "velocity", v)
        object.__setattr__(self, "orientation", q)

    def replace(self, **kw) -> "EndEffectorState":
        d = {"position": self.position, "orientation": self.orientation, "velocity": self.velocity, "grasped": self.grasped}
        d.update(kw)
        return EndEffectorState(**d)


def orientation_correction(actual, expected, gain: float) -> np.ndarray:
    """World-frame rotation turning ``actual`` toward ``expected``.

    Its angle is ``min(phi, gain * phi)`` about the geodesic axis, where
    ``phi`` is the angle between the two orientations.
    """
    a, e = quat_normalize(actual), quat_normalize(expected)
    err = quat_mul(e, quat_conj(a))
    axis, phi = quat_to_axis_angle(err)
    if phi == 0.0:
        return quat_identity()
    return quat_from_axis_angle(axis, min(phi, gain * phi))


def impedance_step(state: EndEffectorState, target_pos, target_quat, cfg: SkillConfig) -> EndEffectorState:
    """One explicit-Euler step of the spring-damper toward a target pose."""
    x_t = np.asarray(target_pos, dtype=np.float64)
    acc = (cfg.K * (x_t - state.position) - cfg.D * state.velocity) / cfg.m
    v = state.velocity + cfg.dt * acc
    x = state.position + cfg.dt * v
    corr = orientation_correction(state.orientation, target_quat, min(1.0, cfg.orientation_gain * cfg.dt))
    q = quat_normalize(quat_mul(corr, state.orientation))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise SkillError(f"impedance step diverged: x={x}, v={v}")
    return state.replace(position=x, velocity=v, orientation=q)


def track(state: EndEffectorState, target_pos, target_quat, cfg: SkillConfig, angle_tol: float | None = None):
    """Step until position and orientation are within tolerance or the step cap is hit.

    Returns ``(state, steps, position_error)``.
    """
    angle_tol = cfg.angle_tol if angle_tol is None else angle_tol
    x_t = np.asarray(target_pos, dtype=np.float64)
    steps = 0
    while steps < cfg.max_steps:
        err = float(np.linalg.norm(x_t - state.position))
        if err <= cfg.tol and quat_angle(state.orientation, target_quat) <= angle_tol:
            break
        state = impedance_step(state, x_t, target_quat, cfg)
        steps += 1
    return state, steps, float(np.linalg.norm(x_t - state.position))


def error_history(initial_error: float, cfg: SkillConfig, steps: int) -> np.ndarray:
    """Position error after each of ``steps`` impedance steps along one axis."""
    s = EndEffectorState(np.array([initial_error, 0.0, 0.0]))
    q = quat_identity()
    out = np.empty(steps + 1)
    out[0] = abs(initial_error)
    for i in range(steps):
        s = impedance_step(s, np.zeros(3), q, cfg)
        out[i + 1] = np.linalg.norm(s.position)
    return out
