"""One seeded episode through the whole chain, with per-stage attribution."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..affordance.annotate import AnnotationError, SurfaceSpec, annotate_part
from ..affordance.metrics import f1_score
from ..affordance.model import load_model, predict_affordance
from ..grounding import GroundingError, ground_part, gt_mask, image_ref, make_providers, mask_iou
from ..grounding.remote import RemoteClient
from ..program.codegen import CodegenError, OfflineCodegen, RemoteCodegen
from ..program.interpreter import SkillRuntime, interpret
from ..program.parser import ParseError, parse_program
from ..scene.objects import build_object
from ..scene.render import BACKGROUND, default_camera, render_observation
from ..skills.actions import SkillSim
from .config import RunConfig

FAILURE_STAGES = ("grounding", "affordance", "skill", "program", "none")


@dataclass
class EpisodeResult:
    category: str
    seed: int
    iou: float = 0.0
    f1: float = 0.0
    success: bool = False
    steps: int = 0
    failure_stage: str = "none"
    message: str = ""
    counter: int = 0
    unlock_rotations: int = 0
    completed: bool = True
    trace: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.failure_stage not in FAILURE_STAGES:
            raise ValueError(f"unknown failure stage {self.failure_stage!r}")
        if not (0.0 <= self.iou <= 1.0 and 0.0 <= self.f1 <= 1.0):
            raise ValueError("IoU and F1 must lie in [0, 1]")

    def to_record(self) -> dict:
        return {
            "category": self.category, "seed": self.seed, "iou": self.iou, "f1": self.f1,
            "success": self.success, "steps": self.steps, "failure_stage": self.failure_stage,
            "message": self.message, "counter": self.counter, "unlock_rotations": self.unlock_rotations,
            "completed": self.completed,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "EpisodeResult":
        return cls(**{k: rec[k] for k in cls.__dataclass_fields__ if k != "trace" and k in rec})


@lru_cache(maxsize=4)
def _model(path: str):
    return load_model(path)


def codegen_provider(cfg: RunConfig):
    if cfg.codegen == "remote":
        p = cfg.providers
        return RemoteCodegen(RemoteClient(p.endpoint, p.timeout, p.retries))
    return OfflineCodegen()


def run_episode(cfg: RunConfig, category: str, seed: int, providers=None, codegen=None) -> EpisodeResult:
    obj = build_object(category, seed)
    mech = obj.mechanisms[obj.target]
    res = EpisodeResult(obj.category, int(seed), counter=mech.counter)
    cam = default_camera(obj)
    frame = render_observation(obj, cam)
    image = image_ref(frame, obj)
    providers = providers or make_providers(cfg.providers)

    try:
        g = ground_part(providers, image, f"open the {obj.category.replace('_', ' ')}")
    except GroundingError as exc:
        res.failure_stage, res.message = "grounding", str(exc)
        return res
    res.iou = float(mask_iou(g.mask, gt_mask(image)))

    # the segmented part's own frame (simulator pose) canonicalizes the cloud
    ids = frame.part_ids[g.mask.data]
    ids = ids[ids != BACKGROUND]
    seg_pid = int(np.bincount(ids).argmax())
    pose = obj.part_pose(seg_pid)
    try:
        oracle = annotate_part(g.cloud.points, SurfaceSpec("+z", frame=pose))
        if cfg.affordance == "gt":
            scores = oracle.astype(np.float64)
        else:
            local = pose.inverse().apply(g.cloud.points)
            view = pose.rotation.T @ cam.optical_axis
            scores = predict_affordance(_model(cfg.model_path), local, view).scores
    except (AnnotationError, ValueError) as exc:
        res.failure_stage, res.message = "affordance", str(exc)
        return res
    res.f1 = float(f1_score(scores >= cfg.threshold, oracle))
    if not np.any(scores >= cfg.skills.eps):
        res.failure_stage, res.message = "affordance", "no point reaches the contact threshold"
        return res

    try:
        source = (codegen or codegen_provider(cfg))({"category": obj.category, "goal": "open"})
        program = parse_program(source)
    except (CodegenError, ParseError) as exc:
        res.failure_stage, res.message = "program", str(exc)
        return res

    sim = SkillSim(obj, cfg.skills, cam)
    rt = SkillRuntime(cfg.budget, affordance=(scores, g.cloud))
    trace = interpret(program, rt, sim, seed=cfg.program_seed + int(seed))
    res.trace = trace
    res.steps = trace.steps_used
    res.success = trace.success
    res.unlock_rotations = trace.count(f"rotate_{mech.unlock_direction}")
    if not trace.success:
        if trace.terminated_by == "error":
            res.failure_stage, res.message = trace.error_stage or "program", trace.error
        else:
            res.failure_stage, res.message = "skill", "goal not reached within the budget"
    return res
