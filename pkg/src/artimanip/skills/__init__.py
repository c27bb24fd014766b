from .actions import (
    SkillResult,
    SkillSim,
    exec_rotate,
    exec_translate,
    grasp,
    grasp_at,
    release,
)
from .control import (
    EndEffectorState,
    SkillConfig,
    SkillError,
    error_history,
    impedance_step,
    orientation_correction,
    track,
)
from .perception import GraspPose, compute_grasp, estimate_normal, grasp_frame, select_contact
