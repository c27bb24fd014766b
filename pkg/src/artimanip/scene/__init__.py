"""Articulated objects, hidden mechanisms, surface sampling and rendering."""

from .objects import (
    CATEGORIES,
    ROTATION_STEP,
    ActionOutcome,
    ArticulatedObject,
    JointSpec,
    LabeledCloud,
    MechanismError,
    MechanismState,
    Part,
    PartAction,
    affordance_face_center,
    build_object,
    can_rotate,
    canonical_category,
    load_templates,
    sample_surface_points,
    step_mechanism,
)
from .render import (
    BACKGROUND,
    CameraModel,
    ObservationFrame,
    default_camera,
    frame_from_bytes,
    frame_to_bytes,
    read_pgm,
    render_observation,
    write_pgm,
)
from .shapes import PartShape, surface_distance

__all__ = [
    "BACKGROUND", "CATEGORIES", "ROTATION_STEP", "ActionOutcome", "ArticulatedObject", "CameraModel",
    "JointSpec", "LabeledCloud", "MechanismError", "MechanismState", "ObservationFrame", "Part",
    "PartAction", "PartShape", "affordance_face_center", "build_object", "can_rotate",
    "canonical_category", "default_camera", "frame_from_bytes", "frame_to_bytes", "load_templates",
    "read_pgm", "render_observation", "sample_surface_points", "step_mechanism", "surface_distance",
    "write_pgm",
]
