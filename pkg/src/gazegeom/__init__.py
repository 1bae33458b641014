"""Face pose and gaze geometry from a single calibrated image."""

from __future__ import annotations

from .errors import GazeGeomError
from .gaze import EyeGeometry, GazeResult, LedConfig, cornea_center, gaze_for_eye, pupil_center
from .geometry import CameraIntrinsics, ImagePoint, Ray3, back_project, project
from .polyalg import BivariateQuadratic, UniPoly, companion_roots, intersect_conics, sylvester_resultant_y
from .pose import (
    FaceModel,
    FaceObservation,
    FacePose,
    build_constraint_conics,
    face_distance,
    pose_candidates,
    solve_pose,
)

__version__ = "0.1.0"

__all__ = [
    "BivariateQuadratic",
    "CameraIntrinsics",
    "EyeGeometry",
    "FaceModel",
    "FaceObservation",
    "FacePose",
    "GazeGeomError",
    "GazeResult",
    "ImagePoint",
    "LedConfig",
    "Ray3",
    "UniPoly",
    "back_project",
    "build_constraint_conics",
    "companion_roots",
    "cornea_center",
    "face_distance",
    "gaze_for_eye",
    "intersect_conics",
    "pose_candidates",
    "project",
    "pupil_center",
    "solve_pose",
    "sylvester_resultant_y",
]
