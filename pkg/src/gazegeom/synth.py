"""Synthetic faces that satisfy the face model exactly.

Face frame: +x toward the image right, +y down, +z away from the camera, so
an unrotated face looks straight back at the camera. The nose bottom sits
``nose_depth_cm`` in front of the eye line, which is what keeps the nostrils
visible to a camera placed at or below eye level.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ConfigurationError
from .geometry import CameraIntrinsics, ImagePoint, project
from .pose import FaceModel, FaceObservation

DEFAULT_NOSE_DEPTH_CM = 2.0


def model_triangle(model: FaceModel = FaceModel(), nose_depth_cm: float = DEFAULT_NOSE_DEPTH_CM) -> np.ndarray:
    """Rows A, B, C of the face triangle in the face frame, nose at the origin."""
    half = model.inter_eye_cm / 2.0
    side = model.eye_nose_cm
    drop2 = side * side - half * half - nose_depth_cm * nose_depth_cm
    if drop2 <= 0:
        raise ConfigurationError(f"nose depth {nose_depth_cm} cm is incompatible with the face model")
    drop = math.sqrt(drop2)
    return np.array(
        [
            [-half, -drop, nose_depth_cm],
            [half, -drop, nose_depth_cm],
            [0.0, 0.0, 0.0],
        ]
    )


def frontal_face(
    distance_cm: float = 60.0,
    model: FaceModel = FaceModel(),
    nose_depth_cm: float = DEFAULT_NOSE_DEPTH_CM,
) -> np.ndarray:
    """Symmetric face with the nose bottom on the optical axis at ``distance_cm``."""
    return model_triangle(model, nose_depth_cm) + np.array([0.0, 0.0, distance_cm])


def _line_of_sight_frame(position: np.ndarray) -> np.ndarray:
    z = position / np.linalg.norm(position)
    x = np.cross([0.0, 1.0, 0.0], z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.stack([x, y, z], axis=1)


def posed_face(
    position: np.ndarray,
    yaw_deg: float = 0.0,
    elevation_deg: float = 0.0,
    roll_deg: float = 0.0,
    model: FaceModel = FaceModel(),
    nose_depth_cm: float = DEFAULT_NOSE_DEPTH_CM,
) -> np.ndarray:
    """Face whose nose bottom is at ``position``, rotated relative to its line of sight.

    ``elevation_deg`` > 0 turns the face upward, as seen from a camera below
    eye level.
    """
    position = np.asarray(position, dtype=float)
    rot = Rotation.from_euler("yxz", [yaw_deg, -elevation_deg, roll_deg], degrees=True)
    local = rot.apply(model_triangle(model, nose_depth_cm))
    return local @ _line_of_sight_frame(position).T + position


def normal_angle_to_camera_deg(points: np.ndarray) -> float:
    """Angle between the camera-facing triangle normal and -z."""
    A, B, C = points
    n = np.cross(B - A, C - A)
    n /= np.linalg.norm(n)
    if n @ C > 0:
        n = -n
    return math.degrees(math.acos(max(-1.0, min(1.0, -n[2]))))


def random_face(
    rng: np.random.Generator,
    K: CameraIntrinsics,
    image_size: Tuple[int, int] = (1392, 1040),
    depth_range: Tuple[float, float] = (30.0, 150.0),
    yaw_range: Tuple[float, float] = (-30.0, 30.0),
    elevation_range: Tuple[float, float] = (5.0, 30.0),
    roll_range: Tuple[float, float] = (-15.0, 15.0),
    nose_depth_range: Tuple[float, float] = (1.5, 2.5),
    max_normal_angle_deg: float = 60.0,
    model: FaceModel = FaceModel(),
) -> np.ndarray:
    """Draw a face that projects inside the image with every point at a depth in range."""
    width, height = image_size
    lo, hi = depth_range
    while True:
        depth = rng.uniform(lo + 5.0, hi - 5.0)
        u = rng.uniform(0.15, 0.85) * width
        v = rng.uniform(0.15, 0.85) * height
        ray = K.K_inv @ np.array([u, v, 1.0])
        position = ray * depth
        pts = posed_face(
            position,
            rng.uniform(*yaw_range),
            rng.uniform(*elevation_range),
            rng.uniform(*roll_range),
            model,
            rng.uniform(*nose_depth_range),
        )
        if not np.all((pts[:, 2] >= lo) & (pts[:, 2] <= hi)):
            continue
        if normal_angle_to_camera_deg(pts) > max_normal_angle_deg:
            continue
        img = [project(K, p) for p in pts]
        if all(0 <= q.u < width and 0 <= q.v < height for q in img):
            return pts


def observe(K: CameraIntrinsics, points: np.ndarray) -> FaceObservation:
    a, b, c = (project(K, p) for p in points)
    return FaceObservation(a, b, c)


def perturb_observation(
    obs: FaceObservation, noise: np.ndarray
) -> FaceObservation:
    """Add a (3, 2) array of pixel offsets to the observation."""
    pts = [obs.glint_a, obs.glint_b, obs.nose_c]
    moved = [ImagePoint(p.u + float(d[0]), p.v + float(d[1])) for p, d in zip(pts, noise)]
    return FaceObservation(*moved)


def face_camera(
    focal_px: float = 4000.0,
    image_size: Tuple[int, int] = (1392, 1040),
    focal_y_px: Optional[float] = None,
) -> CameraIntrinsics:
    """Camera with the principal point at the image centre."""
    w, h = image_size
    return CameraIntrinsics(focal_px, focal_px if focal_y_px is None else focal_y_px, w / 2.0, h / 2.0)
