"""Cornea centre, 3D pupil centre and gaze ray for one eye.

The cornea is a sphere. The glint is the point where the LED is mirrored
into the camera, so the surface normal there bisects the directions to the
LED and to the camera centre; the cornea centre lies one radius behind the
glint along that normal. The pupil centre is the nearer intersection of
its optical ray with a sphere of fixed radius around the cornea centre.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import (
    BehindCameraError,
    ConfigurationError,
    DegenerateGeometryError,
    InvalidInputError,
    RayMissesSphereError,
)
from .geometry import CameraIntrinsics, ImagePoint, PathLike, Ray3, as_point3, back_project, pixel_ray


@dataclass(frozen=True)
class EyeGeometry:
    """Cornea radius and the cornea-centre-to-pupil-centre distance, in cm."""

    cornea_radius_cm: float = 0.77
    pupil_cornea_dist_cm: float = 0.45

    def __post_init__(self) -> None:
        r, d = self.cornea_radius_cm, self.pupil_cornea_dist_cm
        if not (math.isfinite(r) and math.isfinite(d) and r > 0 and d > 0):
            raise ConfigurationError(f"eye geometry values must be positive, got {r}, {d}")
        if d >= 2 * r:
            raise ConfigurationError("pupil-cornea distance must be below the cornea diameter")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EyeGeometry":
        defaults = cls()
        try:
            return cls(
                float(data.get("cornea_radius_cm", defaults.cornea_radius_cm)),
                float(data.get("pupil_cornea_dist_cm", defaults.pupil_cornea_dist_cm)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad eye geometry document: {exc}") from exc


@dataclass(frozen=True)
class LedConfig:
    position: np.ndarray

    def __post_init__(self) -> None:
        try:
            pos = as_point3(self.position)
        except InvalidInputError as exc:
            raise ConfigurationError(str(exc)) from exc
        if np.linalg.norm(pos) == 0.0:
            raise ConfigurationError("the LED cannot sit at the camera centre")
        object.__setattr__(self, "position", pos)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LedConfig":
        if "led" not in data:
            raise ConfigurationError("LED document needs an 'led' entry")
        return cls(np.asarray(data["led"], dtype=float))


def load_led(path: PathLike) -> LedConfig:
    with open(path, encoding="utf-8") as fh:
        return LedConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class GazeResult:
    cornea_center: np.ndarray
    pupil_center: np.ndarray
    gaze: Ray3

    def to_dict(self) -> dict:
        return {
            "cornea_center": self.cornea_center.tolist(),
            "pupil_center": self.pupil_center.tolist(),
            "gaze": self.gaze.to_dict(),
        }


def surface_normal_at_glint(glint3d: np.ndarray, led: LedConfig) -> np.ndarray:
    """Outward corneal normal at the glint: the bisector of glint->LED and glint->camera."""
    to_led = led.position - glint3d
    to_cam = -glint3d
    n_led, n_cam = np.linalg.norm(to_led), np.linalg.norm(to_cam)
    if n_led == 0.0 or n_cam == 0.0:
        raise DegenerateGeometryError("glint coincides with the LED or the camera centre")
    h = to_led / n_led + to_cam / n_cam
    nh = np.linalg.norm(h)
    if nh <= 1e-12:
        raise DegenerateGeometryError("LED and camera are in opposite directions from the glint")
    return h / nh


def cornea_center(glint3d: Any, led: LedConfig, eye: EyeGeometry = EyeGeometry()) -> np.ndarray:
    glint3d = as_point3(glint3d)
    return glint3d - eye.cornea_radius_cm * surface_normal_at_glint(glint3d, led)


def pupil_center(
    K: CameraIntrinsics,
    pupil_img: ImagePoint,
    cornea: Any,
    eye: EyeGeometry = EyeGeometry(),
) -> np.ndarray:
    """Nearer intersection of the pupil's optical ray with the pupil sphere.

    Raises:
        RayMissesSphereError: the ray passes outside the sphere; carries the gap in cm.
        BehindCameraError: both intersections lie behind the camera.
    """
    X = as_point3(cornea)
    rho = eye.pupil_cornea_dist_cm
    d = back_project(K, pupil_img)
    t_mid = float(d @ X)
    # squared distance from the sphere centre to the ray line
    perp = X - t_mid * d
    dist2 = float(perp @ perp)
    disc = rho * rho - dist2
    if disc < 0.0:
        if disc < -1e-12 * max(1.0, float(X @ X)):
            raise RayMissesSphereError(
                f"pupil ray misses the sphere by {math.sqrt(dist2) - rho:.6g} cm",
                math.sqrt(dist2) - rho,
            )
        disc = 0.0
    half = math.sqrt(disc)
    t_near, t_far = t_mid - half, t_mid + half
    if t_near > 0.0:
        t = t_near
    elif t_far > 0.0:
        t = t_far
    else:
        raise BehindCameraError("the pupil sphere is behind the camera")
    return t * d


def gaze_for_eye(
    K: CameraIntrinsics,
    glint_img: ImagePoint,
    pupil_img: ImagePoint,
    glint_scale: float,
    led: LedConfig,
    eye: EyeGeometry = EyeGeometry(),
) -> GazeResult:
    """Gaze ray for one eye.

    ``glint_scale`` places the glint at ``glint_scale * K^-1 glint_img``; a
    solved :class:`~gazegeom.pose.FacePose` supplies it as ``scale_a`` or
    ``scale_b``. This reuses the detected glint, which the pose stage treats
    as the eye position, as a point on the corneal surface.
    """
    if not (math.isfinite(glint_scale) and glint_scale > 0):
        raise InvalidInputError(f"glint scale must be positive, got {glint_scale}")
    glint3d = glint_scale * pixel_ray(K, ImagePoint.of(glint_img))
    center = cornea_center(glint3d, led, eye)
    pupil = pupil_center(K, ImagePoint.of(pupil_img), center, eye)
    return GazeResult(center, pupil, Ray3(center, pupil - center))
