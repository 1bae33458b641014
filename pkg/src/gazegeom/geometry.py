"""Pinhole camera model and ray geometry.

Conventions: pixel origin at the top-left corner with +u to the right and +v
downward; pixel centres sit at integer coordinates. The camera frame is
right-handed with the centre at the origin and +z along the optical axis
toward the scene. 3D quantities are in centimetres.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence, Union

import numpy as np

from .errors import BehindCameraError, ConfigurationError, InvalidInputError

PathLike = Union[str, Path]


@dataclass(frozen=True)
class CameraIntrinsics:
    """Internal camera parameters.

    Args:
        fx, fy: Focal lengths in pixels.
        cx, cy: Principal point in pixels.
        skew: Axis skew in pixels.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self) -> None:
        values = (self.fx, self.fy, self.cx, self.cy, self.skew)
        if not all(math.isfinite(float(v)) for v in values):
            raise ConfigurationError(f"non-finite intrinsics: {values}")
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigurationError(
                f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}"
            )

    @cached_property
    def K(self) -> np.ndarray:
        return np.array(
            [[self.fx, self.skew, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @cached_property
    def K_inv(self) -> np.ndarray:
        # closed-form inverse of the upper-triangular K
        fx, fy, cx, cy, s = self.fx, self.fy, self.cx, self.cy, self.skew
        return np.array(
            [
                [1.0 / fx, -s / (fx * fy), (s * cy - cx * fy) / (fx * fy)],
                [0.0, 1.0 / fy, -cy / fy],
                [0.0, 0.0, 1.0],
            ]
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CameraIntrinsics":
        try:
            return cls(
                fx=float(data["fx"]),
                fy=float(data["fy"]),
                cx=float(data["cx"]),
                cy=float(data["cy"]),
                skew=float(data.get("skew", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(f"bad intrinsics document: {exc!r}") from exc

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy, "skew": self.skew}


def load_intrinsics(path: PathLike) -> CameraIntrinsics:
    """Read intrinsics from a JSON file with keys fx, fy, cx, cy[, skew]."""
    with open(path, encoding="utf-8") as fh:
        return CameraIntrinsics.from_dict(json.load(fh))


@dataclass(frozen=True)
class ImagePoint:
    """A pixel position; the homogeneous coordinate is implicitly 1."""

    u: float
    v: float

    def __post_init__(self) -> None:
        try:
            u, v = float(self.u), float(self.v)
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"image point coordinates must be numbers, got {self.u!r}, {self.v!r}") from exc
        if not (math.isfinite(u) and math.isfinite(v)):
            raise InvalidInputError(f"non-finite image point ({u}, {v})")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @classmethod
    def of(cls, value: Union["ImagePoint", Sequence[float]]) -> "ImagePoint":
        if isinstance(value, ImagePoint):
            return value
        try:
            u, v = value
            return cls(float(u), float(v))
        except (TypeError, ValueError) as exc:
            raise InvalidInputError(f"expected a [u, v] pair, got {value!r}") from exc

    def homogeneous(self) -> np.ndarray:
        return np.array([self.u, self.v, 1.0])

    def to_list(self) -> list:
        return [self.u, self.v]


def as_point3(value: Any) -> np.ndarray:
    """Validate and convert to a float array of shape (3,)."""
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"expected a finite 3-vector, got {value!r}")
    return arr


def normalize(vec: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(vec)
    if n == 0.0 or not math.isfinite(n):
        raise InvalidInputError("cannot normalise a zero or non-finite vector")
    return vec / n


@dataclass(frozen=True)
class Ray3:
    origin: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "origin", as_point3(self.origin))
        d = as_point3(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            d = normalize(d)
        object.__setattr__(self, "direction", d)

    def at(self, t: float) -> np.ndarray:
        return self.origin + t * self.direction

    def to_dict(self) -> dict:
        return {"origin": self.origin.tolist(), "direction": self.direction.tolist()}


def pixel_ray(K: CameraIntrinsics, p: ImagePoint) -> np.ndarray:
    """Unnormalised ray ``K^-1 [u, v, 1]``; its z component is exactly 1."""
    return K.K_inv @ p.homogeneous()


def back_project(K: CameraIntrinsics, p: ImagePoint) -> np.ndarray:
    """Unit direction of the optical ray through pixel ``p``."""
    return normalize(pixel_ray(K, p))


def project(K: CameraIntrinsics, P: Any) -> ImagePoint:
    P = as_point3(P)
    if P[2] <= 0.0:
        raise BehindCameraError(f"point {P.tolist()} is not in front of the camera")
    x, y, w = K.K @ P
    return ImagePoint(float(x / w), float(y / w))
