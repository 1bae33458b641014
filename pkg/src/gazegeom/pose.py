"""Face position and orientation from two glints and the nose bottom.

The face is modelled as an isosceles triangle: eyes A, B and nose bottom C
with d(A, C) = d(B, C), d(A, B) = r * d(A, C) and a fixed inter-eye
distance. Writing A = alpha*K^-1 a, B = beta*K^-1 b and C = K^-1 c (the
gamma = 1 affine chart) turns the two shape constraints into a pair of
conics in (alpha, beta); the metric constraint then fixes the overall scale.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Any, List, Mapping, Tuple

import numpy as np

from .errors import (
    AmbiguousObservationError,
    ConfigurationError,
    CurvesCoincideError,
    DegenerateConicError,
    DegenerateObservationError,
    InvalidInputError,
    UnsolvableObservationError,
)
from .geometry import CameraIntrinsics, ImagePoint, PathLike, pixel_ray
from .polyalg import BivariateQuadratic, intersect_conics

log = logging.getLogger(__name__)

# nose-on-camera-side test tolerance, relative to the inter-eye distance
NOSE_SIDE_RTOL = 1e-7


@dataclass(frozen=True)
class FaceModel:
    inter_eye_cm: float = 6.5
    ratio_r: float = 1.0833

    def __post_init__(self) -> None:
        if not (math.isfinite(self.inter_eye_cm) and self.inter_eye_cm > 0):
            raise ConfigurationError(f"inter-eye distance must be > 0, got {self.inter_eye_cm}")
        if not (math.isfinite(self.ratio_r) and 0 < self.ratio_r < 2):
            raise ConfigurationError(f"ratio r must lie in (0, 2), got {self.ratio_r}")

    @property
    def eye_nose_cm(self) -> float:
        return self.inter_eye_cm / self.ratio_r


@dataclass(frozen=True)
class FaceObservation:
    """Image positions of glint A, glint B and the nose bottom C."""

    glint_a: ImagePoint
    glint_b: ImagePoint
    nose_c: ImagePoint

    def __post_init__(self) -> None:
        pts = [ImagePoint.of(p) for p in (self.glint_a, self.glint_b, self.nose_c)]
        for name, p in zip(("glint_a", "glint_b", "nose_c"), pts):
            object.__setattr__(self, name, p)
        for i in range(3):
            for j in range(i + 1, 3):
                d = math.hypot(pts[i].u - pts[j].u, pts[i].v - pts[j].v)
                if d < 1e-6:
                    raise InvalidInputError("observation points must be pairwise distinct")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FaceObservation":
        try:
            return cls(
                ImagePoint.of(data["glint_a"]),
                ImagePoint.of(data["glint_b"]),
                ImagePoint.of(data["nose_c"]),
            )
        except KeyError as exc:
            raise InvalidInputError(f"observation is missing {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "glint_a": self.glint_a.to_list(),
            "glint_b": self.glint_b.to_list(),
            "nose_c": self.nose_c.to_list(),
        }


def load_observation(path: PathLike) -> FaceObservation:
    with open(path, encoding="utf-8") as fh:
        return FaceObservation.from_dict(json.load(fh))


@dataclass(frozen=True)
class FacePose:
    """Recovered face triangle in camera coordinates (cm).

    ``alpha`` and ``beta`` are the eye depths along their rays in the gamma=1
    chart, ``gamma`` the metric scale, so ``A = gamma * alpha * K^-1 a``.
    ``normal`` is the unit normal of the triangle oriented toward the camera.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    alpha: float
    beta: float
    gamma: float
    normal: np.ndarray

    @property
    def scale_a(self) -> float:
        """Depth factor of glint A along ``K^-1 a``."""
        return self.gamma * self.alpha

    @property
    def scale_b(self) -> float:
        return self.gamma * self.beta

    @property
    def points(self) -> np.ndarray:
        return np.stack([self.A, self.B, self.C])

    def nose_offset(self) -> float:
        """Signed depth of C relative to the eye midpoint along C's line of sight.

        Negative when the nose bottom is nearer the camera than the eyes.
        """
        mid = 0.5 * (self.A + self.B)
        return float((self.C - mid) @ (self.C / np.linalg.norm(self.C)))

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "normal": self.normal.tolist(),
            "distance_cm": face_distance(self),
        }


def constraint_conics_from_rays(
    ua: np.ndarray, ub: np.ndarray, uc: np.ndarray, ratio_r: float
) -> Tuple[BivariateQuadratic, BivariateQuadratic]:
    """The two model conics in (alpha, beta) for the given (unnormalised) rays.

    f = |alpha*ua - uc|^2 - |beta*ub - uc|^2
    g = |alpha*ua - beta*ub|^2 - r^2 |alpha*ua - uc|^2
    """
    aa, bb, cc = ua @ ua, ub @ ub, uc @ uc
    ab, ac, bc = ua @ ub, ua @ uc, ub @ uc
    r2 = ratio_r * ratio_r
    f = BivariateQuadratic((aa, 0.0, -bb, -2.0 * ac, 2.0 * bc, 0.0))
    g = BivariateQuadratic(((1.0 - r2) * aa, -2.0 * ab, bb, 2.0 * r2 * ac, 0.0, -r2 * cc))
    return f, g


def _rays(K: CameraIntrinsics, obs: FaceObservation) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    ua, ub, uc = (pixel_ray(K, p) for p in (obs.glint_a, obs.glint_b, obs.nose_c))
    vol = abs(np.linalg.det(np.stack([ua, ub, uc])))
    if vol <= 1e-12 * np.linalg.norm(ua) * np.linalg.norm(ub) * np.linalg.norm(uc):
        raise DegenerateObservationError("image points are collinear; the face plane contains the camera centre")
    return ua, ub, uc


def build_constraint_conics(
    K: CameraIntrinsics, obs: FaceObservation, model: FaceModel = FaceModel()
) -> Tuple[BivariateQuadratic, BivariateQuadratic]:
    ua, ub, uc = _rays(K, obs)
    return constraint_conics_from_rays(ua, ub, uc, model.ratio_r)


def _oriented_normal(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> np.ndarray:
    n = np.cross(B - A, C - A)
    n = n / np.linalg.norm(n)
    # point toward the camera centre
    return -n if n @ C > 0 else n


def _pose(alpha: float, beta: float, rays, model: FaceModel) -> FacePose:
    ua, ub, uc = rays
    A0, B0, C0 = alpha * ua, beta * ub, uc
    gamma = model.inter_eye_cm / np.linalg.norm(A0 - B0)
    A, B, C = gamma * A0, gamma * B0, gamma * C0
    return FacePose(A, B, C, float(alpha), float(beta), float(gamma), _oriented_normal(A, B, C))


def pose_candidates(
    K: CameraIntrinsics, obs: FaceObservation, model: FaceModel = FaceModel()
) -> List[FacePose]:
    """Every pose with positive eye depths that satisfies the face model."""
    rays = _rays(K, obs)
    f, g = constraint_conics_from_rays(*rays, model.ratio_r)
    try:
        roots = intersect_conics(f, g)
    except (CurvesCoincideError, DegenerateConicError) as exc:
        raise UnsolvableObservationError(f"constraint conics are degenerate: {exc}") from exc
    log.debug("conic intersection: %s", roots)
    return [_pose(a, b, rays, model) for a, b in roots if a > 0 and b > 0]


def select_pose(candidates: List[FacePose], model: FaceModel = FaceModel()) -> FacePose:
    """Pick the physically plausible candidate.

    Keeps poses whose camera-facing normal has a negative z component, then,
    if several remain, the single one whose nose bottom is on the camera side
    of the eye line. Anything else is reported as ambiguous.
    """
    facing = [p for p in candidates if p.normal[2] < 0]
    if not facing:
        raise UnsolvableObservationError(
            f"no admissible pose ({len(candidates)} candidates with positive depth)"
        )
    if len(facing) == 1:
        return facing[0]
    tol = NOSE_SIDE_RTOL * model.inter_eye_cm
    near = [p for p in facing if p.nose_offset() <= tol]
    if len(near) == 1:
        return near[0]
    facing.sort(key=FacePose.nose_offset)
    raise AmbiguousObservationError(
        f"{len(facing)} poses fit the observation; {len(near)} have the nose on the camera side",
        facing,
    )


def solve_pose(
    K: CameraIntrinsics, obs: FaceObservation, model: FaceModel = FaceModel()
) -> FacePose:
    """Recover the 3D face triangle from one calibrated observation.

    Raises:
        DegenerateObservationError: the image points are collinear.
        UnsolvableObservationError: no real pose in front of the camera.
        AmbiguousObservationError: more than one pose survives selection.
    """
    return select_pose(pose_candidates(K, obs, model), model)


def face_distance(pose: FacePose) -> float:
    """Camera-to-face distance, taken as the distance to the nose bottom."""
    return float(np.linalg.norm(pose.C))
