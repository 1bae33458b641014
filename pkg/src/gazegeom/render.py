"""Synthetic grayscale face images for exercising the detectors.

Shapes are drawn with 4x4 supersampling so sub-pixel positions produce the
expected intensity-weighted centroids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .detect import GrayImage
from .geometry import CameraIntrinsics, ImagePoint, project

SUPERSAMPLE = 4


def _coverage(shape: Tuple[int, int], inside) -> np.ndarray:
    h, w = shape
    n = SUPERSAMPLE
    offs = (np.arange(n) + 0.5) / n - 0.5
    vv, uu = np.mgrid[0:h, 0:w].astype(float)
    cov = np.zeros((h, w))
    for dv in offs:
        for du in offs:
            cov += inside(uu + du, vv + dv)
    return cov / (n * n)


def paint_ellipse(
    canvas: np.ndarray,
    center: Sequence[float],
    radii: Sequence[float],
    value: float,
    angle_deg: float = 0.0,
) -> None:
    """Blend a filled ellipse of intensity ``value`` into a float canvas in place."""
    cu, cv = center
    ru, rv = radii
    c, s = math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))
    h, w = canvas.shape
    pad = max(ru, rv) + 2
    u0, u1 = max(0, int(cu - pad)), min(w, int(cu + pad) + 2)
    v0, v1 = max(0, int(cv - pad)), min(h, int(cv + pad) + 2)
    if u0 >= u1 or v0 >= v1:
        return

    def inside(u, v):
        du, dv = u + u0 - cu, v + v0 - cv
        x = c * du + s * dv
        y = -s * du + c * dv
        return (x / ru) ** 2 + (y / rv) ** 2 <= 1.0

    cov = _coverage((v1 - v0, u1 - u0), inside)
    sub = canvas[v0:v1, u0:u1]
    sub += cov * (value - sub)


def paint_square(canvas: np.ndarray, center: Sequence[float], side: float, value: float) -> None:
    cu, cv = center
    h, w = canvas.shape
    half = side / 2.0
    u0, u1 = max(0, int(cu - half) - 1), min(w, int(cu + half) + 2)
    v0, v1 = max(0, int(cv - half) - 1), min(h, int(cv + half) + 2)
    if u0 >= u1 or v0 >= v1:
        return

    def inside(u, v):
        return (np.abs(u + u0 - cu) <= half) & (np.abs(v + v0 - cv) <= half)

    cov = _coverage((v1 - v0, u1 - u0), inside)
    sub = canvas[v0:v1, u0:u1]
    sub += cov * (value - sub)


@dataclass
class FaceSketch:
    """Feature layout of a synthetic face image, in pixels.

    ``nostril_sep`` is the distance between the two nostril centres.
    Pupils default to the glint positions.
    """

    glint_a: Tuple[float, float]
    glint_b: Tuple[float, float]
    nose: Tuple[float, float]
    pupil_a: Optional[Tuple[float, float]] = None
    pupil_b: Optional[Tuple[float, float]] = None
    size: Tuple[int, int] = (640, 480)
    nostril_sep: float = 24.0
    nostril_radii: Tuple[float, float] = (6.0, 4.0)
    pupil_radius: float = 8.0
    glint_side: float = 3.0
    background: float = 30.0
    skin: float = 150.0
    pupil_value: float = 20.0
    nostril_value: float = 25.0
    extra_bright: List[Tuple[float, float, float, float]] = field(default_factory=list)

    @property
    def axis_angle_deg(self) -> float:
        return math.degrees(math.atan2(self.glint_b[1] - self.glint_a[1], self.glint_b[0] - self.glint_a[0]))

    def nostrils(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        ang = math.radians(self.axis_angle_deg)
        dx, dy = 0.5 * self.nostril_sep * math.cos(ang), 0.5 * self.nostril_sep * math.sin(ang)
        n = self.nose
        return (n[0] - dx, n[1] - dy), (n[0] + dx, n[1] + dy)


def render_face(sketch: FaceSketch, noise_sigma: float = 0.0, rng: Optional[np.random.Generator] = None) -> GrayImage:
    """Draw ``sketch``; optional additive Gaussian pixel noise."""
    w, h = sketch.size
    canvas = np.full((h, w), sketch.background, dtype=float)
    ga, gb = np.array(sketch.glint_a), np.array(sketch.glint_b)
    sep = float(np.linalg.norm(gb - ga))
    centre = 0.5 * (ga + gb) + 0.3 * sep * _down(ga, gb)
    paint_ellipse(canvas, centre, (1.1 * sep, 1.5 * sep), sketch.skin, sketch.axis_angle_deg)
    for pupil, glint in ((sketch.pupil_a, ga), (sketch.pupil_b, gb)):
        p = glint if pupil is None else pupil
        r = sketch.pupil_radius
        paint_ellipse(canvas, p, (r, r), sketch.pupil_value)
    for nostril in sketch.nostrils():
        paint_ellipse(canvas, nostril, sketch.nostril_radii, sketch.nostril_value, sketch.axis_angle_deg)
    for g in (ga, gb):
        paint_square(canvas, g, sketch.glint_side, 255.0)
    for u0, v0, u1, v1 in sketch.extra_bright:
        canvas[int(v0) : int(v1), int(u0) : int(u1)] = 255.0
    if noise_sigma > 0:
        rng = np.random.default_rng(0) if rng is None else rng
        canvas = canvas + rng.normal(0.0, noise_sigma, canvas.shape)
    return GrayImage(np.clip(np.round(canvas), 0, 255).astype(np.uint8))


def _down(ga: np.ndarray, gb: np.ndarray) -> np.ndarray:
    axis = (gb - ga) / np.linalg.norm(gb - ga)
    down = np.array([-axis[1], axis[0]])
    return down if down[1] >= 0 else -down


def sketch_from_pose(
    K: CameraIntrinsics,
    points: np.ndarray,
    size: Tuple[int, int],
    snap: bool = True,
) -> FaceSketch:
    """Layout whose glints and nose point are the projections of A, B, C.

    With ``snap`` the projections are rounded to whole pixels, which makes
    the rendered features exactly recoverable.
    """
    a, b, c = (project(K, p) for p in points)

    def pt(q: ImagePoint) -> Tuple[float, float]:
        return (float(round(q.u)), float(round(q.v))) if snap else (q.u, q.v)

    ga, gb, nose = pt(a), pt(b), pt(c)
    sep = math.hypot(gb[0] - ga[0], gb[1] - ga[1])
    nostril_sep = 2 * round(0.06 * sep) if snap else 0.12 * sep
    return FaceSketch(ga, gb, nose, size=size, nostril_sep=float(nostril_sep))
