"""Glint, pupil and nose-bottom detection in 8-bit grayscale images.

Glints are small saturated blobs that come in roughly horizontal pairs.
Each glint must have a dark pupil blob close to it. The nose bottom is the
midpoint between two nostril blobs found below the glint pair, in a search
region that follows the pair's position, scale and in-plane rotation.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass
from typing import Any, List, Mapping, Optional, Tuple

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DetectionFailedError, InvalidInputError, NoseNotFoundError
from .geometry import ImagePoint, PathLike

log = logging.getLogger(__name__)

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class GrayImage:
    """Row-major 8-bit image; ``pixels[v, u]``."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.shape[0] == 0 or px.shape[1] == 0:
            raise InvalidInputError(f"image must be a non-empty 2D array, got shape {px.shape}")
        if px.dtype != np.uint8:
            if np.any(px < 0) or np.any(px > 255):
                raise InvalidInputError("pixel values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = np.ascontiguousarray(px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @classmethod
    def from_buffer(cls, width: int, height: int, buffer: bytes) -> "GrayImage":
        if width <= 0 or height <= 0 or len(buffer) != width * height:
            raise InvalidInputError(
                f"buffer of {len(buffer)} bytes does not match {width}x{height}"
            )
        return cls(np.frombuffer(buffer, dtype=np.uint8).reshape(height, width))


def _pgm_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    tokens: List[bytes] = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace() and data[pos : pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise InvalidInputError("truncated PGM header")
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def decode_pgm(data: bytes) -> GrayImage:
    tokens, offset = _pgm_tokens(data, 4)
    if tokens[0] != b"P5":
        raise InvalidInputError(f"not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise InvalidInputError(f"bad PGM header: {exc}") from exc
    if not 0 < maxval < 256:
        raise InvalidInputError(f"only 8-bit PGM is supported (maxval {maxval})")
    raster = data[offset : offset + width * height]
    img = GrayImage.from_buffer(width, height, raster)
    if maxval != 255:
        scaled = np.round(img.pixels.astype(float) * (255.0 / maxval))
        img = GrayImage(np.clip(scaled, 0, 255).astype(np.uint8))
    return img


def encode_pgm(img: GrayImage) -> bytes:
    return f"P5\n{img.width} {img.height}\n255\n".encode("ascii") + img.pixels.tobytes()


def read_pgm(path: PathLike) -> GrayImage:
    with open(path, "rb") as fh:
        return decode_pgm(fh.read())


def write_pgm(path: PathLike, img: GrayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))


@dataclass(frozen=True)
class Blob:
    """A connected component; ``bbox`` is (u_min, v_min, u_max, v_max), inclusive."""

    centroid: ImagePoint
    area: int
    bbox: Tuple[int, int, int, int]
    mean_intensity: float
    elongation: float = 1.0


@dataclass(frozen=True)
class DetectionParams:
    """Thresholds and ranges for every detection stage.

    Distances are in pixels, angles in degrees, intensities in gray levels.
    Nostril separation limits are fractions of the glint separation.
    """

    glint_threshold: int = 250
    glint_min_area: int = 2
    glint_max_area: int = 50
    pair_min_dist: float = 60.0
    pair_max_dist: float = 400.0
    pair_max_angle_deg: float = 25.0
    pupil_threshold: int = 60
    pupil_search_radius: float = 25.0
    pupil_min_area: int = 12
    pupil_max_area: int = 1500
    nose_region_scale: float = 1.0
    nostril_threshold: int = 60
    nostril_min_area: int = 6
    nostril_max_area: int = 1500
    nostril_min_sep: float = 0.05
    nostril_max_sep: float = 0.45
    nostril_max_angle_deg: float = 20.0
    nostril_max_elongation: float = 4.0
    nostril_min_contrast: float = 40.0

    def __post_init__(self) -> None:
        for name in ("glint_threshold", "pupil_threshold", "nostril_threshold"):
            value = getattr(self, name)
            if not 0 <= value <= 255:
                raise ConfigurationError(f"{name} must lie in [0, 255], got {value}")
        ranges = [
            ("glint_min_area", "glint_max_area"),
            ("pair_min_dist", "pair_max_dist"),
            ("pupil_min_area", "pupil_max_area"),
            ("nostril_min_area", "nostril_max_area"),
            ("nostril_min_sep", "nostril_max_sep"),
        ]
        for lo, hi in ranges:
            if not 0 < getattr(self, lo) <= getattr(self, hi):
                raise ConfigurationError(f"need 0 < {lo} <= {hi}")
        for name in ("pupil_search_radius", "nose_region_scale", "nostril_max_elongation"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DetectionParams":
        known = {f.name: f.type for f in dataclasses.fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigurationError(f"unknown detection parameters: {sorted(unknown)}")
        defaults = cls()
        values = {}
        for key, value in data.items():
            cast = type(getattr(defaults, key))
            try:
                values[key] = cast(value)
            except (TypeError, ValueError) as exc:
                raise ConfigurationError(f"bad value for {key}: {value!r}") from exc
        return cls(**values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_params(path: PathLike) -> DetectionParams:
    with open(path, encoding="utf-8") as fh:
        return DetectionParams.from_dict(json.load(fh))


@dataclass(frozen=True)
class DetectionResult:
    """Detected features; ``confidence`` maps feature name to a score in [0, 1]."""

    glint_a: ImagePoint
    glint_b: ImagePoint
    nose_c: ImagePoint
    pupil_a: ImagePoint
    pupil_b: ImagePoint
    confidence: Mapping[str, float]

    def to_dict(self) -> dict:
        return {
            "glint_a": self.glint_a.to_list(),
            "glint_b": self.glint_b.to_list(),
            "nose_c": self.nose_c.to_list(),
            "pupil_a": self.pupil_a.to_list(),
            "pupil_b": self.pupil_b.to_list(),
            "confidence": dict(self.confidence),
        }


def _blobs(mask: np.ndarray, weights: np.ndarray, intensity: np.ndarray, offset=(0, 0)) -> List[Blob]:
    """Connected components of ``mask`` with weighted centroids."""
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return []
    out = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        sub = labels[sl] == idx
        vv, uu = np.nonzero(sub)
        w = weights[sl][sub].astype(float)
        if w.sum() <= 0:
            w = np.ones_like(w)
        u = uu + sl[1].start
        v = vv + sl[0].start
        cu, cv = float(w @ u / w.sum()), float(w @ v / w.sum())
        cov = np.cov(np.stack([u, v])) if len(u) > 1 else np.zeros((2, 2))
        ev = np.linalg.eigvalsh(np.atleast_2d(cov))
        elong = math.sqrt(ev[-1] / ev[0]) if ev[0] > 1e-12 else (1.0 if ev[-1] <= 1e-12 else math.inf)
        out.append(
            Blob(
                centroid=ImagePoint(cu + offset[0], cv + offset[1]),
                area=int(sub.sum()),
                bbox=(
                    int(u.min()) + offset[0],
                    int(v.min()) + offset[1],
                    int(u.max()) + offset[0],
                    int(v.max()) + offset[1],
                ),
                mean_intensity=float(intensity[sl][sub].mean()),
                elongation=float(elong),
            )
        )
    return out


def find_bright_blobs(img: GrayImage, threshold: int) -> List[Blob]:
    px = img.pixels
    return _blobs(px >= threshold, px, px)


def _dark_blobs(px: np.ndarray, threshold: int, region: Optional[np.ndarray] = None, offset=(0, 0)) -> List[Blob]:
    """Dark components with interior holes (e.g. a glint inside a pupil) filled.

    Filled pixels take the blob's mean darkness as weight so a bright spot
    does not pull the centroid away from it.
    """
    dark = px < threshold
    if region is not None:
        dark &= region
    labels, n = ndimage.label(dark, structure=_EIGHT)
    if n == 0:
        return []
    darkness = (255.0 - px.astype(float)) * dark
    weights = np.zeros(px.shape, dtype=float)
    filled = np.zeros(px.shape, dtype=bool)
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        comp = labels[sl] == idx
        full = ndimage.binary_fill_holes(comp)
        holes = full & ~comp
        w = weights[sl]
        w[comp] = darkness[sl][comp]
        w[holes] = darkness[sl][comp].mean()
        filled[sl] |= full
    return _blobs(filled, weights, px, offset)


def _pair_key(p: Tuple[Blob, Blob]) -> Tuple[float, float]:
    a, b = p
    return (0.5 * (a.centroid.v + b.centroid.v), 0.5 * (a.centroid.u + b.centroid.u))


def detect_glints(img: GrayImage, params: DetectionParams = DetectionParams()) -> List[Tuple[ImagePoint, ImagePoint]]:
    """Candidate glint pairs, top-most first; each pair is ordered left to right."""
    blobs = [
        b
        for b in find_bright_blobs(img, params.glint_threshold)
        if params.glint_min_area <= b.area <= params.glint_max_area
    ]
    pairs = []
    for i in range(len(blobs)):
        for j in range(i + 1, len(blobs)):
            a, b = sorted((blobs[i], blobs[j]), key=lambda k: (k.centroid.u, k.centroid.v))
            du = b.centroid.u - a.centroid.u
            dv = b.centroid.v - a.centroid.v
            dist = math.hypot(du, dv)
            if not params.pair_min_dist <= dist <= params.pair_max_dist:
                continue
            if math.degrees(math.atan2(abs(dv), abs(du))) > params.pair_max_angle_deg:
                continue
            pairs.append((a, b))
    pairs.sort(key=_pair_key)
    log.debug("%d glint blobs, %d candidate pairs", len(blobs), len(pairs))
    return [(a.centroid, b.centroid) for a, b in pairs]


def detect_pupil_near(
    img: GrayImage, glint: ImagePoint, params: DetectionParams = DetectionParams()
) -> Optional[ImagePoint]:
    """Centroid of the darkest admissible dark blob near ``glint``, or None."""
    return _pupil_blob(img, glint, params)[0]


def _pupil_blob(img: GrayImage, glint: ImagePoint, params: DetectionParams) -> Tuple[Optional[ImagePoint], float]:
    if not (0 <= glint.u < img.width and 0 <= glint.v < img.height):
        raise InvalidInputError(f"glint ({glint.u}, {glint.v}) is outside the image")
    r = params.pupil_search_radius
    # pupils may extend past the search radius; include a margin so they are not truncated
    reach = int(math.ceil(2 * r))
    u0, u1 = max(0, int(glint.u) - reach), min(img.width, int(glint.u) + reach + 1)
    v0, v1 = max(0, int(glint.v) - reach), min(img.height, int(glint.v) + reach + 1)
    win = img.pixels[v0:v1, u0:u1]
    best = None
    for blob in _dark_blobs(win, params.pupil_threshold, offset=(u0, v0)):
        if not params.pupil_min_area <= blob.area <= params.pupil_max_area:
            continue
        if math.hypot(blob.centroid.u - glint.u, blob.centroid.v - glint.v) > r:
            continue
        if best is None or blob.mean_intensity < best.mean_intensity:
            best = blob
    if best is None:
        return None, 0.0
    dark = win[win < params.pupil_threshold]
    contrast = (params.pupil_threshold - float(dark.mean())) / max(params.pupil_threshold, 1)
    return best.centroid, float(np.clip(contrast, 0.0, 1.0))


def _sample(px: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return ndimage.map_coordinates(px.astype(float), [v, u], order=1, mode="nearest")


def _nose(
    img: GrayImage, pair: Tuple[ImagePoint, ImagePoint], params: DetectionParams
) -> Tuple[ImagePoint, float]:
    ga, gb = pair
    axis = np.array([gb.u - ga.u, gb.v - ga.v], dtype=float)
    sep = float(np.linalg.norm(axis))
    if sep == 0.0:
        raise NoseNotFoundError("glint pair has zero separation")
    axis /= sep
    down = np.array([-axis[1], axis[0]])
    if down[1] < 0:
        down = -down
    mid = np.array([(ga.u + gb.u) / 2, (ga.v + gb.v) / 2])

    # search rectangle in the pair frame, below the eyes
    scale = params.nose_region_scale * sep
    half_w, near, far = 0.5 * scale, 0.25 * scale, 1.25 * scale
    corners = np.array([mid + s * half_w * axis + t * down for s in (-1, 1) for t in (near, far)])
    u0 = int(np.clip(np.floor(corners[:, 0].min()), 0, img.width))
    u1 = int(np.clip(np.ceil(corners[:, 0].max()) + 1, 0, img.width))
    v0 = int(np.clip(np.floor(corners[:, 1].min()), 0, img.height))
    v1 = int(np.clip(np.ceil(corners[:, 1].max()) + 1, 0, img.height))
    if u0 >= u1 or v0 >= v1:
        raise NoseNotFoundError("nose search region lies outside the image")
    vv, uu = np.mgrid[v0:v1, u0:u1]
    du, dv = uu - mid[0], vv - mid[1]
    s = du * axis[0] + dv * axis[1]
    t = du * down[0] + dv * down[1]
    region = (np.abs(s) <= half_w) & (t >= near) & (t <= far)

    px = img.pixels
    blobs = [
        b
        for b in _dark_blobs(px[v0:v1, u0:u1], params.nostril_threshold, region, offset=(u0, v0))
        if params.nostril_min_area <= b.area <= params.nostril_max_area
        and b.elongation <= params.nostril_max_elongation
    ]
    best = None
    for i in range(len(blobs)):
        for j in range(i + 1, len(blobs)):
            p = np.array([blobs[i].centroid.u, blobs[i].centroid.v])
            q = np.array([blobs[j].centroid.u, blobs[j].centroid.v])
            d = q - p
            dist = float(np.linalg.norm(d))
            if not params.nostril_min_sep * sep <= dist <= params.nostril_max_sep * sep:
                continue
            cosang = abs(float(d @ axis)) / dist
            if math.degrees(math.acos(min(1.0, cosang))) > params.nostril_max_angle_deg:
                continue
            # dark-bright-dark along the segment joining the nostrils
            ts = np.linspace(0.0, 1.0, 41)
            line = _sample(px, p[0] + ts * d[0], p[1] + ts * d[1])
            ends = 0.5 * (line[:5].mean() + line[-5:].mean())
            bridge = line[14:27].max()
            contrast = bridge - ends
            if contrast < params.nostril_min_contrast:
                continue
            centre = 0.5 * (p + q)
            offset = abs(float((centre - mid) @ axis))
            key = (offset, -contrast)
            if best is None or key < best[0]:
                best = (key, centre, contrast)
    if best is None:
        raise NoseNotFoundError(f"no nostril pair below the glints ({len(blobs)} dark blobs in the search region)")
    _, centre, contrast = best
    return ImagePoint(float(centre[0]), float(centre[1])), float(min(1.0, contrast / 255.0))


def detect_nose(
    img: GrayImage, glint_pair: Tuple[ImagePoint, ImagePoint], params: DetectionParams = DetectionParams()
) -> ImagePoint:
    """Nose bottom as the midpoint between the two nostrils.

    Raises:
        NoseNotFoundError: no admissible nostril pair in the search region.
    """
    return _nose(img, glint_pair, params)[0]


def detect_all(img: GrayImage, params: DetectionParams = DetectionParams()) -> DetectionResult:
    """Run every stage and return the top-most glint pair that has both pupils.

    Raises:
        DetectionFailedError: ``stage`` names the first stage with no usable output.
    """
    pairs = detect_glints(img, params)
    if not pairs:
        raise DetectionFailedError("no glint pair found", "glints")
    for ga, gb in pairs:
        pa, ca = _pupil_blob(img, ga, params)
        pb, cb = _pupil_blob(img, gb, params)
        if pa is None or pb is None:
            log.debug("dropping glint pair %s %s: pupil missing", ga, gb)
            continue
        try:
            nose, cn = _nose(img, (ga, gb), params)
        except NoseNotFoundError as exc:
            raise DetectionFailedError(str(exc), "nose") from exc
        glint_conf = float(min(img.pixels[int(round(g.v)), int(round(g.u))] for g in (ga, gb)) / 255.0)
        return DetectionResult(
            ga, gb, nose, pa, pb,
            {"glints": glint_conf, "pupil_a": ca, "pupil_b": cb, "nose": cn},
        )
    raise DetectionFailedError(f"none of {len(pairs)} glint pairs has a pupil next to both glints", "pupils")
