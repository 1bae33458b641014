"""Monte Carlo sensitivity of the pose solver to one noisy input at a time.

A fixed synthetic face is projected with a nominal camera. For each noise
level the chosen quantity is perturbed with zero-mean Gaussian noise, the
pose is solved with the perturbed value, and the reconstruction error is
the root mean square of the three point errors. Failed solves are counted
and left out of the mean.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, GazeGeomError
from .geometry import CameraIntrinsics, PathLike
from .pose import FaceModel, FaceObservation, solve_pose
from .synth import DEFAULT_NOSE_DEPTH_CM, observe, perturb_observation, posed_face

log = logging.getLogger(__name__)

TARGETS = ("focal_length", "inter_eye_dist", "ratio_r", "image_points")

CSV_COLUMNS = ("sigma", "mean_error_cm", "error_pct_of_distance", "failures", "trials")


@dataclass(frozen=True)
class SimScenario:
    """One perturbation experiment.

    The face has its nose bottom on the optical axis at ``distance_cm`` and
    is turned by the given yaw, elevation and roll (all zero by default,
    i.e. frontal). The camera has square pixels and its principal point at
    the image centre.
    """

    target: str
    sigmas: Tuple[float, ...]
    trials: int = 100
    seed: int = 0
    name: str = ""
    focal_px: float = 4000.0
    image_size: Tuple[int, int] = (1392, 1040)
    distance_cm: float = 60.0
    nose_depth_cm: float = DEFAULT_NOSE_DEPTH_CM
    yaw_deg: float = 0.0
    elevation_deg: float = 0.0
    roll_deg: float = 0.0
    model: FaceModel = field(default_factory=FaceModel)

    def __post_init__(self) -> None:
        if self.target not in TARGETS:
            raise ConfigurationError(f"unknown target {self.target!r}; expected one of {TARGETS}")
        sig = tuple(float(s) for s in self.sigmas)
        if not sig or any(not math.isfinite(s) or s < 0 for s in sig):
            raise ConfigurationError("sigmas must be a non-empty list of values >= 0")
        object.__setattr__(self, "sigmas", sig)
        if int(self.trials) < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.focal_px <= 0 or self.distance_cm <= 0:
            raise ConfigurationError("focal length and distance must be positive")
        w, h = self.image_size
        object.__setattr__(self, "image_size", (int(w), int(h)))

    @property
    def camera(self) -> CameraIntrinsics:
        w, h = self.image_size
        return CameraIntrinsics(self.focal_px, self.focal_px, w / 2.0, h / 2.0)

    def face_points(self) -> np.ndarray:
        return posed_face(
            np.array([0.0, 0.0, self.distance_cm]),
            self.yaw_deg,
            self.elevation_deg,
            self.roll_deg,
            self.model,
            self.nose_depth_cm,
        )

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimScenario":
        data = dict(data)
        model = data.pop("model", None)
        try:
            if model is not None:
                data["model"] = FaceModel(**model)
            if "image_size" in data:
                data["image_size"] = tuple(data["image_size"])
            if "sigmas" in data:
                data["sigmas"] = tuple(data["sigmas"])
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(f"bad scenario document: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "target": self.target,
            "sigmas": list(self.sigmas),
            "trials": self.trials,
            "seed": self.seed,
            "focal_px": self.focal_px,
            "image_size": list(self.image_size),
            "distance_cm": self.distance_cm,
            "nose_depth_cm": self.nose_depth_cm,
            "yaw_deg": self.yaw_deg,
            "elevation_deg": self.elevation_deg,
            "roll_deg": self.roll_deg,
            "model": {"inter_eye_cm": self.model.inter_eye_cm, "ratio_r": self.model.ratio_r},
        }


def load_scenario(path: PathLike) -> SimScenario:
    with open(path, encoding="utf-8") as fh:
        return SimScenario.from_dict(json.load(fh))


@dataclass(frozen=True)
class SigmaResult:
    sigma: float
    errors: Tuple[float, ...]
    failures: int
    trials: int

    @property
    def mean_error_cm(self) -> float:
        return float(np.mean(self.errors)) if self.errors else math.nan


@dataclass(frozen=True)
class SimResult:
    scenario: SimScenario
    rows: Tuple[SigmaResult, ...]
    distance_cm: float

    @property
    def sigmas(self) -> np.ndarray:
        return np.array([r.sigma for r in self.rows])

    @property
    def mean_errors(self) -> np.ndarray:
        return np.array([r.mean_error_cm for r in self.rows])

    @property
    def error_pct(self) -> np.ndarray:
        return 100.0 * self.mean_errors / self.distance_cm

    def row(self, sigma: float) -> SigmaResult:
        for r in self.rows:
            if r.sigma == sigma:
                return r
        raise KeyError(sigma)


def trial_rng(seed: int, target: str, sigma_idx: int, trial_idx: int) -> np.random.Generator:
    """Independent stream per trial so results do not depend on execution order."""
    return np.random.default_rng([int(seed), TARGETS.index(target), sigma_idx, trial_idx])


def run_trial(
    s: SimScenario, truth: np.ndarray, obs: FaceObservation, sigma: float, rng: np.random.Generator
) -> Optional[float]:
    """RMS point error of one perturbed solve, or None if the solver fails."""
    K = s.camera
    model = s.model
    try:
        if s.target == "focal_length":
            f = s.focal_px + rng.normal(0.0, sigma)
            K = CameraIntrinsics(f, f, K.cx, K.cy)
        elif s.target == "inter_eye_dist":
            model = FaceModel(model.inter_eye_cm + rng.normal(0.0, sigma), model.ratio_r)
        elif s.target == "ratio_r":
            model = FaceModel(model.inter_eye_cm, model.ratio_r + rng.normal(0.0, sigma))
        else:
            obs = perturb_observation(obs, rng.normal(0.0, sigma, size=(3, 2)))
        pose = solve_pose(K, obs, model)
    except GazeGeomError as exc:
        log.debug("trial failed at sigma=%g: %s", sigma, exc)
        return None
    return float(np.sqrt(np.mean(np.sum((pose.points - truth) ** 2, axis=1))))


def _run_sigma(args: Tuple[SimScenario, int]) -> SigmaResult:
    s, k = args
    truth = s.face_points()
    obs = observe(s.camera, truth)
    sigma = s.sigmas[k]
    errors: List[float] = []
    failures = 0
    for t in range(s.trials):
        e = run_trial(s, truth, obs, sigma, trial_rng(s.seed, s.target, k, t))
        if e is None:
            failures += 1
        else:
            errors.append(e)
    return SigmaResult(sigma, tuple(errors), failures, s.trials)


def run_scenario(s: SimScenario, workers: int = 1) -> SimResult:
    """Run every noise level; ``workers`` > 1 spreads levels over processes.

    The result is identical for any worker count.
    """
    jobs = [(s, k) for k in range(len(s.sigmas))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_sigma, jobs))
    else:
        rows = [_run_sigma(j) for j in jobs]
    for r in rows:
        if r.failures:
            log.info("sigma=%g: %d of %d trials failed", r.sigma, r.failures, r.trials)
    distance = float(np.linalg.norm(s.face_points()[2]))
    return SimResult(s, tuple(rows), distance)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.9g}"


def emit_curve(result: SimResult) -> str:
    """Error curve as CSV text with a header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in result.rows:
        mean = r.mean_error_cm
        writer.writerow(
            [_fmt(r.sigma), _fmt(mean), _fmt(100.0 * mean / result.distance_cm), r.failures, r.trials]
        )
    return buf.getvalue()


def read_curve(text: str) -> List[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        for key in ("sigma", "mean_error_cm", "error_pct_of_distance"):
            row[key] = float(row[key])
        for key in ("failures", "trials"):
            row[key] = int(row[key])
    return rows


def scenario_names() -> Sequence[str]:
    """Names of the scenario files shipped with the package."""
    from importlib import resources

    files = resources.files("gazegeom") / "scenarios"
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def builtin_scenario(name: str) -> SimScenario:
    from importlib import resources

    path = resources.files("gazegeom") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ConfigurationError(f"no built-in scenario {name!r}; have {list(scenario_names())}")
    return SimScenario.from_dict(json.loads(path.read_text(encoding="utf-8")))
