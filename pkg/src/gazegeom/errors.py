"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class GazeGeomError(Exception):
    """Base class for all library errors."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class ConfigurationError(GazeGeomError, ValueError):
    code = "configuration"


class InvalidInputError(GazeGeomError, ValueError):
    code = "invalid_input"


class BehindCameraError(GazeGeomError, ValueError):
    code = "behind_camera"


class DegenerateConicError(GazeGeomError, ValueError):
    code = "degenerate_conic"


class NoRootsError(GazeGeomError, ValueError):
    code = "no_roots"


class CurvesCoincideError(GazeGeomError, ValueError):
    code = "curves_coincide"


class DegenerateObservationError(GazeGeomError, ValueError):
    code = "degenerate_observation"


class UnsolvableObservationError(GazeGeomError):
    code = "unsolvable_observation"


class AmbiguousObservationError(GazeGeomError):
    """Several poses explain the observation equally well.

    ``candidates`` holds every surviving :class:`~gazegeom.pose.FacePose` so
    a caller with extra context (previous frame, prior) can pick one.
    """

    code = "ambiguous_observation"

    def __init__(self, message: str, candidates: list) -> None:
        super().__init__(message)
        self.candidates = list(candidates)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["candidates"] = [c.to_dict() for c in self.candidates]
        return out


class DegenerateGeometryError(GazeGeomError, ValueError):
    code = "degenerate_geometry"


class RayMissesSphereError(GazeGeomError):
    code = "ray_misses_sphere"

    def __init__(self, message: str, miss_distance: float) -> None:
        super().__init__(message)
        self.miss_distance = float(miss_distance)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["miss_distance_cm"] = self.miss_distance
        return out


class NoseNotFoundError(GazeGeomError):
    code = "nose_not_found"


class DetectionFailedError(GazeGeomError):
    code = "detection_failed"

    def __init__(self, message: str, stage: str) -> None:
        super().__init__(message)
        self.stage = stage

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["stage"] = self.stage
        return out
