"""Command-line interface: ``gazegeom pose|gaze|detect|simulate``.

Results go to ``--out`` (stdout by default). Failures print a JSON error
object to stderr and exit with 2 for I/O problems, 3 for unparsable or
invalid input and 4 when the solver or detector gives up.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Callable, List, Optional

from .detect import DetectionParams, decode_pgm, detect_all, load_params
from .errors import ConfigurationError, GazeGeomError, InvalidInputError
from .gaze import EyeGeometry, LedConfig, gaze_for_eye
from .geometry import CameraIntrinsics, ImagePoint
from .pose import FaceModel, FaceObservation, solve_pose

EXIT_IO = 2
EXIT_PARSE = 3
EXIT_SOLVER = 4

log = logging.getLogger("gazegeom")


class CliError(Exception):
    def __init__(self, exit_code: int, payload: dict) -> None:
        super().__init__(payload.get("message", ""))
        self.exit_code = exit_code
        self.payload = payload


def _read_bytes(path: str) -> bytes:
    try:
        if path == "-":
            return sys.stdin.buffer.read()
        return Path(path).read_bytes()
    except OSError as exc:
        raise CliError(EXIT_IO, {"error": "io", "message": f"cannot read {path}: {exc.strerror or exc}"}) from exc


def _read_json(path: str) -> Any:
    raw = _read_bytes(path)
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CliError(EXIT_PARSE, {"error": "parse", "message": f"{path}: {exc}"}) from exc


def _parse(path: str, build: Callable[[Any], Any]) -> Any:
    data = _read_json(path)
    if not isinstance(data, dict):
        raise CliError(EXIT_PARSE, {"error": "parse", "message": f"{path}: expected a JSON object"})
    try:
        return build(data)
    except (ConfigurationError, InvalidInputError) as exc:
        raise CliError(EXIT_PARSE, {**exc.to_dict(), "message": f"{path}: {exc}"}) from exc


def _write(out: Optional[str], text: str) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(EXIT_IO, {"error": "io", "message": f"cannot write {out}: {exc.strerror or exc}"}) from exc


def _dump(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _model(args: argparse.Namespace) -> FaceModel:
    try:
        return FaceModel(args.inter_eye_cm, args.ratio)
    except ConfigurationError as exc:
        raise CliError(EXIT_PARSE, exc.to_dict()) from exc


def _solver(fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except (ConfigurationError, InvalidInputError) as exc:
        raise CliError(EXIT_PARSE, exc.to_dict()) from exc
    except GazeGeomError as exc:
        raise CliError(EXIT_SOLVER, exc.to_dict()) from exc


def cmd_pose(args: argparse.Namespace) -> int:
    K = _parse(args.camera, CameraIntrinsics.from_dict)
    obs = _parse(args.observation, FaceObservation.from_dict)
    pose = _solver(lambda: solve_pose(K, obs, _model(args)))
    _write(args.out, _dump(pose.to_dict()))
    return 0


def _pupils(data: dict) -> tuple:
    try:
        return ImagePoint.of(data["pupil_a"]), ImagePoint.of(data["pupil_b"])
    except KeyError as exc:
        raise InvalidInputError(f"pupil document is missing {exc}") from exc


def cmd_gaze(args: argparse.Namespace) -> int:
    K = _parse(args.camera, CameraIntrinsics.from_dict)
    obs = _parse(args.observation, FaceObservation.from_dict)
    pupils = _parse(args.pupils or args.observation, _pupils)
    led = _parse(args.led, LedConfig.from_dict)
    eye = _parse(args.eye_geometry, EyeGeometry.from_dict) if args.eye_geometry else EyeGeometry()
    pose = _solver(lambda: solve_pose(K, obs, _model(args)))
    out = {"pose": pose.to_dict()}
    eyes = (("eye_a", obs.glint_a, pupils[0], pose.scale_a), ("eye_b", obs.glint_b, pupils[1], pose.scale_b))
    for key, glint, pupil, scale in eyes:
        try:
            res = gaze_for_eye(K, glint, pupil, scale, led, eye)
            out[key] = {"status": "ok", "result": res.to_dict()}
        except GazeGeomError as exc:
            log.info("%s: %s", key, exc)
            out[key] = {"status": "error", "error": exc.to_dict()}
    _write(args.out, _dump(out))
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    raw = _read_bytes(args.image)
    try:
        img = decode_pgm(raw)
    except InvalidInputError as exc:
        raise CliError(EXIT_PARSE, {**exc.to_dict(), "message": f"{args.image}: {exc}"}) from exc
    params = _parse(args.params, DetectionParams.from_dict) if args.params else DetectionParams()
    result = _solver(lambda: detect_all(img, params))
    _write(args.out, _dump(result.to_dict()))
    if args.figure:
        from .plotting import plot_detection

        plot_detection(img, result, args.figure)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    from .sim import SimScenario, builtin_scenario, emit_curve, run_scenario

    if Path(args.scenario).suffix.lower() == ".json" or args.scenario == "-" or Path(args.scenario).exists():
        scenario = _parse(args.scenario, SimScenario.from_dict)
    else:
        try:
            scenario = builtin_scenario(args.scenario)
        except ConfigurationError as exc:
            raise CliError(EXIT_IO, {"error": "io", "message": str(exc)}) from exc
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        scenario = _solver(lambda: SimScenario.from_dict({**scenario.to_dict(), **overrides}))
    result = run_scenario(scenario, workers=args.workers)
    _write(args.out, emit_curve(result))
    if args.figure:
        from .plotting import plot_error_curve

        plot_error_curve(result, args.figure)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazegeom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--inter-eye-cm", type=float, default=FaceModel().inter_eye_cm)
        p.add_argument("--ratio", type=float, default=FaceModel().ratio_r, help="eye-eye / eye-nose ratio")

    p = sub.add_parser("pose", help="solve the face pose from an observation")
    p.add_argument("observation", help="JSON with glint_a, glint_b, nose_c ('-' for stdin)")
    p.add_argument("--camera", required=True, help="intrinsics JSON")
    model_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pose)

    p = sub.add_parser("gaze", help="solve the pose, then a gaze ray for each eye")
    p.add_argument("observation", help="observation JSON; may also carry pupil_a and pupil_b")
    p.add_argument("pupils", nargs="?", help="JSON with pupil_a, pupil_b (default: the observation)")
    p.add_argument("--camera", required=True)
    p.add_argument("--led", required=True, help='JSON {"led": [x, y, z]} in cm')
    p.add_argument("--eye-geometry", help="JSON with cornea_radius_cm and/or pupil_cornea_dist_cm")
    model_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gaze)

    p = sub.add_parser("detect", help="detect glints, pupils and nose in a PGM image")
    p.add_argument("image", help="binary PGM file ('-' for stdin)")
    p.add_argument("--params", help="detection parameter JSON")
    p.add_argument("--out")
    p.add_argument("--figure", help="write an annotated PNG here")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="run a noise sensitivity scenario and emit a CSV curve")
    p.add_argument("scenario", help="scenario JSON path or a built-in name")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.add_argument("--figure", help="write the error curve PNG here")
    p.set_defaults(func=cmd_simulate)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("GAZEGEOM_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=levels.get(level_name, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if level_name not in levels:
        log.warning("ignoring GAZEGEOM_LOG=%r; expected error, info or debug", level_name)


def main(argv: Optional[List[str]] = None) -> int:
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        payload = {**exc.payload, "exit_code": exc.exit_code}
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
