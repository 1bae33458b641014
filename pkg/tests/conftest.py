from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gazegeom.geometry import CameraIntrinsics  # noqa: E402
from gazegeom.synth import face_camera  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def camera() -> CameraIntrinsics:
    """Nominal camera: f = 4000 px, 1392x1040, principal point at the centre."""
    return face_camera()


@pytest.fixture
def axis_camera() -> CameraIntrinsics:
    """f = 4000 px with the principal point at the pixel origin."""
    return CameraIntrinsics(4000.0, 4000.0, 0.0, 0.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT

    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in REPORT:
            terminalreporter.write_line(line)
