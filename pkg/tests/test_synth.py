from __future__ import annotations

import numpy as np
import pytest

from gazegeom.errors import ConfigurationError
from gazegeom.geometry import ImagePoint
from gazegeom.pose import FaceModel, FaceObservation
from gazegeom.synth import (
    face_camera,
    frontal_face,
    model_triangle,
    normal_angle_to_camera_deg,
    observe,
    perturb_observation,
    posed_face,
    random_face,
)


def model_residuals(pts, model=FaceModel()):
    A, B, C = pts
    dac, dbc, dab = (np.linalg.norm(A - C), np.linalg.norm(B - C), np.linalg.norm(A - B))
    return abs(dac - dbc), abs(dab - model.ratio_r * dac), abs(dab - model.inter_eye_cm)


class TestSynth:
    @pytest.mark.parametrize("depth", [0.0, 1.5, 2.5])
    def test_triangle_satisfies_model(self, depth):
        assert max(model_residuals(model_triangle(nose_depth_cm=depth))) <= 1e-12

    def test_impossible_nose_depth(self):
        with pytest.raises(ConfigurationError):
            model_triangle(nose_depth_cm=10.0)

    def test_frontal_nose_on_axis(self):
        np.testing.assert_allclose(frontal_face(60.0)[2], [0, 0, 60])

    def test_posed_face_keeps_shape(self):
        pts = posed_face(np.array([3.0, -2.0, 80.0]), 20.0, 10.0, -5.0)
        assert max(model_residuals(pts)) <= 1e-12
        np.testing.assert_allclose(pts[2], [3.0, -2.0, 80.0])

    def test_random_faces_in_range(self, rng):
        K = face_camera()
        for _ in range(50):
            pts = random_face(rng, K)
            assert np.all((pts[:, 2] >= 30) & (pts[:, 2] <= 150))
            assert normal_angle_to_camera_deg(pts) <= 60.0
            obs = observe(K, pts)
            for p in (obs.glint_a, obs.glint_b, obs.nose_c):
                assert 0 <= p.u < 1392 and 0 <= p.v < 1040
            assert obs.glint_a.u < obs.glint_b.u

    def test_perturb(self):
        obs = FaceObservation(ImagePoint(0, 0), ImagePoint(10, 0), ImagePoint(5, 8))
        moved = perturb_observation(obs, np.array([[1, 2], [3, 4], [5, 6]]))
        assert moved.nose_c == ImagePoint(10, 14)

    def test_camera(self):
        K = face_camera()
        assert (K.fx, K.fy, K.cx, K.cy) == (4000.0, 4000.0, 696.0, 520.0)
