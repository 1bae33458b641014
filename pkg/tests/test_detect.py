from __future__ import annotations

import json
import math

import numpy as np
import pytest

from gazegeom.detect import (
    DetectionParams,
    GrayImage,
    decode_pgm,
    detect_all,
    detect_glints,
    detect_nose,
    detect_pupil_near,
    encode_pgm,
    find_bright_blobs,
    load_params,
    read_pgm,
    write_pgm,
)
from gazegeom.errors import ConfigurationError, DetectionFailedError, InvalidInputError, NoseNotFoundError
from gazegeom.geometry import ImagePoint
from gazegeom.render import FaceSketch, paint_ellipse, paint_square, render_face

BASE = FaceSketch(glint_a=(260.0, 200.0), glint_b=(380.0, 205.0), nose=(321.0, 290.0))


def dist(p: ImagePoint, q) -> float:
    return math.hypot(p.u - q[0], p.v - q[1])


def rotated(sketch: FaceSketch, deg: float, about=(320.0, 240.0)) -> FaceSketch:
    c, s = math.cos(math.radians(deg)), math.sin(math.radians(deg))

    def rot(p):
        x, y = p[0] - about[0], p[1] - about[1]
        return (about[0] + c * x - s * y, about[1] + s * x + c * y)

    return FaceSketch(rot(sketch.glint_a), rot(sketch.glint_b), rot(sketch.nose), size=sketch.size)


def shifted(sketch: FaceSketch, du: float, dv: float) -> FaceSketch:
    move = lambda p: (p[0] + du, p[1] + dv)  # noqa: E731
    return FaceSketch(move(sketch.glint_a), move(sketch.glint_b), move(sketch.nose), size=sketch.size)


def check_result(res, sketch: FaceSketch, tol: float) -> None:
    assert dist(res.glint_a, sketch.glint_a) <= tol
    assert dist(res.glint_b, sketch.glint_b) <= tol
    assert dist(res.pupil_a, sketch.glint_a) <= tol
    assert dist(res.pupil_b, sketch.glint_b) <= tol
    assert dist(res.nose_c, sketch.nose) <= tol


class TestPgm:
    def test_round_trip(self, tmp_path, rng):
        img = GrayImage(rng.integers(0, 256, size=(7, 11), dtype=np.uint8))
        write_pgm(tmp_path / "x.pgm", img)
        back = read_pgm(tmp_path / "x.pgm")
        np.testing.assert_array_equal(back.pixels, img.pixels)
        assert (back.width, back.height) == (11, 7)

    def test_header_comments(self):
        data = b"P5\n# made by hand\n3 2\n# max\n255\n" + bytes(range(6))
        np.testing.assert_array_equal(decode_pgm(data).pixels, [[0, 1, 2], [3, 4, 5]])

    def test_small_maxval_rescaled(self):
        img = decode_pgm(b"P5 2 1 15\n" + bytes([0, 15]))
        np.testing.assert_array_equal(img.pixels, [[0, 255]])

    @pytest.mark.parametrize(
        "data",
        [b"P2\n1 1\n255\n0", b"P5\n2 2\n255\n\x00", b"P5\n1 1\n65535\n\x00\x00", b"P5\n1", b"P5\nx 1\n255\n\x00"],
    )
    def test_rejects_bad_files(self, data):
        with pytest.raises(InvalidInputError):
            decode_pgm(data)

    def test_encode_header(self):
        assert encode_pgm(GrayImage(np.zeros((2, 3), np.uint8))).startswith(b"P5\n3 2\n255\n")


class TestGrayImage:
    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            GrayImage(np.zeros((0, 4), np.uint8))

    def test_from_buffer_length(self):
        with pytest.raises(InvalidInputError):
            GrayImage.from_buffer(3, 3, b"\x00" * 8)

    def test_read_only(self):
        img = GrayImage(np.zeros((2, 2), np.uint8))
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 1


class TestParams:
    def test_defaults(self):
        p = DetectionParams()
        assert (p.glint_threshold, p.pupil_threshold, p.pupil_search_radius) == (250, 60, 25.0)
        assert (p.glint_min_area, p.glint_max_area, p.pair_min_dist, p.pair_max_dist) == (2, 50, 60.0, 400.0)
        assert (p.pair_max_angle_deg, p.nose_region_scale) == (25.0, 1.0)

    def test_json(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"glint_threshold": 240, "pupil_search_radius": 30}))
        p = load_params(path)
        assert p.glint_threshold == 240 and p.pupil_search_radius == 30.0

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            DetectionParams.from_dict({"glint_thresh": 1})

    def test_bad_range(self):
        with pytest.raises(ConfigurationError):
            DetectionParams(pair_min_dist=500.0)


class TestGlints:
    def dots(self, extra=None):
        canvas = np.zeros((480, 640))
        paint_square(canvas, (400, 300), 3, 255)
        paint_square(canvas, (520, 305), 3, 255)
        if extra:
            extra(canvas)
        return GrayImage(canvas.astype(np.uint8))

    def test_two_dots(self):
        pairs = detect_glints(self.dots())
        assert len(pairs) == 1
        a, b = pairs[0]
        assert dist(a, (400, 300)) <= 0.5 and dist(b, (520, 305)) <= 0.5

    def test_large_light_rejected(self):
        def lamp(c):
            c[20:80, 30:130] = 255

        assert len(detect_glints(self.dots(lamp))) == 1

    def test_blank(self):
        assert detect_glints(GrayImage(np.zeros((100, 100), np.uint8))) == []

    def test_steep_pair_rejected(self):
        canvas = np.zeros((480, 640))
        paint_square(canvas, (200, 100), 3, 255)
        paint_square(canvas, (260, 200), 3, 255)
        assert detect_glints(GrayImage(canvas.astype(np.uint8))) == []

    def test_distance_range(self):
        canvas = np.zeros((480, 640))
        paint_square(canvas, (100, 100), 3, 255)
        paint_square(canvas, (130, 100), 3, 255)
        assert detect_glints(GrayImage(canvas.astype(np.uint8))) == []

    def test_top_most_first(self):
        canvas = np.zeros((480, 640))
        for u, v in [(100, 400), (220, 400), (300, 100), (420, 100)]:
            paint_square(canvas, (u, v), 3, 255)
        pairs = detect_glints(GrayImage(canvas.astype(np.uint8)))
        assert pairs[0][0].v == pytest.approx(100)
        assert all(pairs[i][0].v <= pairs[i + 1][0].v + 1e-9 for i in range(len(pairs) - 1))

    def test_left_glint_first(self):
        (a, b), = detect_glints(self.dots())
        assert a.u < b.u

    def test_weighted_centroid(self):
        px = np.zeros((5, 5), np.uint8)
        px[2, 1], px[2, 2] = 255, 253
        (blob,) = find_bright_blobs(GrayImage(px), 250)
        assert blob.centroid.u == pytest.approx((1 * 255 + 2 * 253) / 508)
        assert blob.area == 2 and blob.bbox == (1, 2, 2, 2)


class TestPupil:
    def window(self, centre, value=20):
        canvas = np.full((120, 120), 200.0)
        paint_ellipse(canvas, centre, (8, 8), value)
        paint_square(canvas, (60, 60), 3, 255)
        return GrayImage(np.round(canvas).astype(np.uint8))

    def test_disk_near_glint(self):
        p = detect_pupil_near(self.window((61.4, 58.8)), ImagePoint(60, 60))
        assert dist(p, (61.4, 58.8)) <= 0.5

    def test_uniform_bright(self):
        img = GrayImage(np.full((120, 120), 200, np.uint8))
        assert detect_pupil_near(img, ImagePoint(60, 60)) is None

    def test_disk_too_far(self):
        assert detect_pupil_near(self.window((100, 60)), ImagePoint(60, 60)) is None

    def test_glint_outside_image(self):
        with pytest.raises(InvalidInputError):
            detect_pupil_near(self.window((60, 60)), ImagePoint(-5, 60))


class TestNose:
    def test_nostril_midpoint(self):
        res = detect_nose(render_face(BASE), (ImagePoint(*BASE.glint_a), ImagePoint(*BASE.glint_b)))
        assert dist(res, BASE.nose) <= 0.5

    def test_single_nostril(self):
        sketch = FaceSketch(BASE.glint_a, BASE.glint_b, BASE.nose)
        img = render_face(sketch)
        px = img.pixels.copy()
        right = sketch.nostrils()[1]
        px[int(right[1]) - 8 : int(right[1]) + 9, int(right[0]) - 9 : int(right[0]) + 10] = 150
        with pytest.raises(NoseNotFoundError):
            detect_nose(GrayImage(px), (ImagePoint(*BASE.glint_a), ImagePoint(*BASE.glint_b)))

    def test_rotated(self):
        sketch = rotated(BASE, 15.0)
        res = detect_nose(render_face(sketch), (ImagePoint(*sketch.glint_a), ImagePoint(*sketch.glint_b)))
        assert dist(res, sketch.nose) <= 1.0

    def test_region_outside_image(self):
        img = GrayImage(np.full((60, 640), 150, np.uint8))
        with pytest.raises(NoseNotFoundError):
            detect_nose(img, (ImagePoint(100, 50), ImagePoint(300, 50)))


class TestDetectAll:
    def test_fixture(self):
        check_result(detect_all(render_face(BASE)), BASE, 0.5)

    def test_rotated_fixture(self):
        for deg in (15.0, -15.0):
            sketch = rotated(BASE, deg)
            check_result(detect_all(render_face(sketch)), sketch, 1.0)

    def test_noisy_fixture(self):
        for seed in range(5):
            img = render_face(BASE, noise_sigma=5.0, rng=np.random.default_rng(seed))
            check_result(detect_all(img), BASE, 1.0)

    def test_translation_equivariance(self):
        ref = detect_all(render_face(BASE)).to_dict()
        for du, dv in [(37, -21), (-50, 44), (3, 0)]:
            got = detect_all(render_face(shifted(BASE, du, dv))).to_dict()
            for key in ("glint_a", "glint_b", "nose_c", "pupil_a", "pupil_b"):
                assert abs(got[key][0] - ref[key][0] - du) <= 0.25
                assert abs(got[key][1] - ref[key][1] - dv) <= 0.25

    def test_subpixel_positions(self):
        sketch = FaceSketch((250.3, 190.6), (371.8, 198.2), (311.4, 281.7))
        check_result(detect_all(render_face(sketch)), sketch, 0.5)

    def test_deterministic(self):
        img = render_face(BASE, noise_sigma=5.0)
        assert detect_all(img) == detect_all(img)

    def test_pair_without_pupils_dropped(self):
        sketch = FaceSketch(BASE.glint_a, BASE.glint_b, BASE.nose, size=(640, 480))
        img = render_face(sketch)
        px = img.pixels.astype(float)
        # a bright pair higher up with no dark pupils around it
        paint_square(px, (250, 60), 3, 255)
        paint_square(px, (390, 62), 3, 255)
        res = detect_all(GrayImage(px.astype(np.uint8)))
        assert dist(res.glint_a, BASE.glint_a) <= 0.5

    def test_blank(self):
        with pytest.raises(DetectionFailedError) as info:
            detect_all(GrayImage(np.zeros((50, 50), np.uint8)))
        assert info.value.stage == "glints"

    def test_no_pupils(self):
        canvas = np.full((480, 640), 150.0)
        paint_square(canvas, (200, 200), 3, 255)
        paint_square(canvas, (320, 200), 3, 255)
        with pytest.raises(DetectionFailedError) as info:
            detect_all(GrayImage(canvas.astype(np.uint8)))
        assert info.value.stage == "pupils"

    def test_no_nose(self):
        sketch = FaceSketch(BASE.glint_a, BASE.glint_b, BASE.nose, nostril_value=150.0)
        with pytest.raises(DetectionFailedError) as info:
            detect_all(render_face(sketch))
        assert info.value.stage == "nose"

    def test_confidence_range(self):
        res = detect_all(render_face(BASE))
        assert all(0.0 <= v <= 1.0 for v in res.confidence.values())
