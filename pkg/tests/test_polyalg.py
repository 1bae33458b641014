from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gazegeom.errors import CurvesCoincideError, DegenerateConicError, InvalidInputError, NoRootsError
from gazegeom.polyalg import (
    BivariateQuadratic,
    UniPoly,
    companion_matrix,
    companion_roots,
    intersect_conics,
    sylvester_matrix_y,
    sylvester_resultant_y,
)
from oracles import brute_force_intersections

Q = BivariateQuadratic


def through(point, rng):
    """Random conic passing exactly through ``point``."""
    c = rng.uniform(-1, 1, 6)
    x, y = point
    c[5] = -(c[0] * x * x + c[1] * x * y + c[2] * y * y + c[3] * x + c[4] * y)
    return Q(tuple(c))


def product_formula(f: Q, g: Q, x0: float) -> float:
    """Res_y(f, g)(x0) from the leading coefficients and the y-roots."""
    fa = f.at_x(x0)
    ga = g.at_x(x0)
    rf = np.roots([fa[2], fa[1], fa[0]])
    rg = np.roots([ga[2], ga[1], ga[0]])
    prod = np.prod([a - b for a, b in itertools.product(rf, rg)])
    return float(np.real(fa[2] ** 2 * ga[2] ** 2 * prod))


class TestUniPoly:
    def test_trims_negligible_leading_terms(self):
        p = UniPoly(np.array([1.0, 2.0, 1e-15]))
        assert p.degree == 1

    def test_keeps_small_but_relevant_terms(self):
        assert UniPoly(np.array([1.0, 0.0, 1e-10])).degree == 2

    def test_evaluation(self):
        p = UniPoly(np.array([1.0, -3.0, 2.0]))
        assert p(2.0) == pytest.approx(3.0)
        np.testing.assert_allclose(p(np.array([0.0, 1.0])), [1.0, 0.0])

    def test_zero(self):
        assert UniPoly(np.zeros(3)).is_zero


class TestBivariateQuadratic:
    def test_matrix_round_trip(self, rng):
        f = Q(tuple(rng.uniform(-1, 1, 6)))
        g = Q.from_matrix(f.matrix())
        np.testing.assert_allclose(g.coeffs, f.coeffs)

    def test_matrix_form_evaluates(self, rng):
        f = Q(tuple(rng.uniform(-1, 1, 6)))
        v = np.array([0.3, -1.7, 1.0])
        assert v @ f.matrix() @ v == pytest.approx(f(0.3, -1.7))

    def test_rejects_all_zero(self):
        with pytest.raises(InvalidInputError):
            Q((0, 0, 0, 0, 0, 0))

    def test_degree_in_y(self):
        assert Q((1, 0, 0, 0, 0, -1)).degree_in_y() == 0
        assert Q((0, 1, 0, 0, 0, 0)).degree_in_y() == 1
        assert Q((0, 0, 1, 0, 0, 0)).degree_in_y() == 2


class TestResultant:
    def test_parabola_and_line(self):
        r = sylvester_resultant_y(Q((0, 0, 1, -1, 0, 0)), Q((0, 0, 0, -1, 1, 0)))
        np.testing.assert_allclose(r.coeffs, [0.0, -1.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(np.sort(companion_roots(r).real()), [0.0, 1.0], atol=1e-12)

    def test_identical_curves_give_zero(self):
        f = Q((1, 0.2, -0.5, 0.3, 0.7, -1))
        assert sylvester_resultant_y(f, f).is_zero

    def test_concentric_circles_have_no_real_root(self):
        r = sylvester_resultant_y(Q((1, 0, 1, 0, 0, -1)), Q((1, 0, 1, 0, 0, -4)))
        assert r.degree <= 4
        if r.degree > 0:
            assert companion_roots(r).real().size == 0

    def test_matrix_is_four_by_four(self):
        S = sylvester_matrix_y(Q((1, 0, 1, 0, 0, -1)), Q((1, 1, 1, 1, 1, 1)))
        assert len(S) == 4 and all(len(row) == 4 for row in S)

    def test_constant_in_y_rejected(self):
        with pytest.raises(DegenerateConicError):
            sylvester_resultant_y(Q((1, 0, 0, 0, 0, -1)), Q((0, 0, 1, 1, 0, 0)))

    def test_degree_at_most_four(self, rng):
        for _ in range(50):
            r = sylvester_resultant_y(Q(tuple(rng.uniform(-1, 1, 6))), Q(tuple(rng.uniform(-1, 1, 6))))
            assert r.degree <= 4

    def test_matches_root_product_formula(self, rng):
        for _ in range(100):
            f, g = Q(tuple(rng.uniform(-1, 1, 6))), Q(tuple(rng.uniform(-1, 1, 6)))
            r = sylvester_resultant_y(f, g)
            x0 = rng.uniform(-3, 3)
            assert r(x0) == pytest.approx(product_formula(f, g, x0), rel=1e-9, abs=1e-12)

    def test_vanishes_at_planted_common_point(self, rng):
        for _ in range(100):
            P = rng.uniform(-3, 3, 2)
            f, g = through(P, rng), through(P, rng)
            r = sylvester_resultant_y(f, g)
            assert abs(r(P[0])) <= 1e-10 * max(1.0, np.max(np.abs(r.coeffs))) * max(1.0, abs(P[0])) ** 4

    def test_nonzero_without_common_root(self):
        # x = 0: f has y = +-1, g has y = +-2
        r = sylvester_resultant_y(Q((1, 0, 1, 0, 0, -1)), Q((0.5, 0, 1, 0, 0, -4)))
        assert abs(r(0.0)) > 1.0


class TestCompanionRoots:
    def test_symmetric(self):
        np.testing.assert_allclose(np.sort(companion_roots(UniPoly(np.array([-1.0, 0, 1]))).real()), [-1, 1])

    def test_complex_pair(self):
        roots = companion_roots(UniPoly(np.array([1.0, 0, 1]))).roots
        np.testing.assert_allclose(sorted(roots, key=lambda z: z.imag), [-1j, 1j], atol=1e-15)

    def test_quartic(self):
        c = np.polynomial.polynomial.polyfromroots([2, 3, -5, 0.5])
        np.testing.assert_allclose(companion_roots(UniPoly(c)).real(), [-5, 0.5, 2, 3], atol=1e-9)

    def test_companion_structure(self):
        C = companion_matrix(UniPoly(np.array([6.0, -5.0, 1.0])))
        np.testing.assert_allclose(C, [[0, 1], [-6, 5]])

    def test_count_equals_degree(self, rng):
        for deg in range(1, 5):
            assert len(companion_roots(UniPoly(rng.uniform(-1, 1, deg + 1) + np.r_[np.zeros(deg), 2.0]))) == deg

    def test_residual_bound(self, rng):
        for _ in range(200):
            c = rng.uniform(-1, 1, 5)
            p = UniPoly(c)
            rs = companion_roots(p)
            bound = 1e-8 * np.max(np.abs(p.coeffs)) * np.maximum(1.0, np.abs(rs.roots)) ** p.degree
            assert np.all(rs.residuals <= bound)

    def test_zero_polynomial(self):
        with pytest.raises(InvalidInputError):
            companion_roots(UniPoly(np.zeros(2)))

    def test_constant(self):
        with pytest.raises(NoRootsError):
            companion_roots(UniPoly(np.array([3.0])))


class TestIntersectConics:
    def test_two_circles(self):
        pts = intersect_conics(Q((1, 0, 1, 0, 0, -1)), Q((1, 0, 1, -2, 0, 0)))
        np.testing.assert_allclose(pts, [(0.5, -np.sqrt(3) / 2), (0.5, np.sqrt(3) / 2)], atol=1e-12)

    def test_concentric(self):
        assert intersect_conics(Q((1, 0, 1, 0, 0, -1)), Q((1, 0, 1, 0, 0, -4))) == []

    def test_coincident(self):
        f = Q((1, 0.5, 2, -1, 0.25, -3))
        with pytest.raises(CurvesCoincideError):
            intersect_conics(f, Q(tuple(2.5 * c for c in f.coeffs)))

    def test_tangent_circles(self):
        pts = intersect_conics(Q((1, 0, 1, 0, 0, -1)), Q((1, 0, 1, -4, 0, 3)))
        assert len(pts) == 1
        np.testing.assert_allclose(pts[0], (1.0, 0.0), atol=1e-6)

    def test_four_points(self):
        # ellipse x^2/4 + y^2 = 1 against x^2 + y^2/4 = 1
        pts = intersect_conics(Q((0.25, 0, 1, 0, 0, -1)), Q((1, 0, 0.25, 0, 0, -1)))
        s = 2 / np.sqrt(5)
        np.testing.assert_allclose(pts, [(-s, -s), (-s, s), (s, -s), (s, s)], atol=1e-12)

    def test_shared_x_coordinate(self):
        # both points have x = 0.5; one resultant root yields two points
        pts = intersect_conics(Q((1, 0, 1, 0, 0, -1)), Q((1, 0, 1, -1, 0, -0.5)))
        assert len(pts) == 2

    def test_recovers_planted_points(self, rng):
        for _ in range(300):
            P = rng.uniform(-3, 3, 2)
            pts = intersect_conics(through(P, rng), through(P, rng))
            assert len(pts) <= 4
            assert min(np.hypot(x - P[0], y - P[1]) for x, y in pts) <= 1e-6

    def test_residuals_small(self, rng):
        for _ in range(300):
            f, g = Q(tuple(rng.uniform(-1, 1, 6))), Q(tuple(rng.uniform(-1, 1, 6)))
            fn, gn = f.normalized(), g.normalized()
            for x, y in intersect_conics(f, g):
                s = max(1.0, x * x, y * y)
                assert abs(fn(x, y)) / s <= 1e-6 and abs(gn(x, y)) / s <= 1e-6

    def test_matches_brute_force(self, rng):
        inner = 9.0
        for _ in range(200):
            fc, gc = rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 6)
            got = [p for p in intersect_conics(Q(tuple(fc)), Q(tuple(gc))) if max(map(abs, p)) <= inner]
            ref = [p for p in brute_force_intersections(fc, gc) if max(map(abs, p)) <= inner]
            assert len(got) == len(ref)
            for p in ref:
                assert min(np.hypot(p[0] - q[0], p[1] - q[1]) for q in got) <= 1e-5

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=12, max_size=12).filter(lambda c: any(c[:6]) and any(c[6:])))
    def test_at_most_four_points(self, c):
        try:
            pts = intersect_conics(Q(tuple(c[:6])), Q(tuple(c[6:])))
        except (CurvesCoincideError, DegenerateConicError):
            return
        assert len(pts) <= 4
