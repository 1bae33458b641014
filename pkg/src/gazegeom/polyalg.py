"""Resultants, companion-matrix root finding and conic intersection.

A :class:`BivariateQuadratic` is read as a polynomial in ``y`` whose
coefficients are polynomials in ``x``. Eliminating ``y`` with the Sylvester
determinant leaves a univariate polynomial of degree at most four whose real
roots are the ``x`` coordinates of the intersection points.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    CurvesCoincideError,
    DegenerateConicError,
    InvalidInputError,
    NoRootsError,
)

log = logging.getLogger(__name__)

TRIM_RTOL = 1e-13
REAL_ROOT_TOL = 1e-7
# a double root split by rounding shows up as a conjugate pair with an
# imaginary part near sqrt(eps); such pairs are retried as tangencies
NEAR_REAL_TOL = 1e-4
TANGENT_RESIDUAL = 1e-10
ZERO_RESULTANT_RTOL = 1e-12


def _trim(coeffs: np.ndarray, rtol: float = TRIM_RTOL) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float).ravel()
    if coeffs.size == 0:
        return np.zeros(1)
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(coeffs) > rtol * scale)[0]
    return coeffs[: keep[-1] + 1].copy()


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial with real coefficients, ascending order.

    Negligible leading coefficients (relative to the largest one) are trimmed
    on construction, so ``degree`` is the numerically meaningful degree.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", _trim(self.coeffs))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    def __call__(self, x):
        out = np.zeros_like(np.asarray(x), dtype=np.result_type(x, float))
        for c in self.coeffs[::-1]:
            out = out * x + c
        return out

    def derivative(self) -> "UniPoly":
        return UniPoly(npoly.polyder(self.coeffs))


@dataclass(frozen=True)
class RootSet:
    """Complex roots with their absolute residuals ``|p(root)|``."""

    roots: np.ndarray
    residuals: np.ndarray

    def __len__(self) -> int:
        return len(self.roots)

    def real(self, tol: float = REAL_ROOT_TOL) -> np.ndarray:
        """Real parts of the roots whose imaginary part is negligible, sorted."""
        r = self.roots
        mask = np.abs(r.imag) <= tol * (1.0 + np.abs(r.real))
        return np.sort(r.real[mask])

    def near_real(self, lo: float = REAL_ROOT_TOL, hi: float = NEAR_REAL_TOL) -> np.ndarray:
        """Real parts of conjugate pairs with a small but non-negligible imaginary part."""
        r = self.roots
        scale = 1.0 + np.abs(r.real)
        mask = (np.abs(r.imag) > lo * scale) & (np.abs(r.imag) <= hi * scale) & (r.imag > 0)
        return np.sort(r.real[mask])


_MONOMIALS = ("x^2", "xy", "y^2", "x", "y", "1")


@dataclass(frozen=True)
class BivariateQuadratic:
    """``xx*x^2 + xy*x*y + yy*y^2 + x*x + y*y + c``."""

    coeffs: Tuple[float, float, float, float, float, float]

    def __post_init__(self) -> None:
        c = tuple(float(v) for v in self.coeffs)
        if len(c) != 6 or not np.all(np.isfinite(c)):
            raise InvalidInputError(f"need six finite coefficients, got {self.coeffs!r}")
        if not any(c):
            raise InvalidInputError("all coefficients are zero")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_matrix(cls, Q: np.ndarray) -> "BivariateQuadratic":
        """Build from the symmetric 3x3 matrix of ``[x, y, 1] Q [x, y, 1]^T``."""
        Q = np.asarray(Q, dtype=float)
        return cls(
            (Q[0, 0], 2 * Q[0, 1], Q[1, 1], 2 * Q[0, 2], 2 * Q[1, 2], Q[2, 2])
        )

    def matrix(self) -> np.ndarray:
        a, b, c, d, e, f = self.coeffs
        return np.array([[a, b / 2, d / 2], [b / 2, c, e / 2], [d / 2, e / 2, f]])

    @property
    def scale(self) -> float:
        return max(abs(v) for v in self.coeffs)

    def normalized(self) -> "BivariateQuadratic":
        s = self.scale
        return BivariateQuadratic(tuple(v / s for v in self.coeffs))

    def __call__(self, x, y):
        a, b, c, d, e, f = self.coeffs
        return a * x * x + b * x * y + c * y * y + d * x + e * y + f

    def gradient(self, x, y) -> np.ndarray:
        a, b, c, d, e, _ = self.coeffs
        return np.array([2 * a * x + b * y + d, b * x + 2 * c * y + e])

    def in_y(self) -> List[np.ndarray]:
        """Coefficients of y^0, y^1, y^2 as ascending polynomials in x."""
        a, b, c, d, e, f = self.coeffs
        return [np.array([f, d, a]), np.array([e, b]), np.array([c])]

    def at_x(self, x: float) -> Tuple[float, float, float]:
        """Coefficients (c0, c1, c2) of the quadratic ``y -> self(x, y)``."""
        a, b, c, d, e, f = self.coeffs
        return (a * x * x + d * x + f, b * x + e, c)

    def degree_in_y(self) -> int:
        a0, a1, a2 = (_trim(p, 0.0) for p in self.in_y())
        if np.any(a2):
            return 2
        if np.any(a1):
            return 1
        return 0

    def swapped(self) -> "BivariateQuadratic":
        a, b, c, d, e, f = self.coeffs
        return BivariateQuadratic((c, b, a, e, d, f))

    def __repr__(self) -> str:
        terms = " + ".join(f"{v:g}*{m}" for v, m in zip(self.coeffs, _MONOMIALS) if v)
        return f"BivariateQuadratic({terms})"


def _poly_det(M: List[List[np.ndarray]]) -> np.ndarray:
    """Determinant of a square matrix of polynomials by cofactor expansion."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = np.zeros(1)
    for j in range(n):
        entry = M[0][j]
        if not np.any(entry):
            continue
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        term = npoly.polymul(entry, _poly_det(minor))
        total = npoly.polyadd(total, term) if j % 2 == 0 else npoly.polysub(total, term)
    return total


def sylvester_matrix_y(f: BivariateQuadratic, g: BivariateQuadratic) -> List[List[np.ndarray]]:
    """Sylvester matrix of f and g viewed as polynomials in y.

    Entries are ascending coefficient arrays of polynomials in x. Rows of f
    come first, each holding the y-coefficients in descending degree.
    """
    n, p = f.degree_in_y(), g.degree_in_y()
    if n == 0 or p == 0:
        raise DegenerateConicError(
            f"conic is constant in y (degrees in y: f={n}, g={p})"
        )
    fc = f.in_y()[: n + 1][::-1]
    gc = g.in_y()[: p + 1][::-1]
    size = n + p
    zero = np.zeros(1)
    rows = []
    for i in range(p):
        rows.append([zero] * i + fc + [zero] * (size - n - 1 - i))
    for i in range(n):
        rows.append([zero] * i + gc + [zero] * (size - p - 1 - i))
    return rows


def sylvester_resultant_y(f: BivariateQuadratic, g: BivariateQuadratic) -> UniPoly:
    """Resultant of f and g with respect to y, a polynomial in x of degree <= 4.

    Returns the zero polynomial when the determinant vanishes to working
    precision, which happens when the curves share a component.
    """
    S = sylvester_matrix_y(f, g)
    r = _poly_det(S)
    n, p = f.degree_in_y(), g.degree_in_y()
    # the determinant is homogeneous of degree p in f and n in g
    scale = f.scale**p * g.scale**n
    if np.max(np.abs(r)) <= ZERO_RESULTANT_RTOL * scale:
        return UniPoly(np.zeros(1))
    return UniPoly(r)


def companion_matrix(p: UniPoly) -> np.ndarray:
    c = p.coeffs
    n = p.degree
    C = np.zeros((n, n))
    C[np.arange(n - 1), np.arange(1, n)] = 1.0
    C[-1, :] = -c[:n] / c[n]
    return C


def companion_roots(p: UniPoly, polish: int = 3) -> RootSet:
    """Roots of ``p`` as the eigenvalues of its companion matrix.

    A few guarded Newton steps tighten each eigenvalue; a step is kept only
    when it lowers the residual.
    """
    if p.is_zero:
        raise InvalidInputError("the zero polynomial has no finite root set")
    if p.degree == 0:
        raise NoRootsError("a nonzero constant polynomial has no roots")
    roots = np.linalg.eigvals(companion_matrix(p)).astype(complex)
    dp = p.derivative()
    res = np.abs(p(roots))
    for _ in range(polish):
        d = dp(roots)
        ok = d != 0
        step = np.zeros_like(roots)
        step[ok] = p(roots[ok]) / d[ok]
        trial = roots - step
        trial_res = np.abs(p(trial))
        better = trial_res < res
        roots = np.where(better, trial, roots)
        res = np.where(better, trial_res, res)
    return RootSet(roots=roots, residuals=res)


def _quadratic_real_roots(c0: float, c1: float, c2: float, scale: float) -> List[float]:
    """Real roots of c2*y^2 + c1*y + c0, tolerant of tiny c2 and of tangency."""
    tiny = 1e-12 * scale
    if abs(c2) <= tiny:
        if abs(c1) <= tiny:
            return []
        return [-c0 / c1]
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0.0:
        if disc >= -1e-10 * (c1 * c1 + abs(4.0 * c2 * c0)):
            return [-c1 / (2.0 * c2)]
        return []
    sq = np.sqrt(disc)
    q = -0.5 * (c1 + np.copysign(sq, c1))
    if q == 0.0:
        return [0.0]
    return [q / c2, c0 / q]


def scaled_residual(q: BivariateQuadratic, x: float, y: float) -> float:
    """|q(x, y)| for a max-abs-normalised q, relative to the point's magnitude."""
    return abs(q(x, y)) / max(1.0, x * x, y * y)


def _newton_polish(
    f: BivariateQuadratic, g: BivariateQuadratic, x: float, y: float, iters: int = 12
) -> Tuple[float, float]:
    best = (x, y)
    best_res = max(abs(f(x, y)), abs(g(x, y)))
    for _ in range(iters):
        J = np.vstack([f.gradient(x, y), g.gradient(x, y)])
        rhs = np.array([f(x, y), g(x, y)])
        det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
        if abs(det) <= 1e-14 * max(1.0, np.max(np.abs(J))) ** 2:
            break
        dx, dy = np.linalg.solve(J, rhs)
        x, y = x - dx, y - dy
        res = max(abs(f(x, y)), abs(g(x, y)))
        if res < best_res:
            best, best_res = (x, y), res
        if abs(dx) + abs(dy) <= 1e-16 * max(1.0, abs(x) + abs(y)):
            break
    return best


def intersect_conics(
    f: BivariateQuadratic,
    g: BivariateQuadratic,
    tol: float = 1e-6,
    max_coord: float = 1e10,
) -> List[Tuple[float, float]]:
    """Real intersection points of two conics, sorted by (x, y).

    Follows the elimination route: resultant in y, real roots x_i of the
    resultant, then for each x_i the y values where both conics vanish.
    Candidates are refined with Newton's method on the 2x2 system and
    duplicates (e.g. two points sharing an x coordinate) are merged.

    Raises:
        DegenerateConicError: a conic does not depend on y.
        CurvesCoincideError: the resultant vanishes identically.
    """
    fn, gn = f.normalized(), g.normalized()
    r = sylvester_resultant_y(fn, gn)
    if r.is_zero:
        raise CurvesCoincideError("the conics share a common component")
    if r.degree == 0:
        return []
    roots = companion_roots(r)
    xs = [(x, tol) for x in roots.real()]
    xs += [(x, min(tol, TANGENT_RESIDUAL)) for x in roots.near_real()]

    found: List[Tuple[float, float, float]] = []
    for x, final_tol in xs:
        ys: List[float] = []
        for q in (fn, gn):
            c0, c1, c2 = q.at_x(x)
            ys.extend(_quadratic_real_roots(c0, c1, c2, max(1.0, x * x)))
        for y in ys:
            if max(scaled_residual(fn, x, y), scaled_residual(gn, x, y)) > tol:
                continue
            px, py = _newton_polish(fn, gn, x, y)
            if max(abs(px), abs(py)) > max_coord:
                continue
            # a step this large means Newton left for another root, which
            # is recovered from its own resultant root
            if abs(px - x) + abs(py - y) > 1e-4 * max(1.0, abs(x), abs(y)):
                continue
            res = max(scaled_residual(fn, px, py), scaled_residual(gn, px, py))
            if res > final_tol:
                continue
            found.append((px, py, res))

    found.sort(key=lambda t: t[2])
    points: List[Tuple[float, float]] = []
    for px, py, _ in found:
        radius = 1e-7 * max(1.0, abs(px), abs(py))
        if any(abs(px - qx) <= radius and abs(py - qy) <= radius for qx, qy in points):
            continue
        points.append((float(px), float(py)))
    if len(points) > 4:
        log.warning("intersect_conics: %d points after merging, keeping 4", len(points))
        points = points[:4]
    return sorted(points)
