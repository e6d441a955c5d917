"""Projective primitives in P^3: points, planes, Pluecker lines, brackets.

Points and planes are 4-vectors, lines are 6-vectors of Pluecker
coordinates ordered (01, 02, 03, 12, 13, 23).  Every function accepts
either float arrays or object arrays of ``fractions.Fraction``.  In the
exact case all tolerance tests collapse to comparisons with zero.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import combinations

import numpy as np

DEFAULT_TOL = 1e-10

_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


class DegeneracyError(ValueError):
    """Raised when a construction has no well-defined result."""


# ---------------------------------------------------------------- backend

def is_exact(*arrays) -> bool:
    for a in arrays:
        a = np.asarray(a)
        if a.dtype == object:
            return True
    return False


def to_exact(a) -> np.ndarray:
    """Object array of Fractions holding the exact value of every entry."""
    a = np.asarray(a)
    out = np.empty(a.shape, dtype=object)
    for idx, v in np.ndenumerate(a):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v)
    return out


def to_float(a) -> np.ndarray:
    return np.asarray(a, dtype=float)


def vec(*values) -> np.ndarray:
    """Build a vector, exact if any input is a Fraction or int-only exact array."""
    if any(isinstance(v, Fraction) for v in values):
        return to_exact(np.array(values, dtype=object))
    return np.array(values, dtype=float)


def norm(a) -> float:
    a = np.asarray(a)
    if a.dtype == object:
        return float(np.sqrt(float(sum(v * v for v in a.ravel()))))
    return float(np.linalg.norm(a))


def is_small(value, scale, tol: float = DEFAULT_TOL, exact: bool | None = None) -> bool:
    """``|value| <= tol*scale``; exact zero test for rational values."""
    if exact is None:
        exact = isinstance(value, Fraction)
    if exact:
        return value == 0
    return abs(float(value)) <= tol * float(scale)


def normalize(v) -> np.ndarray:
    """Unit Euclidean norm in float mode; left untouched in exact mode."""
    v = np.asarray(v)
    if v.dtype == object:
        return v
    n = np.linalg.norm(v)
    if n == 0:
        raise DegeneracyError("zero vector")
    return v / n


def det(m) -> object:
    m = np.asarray(m)
    if m.dtype != object:
        return float(np.linalg.det(m))
    a = [[Fraction(x) for x in row] for row in m]
    n = len(a)
    sign = 1
    for k in range(n):
        piv = next((r for r in range(k, n) if a[r][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for r in range(k + 1, n):
            f = a[r][k] / a[k][k]
            if f:
                for c in range(k, n):
                    a[r][c] -= f * a[k][c]
    out = Fraction(sign)
    for k in range(n):
        out *= a[k][k]
    return out


def solve(a, b) -> np.ndarray:
    """Solve ``a x = b`` for square ``a`` (exact Gauss elimination for Fractions)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.dtype != object and b.dtype != object:
        return np.linalg.solve(a, b)
    n = a.shape[0]
    m = [[Fraction(x) for x in a[r]] + [Fraction(b[r])] for r in range(n)]
    for k in range(n):
        piv = next((r for r in range(k, n) if m[r][k] != 0), None)
        if piv is None:
            raise np.linalg.LinAlgError("singular matrix")
        m[k], m[piv] = m[piv], m[k]
        inv = 1 / m[k][k]
        m[k] = [x * inv for x in m[k]]
        for r in range(n):
            if r != k and m[r][k] != 0:
                f = m[r][k]
                m[r] = [x - f * y for x, y in zip(m[r], m[k])]
    out = np.empty(n, dtype=object)
    for r in range(n):
        out[r] = m[r][n]
    return out


def inverse(a) -> np.ndarray:
    a = np.asarray(a)
    if a.dtype != object:
        return np.linalg.inv(a)
    n = a.shape[0]
    cols = []
    for k in range(n):
        e = np.array([Fraction(int(i == k)) for i in range(n)], dtype=object)
        cols.append(solve(a, e))
    return np.array(cols, dtype=object).T


# ---------------------------------------------------------------- points

def bracket(a, b, c, d):
    """Determinant of the 4x4 matrix with rows a, b, c, d."""
    return det(np.array([a, b, c, d], dtype=_common_dtype(a, b, c, d)))


def normalized_bracket(a, b, c, d) -> float:
    """Bracket divided by the product of the row norms (scale free, in [0, 1])."""
    scale = norm(a) * norm(b) * norm(c) * norm(d)
    if scale == 0:
        return 0.0
    return abs(float(bracket(a, b, c, d))) / scale


def _common_dtype(*arrays):
    return object if is_exact(*arrays) else float


def minors2(a, b) -> np.ndarray:
    """All 2x2 minors of the 2xn matrix (a; b)."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = len(a)
    return np.array([a[i] * b[j] - a[j] * b[i] for i, j in combinations(range(n), 2)],
                    dtype=_common_dtype(a, b))


def proj_equal(a, b, tol: float = DEFAULT_TOL) -> bool:
    """True iff a and b represent the same projective point."""
    m = minors2(a, b)
    if is_exact(a, b):
        return all(v == 0 for v in m)
    return float(np.max(np.abs(m))) <= tol * norm(a) * norm(b)


def proj_distance(a, b) -> float:
    """Scale-free distance: largest 2x2 minor over ||a|| ||b||."""
    m = np.asarray(minors2(a, b), dtype=float)
    s = norm(a) * norm(b)
    return float(np.max(np.abs(m)) / s) if s else 0.0


def plane_through(a, b, c, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Covector of the plane through three points (cofactor expansion)."""
    m = np.array([a, b, c], dtype=_common_dtype(a, b, c))
    cov = []
    for k in range(4):
        sub = np.delete(m, k, axis=1)
        cov.append((-1) ** k * det(sub))
    cov = np.array(cov, dtype=m.dtype)
    scale = norm(a) * norm(b) * norm(c)
    if all(is_small(v, scale, tol, exact=m.dtype == object) for v in cov):
        raise DegeneracyError("points are collinear or coincident")
    return cov


def incidence(plane, point) -> object:
    return sum(u * x for u, x in zip(plane, point))


def incidence_residual(plane, point) -> float:
    s = norm(plane) * norm(point)
    return abs(float(incidence(plane, point))) / s if s else 0.0


# ---------------------------------------------------------------- lines

def line_through(a, b, tol: float = DEFAULT_TOL) -> np.ndarray:
    l = minors2(a, b)
    scale = norm(a) * norm(b)
    if all(is_small(v, scale, tol, exact=l.dtype == object) for v in l):
        raise DegeneracyError("points coincide")
    return l


def _dual_to_primal(pi) -> np.ndarray:
    # plane-pair coordinates (ij) map to point-pair coordinates of the complement
    p01, p02, p03, p12, p13, p23 = pi
    return np.array([p23, -p13, p12, p03, -p02, p01], dtype=np.asarray(pi).dtype)


def meet(u, v, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Common line of two planes."""
    pi = minors2(u, v)
    scale = norm(u) * norm(v)
    if all(is_small(x, scale, tol, exact=pi.dtype == object) for x in pi):
        raise DegeneracyError("planes coincide")
    return _dual_to_primal(pi)


def pairing(l, m):
    """Reciprocal product of two lines; zero iff they meet."""
    return (l[0] * m[5] - l[1] * m[4] + l[2] * m[3]
            + l[3] * m[2] - l[4] * m[1] + l[5] * m[0])


def pairing_residual(l, m) -> float:
    s = norm(l) * norm(m)
    return abs(float(pairing(l, m))) / s if s else 0.0


def lines_intersect(l, m, tol: float = DEFAULT_TOL) -> bool:
    if is_exact(l, m):
        return pairing(l, m) == 0
    return pairing_residual(l, m) <= tol


def lines_coincide(l, m, tol: float = DEFAULT_TOL) -> bool:
    return proj_equal(l, m, tol)


def line_distance(l, m) -> float:
    """Scale-free measure of how far two lines are from coinciding."""
    return proj_distance(l, m)


def _line_matrix(l) -> np.ndarray:
    dt = np.asarray(l).dtype
    L = np.zeros((4, 4), dtype=dt)
    if dt == object:
        L[:] = Fraction(0)
    for (i, j), v in zip(_PAIRS, l):
        L[i, j] = v
        L[j, i] = -v
    return L


def line_plane_point(l, plane) -> np.ndarray:
    """Point where a line meets a plane (zero vector if the line lies in it)."""
    return _line_matrix(l) @ np.asarray(plane)


def line_points(l) -> tuple[np.ndarray, np.ndarray]:
    """Two distinct points spanning the line."""
    L = _line_matrix(l)
    cols = [L[:, k] for k in range(4)]
    order = sorted(range(4), key=lambda k: -norm(cols[k]))
    a = cols[order[0]]
    for k in order[1:]:
        b = cols[k]
        if not proj_equal(a, b, 1e-8) and norm(b) > 0:
            return a, b
    raise DegeneracyError("not a line")


def plane_through_line_and_point(l, x) -> np.ndarray:
    a, b = line_points(l)
    return plane_through(a, b, x)


def lines_meet_point(l, m, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Intersection point of two coplanar, distinct lines."""
    if lines_coincide(l, m, tol):
        raise DegeneracyError("lines coincide")
    dual = _line_matrix(_primal_to_dual(m))
    best = None
    for k in range(4):
        e = np.zeros(4, dtype=np.asarray(m).dtype)
        if e.dtype == object:
            e[:] = Fraction(0)
            e[k] = Fraction(1)
        else:
            e[k] = 1.0
        plane = dual @ e
        x = line_plane_point(l, plane)
        score = norm(x) / (norm(plane) * norm(l) or 1.0)
        if best is None or score > best[0]:
            best = (score, x)
    if best[0] == 0:
        raise DegeneracyError("no intersection point")
    return best[1]


def _primal_to_dual(l) -> np.ndarray:
    # the map is an involution up to sign on these coordinates
    return _dual_to_primal(l)


def line_contains(l, x, tol: float = DEFAULT_TOL) -> bool:
    """True iff the point lies on the line."""
    a, b = line_points(l)
    return point_on_line_residual(x, a, b) <= tol if not is_exact(l, x) else \
        all(v == 0 for v in _three_point_minors(x, a, b))


def _three_point_minors(x, a, b):
    m = np.array([a, b, x], dtype=_common_dtype(a, b, x))
    return [det(m[:, list(c)]) for c in combinations(range(4), 3)]


def point_on_line_residual(x, a, b) -> float:
    """Scale-free collinearity residual of three points (largest 3x3 minor)."""
    s = norm(a) * norm(b) * norm(x)
    if s == 0:
        return 0.0
    return max(abs(float(v)) for v in _three_point_minors(x, a, b)) / s


def collinear(a, b, c, tol: float = DEFAULT_TOL) -> bool:
    if is_exact(a, b, c):
        return all(v == 0 for v in _three_point_minors(a, b, c))
    return point_on_line_residual(a, b, c) <= tol


def smallest_singular_ratio(rows) -> float:
    """sigma_min / sigma_max of a stack of unit-normalized rows."""
    m = np.asarray(rows, dtype=float)
    n = np.linalg.norm(m, axis=1, keepdims=True)
    if not np.all(n > 0) or not np.all(np.isfinite(m)):
        return 0.0
    m = m / n
    sv = np.linalg.svd(m, compute_uv=False)
    return float(sv[-1] / sv[0])


def rank_deficiency_exact(rows) -> bool:
    """True iff the exact row stack (at least 4 rows) has rank < 4."""
    m = np.asarray(rows, dtype=object)
    return all(det(m[list(c)]) == 0 for c in combinations(range(len(m)), 4))
