"""Lattice Lie quadrics on the faces of an asymptotic net.

The quadric on face (i, j) with corners r, r1, r2, r12 is

    Q(s, t) = p s1 t1 r12 + s0 t1 r1 + s1 t0 r2 + s0 t0 r

for homogeneous parameters s = (s0 : s1), t = (t0 : t1); the affine
version is p r12 + s r1 + t r2 + s t r.  In the basis (r, r1, r2, r12)
its coordinates satisfy c_r c_r12 = p c_r1 c_r2.

Lines of fixed s are "s-generators" and contain the edges r2-r12 (s = 0)
and r-r1 (s = inf); lines of fixed t contain r1-r12 (t = 0) and r-r2.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import projcore as pc
from .net import AsymptoticNet, FrameCoefficients, frame_basis, frame_coefficients

D_TOL = 1e-9


class PropagationError(ValueError):
    def __init__(self, msg, face=None):
        super().__init__(msg)
        self.face = face


def hom(value) -> np.ndarray:
    """Homogeneous pair for an affine value; ``None`` or inf means (1 : 0)."""
    if value is None or (isinstance(value, float) and np.isinf(value)):
        return np.array([1.0, 0.0])
    if isinstance(value, Fraction):
        return np.array([value, Fraction(1)], dtype=object)
    return np.array([float(value), 1.0])


def affine(h):
    """Affine value of a homogeneous pair (inf for (1 : 0))."""
    if h[1] == 0:
        return float("inf")
    return h[0] / h[1]


@dataclass(frozen=True)
class GenParam:
    s: np.ndarray
    t: np.ndarray

    @classmethod
    def affine(cls, s, t) -> "GenParam":
        return cls(hom(s), hom(t))

    def __post_init__(self):
        for h in (self.s, self.t):
            if h[0] == 0 and h[1] == 0:
                raise ValueError("generator parameter (0 : 0)")


class LatticeQuadric:
    """Quadric through the edges of one quadrilateral, labelled by p."""

    def __init__(self, corners, p, face=None):
        corners = np.asarray(corners)
        if p == 0:
            raise ValueError("p must be nonzero")
        self.r, self.r1, self.r2, self.r12 = corners
        self.corners = corners
        self.p = p
        self.face = face

    @classmethod
    def on_face(cls, net: AsymptoticNet, face, p) -> "LatticeQuadric":
        i, j = face
        return cls(frame_basis(net, i, j), p, face)

    # -- parametrisation
    def eval(self, g: GenParam) -> np.ndarray:
        s0, s1 = g.s
        t0, t1 = g.t
        return self.p * s1 * t1 * self.r12 + s0 * t1 * self.r1 + s1 * t0 * self.r2 + s0 * t0 * self.r

    def ds(self, g: GenParam) -> np.ndarray:
        """Derivative along s at Q(g), homogeneous form, independent of Q(g)."""
        s0, s1 = g.s
        t0, t1 = g.t
        a = t1 * self.r1 + t0 * self.r          # dQ/ds0
        b = self.p * t1 * self.r12 + t0 * self.r2  # dQ/ds1
        return -s1 * a + s0 * b

    def dt(self, g: GenParam) -> np.ndarray:
        s0, s1 = g.s
        t0, t1 = g.t
        c = s1 * self.r2 + s0 * self.r            # dQ/dt0
        d = self.p * s1 * self.r12 + s0 * self.r1  # dQ/dt1
        return -t1 * c + t0 * d

    def tangent_plane(self, g: GenParam) -> np.ndarray:
        return pc.plane_through(self.eval(g), self.ds(g), self.dt(g))

    # -- generators
    def s_generator(self, s) -> np.ndarray:
        """Line of constant s."""
        s0, s1 = s
        return pc.line_through(s1 * self.p * self.r12 + s0 * self.r1, s1 * self.r2 + s0 * self.r)

    def t_generator(self, t) -> np.ndarray:
        t0, t1 = t
        return pc.line_through(t1 * self.r1 + t0 * self.r, self.p * t1 * self.r12 + t0 * self.r2)

    def s_generator_point(self, s, t) -> np.ndarray:
        return self.eval(GenParam(np.asarray(s), np.asarray(t)))

    # -- implicit form
    def basis_form(self) -> np.ndarray:
        """Symmetric form of the quadric in the corner basis (r, r1, r2, r12)."""
        exact = pc.is_exact(self.corners) or isinstance(self.p, Fraction)
        dt = object if exact else float
        z = Fraction(0) if exact else 0.0
        o = Fraction(1) if exact else 1.0
        B = np.full((4, 4), z, dtype=dt)
        B[0, 3] = B[3, 0] = o
        B[1, 2] = B[2, 1] = -self.p
        return B

    def matrix(self) -> np.ndarray:
        """Closed-form symmetric 4x4 matrix A with X^T A X = 0 on the quadric."""
        V = self.corners
        if pc.is_exact(V) or isinstance(self.p, Fraction):
            V = pc.to_exact(V)
        Vi = pc.inverse(V)
        return Vi @ self.basis_form() @ Vi.T

    def sample(self, n: int, rng=None) -> list[np.ndarray]:
        """Random points; rational parameters when the quadric is exact."""
        rng = np.random.default_rng(0) if rng is None else rng
        exact = pc.is_exact(self.corners) or isinstance(self.p, Fraction)
        out = []
        for _ in range(n):
            if exact:
                s = pc.to_exact(rng.integers(-9, 10, size=2))
                t = pc.to_exact(rng.integers(-9, 10, size=2))
                if not (any(s) and any(t)):
                    continue
            else:
                s = rng.normal(size=2)
                t = rng.normal(size=2)
            out.append(self.eval(GenParam(s, t)))
        return out


def quadric_eval(Q: LatticeQuadric, g: GenParam) -> np.ndarray:
    return Q.eval(g)


def tangent_plane(Q: LatticeQuadric, g: GenParam) -> np.ndarray:
    return Q.tangent_plane(g)


def form_residual(A, X) -> float:
    """Scale-free value of X^T A X."""
    X = np.asarray(X, dtype=float)
    A = np.asarray(A, dtype=float)
    return abs(float(X @ A @ X)) / (np.abs(A).max() * float(X @ X))


def implicit_quadric(Q: LatticeQuadric, method: str | None = None,
                     n_fit: int = 12, n_check: int = 20, tol: float = 1e-10) -> np.ndarray:
    """Symmetric 4x4 matrix of the quadric, unique up to scale.

    ``method="fit"`` (float default) takes the null vector of the 10-column
    design matrix built from sampled points; ``"closed"`` (exact default) uses
    the corner-basis form.  Both are checked on held-out samples.
    """
    exact = pc.is_exact(Q.corners) or isinstance(Q.p, Fraction)
    if method is None:
        method = "closed" if exact else "fit"
    if method == "closed":
        A = Q.matrix()
    elif method == "fit":
        rng = np.random.default_rng(12345)
        pts = [pc.normalize(np.asarray(x, dtype=float)) for x in Q.sample(n_fit, rng)]
        iu = np.triu_indices(4)
        rows = []
        for x in pts:
            outer = np.outer(x, x)
            outer = 2 * outer - np.diag(np.diag(outer))
            rows.append(outer[iu])
        sv_u, sv, vt = np.linalg.svd(np.array(rows))
        if sv[-2] < 1e-8 * sv[0]:
            raise pc.DegeneracyError("implicit fit is rank deficient")
        a = vt[-1]
        A = np.zeros((4, 4))
        A[iu] = a
        A = A + A.T - np.diag(np.diag(A))
    else:
        raise ValueError(f"unknown method {method!r}")
    check_rng = np.random.default_rng(54321)
    for x in Q.sample(n_check, check_rng):
        if exact and method == "closed":
            if x @ A @ x != 0:
                raise pc.DegeneracyError("implicit form fails on a sample")
        elif form_residual(A, x) > tol:
            raise pc.DegeneracyError("implicit form fails on a held-out sample")
    return A


# ---------------------------------------------------------------- C1 step

def c1_step(Q: LatticeQuadric | object, fc: FrameCoefficients, direction: int):
    """p of the neighbouring quadric in the given direction."""
    p = Q.p if isinstance(Q, LatticeQuadric) else Q
    if p == 0:
        raise ValueError("p must be nonzero")
    if direction == 1:
        return fc.a0 / (fc.b2 * p)
    if direction == 2:
        return fc.g0 / (fc.d1 * p)
    raise ValueError("direction must be 1 or 2")


def propagate_quadrics(net: AsymptoticNet, seed_face=(0, 0), p0=1.0,
                       tol: float = 1e-10, coeffs: dict | None = None) -> np.ndarray:
    """Fill the field of p values over all faces from one seed face."""
    if p0 == 0:
        raise ValueError("p0 must be nonzero")
    R, C = net.shape
    F1, F2 = R - 1, C - 1
    exact = net.exact or isinstance(p0, Fraction)
    p = np.full((F1, F2), None, dtype=object)
    cache = {} if coeffs is None else coeffs

    def coeff(i, j, part):
        key = (i, j, part)
        if key not in cache:
            cache[key] = frame_coefficients(net, (i, j), part)
        return cache[key]

    si, sj = seed_face
    p[si, sj] = p0 if exact else float(p0)
    queue = deque([(si, sj)])
    while queue:
        i, j = queue.popleft()
        pv = p[i, j]
        steps = []
        if i + 1 < F1:
            steps.append(((i + 1, j), coeff(i, j, "L"), 1))
        if i - 1 >= 0:
            steps.append(((i - 1, j), coeff(i - 1, j, "L"), 1))
        if j + 1 < F2:
            steps.append(((i, j + 1), coeff(i, j, "M"), 2))
        if j - 1 >= 0:
            steps.append(((i, j - 1), coeff(i, j - 1, "M"), 2))
        for nb, fc, d in steps:
            # the step is an involution: p p_next = a0 / b2 (or g0 / d1)
            q = c1_step(pv, fc, d)
            if p[nb] is None:
                p[nb] = q
                queue.append(nb)
            elif exact:
                if p[nb] != q:
                    raise PropagationError(f"inconsistent p at face {nb}", nb)
            elif abs(p[nb] - q) > tol * max(abs(p[nb]), abs(q)):
                raise PropagationError(
                    f"inconsistent p at face {nb}: {p[nb]!r} vs {q!r}", nb)
    return p if exact else p.astype(float)


def face_quadric(net: AsymptoticNet, p, face) -> LatticeQuadric:
    return LatticeQuadric.on_face(net, face, p[face])


# ---------------------------------------------------------------- shared generators

@dataclass
class SharedGenerators:
    direction: int
    D: object
    kind: str                 # "real", "double", "complex"
    roots: list               # homogeneous labels on Q
    multiplicity: list
    degree_drop: bool
    scale: float

    def partner_labels(self, p) -> list:
        """Labels of the same lines on the neighbouring quadric (s1 = s / p)."""
        return [np.array([h[0], p * h[1]], dtype=np.asarray(h).dtype) for h in self.roots]


def _quadratic_coeffs(fc: FrameCoefficients, p, direction: int):
    if direction == 1:
        a = fc.a3 * fc.b2
        b = fc.a0 * fc.b3 - fc.a1 * fc.b2 * p
        c = -fc.a0 * fc.b1 * p
        scale = (abs(fc.a0 * fc.b3) + abs(fc.a1 * fc.b2 * p)) ** 2
    elif direction == 2:
        a = fc.g3 * fc.d1
        b = fc.g0 * fc.d3 - fc.g2 * fc.d1 * p
        c = -fc.g0 * fc.d2 * p
        scale = (abs(fc.g0 * fc.d3) + abs(fc.g2 * fc.d1 * p)) ** 2
    else:
        raise ValueError("direction must be 1 or 2")
    return a, b, c, scale


def discriminant(fc: FrameCoefficients, p, direction: int):
    a, b, c, _ = _quadratic_coeffs(fc, p, direction)
    return b * b - 4 * a * c


def discriminant_is_zero(fc, p, direction, tol: float = D_TOL) -> bool:
    a, b, c, scale = _quadratic_coeffs(fc, p, direction)
    D = b * b - 4 * a * c
    if isinstance(D, Fraction):
        return D == 0
    return abs(D) <= tol * scale


def shared_generators(Q: LatticeQuadric | object, fc: FrameCoefficients, direction: int,
                      tol: float = D_TOL) -> SharedGenerators:
    """Labels on Q of the generators shared with the neighbour in a direction."""
    p = Q.p if isinstance(Q, LatticeQuadric) else Q
    a, b, c, scale = _quadratic_coeffs(fc, p, direction)
    D = b * b - 4 * a * c
    exact = isinstance(D, Fraction)
    mk = (lambda u, v: np.array([u, v], dtype=object)) if exact else \
        (lambda u, v: np.array([float(u), float(v)]))
    zero_a = (a == 0) if exact else abs(a) <= 1e-14 * (abs(b) + abs(c))
    if zero_a:
        roots = [mk(-c, b), mk(1, 0)]
        return SharedGenerators(direction, D, "real", roots, [1, 1], True, scale)
    is_zero = (D == 0) if exact else abs(D) <= tol * scale
    if is_zero:
        return SharedGenerators(direction, D, "double", [mk(-b, 2 * a)], [2], False, scale)
    if D < 0:
        return SharedGenerators(direction, D, "complex", [], [], False, scale)
    if exact:
        sq = _exact_sqrt(D)
        if sq is not None:
            roots = [mk(-b + sq, 2 * a), mk(-b - sq, 2 * a)]
            return SharedGenerators(direction, D, "real", roots, [1, 1], False, scale)
    Df = float(D)
    a, b, c = float(a), float(b), float(c)
    sq = np.sqrt(Df)
    q = -0.5 * (b + np.copysign(sq, b))
    roots = [np.array([q, a]), np.array([c, q])]
    return SharedGenerators(direction, D, "real", roots, [1, 1], False, scale)


def _exact_sqrt(x: Fraction):
    from math import isqrt
    n, d = x.numerator, x.denominator
    rn, rd = isqrt(n), isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


def shared_generator_lines(Q: LatticeQuadric, Qn: LatticeQuadric, sg: SharedGenerators):
    """Pairs (line on Q, line on the neighbour) for every real root."""
    out = []
    for h, hn in zip(sg.roots, sg.partner_labels(Q.p)):
        if sg.direction == 1:
            out.append((Q.s_generator(h), Qn.s_generator(hn)))
        else:
            out.append((Q.t_generator(h), Qn.t_generator(hn)))
    return out
