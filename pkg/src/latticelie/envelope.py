"""Discrete envelopes of a field of lattice Lie quadrics.

An envelope assigns to every face (i, j) a point X = Q(s, t) of its quadric
such that neighbouring points are joined by lines tangent to both quadrics.
Starting from one seed the tangency maps fix every other vertex; around
each block the two paths must agree.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import projcore as pc
from .net import AsymptoticNet, frame_coefficients
from .quadric import GenParam, LatticeQuadric, face_quadric, form_residual, shared_generators
from .tangency import MoebiusMap, mobius_map

GENERIC_DISTANCE = 1e-6
SHARED_EDGE_TOL = 1e-7


class NotAnEnvelopeError(RuntimeError):
    def __init__(self, msg, vertex=None, residual=None):
        super().__init__(msg)
        self.vertex = vertex
        self.residual = residual


@dataclass
class Envelope:
    s: np.ndarray                 # (F1, F2, 2) homogeneous s labels
    t: np.ndarray                 # (F1, F2, 2)
    points: np.ndarray            # (F1, F2, 4)
    shared1: np.ndarray           # (F1-1, F2) edge (i,j)-(i+1,j) is a shared generator
    shared2: np.ndarray           # (F1, F2-1)
    closure: np.ndarray           # (F1-1, F2-1) projective mismatch per block
    seed_face: tuple = (0, 0)
    seed: GenParam | None = None
    notes: list = field(default_factory=list)

    @property
    def shape(self):
        return self.points.shape[:2]

    def param(self, face) -> GenParam:
        return GenParam(self.s[face], self.t[face])


class _Coeffs:
    def __init__(self, net):
        self.net = net
        self.cache = {}

    def __call__(self, ij, part):
        key = (ij, part)
        if key not in self.cache:
            self.cache[key] = frame_coefficients(self.net, ij, part)
        return self.cache[key]


def _invert(m: MoebiusMap) -> np.ndarray:
    if m.degenerate:
        raise NotAnEnvelopeError(f"cannot step backwards across the constant map {m.kind}")
    a, b = m.m[0]
    c, d = m.m[1]
    return np.array([[d, -b], [-c, a]])


def _forward(g: GenParam, fc, p, direction) -> GenParam:
    if direction == 1:
        S, T = mobius_map("S1", fc, p), mobius_map("T1", fc, p)
    else:
        S, T = mobius_map("S2", fc, p), mobius_map("T2", fc, p)
    return GenParam(_unit(S.apply(g.s)), _unit(T.apply(g.t)))


def _backward(g: GenParam, fc, p, direction) -> GenParam:
    if direction == 1:
        S, T = mobius_map("S1", fc, p), mobius_map("T1", fc, p)
    else:
        S, T = mobius_map("S2", fc, p), mobius_map("T2", fc, p)
    return GenParam(_unit(_invert(S) @ g.s), _unit(_invert(T) @ g.t))


def _unit(h):
    h = np.asarray(h, dtype=float)
    n = np.linalg.norm(h)
    if n == 0:
        raise NotAnEnvelopeError("parameter collapsed to (0 : 0)")
    return h / n


def root_labels(net, p, face, coeffs=None):
    """(s roots shared with the n1 neighbours, t roots shared with the n2 neighbours)."""
    coeffs = coeffs or _Coeffs(net)
    i, j = face
    F1, F2 = p.shape
    s_roots, t_roots = [], []
    if i + 1 < F1:
        s_roots += shared_generators(p[i, j], coeffs((i, j), "L"), 1).roots
    if i - 1 >= 0:
        sg = shared_generators(p[i - 1, j], coeffs((i - 1, j), "L"), 1)
        s_roots += sg.partner_labels(p[i - 1, j])
    if j + 1 < F2:
        t_roots += shared_generators(p[i, j], coeffs((i, j), "M"), 2).roots
    if j - 1 >= 0:
        sg = shared_generators(p[i, j - 1], coeffs((i, j - 1), "M"), 2)
        t_roots += sg.partner_labels(p[i, j - 1])
    return s_roots, t_roots


def is_generic_seed(net, p, face, g: GenParam, coeffs=None) -> bool:
    s_roots, t_roots = root_labels(net, p, face, coeffs)
    return all(pc.proj_distance(g.s, h) > GENERIC_DISTANCE for h in s_roots) and \
        all(pc.proj_distance(g.t, h) > GENERIC_DISTANCE for h in t_roots)


def random_seed(rng, net=None, p=None, face=(0, 0)) -> GenParam:
    """Random seed parameters, resampled until generic when a net is given."""
    while True:
        g = GenParam(_unit(rng.normal(size=2)), _unit(rng.normal(size=2)))
        if net is None or is_generic_seed(net, p, face, g):
            return g


def _edge_is_shared(X, Y, lines) -> bool:
    if pc.proj_distance(X, Y) < 1e-12:
        return False
    e = pc.line_through(X, Y, tol=0.0)
    return any(pc.line_distance(e, l) <= SHARED_EDGE_TOL for l in lines)


def _shared_lines(net, p, face, direction, coeffs):
    i, j = face
    Q = face_quadric(net, p, face)
    part = "L" if direction == 1 else "M"
    sg = shared_generators(p[i, j], coeffs(face, part), direction)
    if direction == 1:
        return [Q.s_generator(h) for h in sg.roots]
    return [Q.t_generator(h) for h in sg.roots]


def propagate_envelope(net: AsymptoticNet, p, seed_face=(0, 0), g0: GenParam | None = None,
                       tol: float = 1e-8, rng=None, require_generic: bool = False,
                       raise_on_failure: bool = True) -> Envelope:
    """Envelope from one seed vertex by the tangency maps.

    The seed row is filled along n1, then every column along n2; each block
    is then checked by comparing the n1 step with the stored vertex.
    """
    F1, F2 = p.shape
    coeffs = _Coeffs(net)
    if g0 is None:
        g0 = random_seed(rng or np.random.default_rng(0), net, p, seed_face)
    elif require_generic and not is_generic_seed(net, p, seed_face, g0, coeffs):
        g0 = random_seed(rng or np.random.default_rng(0), net, p, seed_face)
    s = np.zeros((F1, F2, 2))
    t = np.zeros((F1, F2, 2))
    i0, j0 = seed_face
    s[i0, j0], t[i0, j0] = _unit(g0.s), _unit(g0.t)
    notes = []
    if not is_generic_seed(net, p, seed_face, GenParam(s[i0, j0], t[i0, j0]), coeffs):
        notes.append("seed lies on a shared generator")

    def fwd(face, direction):
        i, j = face
        fc = coeffs((i, j), "L" if direction == 1 else "M")
        return _forward(GenParam(s[face], t[face]), fc, p[face], direction)

    def bwd(face, direction):
        # step from face back to its predecessor in the direction
        i, j = face
        prev = (i - 1, j) if direction == 1 else (i, j - 1)
        fc = coeffs(prev, "L" if direction == 1 else "M")
        return _backward(GenParam(s[face], t[face]), fc, p[prev], direction)

    for i in range(i0 + 1, F1):
        g = fwd((i - 1, j0), 1)
        s[i, j0], t[i, j0] = g.s, g.t
    for i in range(i0 - 1, -1, -1):
        g = bwd((i + 1, j0), 1)
        s[i, j0], t[i, j0] = g.s, g.t
    for i in range(F1):
        for j in range(j0 + 1, F2):
            g = fwd((i, j - 1), 2)
            s[i, j], t[i, j] = g.s, g.t
        for j in range(j0 - 1, -1, -1):
            g = bwd((i, j + 1), 2)
            s[i, j], t[i, j] = g.s, g.t
    pts = np.zeros((F1, F2, 4))
    for i in range(F1):
        for j in range(F2):
            X = face_quadric(net, p, (i, j)).eval(GenParam(s[i, j], t[i, j]))
            pts[i, j] = pc.normalize(np.asarray(X, dtype=float))
    closure = np.zeros((max(F1 - 1, 0), max(F2 - 1, 0)))
    for j in range(F2):
        if j == j0:
            continue
        for i in range(F1 - 1):
            g = fwd((i, j), 1)
            Y = face_quadric(net, p, (i + 1, j)).eval(g)
            r = pc.proj_distance(Y, pts[i + 1, j])
            blk = (i, j - 1) if j > j0 else (i, j)
            closure[blk] = r
            if r > tol and raise_on_failure:
                raise NotAnEnvelopeError(
                    f"envelope does not close at block {blk} (mismatch {r:.3e})", blk, r)
    shared1 = np.zeros((max(F1 - 1, 0), F2), dtype=bool)
    shared2 = np.zeros((F1, max(F2 - 1, 0)), dtype=bool)
    for i in range(F1 - 1):
        for j in range(F2):
            shared1[i, j] = _edge_is_shared(pts[i, j], pts[i + 1, j], _shared_lines(net, p, (i, j), 1, coeffs))
    for i in range(F1):
        for j in range(F2 - 1):
            shared2[i, j] = _edge_is_shared(pts[i, j], pts[i, j + 1], _shared_lines(net, p, (i, j), 2, coeffs))
    return Envelope(s, t, pts, shared1, shared2, closure, seed_face,
                    GenParam(s[i0, j0], t[i0, j0]), notes)


# ---------------------------------------------------------------- shared-generator envelopes

def local_shared_envelope(net: AsymptoticNet, p, face=(0, 0), choice=(0, 0, 0, 0)) -> Envelope:
    """Envelope on the 2x2 faces at ``face`` whose edges are all shared generators.

    ``choice`` picks one real root for each of the four shared pairs
    (Q,Q1), (Q,Q2), (Q1,Q12), (Q2,Q12).  Exists whenever those roots are real.
    """
    coeffs = _Coeffs(net)
    i, j = face
    f00, f10, f01, f11 = (i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)

    def roots(f, direction):
        sg = shared_generators(p[f], coeffs(f, "L" if direction == 1 else "M"), direction)
        if not sg.roots:
            raise NotAnEnvelopeError(f"no real shared generator at face {f} in direction {direction}")
        return sg

    a = roots(f00, 1)   # (Q, Q1)  s-labels on Q, partners on Q1
    b = roots(f00, 2)   # (Q, Q2)  t-labels on Q, partners on Q2
    c = roots(f10, 2)   # (Q1, Q12) t-labels on Q1, partners on Q12
    d = roots(f01, 1)   # (Q2, Q12) s-labels on Q2, partners on Q12
    ka, kb, kc, kd = [min(k, len(x.roots) - 1) for k, x in zip(choice, (a, b, c, d))]
    sA, sA1 = a.roots[ka], a.partner_labels(p[f00])[ka]
    tB, tB2 = b.roots[kb], b.partner_labels(p[f00])[kb]
    tC, tC12 = c.roots[kc], c.partner_labels(p[f10])[kc]
    sD, sD12 = d.roots[kd], d.partner_labels(p[f01])[kd]
    s = np.zeros((2, 2, 2))
    t = np.zeros((2, 2, 2))
    s[0, 0], t[0, 0] = _unit(sA), _unit(tB)
    s[1, 0], t[1, 0] = _unit(sA1), _unit(tC)
    s[0, 1], t[0, 1] = _unit(sD), _unit(tB2)
    s[1, 1], t[1, 1] = _unit(sD12), _unit(tC12)
    sub_p = np.array([[p[f00], p[f01]], [p[f10], p[f11]]])
    sub = AsymptoticNet(net.points[i:i + 3, j:j + 3])
    pts = np.zeros((2, 2, 4))
    for a_ in range(2):
        for b_ in range(2):
            pts[a_, b_] = pc.normalize(np.asarray(
                face_quadric(sub, sub_p, (a_, b_)).eval(GenParam(s[a_, b_], t[a_, b_])), dtype=float))
    c2 = _Coeffs(sub)
    shared1 = np.array([[_edge_is_shared(pts[0, k], pts[1, k], _shared_lines(sub, sub_p, (0, k), 1, c2))
                         for k in range(2)]])
    shared2 = np.array([[_edge_is_shared(pts[k, 0], pts[k, 1], _shared_lines(sub, sub_p, (k, 0), 2, c2))]
                        for k in range(2)])
    env = Envelope(s, t, pts, shared1, shared2, np.zeros((1, 1)), (0, 0), None,
                   ["all edges are shared generators (local 2x2 faces)"])
    return env


def strip_shared_envelope(net: AsymptoticNet, p, row_lines: list, col_lines: list) -> Envelope:
    """Envelope X(i, j) = G_j meet H_i from strip-wide generators.

    ``row_lines[j]`` is a generator common to all quadrics of face row j (an
    s-line), ``col_lines[i]`` one common to face column i (a t-line).
    """
    F1, F2 = p.shape
    pts = np.zeros((F1, F2, 4))
    s = np.zeros((F1, F2, 2))
    t = np.zeros((F1, F2, 2))
    for i in range(F1):
        for j in range(F2):
            X = pc.lines_meet_point(row_lines[j], col_lines[i], tol=1e-9)
            pts[i, j] = pc.normalize(np.asarray(X, dtype=float))
            g = point_params(face_quadric(net, p, (i, j)), pts[i, j])
            s[i, j], t[i, j] = g.s, g.t
    shared1 = np.ones((F1 - 1, F2), dtype=bool)
    shared2 = np.ones((F1, F2 - 1), dtype=bool)
    return Envelope(s, t, pts, shared1, shared2, np.zeros((F1 - 1, F2 - 1)), (0, 0), None,
                    ["coordinate polygons are strip-wide shared generators"])


def point_params(Q: LatticeQuadric, X) -> GenParam:
    """Homogeneous (s, t) of a point on Q, from its corner-basis coordinates."""
    V = np.asarray(Q.corners, dtype=float)
    c = np.linalg.solve(V.T, np.asarray(X, dtype=float))
    cr, cr1, cr2, cr12 = c
    p = float(Q.p)
    # c = (s0 t0, s0 t1, s1 t0, p s1 t1)
    s = np.array([cr, cr2]) if abs(cr) + abs(cr2) > abs(cr1) + abs(cr12) else np.array([cr1, cr12 / p])
    t = np.array([cr, cr1]) if abs(cr) + abs(cr1) > abs(cr2) + abs(cr12) else np.array([cr2, cr12 / p])
    return GenParam(_unit(s), _unit(t))


# ---------------------------------------------------------------- diagnostics

@dataclass
class EnvelopeReport:
    max_closure: float
    max_star_tangency: float
    max_quadric_residual: float
    shared_fraction: tuple
    straight_fraction: tuple
    tol: float


def star_tangency(env: Envelope, net, p) -> np.ndarray:
    """Per-face max bracket [X, dsQ, dtQ, X_neighbour] (scale-free)."""
    F1, F2 = env.shape
    out = np.zeros((F1, F2))
    for i in range(F1):
        for j in range(F2):
            Q = face_quadric(net, p, (i, j))
            g = env.param((i, j))
            X, a, b = env.points[i, j], Q.ds(g), Q.dt(g)
            worst = 0.0
            for u, v in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                if 0 <= u < F1 and 0 <= v < F2:
                    worst = max(worst, pc.normalized_bracket(X, a, b, env.points[u, v]))
            out[i, j] = worst
    return out


def _polygon_straight(points, tol) -> bool:
    if len(points) < 3:
        return True
    a, b = points[0], points[-1]
    return all(pc.point_on_line_residual(x, a, b) <= tol for x in points[1:-1])


def envelope_diagnostics(env: Envelope, net, p, tol: float = 1e-8) -> EnvelopeReport:
    F1, F2 = env.shape
    tang = star_tangency(env, net, p)
    quad = 0.0
    for i in range(F1):
        for j in range(F2):
            A = face_quadric(net, p, (i, j)).matrix()
            quad = max(quad, form_residual(A, env.points[i, j]))
    f1 = float(env.shared1.mean()) if env.shared1.size else 0.0
    f2 = float(env.shared2.mean()) if env.shared2.size else 0.0
    rows = [_polygon_straight(env.points[:, j], tol) for j in range(F2)] if F1 >= 3 else []
    cols = [_polygon_straight(env.points[i, :], tol) for i in range(F1)] if F2 >= 3 else []
    st1 = float(np.mean(rows)) if rows else float("nan")
    st2 = float(np.mean(cols)) if cols else float("nan")
    mc = float(env.closure.max()) if env.closure.size else 0.0
    return EnvelopeReport(mc, float(tang.max()), quad, (f1, f2), (st1, st2), tol)


def map_generator(net, p, face, s_h, ts, direction=1):
    """Images on the neighbouring quadric of the points Q(s, t) for several t."""
    coeffs = _Coeffs(net)
    i, j = face
    fc = coeffs((i, j), "L" if direction == 1 else "M")
    nb = (i + 1, j) if direction == 1 else (i, j + 1)
    Qn = face_quadric(net, p, nb)
    out = []
    for t_h in ts:
        g = _forward(GenParam(np.asarray(s_h, float), np.asarray(t_h, float)), fc, p[i, j], direction)
        out.append(Qn.eval(g))
    return out
