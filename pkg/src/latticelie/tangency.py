"""Tangency of neighbouring quadrics, the four induced Moebius maps and the
projective-minimality residuals.

A point X = Q(s, t) and a point X1 = Q1(s1, t1) on the neighbouring quadric
have a joining line tangent to both quadrics iff s1 = S1(s), t1 = T1(t)
(and similarly S2, T2 in the second direction).  S1 and T2 degenerate to
constant maps exactly when the corresponding discriminant vanishes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import net as netmod
from . import projcore as pc
from .net import AsymptoticNet, FrameCoefficients, frame_coefficients
from .quadric import D_TOL, GenParam, LatticeQuadric, discriminant, discriminant_is_zero

NA = float("nan")


@dataclass
class MoebiusMap:
    kind: str
    m: np.ndarray
    degenerate: bool = False
    constant: np.ndarray | None = None

    def apply(self, h) -> np.ndarray:
        if self.degenerate:
            return self.constant
        return self.m @ np.asarray(h)

    def __call__(self, h):
        return self.apply(h)


def _arr(rows, exact):
    return np.array(rows, dtype=object if exact else float)


def mobius_map(kind: str, fc: FrameCoefficients, p, tol: float = D_TOL) -> MoebiusMap:
    """2x2 matrix of S1, T1, S2 or T2 acting on homogeneous parameters."""
    exact = isinstance(p, Fraction) or isinstance(fc.a0 if fc.has_l else fc.g0, Fraction)
    if kind == "S1":
        u = fc.a1 * fc.b2 * p - fc.a0 * fc.b3
        m = _arr([[u, 2 * fc.a0 * fc.b1 * p], [2 * p * fc.a3 * fc.b2, -p * u]], exact)
        if discriminant_is_zero(fc, p, 1, tol):
            const = _arr([u, 2 * fc.a3 * fc.b2 * p], exact)
            return MoebiusMap(kind, m, True, const)
        return MoebiusMap(kind, m)
    if kind == "T1":
        m = _arr([[-(fc.a1 * fc.b2 * p + fc.a0 * fc.b3), 2 * fc.a0 * fc.b2 * p],
                  [2 * fc.b2 * p, 0 * p]], exact)
        return MoebiusMap(kind, m)
    if kind == "S2":
        m = _arr([[-(fc.g2 * fc.d1 * p + fc.g0 * fc.d3), 2 * fc.g0 * fc.d1 * p],
                  [2 * fc.d1 * p, 0 * p]], exact)
        return MoebiusMap(kind, m)
    if kind == "T2":
        u = fc.g2 * fc.d1 * p - fc.g0 * fc.d3
        m = _arr([[u, 2 * fc.g0 * fc.d2 * p], [2 * p * fc.g3 * fc.d1, -p * u]], exact)
        if discriminant_is_zero(fc, p, 2, tol):
            const = _arr([u, 2 * fc.g3 * fc.d1 * p], exact)
            return MoebiusMap(kind, m, True, const)
        return MoebiusMap(kind, m)
    raise ValueError(f"unknown map kind {kind!r}")


def step_params(g: GenParam, fc: FrameCoefficients, p, direction: int) -> GenParam:
    """Parameters of the tangent partner point on the neighbouring quadric."""
    if direction == 1:
        return GenParam(mobius_map("S1", fc, p).apply(g.s), mobius_map("T1", fc, p).apply(g.t))
    return GenParam(mobius_map("S2", fc, p).apply(g.s), mobius_map("T2", fc, p).apply(g.t))


def tangency_residual(Q: LatticeQuadric, Qn: LatticeQuadric, g: GenParam, gn: GenParam,
                      direction: int | None = None, tol: float = 1e-12):
    """Normalized brackets [X, Xn, dsQ, dtQ] and [X, Xn, dsQn, dtQn]."""
    X = Q.eval(g)
    Xn = Qn.eval(gn)
    if pc.proj_equal(X, Xn, tol):
        raise pc.DegeneracyError("the two points coincide")
    da = pc.normalized_bracket(X, Xn, Q.ds(g), Q.dt(g))
    db = pc.normalized_bracket(X, Xn, Qn.ds(gn), Qn.dt(gn))
    return da, db


# ---------------------------------------------------------------- closure

def antisym_residual(A, B) -> float:
    """|| a b^T - b a^T || / (||a|| ||b||) for the flattened matrices."""
    a = np.asarray(A, dtype=float).ravel()
    b = np.asarray(B, dtype=float).ravel()
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0
    a, b = a / na, b / nb
    return float(np.linalg.norm(np.outer(a, b) - np.outer(b, a)))


def _exact_proportional(A, B) -> bool:
    a = list(np.asarray(A).ravel())
    b = list(np.asarray(B).ravel())
    return all(a[i] * b[j] - a[j] * b[i] == 0 for i in range(len(a)) for j in range(i + 1, len(a)))


@dataclass
class BlockMaps:
    """The eight maps around the block with lower corner at a vertex."""
    S1: MoebiusMap
    T1: MoebiusMap
    S2: MoebiusMap
    T2: MoebiusMap
    S2_1: MoebiusMap   # S2 at the n1-neighbour
    T2_1: MoebiusMap
    S1_2: MoebiusMap   # S1 at the n2-neighbour
    T1_2: MoebiusMap


def block_maps(net: AsymptoticNet, p, vertex, coeffs=None, tol: float = D_TOL) -> BlockMaps:
    i, j = vertex
    get = (lambda ij, part: frame_coefficients(net, ij, part)) if coeffs is None else coeffs
    fc_l = get((i, j), "L")
    fc_m = get((i, j), "M")
    fc1 = get((i + 1, j), "M")
    fc2 = get((i, j + 1), "L")
    p0, p1, p2 = p[i, j], p[i + 1, j], p[i, j + 1]
    return BlockMaps(
        mobius_map("S1", fc_l, p0, tol), mobius_map("T1", fc_l, p0, tol),
        mobius_map("S2", fc_m, p0, tol), mobius_map("T2", fc_m, p0, tol),
        mobius_map("S2", fc1, p1, tol), mobius_map("T2", fc1, p1, tol),
        mobius_map("S1", fc2, p2, tol), mobius_map("T1", fc2, p2, tol))


def closure_residual(first: MoebiusMap, second_after: MoebiusMap,
                     other_first: MoebiusMap, other_after: MoebiusMap) -> float:
    """Residual of second_after o first = other_after o other_first.

    Regular compositions are compared as matrices up to scale.  When both
    compositions are constant maps only their values are compared; a constant
    against a regular map is never closing.
    """
    A = second_after.m @ first.m
    B = other_after.m @ other_first.m
    deg_a = first.degenerate or second_after.degenerate
    deg_b = other_first.degenerate or other_after.degenerate
    exact = pc.is_exact(A, B)
    if deg_a and deg_b:
        ca = second_after.apply(first.constant) if first.degenerate else second_after.constant
        cb = other_after.apply(other_first.constant) if other_first.degenerate else other_after.constant
        if exact:
            return 0.0 if ca[0] * cb[1] - ca[1] * cb[0] == 0 else 1.0
        return pc.proj_distance(ca, cb)
    if exact:
        return 0.0 if _exact_proportional(A, B) else 1.0
    return antisym_residual(A, B)


def map_closure_residuals(bm: BlockMaps) -> tuple[float, float]:
    """(S residual, T residual) around one block."""
    rs = closure_residual(bm.S1, bm.S2_1, bm.S2, bm.S1_2)
    rt = closure_residual(bm.T1, bm.T2_1, bm.T2, bm.T1_2)
    return rs, rt


def pm_residual_maps(net: AsymptoticNet, p, vertex, family: str = "S",
                     coeffs=None, tol: float = D_TOL) -> float:
    """Map-closure residual around the block at a vertex.

    ``family`` is "S", "T" or "both" (maximum).  Returns nan when all four
    discriminant maps S1, S1_2, T2, T2_1 are degenerate.
    """
    bm = block_maps(net, p, vertex, coeffs, tol)
    if bm.S1.degenerate and bm.S1_2.degenerate and bm.T2.degenerate and bm.T2_1.degenerate:
        return NA
    rs, rt = map_closure_residuals(bm)
    if family == "S":
        return rs
    if family == "T":
        return rt
    if family == "both":
        return max(rs, rt)
    raise ValueError("family must be 'S', 'T' or 'both'")


# ---------------------------------------------------------------- gauge form

def t_values(fc: FrameCoefficients, p, direction: int):
    """T1 = D1 / (a0 b2 p)^2 or T2 = D2 / (g0 d1 p)^2."""
    D = discriminant(fc, p, direction)
    if direction == 1:
        return D / (fc.a0 * fc.b2 * p) ** 2
    return D / (fc.g0 * fc.d1 * p) ** 2


def _t_scale(fc, p, direction):
    # magnitude of the terms entering T, used for relative residuals
    if direction == 1:
        s = (abs(fc.a0 * fc.b3) + abs(fc.a1 * fc.b2 * p)) ** 2 \
            + 4 * abs(fc.a0 * fc.a3 * fc.b1 * fc.b2 * p)
        return float(s / abs(fc.a0 * fc.b2 * p) ** 2)
    s = (abs(fc.g0 * fc.d3) + abs(fc.g2 * fc.d1 * p)) ** 2 \
        + 4 * abs(fc.g0 * fc.g3 * fc.d1 * fc.d2 * p)
    return float(s / abs(fc.g0 * fc.d1 * p) ** 2)


@dataclass
class ReducedBlock:
    """Gauge-free form of the closing conditions at one vertex.

    E1 = (1 - rho) T1_2 / p^2 - T1 equals (x1/x)^2 Delta_2 T1 in the
    normalised gauge, E2 likewise with (x2/x)^2 Delta_1 T2, and
    keydisc = x^2 / (x1 x2) [(b1/b2) E2 - (d2/d1) E1].
    """
    E1: object
    E2: object
    rel1: float
    rel2: float
    keydisc: object
    keydisc_rel: float


def reduced_block(net: AsymptoticNet, p, vertex, coeffs=None) -> ReducedBlock:
    i, j = vertex
    get = (lambda ij, part: frame_coefficients(net, ij, part)) if coeffs is None else coeffs
    fc_l = get((i, j), "L")
    fc_m = get((i, j), "M")
    fc1 = get((i + 1, j), "M")
    fc2 = get((i, j + 1), "L")
    pv, p1, p2 = p[i, j], p[i + 1, j], p[i, j + 1]
    rh = fc_l.b1 * fc_m.d2 / (fc_l.b2 * fc_m.d1)
    T1, T1_2 = t_values(fc_l, pv, 1), t_values(fc2, p2, 1)
    T2, T2_1 = t_values(fc_m, pv, 2), t_values(fc1, p1, 2)
    E1 = (1 - rh) * T1_2 / pv ** 2 - T1
    E2 = (1 - rh) * T2_1 / pv ** 2 - T2
    s1 = abs(float(1 - rh)) * _t_scale(fc2, p2, 1) / float(pv) ** 2 + _t_scale(fc_l, pv, 1)
    s2 = abs(float(1 - rh)) * _t_scale(fc1, p1, 2) / float(pv) ** 2 + _t_scale(fc_m, pv, 2)
    kd = (fc_l.b1 / fc_l.b2) * E2 - (fc_m.d2 / fc_m.d1) * E1
    ks = abs(float(fc_l.b1 / fc_l.b2)) * s2 + abs(float(fc_m.d2 / fc_m.d1)) * s1
    return ReducedBlock(E1, E2, abs(float(E1)) / s1, abs(float(E2)) / s2, kd, abs(float(kd)) / ks)


@dataclass
class PmReport:
    deltaT1: np.ndarray              # Delta_2 T1 per vertex (nan outside the domain)
    deltaT2: np.ndarray              # Delta_1 T2 per vertex
    rel1: np.ndarray                 # scale-free versions
    rel2: np.ndarray
    map_closure: np.ndarray
    keydisc: np.ndarray
    gauge_used: np.ndarray | None
    method: str                      # "normalized gauge" or "reduced"
    pm: bool
    tol: float
    notes: list = field(default_factory=list)


def _domain(net):
    return [(i, j) for i in range(net.rows - 2) for j in range(net.cols - 2)]


def pm_residual_gauge(net: AsymptoticNet, p, tol: float = 1e-8,
                      allow_reduced: bool = True) -> PmReport:
    """Closing conditions Delta_2 T1 = 0 and Delta_1 T2 = 0.

    In the normalised gauge when it is real.  When it is not (1 - rho < 0 at
    some vertex) and ``allow_reduced`` is set, the gauge-free reduced form
    is reported instead; it has the same zero set.
    """
    R, C = net.shape
    shape = (R - 2, C - 2)
    dT1 = np.full(shape, np.nan, dtype=object if net.exact else float)
    dT2 = dT1.copy()
    rel1 = np.full(shape, np.nan)
    rel2 = np.full(shape, np.nan)
    mc = np.full(shape, np.nan)
    kd = np.full(shape, np.nan)
    notes = []
    gauge = None
    method = "normalized gauge"
    try:
        gr = netmod.normalize_gauge(net.to_float() if net.exact else net, p)
        gauge = gr.x
    except netmod.GaugeError as exc:
        if not allow_reduced:
            raise
        method = "reduced"
        notes.append(str(exc))
    if gauge is not None and not net.exact:
        gnet = netmod.apply_gauge(net, gauge)
        gp = netmod.gauge_quadric_field(p, gauge)
        for (i, j) in _domain(net):
            fc_l = frame_coefficients(gnet, (i, j), "L")
            fc_m = frame_coefficients(gnet, (i, j), "M")
            fc1 = frame_coefficients(gnet, (i + 1, j), "M")
            fc2 = frame_coefficients(gnet, (i, j + 1), "L")
            T1, T1_2 = t_values(fc_l, gp[i, j], 1), t_values(fc2, gp[i, j + 1], 1)
            T2, T2_1 = t_values(fc_m, gp[i, j], 2), t_values(fc1, gp[i + 1, j], 2)
            dT1[i, j] = T1_2 - T1
            dT2[i, j] = T2_1 - T2
            s1 = _t_scale(fc2, gp[i, j + 1], 1) + _t_scale(fc_l, gp[i, j], 1)
            s2 = _t_scale(fc1, gp[i + 1, j], 2) + _t_scale(fc_m, gp[i, j], 2)
            rel1[i, j] = abs(dT1[i, j]) / s1
            rel2[i, j] = abs(dT2[i, j]) / s2
            k = (fc_l.b1 / fc_l.b2) * dT2[i, j] - (fc_m.d2 / fc_m.d1) * dT1[i, j]
            ks = abs(fc_l.b1 / fc_l.b2) * s2 + abs(fc_m.d2 / fc_m.d1) * s1
            kd[i, j] = abs(k) / ks
    else:
        if net.exact:
            method = "reduced"
        for (i, j) in _domain(net):
            rb = reduced_block(net, p, (i, j))
            dT1[i, j] = rb.E1
            dT2[i, j] = rb.E2
            rel1[i, j] = rb.rel1
            rel2[i, j] = rb.rel2
            kd[i, j] = rb.keydisc_rel if not net.exact else (0.0 if rb.keydisc == 0 else rb.keydisc_rel)
    for (i, j) in _domain(net):
        mc[i, j] = pm_residual_maps(net, p, (i, j), "both")
    if net.exact:
        pm = all(v == 0 for v in dT1.ravel()) and all(v == 0 for v in dT2.ravel())
    else:
        pm = bool(np.all(rel1 <= tol) and np.all(rel2 <= tol))
    return PmReport(dT1, dT2, rel1, rel2, mc, kd, gauge, method, pm, tol, notes)


def keydisc_residual(net: AsymptoticNet, p, vertex, gauge: str = "auto"):
    """(b1/b2) Delta_1 T2 - (d2/d1) Delta_2 T1 at a vertex, scale-free.

    ``gauge="normalized"`` evaluates literally in the normalised gauge,
    transforming the coefficients in closed form; where that gauge is
    imaginary the complex gauge is used (T and p enter only through ratios
    and squares, so the identity is unaffected).  ``"reduced"`` uses the
    gauge-free form, which is exact in rational mode.  ``"auto"`` is
    normalised for float nets and reduced for exact ones.
    """
    if gauge == "auto":
        gauge = "reduced" if net.exact else "normalized"
    if gauge == "normalized":
        return _keydisc_normalized(net, p, vertex)
    if gauge != "reduced":
        raise ValueError(f"unknown gauge mode {gauge!r}")
    rb = reduced_block(net, p, vertex)
    if net.exact:
        return rb.keydisc
    return rb.keydisc_rel


def _keydisc_normalized(net, p, vertex) -> float:
    gr = netmod.normalize_gauge(net.to_float() if net.exact else net, p, allow_complex=True)
    x = gr.x
    gp = np.asarray(p, dtype=float) * x[1:, :-1] * x[:-1, 1:] / (x[:-1, :-1] * x[1:, 1:])
    i, j = vertex

    def fc(ij, part):
        return netmod.gauge_coefficients(frame_coefficients(net, ij, part), x, *ij)

    fc_l, fc_m = fc((i, j), "L"), fc((i, j), "M")
    fc1, fc2 = fc((i + 1, j), "M"), fc((i, j + 1), "L")
    d1 = t_values(fc2, gp[i, j + 1], 1) - t_values(fc_l, gp[i, j], 1)
    d2 = t_values(fc1, gp[i + 1, j], 2) - t_values(fc_m, gp[i, j], 2)
    s1 = _t_scale(fc2, gp[i, j + 1], 1) + _t_scale(fc_l, gp[i, j], 1)
    s2 = _t_scale(fc1, gp[i + 1, j], 2) + _t_scale(fc_m, gp[i, j], 2)
    k = (fc_l.b1 / fc_l.b2) * d2 - (fc_m.d2 / fc_m.d1) * d1
    ks = abs(fc_l.b1 / fc_l.b2) * s2 + abs(fc_m.d2 / fc_m.d1) * s1
    return float(abs(k) / ks)
