"""Classification of discrete PMQ surfaces.

Verdicts come from the discriminants D1, D2 of the shared-generator
equations, from generators common to whole strips of quadrics, and from
the line congruences joining an envelope to the corners of the net.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import projcore as pc
from .envelope import (Envelope, NotAnEnvelopeError, _Coeffs, envelope_diagnostics,
                       point_params, propagate_envelope, strip_shared_envelope)
from .net import AsymptoticNet, frame_coefficients
from .quadric import GenParam, _quadratic_coeffs, face_quadric, shared_generators
from .tangency import pm_residual_gauge

CLASS_TOL = 1e-8
CONGRUENCE_KINDS = {"L": (0, 0), "L1": (1, 0), "L2": (0, 1), "L12": (1, 1)}


class ClassificationError(RuntimeError):
    """Internal contradiction between independently computed verdicts."""


class InconsistencyError(RuntimeError):
    def __init__(self, msg, face=None, residual=None):
        super().__init__(msg)
        self.face = face
        self.residual = residual


# ---------------------------------------------------------------- line congruences

@dataclass
class CongruenceLines:
    kind: str
    lines: np.ndarray          # (F1, F2, 6)
    points: np.ndarray         # envelope vertices
    corners: np.ndarray        # the designated net corners


def congruence_lines(net: AsymptoticNet, env: Envelope, kind: str = "L") -> CongruenceLines:
    """Lines joining each envelope vertex to one corner of its quadrilateral."""
    if kind not in CONGRUENCE_KINDS:
        raise ValueError(f"unknown congruence {kind!r}")
    di, dj = CONGRUENCE_KINDS[kind]
    F1, F2 = env.shape
    pts = np.asarray(net.points, dtype=float)
    lines = np.zeros((F1, F2, 6))
    corners = np.zeros((F1, F2, 4))
    for i in range(F1):
        for j in range(F2):
            c = pts[i + di, j + dj]
            corners[i, j] = c
            try:
                lines[i, j] = pc.line_through(env.points[i, j], c, tol=1e-12)
            except pc.DegeneracyError as exc:
                raise pc.DegeneracyError(
                    f"envelope vertex coincides with the corner at face {(i, j)}") from exc
    return CongruenceLines(kind, lines, env.points.copy(), corners)


@dataclass
class IntersectionResult:
    holds: bool
    direction: int
    pairing: np.ndarray        # scale-free reciprocal product per neighbouring pair
    points: np.ndarray         # meeting points (nan where the lines are skew)
    tol: float


def intersection_property(cl: CongruenceLines, direction: int, tol: float = CLASS_TOL) -> IntersectionResult:
    """Do neighbouring lines in a direction intersect?"""
    L = cl.lines
    F1, F2 = L.shape[:2]
    di, dj = (1, 0) if direction == 1 else (0, 1)
    n1, n2 = F1 - di, F2 - dj
    pairing = np.zeros((n1, n2))
    points = np.full((n1, n2, 4), np.nan)
    for i in range(n1):
        for j in range(n2):
            a, b = L[i, j], L[i + di, j + dj]
            pairing[i, j] = pc.pairing_residual(a, b)
            if pairing[i, j] <= tol:
                try:
                    points[i, j] = pc.normalize(pc.lines_meet_point(a, b, tol=1e-12))
                except pc.DegeneracyError:
                    pass
    holds = bool(pairing.size) and bool(np.all(pairing <= tol))
    return IntersectionResult(holds, direction, pairing, points, tol)


def _aff(h) -> float:
    return float(h[0]) / float(h[1])


def intersection_point_formula(net: AsymptoticNet, p, env: Envelope, face, direction: int = 1):
    """I1 = p r12 + s r1 + t r2 + p s1 t r (and its n2 counterpart with t2 s)."""
    i, j = face
    r = np.asarray(net.points, dtype=float)
    s, t = _aff(env.s[i, j]), _aff(env.t[i, j])
    if direction == 1:
        prod = _aff(env.s[i + 1, j]) * t
    else:
        prod = _aff(env.t[i, j + 1]) * s
    pv = float(p[i, j])
    return pv * r[i + 1, j + 1] + s * r[i + 1, j] + t * r[i, j + 1] + pv * prod * r[i, j]


# ---------------------------------------------------------------- strip-wide generators

def _complex_roots(a, b, c):
    """Homogeneous roots (s0 : s1) of a s0^2 + b s0 s1 + c s1^2, complex allowed."""
    a, b, c = complex(a), complex(b), complex(c)
    scale = abs(a) + abs(b) + abs(c)
    if abs(a) <= 1e-14 * scale:
        return [np.array([-c, b]), np.array([1.0 + 0j, 0j])]
    sq = np.sqrt(b * b - 4 * a * c)
    if (b.conjugate() * sq).real < 0:
        sq = -sq
    q = -0.5 * (b + sq)
    if q == 0:
        return [np.array([0j, 1.0 + 0j]), np.array([0j, 1.0 + 0j])]
    return [np.array([q, a]), np.array([c, q])]


def _hdist(u, v) -> float:
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    n = np.linalg.norm(u) * np.linalg.norm(v)
    return abs(u[0] * v[1] - u[1] * v[0]) / n if n else 0.0


@dataclass
class StripGenerators:
    """Generators common to all quadrics of one strip."""
    direction: int
    index: int                    # strip number (face row j for n1, face column i for n2)
    labels: list                  # homogeneous labels on the first quadric of the strip
    count: int                    # with multiplicity: a double root counts twice
    real_lines: list              # Pluecker lines of the real ones
    worst: float                  # largest label mismatch along the strip for the kept labels


def _pair_roots(net, p, face, direction, coeffs, tol):
    fc = coeffs(face, "L" if direction == 1 else "M")
    sg = shared_generators(p[face], fc, direction, tol=tol)
    if sg.kind == "double":
        r = np.asarray(sg.roots[0], dtype=complex)
        return [r, r]
    a, b, c, _ = _quadratic_coeffs(fc, p[face], direction)
    return _complex_roots(float(a), float(b), float(c))


def strip_generators(net: AsymptoticNet, p, direction: int, tol: float = CLASS_TOL,
                     d_tol: float = 1e-9) -> list[StripGenerators]:
    """For each strip, the shared generators that are common to the whole strip.

    A label is followed along the strip: the generator with label s shared
    by Q and its neighbour has label (s0 : p s1) on the neighbour, and must
    be a root of the next pair there.
    """
    coeffs = _Coeffs(net)
    F1, F2 = p.shape
    nstrips = F2 if direction == 1 else F1
    length = F1 if direction == 1 else F2
    out = []
    for k in range(nstrips):
        faces = [(m, k) if direction == 1 else (k, m) for m in range(length)]
        if length < 2:
            out.append(StripGenerators(direction, k, [], 0, [], 0.0))
            continue
        start = _pair_roots(net, p, faces[0], direction, coeffs, d_tol)
        kept, worst_all = [], 0.0
        used_per_pair = {}
        for ri, root in enumerate(start):
            lab = root
            worst = 0.0
            ok = True
            for m in range(1, length - 1):
                pv = complex(p[faces[m - 1]])
                lab = np.array([lab[0], pv * lab[1]])
                roots = _pair_roots(net, p, faces[m], direction, coeffs, d_tol)
                used = used_per_pair.setdefault((ri, m), set())
                cands = [(q, _hdist(lab, roots[q])) for q in range(len(roots))]
                cands.sort(key=lambda c: c[1])
                q, dist = cands[0]
                if dist > tol:
                    ok = False
                    break
                worst = max(worst, dist)
                lab = roots[q]
            if ok:
                kept.append(root)
                worst_all = max(worst_all, worst)
        # two kept labels must be distinct roots unless the pair is double
        count = len(kept)
        reals = []
        Q0 = face_quadric(net, p, faces[0])
        for root in kept:
            if np.all(np.abs(np.imag(root)) <= 1e-12 * (np.abs(root).max() or 1.0)):
                h = np.real(root)
                line = Q0.s_generator(h) if direction == 1 else Q0.t_generator(h)
                if not any(pc.line_distance(line, m) <= tol for m in reals):
                    reals.append(line)
                elif count == 2 and _hdist(kept[0], kept[1]) > tol:
                    pass
        out.append(StripGenerators(direction, k, kept, count, reals, worst_all))
    return out


# ---------------------------------------------------------------- report

@dataclass
class SurfaceClassReport:
    pm: bool
    pm_residual: float
    pm_method: str
    d1_zero: np.ndarray
    d2_zero: np.ndarray
    d1_verdict: bool | None
    d2_verdict: bool | None
    semiQ: dict
    complexSurf: dict
    doublyQ: bool | None
    doublyComplex: bool | None
    qSurface: bool | None
    godeauxRozet: bool | None
    demoulin: bool | None
    tzitzeica: bool | None
    label: str
    tol: float
    hybrid_warning: str | None = None
    notes: list = field(default_factory=list)

    def booleans(self) -> dict:
        return {
            "pm": self.pm, "d1": self.d1_verdict, "d2": self.d2_verdict,
            "semiQ1": self.semiQ[1], "semiQ2": self.semiQ[2],
            "complex1": self.complexSurf[1], "complex2": self.complexSurf[2],
            "doublyQ": self.doublyQ, "doublyComplex": self.doublyComplex,
            "qSurface": self.qSurface, "godeauxRozet": self.godeauxRozet,
            "demoulin": self.demoulin, "tzitzeica": self.tzitzeica,
        }

    def to_json(self) -> dict:
        d = self.booleans()
        d.update({
            "pm_residual": self.pm_residual, "pm_method": self.pm_method,
            "d1_zero": self.d1_zero.tolist(), "d2_zero": self.d2_zero.tolist(),
            "label": self.label, "tolerance": self.tol,
            "hybrid_warning": self.hybrid_warning, "notes": list(self.notes),
        })
        return d


def d_zero_field(net: AsymptoticNet, p, direction: int, tol: float = 1e-9) -> np.ndarray:
    """Per-face flag D = 0 (relative to the size of its terms)."""
    coeffs = _Coeffs(net)
    F1, F2 = p.shape
    shape = (F1 - 1, F2) if direction == 1 else (F1, F2 - 1)
    out = np.zeros(shape, dtype=bool)
    for i in range(shape[0]):
        for j in range(shape[1]):
            sg = shared_generators(p[i, j], coeffs((i, j), "L" if direction == 1 else "M"),
                                   direction, tol=tol)
            out[i, j] = sg.kind == "double"
    return out


def d_relative(net: AsymptoticNet, p, direction: int) -> np.ndarray:
    coeffs = _Coeffs(net)
    F1, F2 = p.shape
    shape = (F1 - 1, F2) if direction == 1 else (F1, F2 - 1)
    out = np.zeros(shape)
    for i in range(shape[0]):
        for j in range(shape[1]):
            sg = shared_generators(p[i, j], coeffs((i, j), "L" if direction == 1 else "M"), direction)
            out[i, j] = abs(float(sg.D)) / sg.scale
    return out


def _verdict(flags) -> bool | None:
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return None
    if flags.all():
        return True
    if not flags.any():
        return False
    return None


def classify(net: AsymptoticNet, p, env: Envelope | None = None, tol: float = CLASS_TOL,
             d_tol: float = 1e-9) -> SurfaceClassReport:
    """Classify a net together with its lattice Lie quadrics."""
    if net.exact:
        net = net.to_float()
        p = np.asarray(p, dtype=float)
    notes, hybrid = [], []
    pmr = pm_residual_gauge(net, p, tol=tol)
    rels = np.concatenate([np.ravel(pmr.rel1), np.ravel(pmr.rel2)])
    pm_res = float(np.nanmax(rels)) if rels.size else 0.0

    d1 = d_zero_field(net, p, 1, d_tol)
    d2 = d_zero_field(net, p, 2, d_tol)
    v1, v2 = _verdict(d1), _verdict(d2)
    if d1.size and v1 is None:
        hybrid.append("D1 vanishes on some faces only")
    if d2.size and v2 is None:
        hybrid.append("D2 vanishes on some faces only")

    semi, cplx, strips = {}, {}, {}
    for d in (1, 2):
        sg = strip_generators(net, p, d, tol, d_tol)
        strips[d] = sg
        counts = [s.count for s in sg]
        has = [c >= 1 for c in counts]
        two = [c >= 2 for c in counts]
        semi[d] = _verdict(has) if counts else None
        cplx[d] = _verdict(two) if counts else None
        if counts and semi[d] is None:
            hybrid.append(f"only some n{d} strips share a generator")
        elif counts and semi[d] and cplx[d] is None:
            hybrid.append(f"only some n{d} strips share two generators")

    def both(a, b):
        if a is None or b is None:
            return None
        return bool(a and b)

    doubly_q = None
    if None not in (semi[1], semi[2], cplx[1], cplx[2]):
        doubly_q = bool((cplx[1] and semi[2]) or (cplx[2] and semi[1]))
    doubly_c = both(cplx[1], cplx[2])
    if doubly_q and doubly_c is False:
        raise ClassificationError("doubly Q surface that is not doubly complex")

    q_surface = None
    if semi[1] is not None and semi[2] is not None:
        q_surface = False
        if semi[1] and semi[2]:
            q_surface = _q_surface_envelope(net, p, strips, tol, notes)

    gr = None if (v1 is None and v2 is None) else bool(v1 or v2)
    dem = both(v1, v2)
    tz = None
    if dem and env is not None:
        try:
            tz = tzitzeica_test(net, p, env, tol=max(tol, 1e-9)).holds
            notes.append("Tzitzeica verdict uses the four congruences of the given envelope only")
        except (NotAnEnvelopeError, pc.DegeneracyError, InconsistencyError) as exc:
            notes.append(f"Tzitzeica test abstained: {exc}")
    elif dem is False:
        tz = False

    if hybrid:
        label = "hybrid (abstained)"
    elif tz:
        label = "Tzitzeica"
    elif dem:
        label = "Demoulin"
    elif gr:
        label = "Godeaux-Rozet"
    elif pmr.pm:
        label = "generic PM"
    elif q_surface:
        label = "Q surface"
    else:
        label = "not PMQ"
    if pmr.pm and q_surface:
        label += " and Q surface"
    rep = SurfaceClassReport(bool(pmr.pm), pm_res, pmr.method, d1, d2, v1, v2, semi, cplx,
                             doubly_q, doubly_c, q_surface, gr, dem, tz, label, tol,
                             "; ".join(hybrid) or None, notes)
    check_hierarchy(rep)
    return rep


def _q_surface_envelope(net, p, strips, tol, notes) -> bool:
    rows = [s.real_lines[0] if s.real_lines else None for s in strips[1]]
    cols = [s.real_lines[0] if s.real_lines else None for s in strips[2]]
    if any(l is None for l in rows + cols):
        notes.append("strip generators are not real; no real Q envelope")
        return False
    try:
        env = strip_shared_envelope(net, p, rows, cols)
    except pc.DegeneracyError as exc:
        notes.append(f"strip generators do not meet: {exc}")
        return False
    rep = envelope_diagnostics(env, net, p, tol=max(tol, 1e-8))
    st = [x for x in rep.straight_fraction if not np.isnan(x)]
    return bool(rep.max_quadric_residual <= 1e-8 and rep.max_star_tangency <= 1e-8
                and all(x == 1.0 for x in st))


def check_hierarchy(rep: SurfaceClassReport) -> None:
    """Raise if the report violates an implication between classes."""
    if rep.demoulin and rep.godeauxRozet is False:
        raise ClassificationError("Demoulin but not Godeaux-Rozet")
    if rep.tzitzeica and not rep.demoulin:
        raise ClassificationError("Tzitzeica but not Demoulin")
    if rep.doublyQ and not rep.doublyComplex:
        raise ClassificationError("doubly Q but not doubly complex")
    if rep.qSurface and not (rep.semiQ[1] and rep.semiQ[2]):
        raise ClassificationError("Q surface without semi-Q in both directions")


# ---------------------------------------------------------------- Demoulin geometry

@dataclass
class DemoulinGeometry:
    faces: list                  # faces where A, B, C, D are defined
    A: dict
    B: dict
    C: dict
    D: dict
    relabel: dict                # identity name -> max projective mismatch
    t_tilde: float               # max |t~ - t| mismatch of the remark check
    holds: bool
    tol: float


def _shared_labels(net, p, face, coeffs, tol):
    """(s_prev, s_next, t_prev, t_next) labels on Q(face) of the four shared generators."""
    i, j = face
    out = []
    for direction, prev in ((1, (i - 1, j)), (2, (i, j - 1))):
        part = "L" if direction == 1 else "M"
        sp = shared_generators(p[prev], coeffs(prev, part), direction, tol=tol)
        sn = shared_generators(p[face], coeffs(face, part), direction, tol=tol)
        for sg, where in ((sp, prev), (sn, face)):
            if sg.kind != "double":
                raise InconsistencyError(
                    f"D{direction} does not vanish at face {where}; shared generators do not coincide",
                    where, abs(float(sg.D)) / sg.scale)
        out.append(np.asarray(sp.partner_labels(p[prev])[0], dtype=float))
        out.append(np.asarray(sn.roots[0], dtype=float))
    return out


def demoulin_envelope_geometry(net: AsymptoticNet, p, tol: float = CLASS_TOL, d_tol: float = 1e-9,
                               rng=None) -> DemoulinGeometry:
    """Vertices A, B, C, D of the four envelopes of a Demoulin net and their relabelling."""
    coeffs = _Coeffs(net)
    F1, F2 = p.shape
    faces = [(i, j) for i in range(1, F1 - 1) for j in range(1, F2 - 1)]
    if not faces:
        raise ValueError("need at least 5x5 vertices")
    A, B, C, D = {}, {}, {}, {}
    for f in faces:
        s_prev, s_next, t_prev, t_next = _shared_labels(net, p, f, coeffs, d_tol)
        Q = face_quadric(net, p, f)
        lines = {"s-": Q.s_generator(s_prev), "s+": Q.s_generator(s_next),
                 "t-": Q.t_generator(t_prev), "t+": Q.t_generator(t_next)}
        for name, (u, v), store in (("A", ("s-", "t-"), A), ("B", ("s-", "t+"), B),
                                    ("C", ("s+", "t+"), C), ("D", ("s+", "t-"), D)):
            if pc.pairing_residual(lines[u], lines[v]) > tol:
                raise InconsistencyError(f"generators for {name} do not meet at face {f}", f)
            store[f] = pc.normalize(pc.lines_meet_point(lines[u], lines[v], tol=1e-12))
    rel = {"A1=D": 0.0, "B1=C": 0.0, "A2=B": 0.0, "D2=C": 0.0, "A12=C": 0.0}
    for (i, j) in faces:
        if (i + 1, j) in A:
            rel["A1=D"] = max(rel["A1=D"], pc.proj_distance(A[(i + 1, j)], D[(i, j)]))
            rel["B1=C"] = max(rel["B1=C"], pc.proj_distance(B[(i + 1, j)], C[(i, j)]))
        if (i, j + 1) in A:
            rel["A2=B"] = max(rel["A2=B"], pc.proj_distance(A[(i, j + 1)], B[(i, j)]))
            rel["D2=C"] = max(rel["D2=C"], pc.proj_distance(D[(i, j + 1)], C[(i, j)]))
        if (i + 1, j + 1) in A:
            rel["A12=C"] = max(rel["A12=C"], pc.proj_distance(A[(i + 1, j + 1)], C[(i, j)]))
    t_tilde = remark_t_check(net, p, rng=rng)
    holds = all(v <= tol for v in rel.values()) and t_tilde <= max(tol, 1e-10)
    return DemoulinGeometry(faces, A, B, C, D, rel, t_tilde, holds, tol)


def remark_t_check(net: AsymptoticNet, p, env: Envelope | None = None, rng=None) -> float:
    """Largest mismatch of t when the next vertex of a generic envelope is read on Q."""
    if env is None:
        env = propagate_envelope(net, p, (0, 0), rng=rng or np.random.default_rng(0),
                                 require_generic=True)
    F1, F2 = env.shape
    worst = 0.0
    for i in range(F1 - 1):
        for j in range(F2):
            Q = face_quadric(net, p, (i, j))
            g = point_params(Q, env.points[i + 1, j])
            worst = max(worst, pc.proj_distance(g.t, env.t[i, j]))
    return worst


# ---------------------------------------------------------------- Tzitzeica

@dataclass
class TzitzeicaResult:
    residual: np.ndarray         # s1 t - t2 s, scale-free, per block
    i1_i2: np.ndarray            # projective distance of I1 and I2 per block
    point: np.ndarray | None     # common point of all L lines
    incidence: float             # largest line-point residual (inf when none)
    holds: bool
    tol: float


def st_residual(env: Envelope) -> np.ndarray:
    """(s1 t - t2 s) / (|s1 t| + |t2 s|) in homogeneous form, per block."""
    F1, F2 = env.shape
    out = np.zeros((F1 - 1, F2 - 1))
    for i in range(F1 - 1):
        for j in range(F2 - 1):
            s0, s1_ = env.s[i, j]
            t0, t1_ = env.t[i, j]
            a0, a1 = env.s[i + 1, j]
            b0, b1 = env.t[i, j + 1]
            u = a0 * t0 * b1 * s1_
            v = b0 * s0 * a1 * t1_
            den = abs(u) + abs(v)
            out[i, j] = abs(u - v) / den if den else 0.0
    return out


def common_point(lines) -> tuple[np.ndarray, float]:
    """Least-squares common point of lines, with the largest incidence residual."""
    M = np.zeros((4, 4))
    bases = []
    for l in lines:
        a, b = pc.line_points(l)
        q, _ = np.linalg.qr(np.array([a, b], dtype=float).T)
        P = q @ q.T
        M += np.eye(4) - P
        bases.append((a, b))
    w, v = np.linalg.eigh(M)
    O = v[:, 0]
    worst = max(pc.point_on_line_residual(O, a, b) for a, b in bases)
    return O, worst


def tzitzeica_test(net: AsymptoticNet, p, env: Envelope, tol: float = 1e-9,
                   concurrency_tol: float = CLASS_TOL) -> TzitzeicaResult:
    """Coincidence of the points I1 and I2 and concurrency of the congruence L."""
    res = st_residual(env)
    F1, F2 = env.shape
    i12 = np.zeros_like(res)
    for i in range(F1 - 1):
        for j in range(F2 - 1):
            I1 = intersection_point_formula(net, p, env, (i, j), 1)
            I2 = intersection_point_formula(net, p, env, (i, j), 2)
            i12[i, j] = pc.proj_distance(I1, I2)
    point, inc = None, float("inf")
    holds = False
    if res.size and np.all(res <= tol):
        cl = congruence_lines(net, env, "L")
        point, inc = common_point(cl.lines.reshape(-1, 6))
        holds = inc <= concurrency_tol
    return TzitzeicaResult(res, i12, point, inc, holds, tol)


def potential(s_aff: np.ndarray, t_aff: np.ndarray):
    """phi with phi_1 = -t phi, phi_2 = -s phi and phi(0, 0) = 1.

    Filled along the first row then up the columns; returns phi and the
    relative mismatch of the other path at each block.
    """
    F1, F2 = s_aff.shape
    phi = np.zeros((F1, F2))
    phi[0, 0] = 1.0
    for i in range(1, F1):
        phi[i, 0] = -t_aff[i - 1, 0] * phi[i - 1, 0]
    for i in range(F1):
        for j in range(1, F2):
            phi[i, j] = -s_aff[i, j - 1] * phi[i, j - 1]
    mism = np.zeros((F1 - 1, F2 - 1))
    for i in range(F1 - 1):
        for j in range(F2 - 1):
            other = -t_aff[i, j + 1] * phi[i, j + 1]
            mism[i, j] = abs(other - phi[i + 1, j + 1]) / (abs(other) + abs(phi[i + 1, j + 1]))
    return phi, mism


@dataclass
class AffineReport:
    phi: np.ndarray
    path_mismatch: float
    scalar_residual: float       # t1 t - (a0 - a1 t + a3 s1 t)
    affine_normal: float         # r12 + r - h (r1 + r2) in the centro-affine chart
    normals_concurrent: float    # r + r12 parallel to r1 + r2
    holds: bool
    tol: float


def tzitzeica_potential_affine(net: AsymptoticNet, p, env: Envelope, origin=None,
                               tol: float = CLASS_TOL, path_tol: float = 1e-10) -> AffineReport:
    """Potential phi, the scalar frame equation and the centro-affine normals."""
    F1, F2 = env.shape
    s_aff = np.array([[_aff(env.s[i, j]) for j in range(F2)] for i in range(F1)])
    t_aff = np.array([[_aff(env.t[i, j]) for j in range(F2)] for i in range(F1)])
    phi, mism = potential(s_aff, t_aff)
    path = float(mism.max()) if mism.size else 0.0
    if path > path_tol:
        raise InconsistencyError(f"phi depends on the path (mismatch {path:.3e}); not Tzitzeica",
                                 None, path)
    coeffs = _Coeffs(net)
    scal = 0.0
    for i in range(F1 - 1):
        for j in range(F2):
            fc = coeffs((i, j), "L")
            t, t1, s1 = t_aff[i, j], t_aff[i + 1, j], s_aff[i + 1, j]
            lhs, rhs = t1 * t, fc.a0 - fc.a1 * t + fc.a3 * s1 * t
            scal = max(scal, abs(lhs - rhs) / (abs(t1 * t) + abs(fc.a0) + abs(fc.a1 * t) + abs(fc.a3 * s1 * t)))
    if origin is None:
        origin = tzitzeica_test(net, p, env).point
        if origin is None:
            raise InconsistencyError("no concurrency point; not Tzitzeica")
    P = _to_e4(origin)
    r = np.asarray(net.points, dtype=float)
    ra = np.array([[(P @ r[i, j])[:3] / phi[i, j] for j in range(F2)] for i in range(F1)])
    aff_res, conc = 0.0, 0.0
    for i in range(F1 - 1):
        for j in range(F2 - 1):
            h = phi[i + 1, j] * phi[i, j + 1] / (float(p[i, j]) * phi[i + 1, j + 1] * phi[i, j])
            u = ra[i + 1, j + 1] + ra[i, j]
            v = ra[i + 1, j] + ra[i, j + 1]
            scale = np.linalg.norm(u) + abs(h) * np.linalg.norm(v)
            aff_res = max(aff_res, np.linalg.norm(u - h * v) / scale)
            conc = max(conc, np.linalg.norm(np.cross(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))
    holds = path <= path_tol and scal <= 1e-10 and aff_res <= tol and conc <= tol
    return AffineReport(phi, path, scal, aff_res, conc, holds, tol)


def _to_e4(O) -> np.ndarray:
    """Orthogonal matrix sending the direction of O to e4."""
    O = np.asarray(O, dtype=float)
    O = O / np.linalg.norm(O)
    e4 = np.array([0.0, 0.0, 0.0, 1.0])
    v = O - e4
    if np.linalg.norm(v) < 1e-14:
        return np.eye(4)
    v /= np.linalg.norm(v)
    return np.eye(4) - 2.0 * np.outer(v, v)


# ---------------------------------------------------------------- constructions

def demoulin_seed(net: AsymptoticNet, p, face=(0, 0), d_tol: float = 1e-9) -> GenParam:
    """Intersection of the generators Q(face) shares with its n1 and n2 neighbours.

    Needs D1 = D2 = 0 on the face; the envelope started there is the one on
    which the four Demoulin envelopes coincide.
    """
    coeffs = _Coeffs(net)
    out = []
    for direction, part in ((1, "L"), (2, "M")):
        sg = shared_generators(p[face], coeffs(face, part), direction, tol=d_tol)
        if sg.kind != "double":
            raise InconsistencyError(f"D{direction} does not vanish at face {face}", face,
                                     abs(float(sg.D)) / sg.scale)
        out.append(np.asarray(sg.roots[0], dtype=float))
    return GenParam(out[0], out[1])


@dataclass
class ConstructionResult:
    target: str
    success: bool
    net: AsymptoticNet | None
    p: np.ndarray | None
    envelope: Envelope | None
    residual: float
    message: str
    attempts: int = 1
    params: np.ndarray | None = None


TARGETS = {"gr": "gr", "godeauxrozet": "gr", "godeaux-rozet": "gr",
           "demoulin": "demoulin", "tzitzeica": "tzitzeica"}


def _touching_strips(theta, base, rows, cols):
    """Strip data with D1 = D2 = 0 from a flat parameter vector.

    Per step k the row part uses 3 weights for r[k+1, 0] in the star plane of
    r[k, 0] and (b2, b3) for r[k+1, 1]; b1 then solves D1 = 0.  The column
    part mirrors this with (d1, d3).  The last entry is p0.
    """
    from .cauchy import CauchyData, _basis_coords
    th = list(theta)
    p0 = th.pop()
    pts = np.full((rows, cols, 4), np.nan)
    pts[0, 0], pts[1, 0], pts[0, 1], pts[1, 1] = base
    prow = pcol = p0
    for k in range(1, max(rows, cols) - 1):
        if k + 1 < rows:
            w = [th.pop(0) for _ in range(3)]
            r, r1, r2, r12 = pts[k - 1, 0], pts[k, 0], pts[k - 1, 1], pts[k, 1]
            pts[k + 1, 0] = pc.normalize(w[0] * r + w[1] * r1 + w[2] * r12)
            a0, a1, _, a3 = _basis_coords([r, r1, r2, r12], pts[k + 1, 0])
            b2, b3 = th.pop(0), th.pop(0)
            b1 = -(a0 * b3 - a1 * b2 * prow) ** 2 / (4 * a0 * a3 * b2 * prow)
            pts[k + 1, 1] = pc.normalize(b1 * r1 + b2 * r2 + b3 * r12)
            prow = a0 / (b2 * prow)
        if k + 1 < cols:
            w = [th.pop(0) for _ in range(3)]
            r, r1, r2, r12 = pts[0, k - 1], pts[1, k - 1], pts[0, k], pts[1, k]
            pts[0, k + 1] = pc.normalize(w[0] * r + w[1] * r2 + w[2] * r12)
            g0, _, g2, g3 = _basis_coords([r, r1, r2, r12], pts[0, k + 1])
            d1, d3 = th.pop(0), th.pop(0)
            d2 = -(g0 * d3 - g2 * d1 * pcol) ** 2 / (4 * g0 * g3 * d1 * pcol)
            pts[1, k + 1] = pc.normalize(d1 * r1 + d2 * r2 + d3 * r12)
            pcol = g0 / (d1 * pcol)
    return CauchyData(pts, float(p0))


def _touching_layout(rows, cols):
    """Size of the parameter vector and the positions of the hook parameters."""
    n, hooks = 0, []
    for k in range(1, max(rows, cols) - 1):
        if k + 1 < rows:
            hooks += [n + 3, n + 4]
            n += 5
        if k + 1 < cols:
            hooks += [n + 3, n + 4]
            n += 5
    return n + 1, hooks + [n]


def _min_frame_cond(net):
    R, C = net.shape
    pts = net.points
    return min(pc.smallest_singular_ratio(pts[[i, i + 1, i, i + 1], [j, j, j + 1, j + 1]])
               for i in range(R - 1) for j in range(C - 1))


def _tzitzeica_residual(theta, base, rows, cols, cond_floor=0.02):
    from .cauchy import solve_cauchy
    nblk = (rows - 2) * (cols - 2)
    try:
        net, p, _ = solve_cauchy(_touching_strips(theta, base, rows, cols))
        env = propagate_envelope(net, p, (0, 0), demoulin_seed(net, p), raise_on_failure=False)
        cond = _min_frame_cond(net)
    except Exception:  # any breakdown counts as a bad point for the optimizer
        return np.full(nblk + 1, 10.0)
    return np.concatenate([st_residual(env).ravel(), [10.0 * max(0.0, cond_floor - cond)]])


def _random_base(rng):
    while True:
        base = [pc.normalize(rng.normal(size=4)) for _ in range(4)]
        if pc.smallest_singular_ratio(base) > 0.2:
            return np.array(base)


def construct_special(target: str, seed: int = 0, dims=(4, 4), restarts: int = 8,
                      max_nfev: int = 150, tol: float = 1e-8) -> ConstructionResult:
    """Nets of a special class, with their quadric field.

    Godeaux-Rozet and Demoulin nets are exact: the strip data are chosen so
    that D1 (and D2) vanish and the evolution keeps them zero.  Tzitzeica
    nets come from least squares over the free strip parameters of a
    Demoulin net, minimizing s1 t - t2 s on the envelope through the
    Demoulin points; failure is reported, never patched.
    """
    from scipy.optimize import least_squares

    from .cauchy import EvolutionError, solve_cauchy, touching_cauchy_data
    kind = TARGETS.get(str(target).lower())
    if kind is None:
        raise ValueError(f"unknown target {target!r}")
    rows, cols = dims
    if kind in ("gr", "demoulin"):
        dirs = (1,) if kind == "gr" else (1, 2)
        for attempt in range(restarts):
            try:
                net, p, _ = solve_cauchy(touching_cauchy_data(seed + 7919 * attempt, rows, cols, dirs))
            except (EvolutionError, RuntimeError, np.linalg.LinAlgError) as exc:
                last = str(exc)
                continue
            res = max(float(np.nanmax(d_relative(net, p, d))) for d in dirs)
            env = None
            if kind == "demoulin":
                env = propagate_envelope(net, p, (0, 0), demoulin_seed(net, p), raise_on_failure=False)
            ok = res <= tol
            return ConstructionResult(kind, ok, net, p, env, res,
                                      "exact construction" if ok else "D does not vanish",
                                      attempt + 1)
        return ConstructionResult(kind, False, None, None, None, float("inf"), last, restarts)

    if rows > 5 or cols > 5:
        raise ValueError("the Tzitzeica optimizer is meant for patches up to 5x5")
    rng = np.random.default_rng(seed)
    n, _ = _touching_layout(rows, cols)
    free = np.arange(n)
    best = None
    for attempt in range(restarts):
        base = _random_base(rng)
        theta = rng.normal(size=n)
        theta[-1] = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])

        def fun(y, theta=theta, base=base):
            th = theta.copy()
            th[free] = y
            return _tzitzeica_residual(th, base, rows, cols)

        if fun(theta[free]).max() >= 10.0:
            continue
        sol = least_squares(fun, theta[free], xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
        theta[free] = sol.x
        res = float(np.abs(sol.fun).max())
        if best is None or res < best[0]:
            best = (res, theta.copy(), base, attempt + 1)
        if res <= 1e-12:
            break
    if best is None:
        return ConstructionResult(kind, False, None, None, None, float("inf"),
                                  "no admissible starting point", restarts)
    res, theta, base, attempts = best
    if 1e-12 < res < 1e-4:
        # the first run often stops on max_nfev close to a zero; continue from there
        sol = least_squares(lambda y: _tzitzeica_residual(y, base, rows, cols), theta,
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
        if np.abs(sol.fun).max() < res:
            theta, res = sol.x, float(np.abs(sol.fun).max())
    st_max, net, p, env = tzitzeica_from_params(np.concatenate([base.ravel(), theta]), dims)
    res = max(res, st_max)
    ok = res <= tol
    msg = "least squares converged" if ok else f"infeasible at this size: residual {res:.3e}"
    return ConstructionResult(kind, ok, net, p, env, res, msg, attempts,
                              np.concatenate([base.ravel(), theta]))


def tzitzeica_from_params(params, dims=(4, 4)):
    """Rebuild a Tzitzeica candidate from ``ConstructionResult.params``.

    Returns (max |s1 t - t2 s|, net, p, envelope through the Demoulin points).
    """
    from .cauchy import solve_cauchy
    rows, cols = dims
    params = np.asarray(params, dtype=float)
    base, theta = params[:16].reshape(4, 4), params[16:]
    n, _ = _touching_layout(rows, cols)
    if theta.size != n:
        raise ValueError(f"expected {16 + n} parameters for a {rows}x{cols} patch, got {params.size}")
    net, p, _ = solve_cauchy(_touching_strips(theta, base, rows, cols))
    env = propagate_envelope(net, p, (0, 0), demoulin_seed(net, p), raise_on_failure=False)
    return float(np.abs(st_residual(env)).max()), net, p, env
