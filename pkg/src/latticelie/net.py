"""Discrete asymptotic nets, frame coefficients and gauge transformations.

The frame at vertex (i, j) is the basis (r, r1, r2, r12) with
r = r[i, j], r1 = r[i+1, j], r2 = r[i, j+1], r12 = r[i+1, j+1].  Writing the
next points in this basis gives

    r11  = a0 r + a1 r1 + a3 r12          r112 = b1 r1 + b2 r2 + b3 r12
    r22  = g0 r + g2 r2 + g3 r12          r122 = d1 r1 + d2 r2 + d3 r12

The (a, b) part needs i <= R-3, the (g, d) part needs j <= C-3.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import projcore as pc

STRUCTURAL_TOL = 1e-9


class NotAsymptoticError(ValueError):
    """A structurally zero frame coefficient came out nonzero."""

    def __init__(self, msg, vertex=None):
        super().__init__(msg)
        self.vertex = vertex


class GaugeError(ValueError):
    def __init__(self, msg, vertex=None):
        super().__init__(msg)
        self.vertex = vertex


class AsymptoticNet:
    """Rectangular grid of homogeneous points with fixed lifts.

    ``points[i, j]`` is the lift of the vertex (n1, n2) = (i, j).
    """

    def __init__(self, points):
        pts = np.asarray(points)
        if pts.ndim != 3 or pts.shape[2] != 4:
            raise ValueError("points must have shape (rows, cols, 4)")
        if pts.dtype != object:
            pts = pts.astype(float)
        pts = pts.copy()
        pts.setflags(write=False)
        self.points = pts

    @property
    def shape(self) -> tuple[int, int]:
        return self.points.shape[:2]

    @property
    def rows(self) -> int:
        return self.points.shape[0]

    @property
    def cols(self) -> int:
        return self.points.shape[1]

    @property
    def exact(self) -> bool:
        return self.points.dtype == object

    def __getitem__(self, ij):
        return self.points[ij]

    def with_points(self, points) -> "AsymptoticNet":
        return AsymptoticNet(points)

    def to_float(self) -> "AsymptoticNet":
        return AsymptoticNet(pc.to_float(self.points))

    def to_exact(self) -> "AsymptoticNet":
        return AsymptoticNet(pc.to_exact(self.points))

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"AsymptoticNet({self.rows}x{self.cols}, {kind})"


# ---------------------------------------------------------------- validation

@dataclass
class ValidationReport:
    passed: bool
    residuals: np.ndarray          # per-vertex planarity residual (nan where not testable)
    failures: list                 # list of (vertex, reason)
    tol: float

    def worst(self) -> float:
        r = self.residuals[np.isfinite(self.residuals)]
        return float(r.max()) if r.size else 0.0


def star_indices(rows, cols, i, j):
    nbrs = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)]
    return [(a, b) for a, b in nbrs if 0 <= a < rows and 0 <= b < cols]


def star_residual(net: AsymptoticNet, i: int, j: int) -> float:
    """Planarity residual of the (possibly partial) star at a vertex."""
    idx = [(i, j)] + star_indices(net.rows, net.cols, i, j)
    rows = [net[a] for a in idx]
    if len(rows) < 4:
        return 0.0
    if net.exact:
        return 0.0 if pc.rank_deficiency_exact(rows) else 1.0
    return pc.smallest_singular_ratio(rows)


def validate_asymptotic(net: AsymptoticNet, tol: float = 1e-10,
                        collinear_tol: float = 1e-9) -> ValidationReport:
    """Check planar stars and the absence of collinear edge pairs."""
    R, C = net.shape
    if R < 3 or C < 3:
        raise ValueError(f"grid too small: {R}x{C} (need at least 3x3)")
    res = np.zeros((R, C))
    failures = []
    for i in range(R):
        for j in range(C):
            r = star_residual(net, i, j)
            res[i, j] = r
            if r > tol:
                failures.append(((i, j), f"star not planar (residual {r:.3e})"))
            nb = star_indices(R, C, i, j)
            for a, b in combinations(nb, 2):
                if pc.collinear(net[a], net[i, j], net[b], collinear_tol):
                    failures.append(((i, j), f"collinear edges towards {a} and {b}"))
    return ValidationReport(not failures, res, failures, tol)


# ---------------------------------------------------------------- coefficients

COEFF_NAMES = ("a0", "a1", "a3", "b1", "b2", "b3", "g0", "g2", "g3", "d1", "d2", "d3")
NONZERO = ("a0", "a3", "b1", "b2", "g0", "g3", "d1", "d2")


@dataclass(frozen=True)
class FrameCoefficients:
    """The twelve scalars of the frame equations at one vertex.

    Either half may be missing (``None``) near the boundary of a finite grid.
    """
    a0: object = None
    a1: object = None
    a3: object = None
    b1: object = None
    b2: object = None
    b3: object = None
    g0: object = None
    g2: object = None
    g3: object = None
    d1: object = None
    d2: object = None
    d3: object = None

    @property
    def has_l(self) -> bool:
        return self.a0 is not None

    @property
    def has_m(self) -> bool:
        return self.g0 is not None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def with_(self, **kw) -> "FrameCoefficients":
        return replace(self, **kw)

    def nonzero_violations(self, scale: dict | None = None, tol: float = 1e-12) -> list[str]:
        out = []
        for name in NONZERO:
            v = getattr(self, name)
            if v is None:
                continue
            s = 1.0 if scale is None else scale.get(name, 1.0)
            if pc.is_small(v, s, tol, exact=isinstance(v, Fraction)):
                out.append(name)
        return out


def frame_basis(net: AsymptoticNet, i: int, j: int) -> np.ndarray:
    """Rows r, r1, r2, r12 of the frame at (i, j)."""
    p = net.points
    return np.array([p[i, j], p[i + 1, j], p[i, j + 1], p[i + 1, j + 1]], dtype=p.dtype)


def _coords(basis, target):
    return pc.solve(basis.T, target)


def _check_zero(c, basis, target, k, label, vertex, tol):
    if isinstance(c[k], Fraction):
        ok = c[k] == 0
    else:
        ok = abs(c[k]) * pc.norm(basis[k]) <= tol * pc.norm(target)
    if not ok:
        raise NotAsymptoticError(f"{label} has a nonzero structural component at {vertex}", vertex)


def _l_part(net, i, j, tol):
    basis = frame_basis(net, i, j)
    r11 = net[i + 2, j]
    r112 = net[i + 2, j + 1]
    c = _coords(basis, r11)
    _check_zero(c, basis, r11, 2, "r11", (i, j), tol)
    e = _coords(basis, r112)
    _check_zero(e, basis, r112, 0, "r112", (i, j), tol)
    return dict(a0=c[0], a1=c[1], a3=c[3], b1=e[1], b2=e[2], b3=e[3])


def _m_part(net, i, j, tol):
    basis = frame_basis(net, i, j)
    r22 = net[i, j + 2]
    r122 = net[i + 1, j + 2]
    c = _coords(basis, r22)
    _check_zero(c, basis, r22, 1, "r22", (i, j), tol)
    e = _coords(basis, r122)
    _check_zero(e, basis, r122, 0, "r122", (i, j), tol)
    return dict(g0=c[0], g2=c[2], g3=c[3], d1=e[1], d2=e[2], d3=e[3])


def has_l(net, i, j) -> bool:
    return 0 <= i <= net.rows - 3 and 0 <= j <= net.cols - 2


def has_m(net, i, j) -> bool:
    return 0 <= i <= net.rows - 2 and 0 <= j <= net.cols - 3


def frame_coefficients(net: AsymptoticNet, vertex, parts: str = "both",
                       tol: float = STRUCTURAL_TOL) -> FrameCoefficients:
    """Frame coefficients at a vertex.

    ``parts`` is "both", "L", "M" or "available" (whatever the grid allows).
    """
    i, j = vertex
    want_l = parts in ("both", "L") or (parts == "available" and has_l(net, i, j))
    want_m = parts in ("both", "M") or (parts == "available" and has_m(net, i, j))
    if want_l and not has_l(net, i, j):
        raise IndexError(f"vertex {vertex} lacks the neighbours for the n1 part")
    if want_m and not has_m(net, i, j):
        raise IndexError(f"vertex {vertex} lacks the neighbours for the n2 part")
    basis = frame_basis(net, i, j)
    if net.exact:
        if pc.det(basis) == 0:
            raise pc.DegeneracyError(f"frame at {vertex} is degenerate")
    elif pc.smallest_singular_ratio(basis) < 1e-13:
        raise pc.DegeneracyError(f"frame at {vertex} is degenerate")
    kw = {}
    if want_l:
        kw.update(_l_part(net, i, j, tol))
    if want_m:
        kw.update(_m_part(net, i, j, tol))
    if not net.exact:
        kw = {k: float(v) for k, v in kw.items()}
    return FrameCoefficients(**kw)


def coefficient_grid(net: AsymptoticNet, tol: float = STRUCTURAL_TOL) -> dict:
    """All available frame coefficients keyed by vertex."""
    out = {}
    for i in range(net.rows - 1):
        for j in range(net.cols - 1):
            if has_l(net, i, j) or has_m(net, i, j):
                out[(i, j)] = frame_coefficients(net, (i, j), "available", tol)
    return out


# ---------------------------------------------------------------- frame matrices

def _zero(exact):
    return Fraction(0) if exact else 0.0


def _one(exact):
    return Fraction(1) if exact else 1.0


def frame_matrices(fc: FrameCoefficients):
    """The 4x4 matrices L, M with V_1 = L V and V_2 = M V, V = (r, r1, r2, r12)."""
    exact = isinstance(fc.a0 if fc.has_l else fc.g0, Fraction)
    z, o = _zero(exact), _one(exact)
    dt = object if exact else float
    L = M = None
    if fc.has_l:
        L = np.array([[z, o, z, z],
                      [fc.a0, fc.a1, z, fc.a3],
                      [z, z, z, o],
                      [z, fc.b1, fc.b2, fc.b3]], dtype=dt)
    if fc.has_m:
        M = np.array([[z, z, o, z],
                      [z, z, z, o],
                      [fc.g0, z, fc.g2, fc.g3],
                      [z, fc.d1, fc.d2, fc.d3]], dtype=dt)
    return L, M


def gmc_from_coefficients(fc: FrameCoefficients, fc1: FrameCoefficients,
                          fc2: FrameCoefficients) -> np.ndarray:
    """M_1 L - L_2 M from the coefficients at a vertex and its two shifts."""
    L, M = frame_matrices(fc)
    _, M1 = frame_matrices(fc1)
    L2, _ = frame_matrices(fc2)
    return M1 @ L - L2 @ M


def gmc_residual(net: AsymptoticNet, vertex, normalized: bool = False):
    """Compatibility residual M_1 L - L_2 M at a vertex.

    Needs the full coefficients at the vertex, the M part at (i+1, j) and the
    L part at (i, j+1).  With ``normalized`` the scale-free maximum is returned.
    """
    i, j = vertex
    fc = frame_coefficients(net, (i, j), "both")
    fc1 = frame_coefficients(net, (i + 1, j), "M")
    fc2 = frame_coefficients(net, (i, j + 1), "L")
    res = gmc_from_coefficients(fc, fc1, fc2)
    if not normalized:
        return res
    L, M = frame_matrices(fc)
    _, M1 = frame_matrices(fc1)
    L2, _ = frame_matrices(fc2)
    scale = np.abs(np.asarray(M1 @ L, dtype=float)).max() + np.abs(np.asarray(L2 @ M, dtype=float)).max()
    return float(np.abs(np.asarray(res, dtype=float)).max() / scale)


def gmc_domain(net: AsymptoticNet):
    return [(i, j) for i in range(net.rows - 2) for j in range(net.cols - 2)]


# ---------------------------------------------------------------- gauge

def apply_gauge(net: AsymptoticNet, x) -> AsymptoticNet:
    """Rescale the lifts pointwise: r -> x r."""
    x = np.asarray(x)
    if x.shape != net.shape:
        raise ValueError(f"gauge shape {x.shape} does not match net {net.shape}")
    if any(v == 0 for v in x.ravel()):
        raise GaugeError("gauge has a zero entry")
    if net.exact or x.dtype == object:
        pts = pc.to_exact(net.points) * pc.to_exact(x)[..., None]
    else:
        pts = net.points * x[..., None]
    return AsymptoticNet(pts)


def gauge_coefficients(fc: FrameCoefficients, x, i: int, j: int) -> FrameCoefficients:
    """Closed-form transformation of the coefficients at (i, j) under a gauge."""
    X = lambda a, b: x[i + a, j + b]
    kw = {}
    if fc.has_l:
        x11, x112 = X(2, 0), X(2, 1)
        kw.update(a0=fc.a0 * x11 / X(0, 0), a1=fc.a1 * x11 / X(1, 0), a3=fc.a3 * x11 / X(1, 1),
                  b1=fc.b1 * x112 / X(1, 0), b2=fc.b2 * x112 / X(0, 1), b3=fc.b3 * x112 / X(1, 1))
    if fc.has_m:
        x22, x122 = X(0, 2), X(1, 2)
        kw.update(g0=fc.g0 * x22 / X(0, 0), g2=fc.g2 * x22 / X(0, 1), g3=fc.g3 * x22 / X(1, 1),
                  d1=fc.d1 * x122 / X(1, 0), d2=fc.d2 * x122 / X(0, 1), d3=fc.d3 * x122 / X(1, 1))
    return FrameCoefficients(**kw)


def gauge_quadric_field(p, x) -> np.ndarray:
    """p_g = x1 x2 p / (x x12) on every face."""
    p = np.asarray(p)
    x = np.asarray(x)
    return p * x[1:, :-1] * x[:-1, 1:] / (x[:-1, :-1] * x[1:, 1:])


def rho(fc: FrameCoefficients):
    """Gauge invariant b1 d2 / (b2 d1)."""
    return fc.b1 * fc.d2 / (fc.b2 * fc.d1)


@dataclass
class GaugeResult:
    x: np.ndarray
    domain: list            # faces where the normalisation was imposed
    sign: str = "positive square root"


def normalize_gauge(net: AsymptoticNet, p, allow_complex: bool = False) -> GaugeResult:
    """Gauge in which (1 - p^2) b2 d1 / (b1 d2) = 1 on every interior vertex.

    x = 1 on row 0 and column 0; x12 = x1 x2 p / (x sqrt(1 - rho)).  Vertices
    that no normalised face reaches keep x = 1.  Where 1 - rho < 0 the gauge
    is imaginary; ``allow_complex`` returns it (principal root) instead of
    raising.
    """
    R, C = net.shape
    p = np.asarray(p, dtype=float)
    x = np.ones((R, C), dtype=complex if allow_complex else float)
    domain = []
    for i in range(R - 2):
        for j in range(C - 2):
            fc = frame_coefficients(net, (i, j), "both")
            q = 1.0 - float(rho(fc))
            if not q > 0 and not allow_complex:
                raise GaugeError(f"no real gauge at vertex {(i, j)}: 1 - rho = {q:.6g}", (i, j))
            root = np.sqrt(complex(q)) if allow_complex else np.sqrt(q)
            x[i + 1, j + 1] = x[i + 1, j] * x[i, j + 1] * p[i, j] / (x[i, j] * root)
            domain.append((i, j))
    if allow_complex and np.all(x.imag == 0):
        x = x.real
    sign = "positive square root" if x.dtype == float else "principal square root (complex gauge)"
    return GaugeResult(x, domain, sign)


def normalization_residual(net: AsymptoticNet, p, vertex) -> float:
    """(1 - p^2) b2 d1 / (b1 d2) - 1 at a vertex in the current lifts."""
    fc = frame_coefficients(net, vertex, "both")
    pv = p[vertex]
    return float((1 - pv * pv) * fc.b2 * fc.d1 / (fc.b1 * fc.d2) - 1)
