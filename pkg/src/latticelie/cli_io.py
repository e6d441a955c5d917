"""Net documents, OBJ export and the ``latticelie`` command line."""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import projcore as pc
from .cauchy import (CONSTRUCTION_TOL, VERIFY_TOL, CauchyData, EvolutionError, random_cauchy_data,
                     random_net, solve_cauchy)
from .envelope import Envelope, NotAnEnvelopeError, envelope_diagnostics, propagate_envelope
from .net import AsymptoticNet, NotAsymptoticError, validate_asymptotic
from .quadric import GenParam, LatticeQuadric, PropagationError, propagate_quadrics

FORMAT_VERSION = 1
BACKENDS = ("float", "rational")
CHART_EPS = 1e-9

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class NetFormatError(ValueError):
    """A net document could not be parsed; ``field`` names the offending entry."""

    def __init__(self, msg, field=None):
        super().__init__(msg if field is None else f"{field}: {msg}")
        self.field = field


class VersionError(NetFormatError):
    pass


# ---------------------------------------------------------------- documents

@dataclass
class NetDocument:
    rows: int
    cols: int
    points: np.ndarray                    # (rows, cols, 4), float or Fraction; nan marks unknown
    kind: str = "net"                     # "net" or "cauchy"
    p_field: np.ndarray | None = None     # (rows-1, cols-1)
    p0: float | None = None               # seed value for Cauchy data
    envelope: dict | None = None          # {"seed_face", "seed", "s", "t"}
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def net(self) -> AsymptoticNet:
        if self.kind != "net":
            raise NetFormatError("document holds Cauchy data, not a net", "kind")
        return AsymptoticNet(self.points)

    def cauchy(self) -> CauchyData:
        if self.kind != "cauchy":
            raise NetFormatError("document holds a net, not Cauchy data", "kind")
        return CauchyData(pc.to_float(self.points), self.p0)

    def envelope_object(self, net, p) -> Envelope | None:
        if not self.envelope:
            return None
        e = self.envelope
        seed = GenParam(np.array(e["seed"][:2], float), np.array(e["seed"][2:], float))
        return propagate_envelope(net.to_float() if net.exact else net, np.asarray(p, float),
                                  tuple(e["seed_face"]), seed, raise_on_failure=False)


def _num_str(x) -> str | None:
    if isinstance(x, Fraction):
        return str(x)
    x = float(x)
    if np.isnan(x):
        return None
    return repr(x)


def _parse_num(s, where, rational):
    if s is None:
        return float("nan")
    if not isinstance(s, str):
        raise NetFormatError(f"expected a decimal string, got {type(s).__name__}", where)
    try:
        if rational or "/" in s:
            return Fraction(s)
        return float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise NetFormatError(f"bad number {s!r}", where) from exc


def document_from_net(net: AsymptoticNet, p=None, env: Envelope | None = None,
                      metadata: dict | None = None) -> NetDocument:
    envd = None
    if env is not None and env.seed is not None:
        envd = {"seed_face": list(env.seed_face),
                "seed": [float(v) for v in np.concatenate([env.seed.s, env.seed.t])]}
    return NetDocument(net.rows, net.cols, np.array(net.points), "net",
                       None if p is None else np.array(p), None, envd, dict(metadata or {}))


def document_from_cauchy(data: CauchyData, metadata: dict | None = None) -> NetDocument:
    return NetDocument(data.rows, data.cols, np.array(data.points), "cauchy",
                       None, float(data.p0), None, dict(metadata or {}))


def to_json(doc: NetDocument) -> dict:
    out = {
        "format_version": doc.format_version,
        "kind": doc.kind,
        "rows": doc.rows,
        "cols": doc.cols,
        "points": [[_num_str(c) for c in doc.points[i, j]]
                   for i in range(doc.rows) for j in range(doc.cols)],
    }
    if doc.p_field is not None:
        out["p_field"] = [[_num_str(v) for v in row] for row in doc.p_field]
    if doc.p0 is not None:
        out["p0"] = _num_str(doc.p0)
    if doc.envelope is not None:
        e = doc.envelope
        out["envelope"] = {"seed_face": list(e["seed_face"]),
                           "seed": [_num_str(v) for v in e["seed"]]}
    if doc.metadata:
        out["metadata"] = doc.metadata
    return out


def _require(obj, key, where=None):
    if key not in obj:
        raise NetFormatError("missing field", key if where is None else f"{where}.{key}")
    return obj[key]


def from_json(obj: dict, rational: bool = False) -> NetDocument:
    if not isinstance(obj, dict):
        raise NetFormatError("top level must be an object")
    version = _require(obj, "format_version")
    if version != FORMAT_VERSION:
        raise VersionError(f"unsupported format version {version!r} (expected {FORMAT_VERSION})",
                           "format_version")
    kind = obj.get("kind", "net")
    if kind not in ("net", "cauchy"):
        raise NetFormatError(f"unknown kind {kind!r}", "kind")
    rows, cols = int(_require(obj, "rows")), int(_require(obj, "cols"))
    raw = _require(obj, "points")
    if len(raw) != rows * cols:
        raise NetFormatError(f"expected {rows * cols} points, found {len(raw)}", "points")
    exact = rational and kind == "net"
    pts = np.empty((rows, cols, 4), dtype=object if exact else float)
    for n, entry in enumerate(raw):
        i, j = divmod(n, cols)
        if len(entry) != 4:
            raise NetFormatError("a point needs 4 coordinates", f"points[{n}]")
        for k in range(4):
            pts[i, j, k] = _parse_num(entry[k], f"points[{n}][{k}]", exact)
    if exact and any(isinstance(v, float) for v in pts.ravel()):
        raise NetFormatError("missing coordinates are not allowed in a net", "points")
    p_field = None
    if "p_field" in obj:
        pf = obj["p_field"]
        if len(pf) != rows - 1 or any(len(r) != cols - 1 for r in pf):
            raise NetFormatError(f"expected a {rows - 1}x{cols - 1} array", "p_field")
        p_field = np.array([[_parse_num(v, f"p_field[{a}][{b}]", False) for b, v in enumerate(r)]
                            for a, r in enumerate(pf)], dtype=float)
    p0 = None
    if kind == "cauchy":
        p0 = _parse_num(_require(obj, "p0"), "p0", False)
    env = None
    if "envelope" in obj:
        e = obj["envelope"]
        seed = _require(e, "seed", "envelope")
        if len(seed) != 4:
            raise NetFormatError("seed needs (s0, s1, t0, t1)", "envelope.seed")
        env = {"seed_face": list(_require(e, "seed_face", "envelope")),
               "seed": [_parse_num(v, f"envelope.seed[{k}]", False) for k, v in enumerate(seed)]}
    return NetDocument(rows, cols, pts, kind, p_field, p0, env, obj.get("metadata", {}), version)


def save_net(doc: NetDocument, path) -> None:
    Path(path).write_text(json.dumps(to_json(doc), indent=1, sort_keys=True) + "\n")


def load_net(path, rational: bool | None = None) -> NetDocument:
    if rational is None:
        rational = backend() == "rational"
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return from_json(obj, rational)


def backend() -> str:
    b = os.environ.get("LATTICE_LIE_BACKEND", "float")
    if b not in BACKENDS:
        raise ValueError(f"LATTICE_LIE_BACKEND must be one of {BACKENDS}, got {b!r}")
    return b


# ---------------------------------------------------------------- OBJ export

@dataclass
class ObjReport:
    path: str
    chart: int
    vertices: int
    faces: int
    groups: list
    clipped: int


def choose_chart(points) -> int:
    """Coordinate used as w: the last one unless it comes close to zero."""
    P = np.array([pc.normalize(np.asarray(x, float)) for x in points])
    if np.all(np.abs(P[:, 3]) > 1e-3):
        return 3
    return int(np.argmax(np.abs(P).sum(axis=0)))


def patch_points(Q: LatticeQuadric, samples: int) -> list:
    """Points Q(s, t) with s = (1-a : a), t = (1-b : b) on a grid over [0, 1]^2.

    The corners of the grid are the corners r, r1, r2, p r12 of the face.
    """
    out = []
    for a in np.linspace(0.0, 1.0, samples):
        for b in np.linspace(0.0, 1.0, samples):
            out.append(Q.eval(GenParam(np.array([1 - a, a]), np.array([1 - b, b]))))
    return out


def export_obj(net: AsymptoticNet, path, p=None, env: Envelope | None = None,
               samples: int = 8) -> ObjReport:
    net = net.to_float() if net.exact else net
    R, C = net.shape
    groups = [("net", [net[i, j] for i in range(R) for j in range(C)], (R, C))]
    if env is not None:
        F1, F2 = env.shape
        groups.append(("envelope", [env.points[i, j] for i in range(F1) for j in range(F2)], (F1, F2)))
    if p is not None:
        p = np.asarray(p, float)
        for i in range(R - 1):
            for j in range(C - 1):
                Q = LatticeQuadric.on_face(net, (i, j), p[i, j])
                groups.append((f"quadric_{i}_{j}", patch_points(Q, samples), (samples, samples)))
    chart = choose_chart(net.points.reshape(-1, 4))
    rest = [k for k in range(4) if k != chart]
    lines = ["# latticelie OBJ export",
             f"# chart: w = x{chart} (affine coordinates x{rest[0]}/w, x{rest[1]}/w, x{rest[2]}/w)"]
    clipped, base, nverts, nfaces = 0, 1, 0, 0
    body = []
    for name, pts, (m, n) in groups:
        body.append(f"g {name}")
        bad = set()
        for k, x in enumerate(pts):
            x = np.asarray(x, float)
            w = x[chart]
            if abs(w) <= CHART_EPS * np.linalg.norm(x):
                bad.add(k)
                clipped += 1
                body.append("v 0 0 0")
            else:
                y = x[rest] / w
                body.append("v " + " ".join(repr(float(c)) for c in y))
        for a in range(m - 1):
            for b in range(n - 1):
                quad = [a * n + b, (a + 1) * n + b, (a + 1) * n + b + 1, a * n + b + 1]
                if bad.intersection(quad):
                    continue
                body.append("f " + " ".join(str(base + q) for q in quad))
                nfaces += 1
        base += len(pts)
        nverts += len(pts)
    if clipped:
        lines.append(f"# warning: {clipped} points near the plane at infinity were clipped")
    Path(path).write_text("\n".join(lines + body) + "\n")
    return ObjReport(str(path), chart, nverts, nfaces, [g[0] for g in groups], clipped)


# ---------------------------------------------------------------- CLI

class UsageError(Exception):
    pass


def _tolerances():
    return {"construction": CONSTRUCTION_TOL, "verification": VERIFY_TOL}


def _emit(report: dict, args) -> None:
    report = dict(report)
    report["backend"] = backend()
    report.setdefault("tolerances", _tolerances())
    text = json.dumps(_jsonable(report), indent=1, sort_keys=True)
    print(text)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if not np.isfinite(x) else x
    if isinstance(x, Fraction):
        return str(x)
    return x


def _field_p(doc: NetDocument, net: AsymptoticNet, p0=None):
    if doc.p_field is not None and p0 is None:
        return doc.p_field, "stored"
    seed = 1.0 if p0 is None else p0
    fnet = net.to_float() if net.exact else net
    return propagate_quadrics(fnet, (0, 0), seed), ("propagated" if p0 is not None else "assumed p0=1")


def cmd_generate(args):
    meta = {"seed": args.seed, "generator": args.kind}
    if args.kind == "generic":
        net = random_net(args.seed, args.rows, args.cols)
        doc = document_from_net(net, metadata=meta)
    else:
        data = random_cauchy_data(args.seed, args.rows, args.cols, args.p0)
        doc = document_from_cauchy(data, meta)
    save_net(doc, args.out)
    _emit({"command": "generate", "kind": doc.kind, "rows": doc.rows, "cols": doc.cols,
           "out": str(args.out)}, args)
    return EXIT_OK


def cmd_evolve(args):
    doc = load_net(args.cauchy, rational=False)
    data = doc.cauchy()
    data = CauchyData(data.points, args.p0)
    net, p, trace = solve_cauchy(data)
    meta = dict(doc.metadata, p0=args.p0)
    save_net(document_from_net(net, p, metadata=meta), args.out)
    _emit({"command": "evolve", "rows": net.rows, "cols": net.cols, "out": str(args.out),
           "closing_degrees": sorted(trace.degrees())}, args)
    return EXIT_OK


def cmd_classify(args):
    from .classify import classify
    doc = load_net(args.net)
    net = doc.net()
    p, origin = _field_p(doc, net, args.p0)
    fnet = net.to_float() if net.exact else net
    env = doc.envelope_object(fnet, p)
    rep = classify(fnet, p, env, tol=args.tol)
    out = {"command": "classify", "p_source": origin, "class_tol": args.tol}
    out.update(rep.to_json())
    if args.json:
        _emit(out, args)
    else:
        print(rep.label)
    return EXIT_OK


def cmd_envelope(args):
    doc = load_net(args.net, rational=False)
    net = doc.net()
    p, origin = _field_p(doc, net, args.p0)
    seed = GenParam.affine(args.s0, args.t0)
    env = propagate_envelope(net, p, (0, 0), seed, tol=VERIFY_TOL, raise_on_failure=False)
    rep = envelope_diagnostics(env, net, p, tol=VERIFY_TOL)
    if args.out:
        save_net(document_from_net(net, p, env, doc.metadata), args.out)
    _emit({"command": "envelope", "p_source": origin, "max_closure": rep.max_closure,
           "max_star_tangency": rep.max_star_tangency, "max_quadric_residual": rep.max_quadric_residual,
           "shared_fraction": rep.shared_fraction, "closes": rep.max_closure <= VERIFY_TOL,
           "notes": env.notes}, args)
    return EXIT_OK if rep.max_closure <= VERIFY_TOL else EXIT_INVALID


def verify_document(doc: NetDocument, tol: float = VERIFY_TOL) -> dict:
    """Run the invariant suite on a stored net; returns a report with ``passed``."""
    from .tangency import pm_residual_gauge
    net = doc.net()
    checks = {}
    val = validate_asymptotic(net, tol=tol)
    checks["asymptotic"] = {"passed": val.passed, "worst": val.worst(),
                            "failures": [[list(v), why] for v, why in val.failures[:10]]}
    fnet = net.to_float() if net.exact else net
    if doc.p_field is not None and val.passed:
        p = np.asarray(doc.p_field, float)
        try:
            q = propagate_quadrics(fnet, (0, 0), p[0, 0], tol=tol)
            dev = float(np.max(np.abs(q - p) / np.abs(p)))
            checks["c1_field"] = {"passed": dev <= tol, "worst": dev}
        except PropagationError as exc:
            checks["c1_field"] = {"passed": False, "error": str(exc)}
        pm = pm_residual_gauge(fnet, p, tol=tol)
        rel = np.concatenate([np.ravel(pm.rel1), np.ravel(pm.rel2)])
        worst = float(np.nanmax(rel)) if rel.size and not np.all(np.isnan(rel)) else 0.0
        checks["pm"] = {"passed": bool(pm.pm), "worst": worst, "method": pm.method}
        if doc.envelope:
            env = doc.envelope_object(fnet, p)
            mc = float(env.closure.max()) if env.closure.size else 0.0
            checks["envelope"] = {"passed": mc <= tol, "worst": mc}
    passed = all(c["passed"] for c in checks.values())
    return {"passed": passed, "checks": checks, "tol": tol}


def cmd_verify(args):
    doc = load_net(args.net)
    rep = verify_document(doc, args.tol)
    _emit(dict(rep, command="verify"), args)
    return EXIT_OK if rep["passed"] else EXIT_INVALID


def cmd_export(args):
    if args.format != "obj":
        raise UsageError(f"unknown format {args.format!r}")
    doc = load_net(args.net, rational=False)
    net = doc.net()
    p = doc.p_field
    env = doc.envelope_object(net, p) if p is not None else None
    rep = export_obj(net, args.out, p, env, args.samples)
    _emit({"command": "export", "path": rep.path, "chart": rep.chart, "vertices": rep.vertices,
           "faces": rep.faces, "groups": rep.groups, "clipped": rep.clipped}, args)
    return EXIT_OK


def cmd_construct(args):
    from .classify import construct_special
    res = construct_special(args.target, args.seed, (args.rows, args.cols))
    out = {"command": "construct", "target": args.target, "success": res.success,
           "residual": res.residual, "message": res.message}
    if res.success and args.out:
        save_net(document_from_net(res.net, res.p, res.envelope,
                                   {"seed": args.seed, "generator": args.target}), args.out)
        out["out"] = str(args.out)
    _emit(out, args)
    return EXIT_OK if res.success else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="latticelie",
                                 description="Discrete projective minimal surfaces and lattice Lie quadrics.")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="random net or Cauchy data")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rows", type=int, default=6)
    g.add_argument("--cols", type=int, default=6)
    g.add_argument("--kind", choices=("generic", "cauchy"), default="cauchy")
    g.add_argument("--p0", type=float, default=None, help="seed p stored with Cauchy data")
    g.add_argument("--out", type=Path, default=Path("net.json"))
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evolve", help="solve the Cauchy problem")
    e.add_argument("--cauchy", type=Path, required=True)
    e.add_argument("--p0", type=float, required=True)
    e.add_argument("--out", type=Path, default=Path("evolved.json"))
    e.set_defaults(func=cmd_evolve)

    c = sub.add_parser("classify", help="classify a net with its quadrics")
    c.add_argument("--net", type=Path, required=True)
    c.add_argument("--tol", type=float, default=1e-8)
    c.add_argument("--p0", type=float, default=None)
    c.add_argument("--json", action="store_true")
    c.set_defaults(func=cmd_classify)

    v = sub.add_parser("envelope", help="propagate an envelope from a seed vertex")
    v.add_argument("--net", type=Path, required=True)
    v.add_argument("--p0", type=float, default=None)
    v.add_argument("--s0", type=float, required=True)
    v.add_argument("--t0", type=float, required=True)
    v.add_argument("--out", type=Path, default=None)
    v.set_defaults(func=cmd_envelope)

    f = sub.add_parser("verify", help="run the invariant suite")
    f.add_argument("--net", type=Path, required=True)
    f.add_argument("--tol", type=float, default=VERIFY_TOL)
    f.set_defaults(func=cmd_verify)

    x = sub.add_parser("export", help="write a mesh")
    x.add_argument("--net", type=Path, required=True)
    x.add_argument("--format", default="obj")
    x.add_argument("--samples", type=int, default=8)
    x.add_argument("--out", type=Path, default=Path("net.obj"))
    x.set_defaults(func=cmd_export)

    s = sub.add_parser("construct", help="special surface classes")
    s.add_argument("--target", choices=("gr", "demoulin", "tzitzeica"), required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--rows", type=int, default=4)
    s.add_argument("--cols", type=int, default=4)
    s.add_argument("--out", type=Path, default=None)
    s.set_defaults(func=cmd_construct)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        backend()
        return args.func(args)
    except (UsageError, NetFormatError, FileNotFoundError, ValueError) as exc:
        if isinstance(exc, (pc.DegeneracyError, NotAsymptoticError, PropagationError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID if isinstance(exc, NotAsymptoticError) else EXIT_NUMERIC
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvolutionError, NotAnEnvelopeError, np.linalg.LinAlgError, ZeroDivisionError,
            FloatingPointError, RuntimeError) as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
