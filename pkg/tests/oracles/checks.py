"""Independent geometric checks shared by the module and acceptance tests."""
import numpy as np

from latticelie import projcore as pc
from latticelie.envelope import point_params
from latticelie.quadric import GenParam, face_quadric, shared_generators
from latticelie.net import frame_coefficients


def edge_tangent_mismatch(net, p, face, direction, samples=5):
    """Largest tangent-plane distance of two neighbouring quadrics along their common edge.

    For direction 1 the edge is r1-r12: a r1 + b r12 has labels s = (a, b/p),
    t = (0 : 1) on Q and s = (a, b), t = (1 : 0) on Q1.  Direction 2 mirrors it.
    """
    i, j = face
    nb = (i + 1, j) if direction == 1 else (i, j + 1)
    Q, Qn = face_quadric(net, p, face), face_quadric(net, p, nb)
    pv = float(p[face])
    worst = 0.0
    for a in np.linspace(-1.3, 1.7, samples):
        b = 1.0 - 0.4 * a
        if direction == 1:
            g = GenParam(np.array([a, b / pv]), np.array([0.0, 1.0]))
            gn = GenParam(np.array([a, b]), np.array([1.0, 0.0]))
        else:
            g = GenParam(np.array([0.0, 1.0]), np.array([a, b / pv]))
            gn = GenParam(np.array([1.0, 0.0]), np.array([a, b]))
        X, Xn = Q.eval(g), Qn.eval(gn)
        assert pc.proj_distance(X, Xn) < 1e-9, "edge labels disagree"
        worst = max(worst, pc.proj_distance(Q.tangent_plane(g), Qn.tangent_plane(gn)))
    return worst


def shared_generator_report(net, p, face, direction, samples=5):
    """(Pluecker distance, tangent-plane mismatch) for every real shared generator."""
    i, j = face
    nb = (i + 1, j) if direction == 1 else (i, j + 1)
    Q, Qn = face_quadric(net, p, face), face_quadric(net, p, nb)
    fc = frame_coefficients(net, face, "L" if direction == 1 else "M")
    sg = shared_generators(p[face], fc, direction)
    out = []
    for h, hn in zip(sg.roots, sg.partner_labels(p[face])):
        if direction == 1:
            l, ln = Q.s_generator(h), Qn.s_generator(hn)
        else:
            l, ln = Q.t_generator(h), Qn.t_generator(hn)
        tang = 0.0
        for u in np.linspace(-1.1, 1.9, samples):
            other = np.array([1.0, u])
            g = GenParam(h, other) if direction == 1 else GenParam(other, h)
            X = Q.eval(g)
            gn = point_params(Qn, X)
            assert pc.proj_distance(Qn.eval(gn), X) < 1e-8
            tang = max(tang, pc.proj_distance(Q.tangent_plane(g), Qn.tangent_plane(gn)))
        out.append((pc.line_distance(l, ln), tang))
    return sg, out


def parse_obj(path):
    """Minimal OBJ reader: (vertices, faces, groups); raises on malformed lines."""
    verts, faces, groups = [], [], []
    for n, line in enumerate(open(path), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag, *rest = line.split()
        if tag == "v":
            if len(rest) != 3:
                raise ValueError(f"line {n}: vertex needs 3 coordinates")
            verts.append([float(c) for c in rest])
        elif tag == "f":
            idx = [int(c) for c in rest]
            if len(idx) < 3 or min(idx) < 1 or max(idx) > len(verts):
                raise ValueError(f"line {n}: bad face {rest}")
            faces.append(idx)
        elif tag == "g":
            groups.append(rest[0])
        else:
            raise ValueError(f"line {n}: unknown tag {tag!r}")
    return np.array(verts), faces, groups
