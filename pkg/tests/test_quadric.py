from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticelie import projcore as pc
from latticelie.cauchy import random_net, rational_net, touching_cauchy_data, solve_cauchy
from latticelie.net import frame_coefficients
from latticelie.quadric import (GenParam, LatticeQuadric, PropagationError, affine, c1_step,
                                face_quadric, form_residual, hom, implicit_quadric,
                                propagate_quadrics, shared_generators)

from oracles.checks import edge_tangent_mismatch, shared_generator_report

seeds = st.integers(0, 10_000)
pvals = st.floats(0.2, 3.0) | st.floats(-3.0, -0.2)
labels = st.lists(st.floats(-3, 3), min_size=2, max_size=2).filter(
    lambda v: abs(v[0]) + abs(v[1]) > 1e-3).map(np.array)


@given(st.floats(-1e6, 1e6))
def test_hom_affine_roundtrip(x):
    assert affine(hom(x)) == pytest.approx(x)
    assert affine(hom(None)) == float("inf")


def test_corners_and_edges(generic_net):
    Q = face_quadric(generic_net, np.full((4, 4), 0.7), (1, 2))
    e = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    assert pc.proj_equal(Q.eval(GenParam(e[0], e[0])), Q.r)
    assert pc.proj_equal(Q.eval(GenParam(e[0], e[1])), Q.r1)
    assert pc.proj_equal(Q.eval(GenParam(e[1], e[0])), Q.r2)
    assert pc.proj_equal(Q.eval(GenParam(e[1], e[1])), Q.r12)
    # edges are generators: s = inf carries r-r1, t = inf carries r-r2
    assert pc.lines_coincide(Q.s_generator(e[0]), pc.line_through(Q.r, Q.r1))
    assert pc.lines_coincide(Q.t_generator(e[0]), pc.line_through(Q.r, Q.r2))
    assert pc.lines_coincide(Q.s_generator(e[1]), pc.line_through(Q.r2, Q.r12))


@given(seeds, pvals, labels, labels)
def test_points_lie_on_implicit_quadric(seed, p, s, t):
    net = random_net(seed, 3, 3)
    Q = LatticeQuadric.on_face(net, (0, 0), p)
    X = Q.eval(GenParam(s, t))
    assert form_residual(Q.matrix(), X) < 1e-10
    plane = Q.tangent_plane(GenParam(s, t))
    for l in (Q.s_generator(s), Q.t_generator(t)):
        a, b = pc.line_points(l)
        assert pc.incidence_residual(plane, a) < 1e-9
        assert pc.incidence_residual(plane, b) < 1e-9


def test_fit_and_closed_form_agree(generic_net):
    Q = face_quadric(generic_net, np.full((4, 4), -1.3), (0, 1))
    A, B = implicit_quadric(Q, "fit"), implicit_quadric(Q, "closed")
    assert pc.proj_distance(A.ravel(), B.ravel()) < 1e-9


def test_closed_form_exact():
    net = rational_net(1, 3, 3)
    Q = LatticeQuadric.on_face(net, (0, 0), Fraction(2, 3))
    A = implicit_quadric(Q)
    X = Q.eval(GenParam(np.array([Fraction(1), Fraction(-2)], dtype=object),
                        np.array([Fraction(3), Fraction(5)], dtype=object)))
    assert X @ A @ X == 0


@given(seeds, pvals)
def test_c1_diagonal_agreement(seed, p0):
    net = random_net(seed, 4, 4)
    p = propagate_quadrics(net, (0, 0), p0)
    for i in range(2):
        for j in range(2):
            p12 = c1_step(c1_step(p[i, j], frame_coefficients(net, (i, j), "L"), 1),
                          frame_coefficients(net, (i + 1, j), "M"), 2)
            p21 = c1_step(c1_step(p[i, j], frame_coefficients(net, (i, j), "M"), 2),
                          frame_coefficients(net, (i, j + 1), "L"), 1)
            assert abs(p12 - p21) < 1e-10 * abs(p12)


def test_c1_step_is_an_involution(generic_net):
    fc = frame_coefficients(generic_net, (1, 1), "both")
    q = c1_step(0.9, fc, 1)
    assert q * 0.9 == pytest.approx(fc.a0 / fc.b2)
    assert c1_step(0.9, fc, 2) * 0.9 == pytest.approx(fc.g0 / fc.d1)
    with pytest.raises(ValueError):
        c1_step(0.0, fc, 1)
    with pytest.raises(ValueError):
        c1_step(1.0, fc, 3)


def test_propagation_exact_and_seed_independent():
    net = rational_net(5, 4, 4)
    p = propagate_quadrics(net, (0, 0), Fraction(3, 2))
    assert all(isinstance(v, Fraction) for v in p.ravel())
    q = propagate_quadrics(net, (2, 1), p[2, 1])
    assert all(a == b for a, b in zip(p.ravel(), q.ravel()))


def test_propagation_detects_non_asymptotic_input(generic_net):
    pts = np.array(generic_net.points)
    pts[3, 3] += [0.0, 0.2, 0.1, -0.3]
    from latticelie.net import AsymptoticNet, NotAsymptoticError
    with pytest.raises((PropagationError, NotAsymptoticError)):
        propagate_quadrics(AsymptoticNet(pts), (0, 0), 1.0)


@given(seeds, pvals)
def test_tangent_planes_agree_along_edges(seed, p0):
    net = random_net(seed, 4, 4)
    p = propagate_quadrics(net, (0, 0), p0)
    for face in [(0, 0), (1, 1), (2, 0)]:
        if face[0] + 1 < 3:
            assert edge_tangent_mismatch(net, p, face, 1) < 1e-10
        if face[1] + 1 < 3:
            assert edge_tangent_mismatch(net, p, face, 2) < 1e-10


@given(seeds, pvals)
def test_real_shared_generators_coincide(seed, p0):
    net = random_net(seed, 4, 4)
    p = propagate_quadrics(net, (0, 0), p0)
    for d in (1, 2):
        sg, rep = shared_generator_report(net, p, (0, 0), d)
        assert len(rep) == (2 if sg.kind == "real" else 0)
        for dist, _ in rep:
            assert dist < 1e-8


def test_touching_quadrics():
    net, p, _ = solve_cauchy(touching_cauchy_data(2, 4, 4, directions=(1,)))
    for face in [(0, 0), (1, 1), (1, 2)]:
        sg, rep = shared_generator_report(net, p, face, 1)
        assert sg.kind == "double"
        (dist, tang), = rep
        assert dist < 1e-8 and tang < 1e-8


def test_exact_discriminant_signs():
    net = rational_net(2, 3, 3)
    fc = frame_coefficients(net, (0, 0), "both")
    for d in (1, 2):
        sg = shared_generators(Fraction(1), fc, d)
        assert isinstance(sg.D, Fraction)
        assert sg.kind == ("real" if sg.D > 0 else "complex" if sg.D < 0 else "double")
