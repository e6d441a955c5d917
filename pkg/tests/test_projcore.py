from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticelie import projcore as pc

finite = st.floats(-10, 10, allow_nan=False)
vec4 = st.lists(finite, min_size=4, max_size=4).map(np.array)
small_int = st.integers(-6, 6)
ivec4 = st.lists(small_int, min_size=4, max_size=4).map(lambda v: pc.to_exact(np.array(v)))


def _generic(*vs):
    return pc.smallest_singular_ratio(list(vs)) > 1e-3


@given(vec4, vec4, vec4)
def test_plane_contains_its_points(a, b, c):
    if not _generic(a, b, c):
        return
    u = pc.plane_through(a, b, c)
    for x in (a, b, c):
        assert pc.incidence_residual(u, x) < 1e-12


@given(ivec4, ivec4, ivec4)
def test_plane_exact(a, b, c):
    try:
        u = pc.plane_through(a, b, c)
    except pc.DegeneracyError:
        return
    assert all(pc.incidence(u, x) == 0 for x in (a, b, c))


@given(vec4, vec4, vec4, vec4)
def test_line_from_points_and_planes_agree(a, b, c, d):
    if not _generic(a, b, c, d):
        return
    l = pc.line_through(a, b)
    m = pc.meet(pc.plane_through(a, b, c), pc.plane_through(a, b, d))
    assert pc.line_distance(l, m) < 1e-9
    assert pc.pairing_residual(l, l) < 1e-12


@given(vec4, vec4, vec4, vec4)
def test_pairing_detects_meeting_lines(a, b, c, d):
    if not _generic(a, b, c, d):
        return
    l = pc.line_through(a, b)
    assert pc.lines_intersect(l, pc.line_through(a, c))
    # four independent points span two skew lines
    assert pc.pairing_residual(l, pc.line_through(c, d)) > 1e-14
    assert abs(pc.pairing(l, pc.line_through(c, d))) == pytest.approx(
        abs(pc.bracket(a, b, c, d)), rel=1e-9)


@given(vec4, vec4, vec4)
def test_meet_point_of_coplanar_lines(a, b, c):
    if not _generic(a, b, c):
        return
    x = pc.lines_meet_point(pc.line_through(a, b), pc.line_through(a, c))
    assert pc.proj_equal(x, a, 1e-9)


@given(vec4, st.floats(0.1, 5.0), st.sampled_from([-1.0, 1.0]))
def test_projective_equality_ignores_scale(a, k, sign):
    if np.linalg.norm(a) < 1e-6:
        return
    assert pc.proj_equal(a, sign * k * a)
    assert pc.proj_distance(a, sign * k * a) < 1e-12


def test_degenerate_inputs_raise():
    a = np.array([1.0, 0, 0, 0])
    with pytest.raises(pc.DegeneracyError):
        pc.line_through(a, 2 * a)
    with pytest.raises(pc.DegeneracyError):
        pc.plane_through(a, 2 * a, np.array([0.0, 1, 0, 0]))


def test_exact_det_and_solve():
    m = pc.to_exact(np.array([[2, 1, 0, 0], [0, 1, 3, 0], [1, 0, 0, 1], [0, 0, 1, 5]]))
    d = pc.det(m)
    assert isinstance(d, Fraction)
    assert float(d) == pytest.approx(np.linalg.det(m.astype(float)))
    b = pc.vec(Fraction(1), Fraction(2), Fraction(3), Fraction(4))
    x = pc.solve(m, b)
    assert all(v == w for v, w in zip(m.dot(x), b))
