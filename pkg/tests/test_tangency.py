from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticelie import net as nm
from latticelie.cauchy import random_net, rational_net, solve_cauchy, touching_cauchy_data
from latticelie.net import frame_coefficients
from latticelie.quadric import GenParam, face_quadric, propagate_quadrics
from latticelie.tangency import (keydisc_residual, mobius_map, pm_residual_gauge,
                                 pm_residual_maps, reduced_block, step_params, tangency_residual)

seeds = st.integers(0, 10_000)
labels = st.lists(st.floats(-3, 3), min_size=2, max_size=2).filter(
    lambda v: abs(v[0]) + abs(v[1]) > 1e-2).map(np.array)


@given(seeds, labels, labels, st.sampled_from([1, 2]))
def test_maps_produce_tangent_partners(seed, s, t, d):
    net = random_net(seed, 4, 4)
    p = propagate_quadrics(net, (0, 0), 1.1)
    face = (1, 1)
    nb = (2, 1) if d == 1 else (1, 2)
    fc = frame_coefficients(net, face, "L" if d == 1 else "M")
    g = GenParam(s, t)
    gn = step_params(g, fc, p[face], d)
    Q, Qn = face_quadric(net, p, face), face_quadric(net, p, nb)
    X, Xn = Q.eval(g), Qn.eval(gn)
    if np.linalg.norm(Xn) < 1e-6 * np.linalg.norm(X):
        return
    da, db = tangency_residual(Q, Qn, g, gn)
    assert da < 1e-9 and db < 1e-9


def test_discriminant_maps_degenerate_exactly_when_d_vanishes():
    net, p, _ = solve_cauchy(touching_cauchy_data(1, 4, 4, directions=(1,)))
    fc = frame_coefficients(net, (1, 1), "both")
    assert mobius_map("S1", fc, p[1, 1]).degenerate
    assert not mobius_map("T2", fc, p[1, 1]).degenerate
    gen = random_net(1, 4, 4)
    q = propagate_quadrics(gen, (0, 0), 1.0)
    fc = frame_coefficients(gen, (1, 1), "both")
    assert not mobius_map("S1", fc, q[1, 1]).degenerate
    with pytest.raises(ValueError):
        mobius_map("X1", fc, 1.0)


def test_constant_map_value_matches_double_root():
    net, p, _ = solve_cauchy(touching_cauchy_data(3, 4, 4, directions=(1,)))
    from latticelie.quadric import shared_generators
    fc = frame_coefficients(net, (0, 0), "L")
    S1 = mobius_map("S1", fc, p[0, 0])
    sg = shared_generators(p[0, 0], fc, 1)
    # every point is sent onto the shared generator of the neighbour
    (h,), = [sg.partner_labels(p[0, 0])]
    assert abs(S1.constant[0] * h[1] - S1.constant[1] * h[0]) < 1e-8 * np.linalg.norm(S1.constant) * np.linalg.norm(h)


def test_pm_net_closes(pm_net):
    net, p = pm_net
    rep = pm_residual_gauge(net, p)
    assert rep.pm and rep.method == "normalized gauge"
    assert np.nanmax(rep.map_closure) < 1e-8


def test_generic_net_does_not_close(generic_net):
    p = propagate_quadrics(generic_net, (0, 0), 0.7)
    rep = pm_residual_gauge(generic_net, p)
    assert not rep.pm
    assert max(pm_residual_maps(generic_net, p, v, "both") for v in nm.gmc_domain(generic_net)) > 1e-4


@pytest.mark.parametrize("which", ["pm", "generic"])
def test_reduced_and_normalized_forms_agree(which, pm_net, generic_net):
    if which == "pm":
        net, p = pm_net
    else:
        net = generic_net
        p = propagate_quadrics(net, (0, 0), 0.7)
    x = np.random.default_rng(0).uniform(0.5, 2, net.shape)
    gnet, gp = nm.apply_gauge(net, x), nm.gauge_quadric_field(p, x)
    for v in nm.gmc_domain(net):
        rb, rbg = reduced_block(net, p, v), reduced_block(gnet, gp, v)
        # the reduced form is gauge free
        assert rb.rel1 == pytest.approx(rbg.rel1, rel=1e-6, abs=1e-12)
        assert (max(rb.rel1, rb.rel2) < 1e-8) == (which == "pm")


@given(seeds, st.floats(0.3, 2.0))
def test_keydisc_identity(seed, p0):
    net = random_net(seed, 4, 4)
    p = propagate_quadrics(net, (0, 0), p0)
    for v in nm.gmc_domain(net):
        assert keydisc_residual(net, p, v, "normalized") < 1e-9
        assert keydisc_residual(net, p, v, "reduced") < 1e-9


def test_keydisc_exact():
    net = rational_net(8, 4, 4)
    p = propagate_quadrics(net, (0, 0), Fraction(5, 4))
    for v in nm.gmc_domain(net):
        assert keydisc_residual(net, p, v) == 0


def test_pm_exact_verdicts():
    net = rational_net(4, 4, 4)
    p = propagate_quadrics(net, (0, 0), Fraction(1))
    rep = pm_residual_gauge(net, p)
    assert rep.method == "reduced" and not rep.pm
