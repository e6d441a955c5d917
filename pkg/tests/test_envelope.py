import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticelie import projcore as pc
from latticelie.cauchy import random_net
from latticelie.envelope import (NotAnEnvelopeError, envelope_diagnostics, is_generic_seed,
                                 local_shared_envelope, point_params, propagate_envelope,
                                 random_seed, star_tangency)
from latticelie.quadric import GenParam, face_quadric, propagate_quadrics

labels = st.lists(st.floats(-3, 3), min_size=2, max_size=2).filter(
    lambda v: np.hypot(*v) > 1e-2).map(np.array)


@given(st.integers(0, 10_000))
def test_envelopes_of_pm_nets_close(pm_net, seed):
    net, p = pm_net
    rng = np.random.default_rng(seed)
    g = random_seed(rng, net, p)
    assert is_generic_seed(net, p, (0, 0), g)
    env = propagate_envelope(net, p, (0, 0), g)
    rep = envelope_diagnostics(env, net, p)
    assert rep.max_closure < 1e-8
    assert rep.max_star_tangency < 1e-8
    assert rep.max_quadric_residual < 1e-10
    assert not env.notes


def test_seed_face_does_not_matter(pm_net):
    net, p = pm_net
    env = propagate_envelope(net, p, (0, 0), rng=np.random.default_rng(1))
    again = propagate_envelope(net, p, (2, 3), env.param((2, 3)))
    for i, j in np.ndindex(env.shape):
        assert pc.proj_distance(env.points[i, j], again.points[i, j]) < 1e-8


def test_generic_net_has_no_envelope(generic_net):
    p = propagate_quadrics(generic_net, (0, 0), 0.7)
    with pytest.raises(NotAnEnvelopeError) as info:
        propagate_envelope(generic_net, p, rng=np.random.default_rng(0))
    assert info.value.residual > 1e-8
    env = propagate_envelope(generic_net, p, rng=np.random.default_rng(0), raise_on_failure=False)
    assert env.closure.max() > 1e-8


@given(labels, labels)
def test_point_params_roundtrip(generic_net, s, t):
    Q = face_quadric(generic_net, np.full((4, 4), -0.6), (1, 2))
    X = Q.eval(GenParam(s, t))
    g = point_params(Q, X)
    assert pc.proj_distance(Q.eval(g), X) < 1e-9


def _local_candidate():
    for seed in range(200):
        net = random_net(seed, 3, 3)
        p = propagate_quadrics(net, (0, 0), 1.0)
        try:
            return net, p, local_shared_envelope(net, p)
        except NotAnEnvelopeError:
            continue
    pytest.fail("no net with four real shared pairs found")


def test_shared_generator_envelope_on_any_net():
    # edges along shared generators give an envelope without the PM condition
    net, p, env = _local_candidate()
    assert env.shared1.all() and env.shared2.all()
    assert star_tangency(env, net, p).max() < 1e-8
