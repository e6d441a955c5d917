import dataclasses
import json

import numpy as np
import pytest

from latticelie import projcore as pc
from latticelie.cauchy import random_cauchy_data, solve_cauchy
from latticelie.classify import (ClassificationError, InconsistencyError, check_hierarchy, classify,
                                 common_point, congruence_lines, construct_special, d_relative,
                                 demoulin_envelope_geometry, demoulin_seed, intersection_point_formula,
                                 intersection_property, potential, remark_t_check, st_residual,
                                 tzitzeica_potential_affine, tzitzeica_test)
from latticelie.envelope import propagate_envelope
from latticelie.quadric import propagate_quadrics


@pytest.fixture(scope="module")
def gr():
    return construct_special("gr", 3, (5, 5))


@pytest.fixture(scope="module")
def demoulin():
    return construct_special("demoulin", 3, (6, 6))


def test_labels(pm_net, generic_net, gr, demoulin):
    net, p = pm_net
    assert classify(net, p).label == "generic PM"
    q = propagate_quadrics(generic_net, (0, 0), 0.7)
    rep = classify(generic_net, q)
    assert not rep.pm and rep.label == "not PMQ"
    assert classify(gr.net, gr.p).label == "Godeaux-Rozet"
    rep = classify(demoulin.net, demoulin.p, demoulin.envelope)
    assert rep.label == "Demoulin"
    assert rep.godeauxRozet and rep.demoulin and rep.tzitzeica is False


def test_report_serialises(gr):
    rep = classify(gr.net, gr.p)
    d = json.loads(json.dumps(rep.to_json()))
    assert d["label"] == "Godeaux-Rozet" and d["d1"] is True and d["d2"] is False
    assert np.array(d["d1_zero"]).all()


def test_exact_constructions_reach_roundoff(gr, demoulin):
    assert gr.success and gr.residual < 1e-11
    assert demoulin.success
    assert d_relative(demoulin.net, demoulin.p, 2).max() < 1e-11


def test_unknown_target():
    with pytest.raises(ValueError):
        construct_special("helicoid")


def test_hierarchy_guard(gr):
    rep = classify(gr.net, gr.p)
    bad = dataclasses.replace(rep, tzitzeica=True, demoulin=False)
    with pytest.raises(ClassificationError):
        check_hierarchy(bad)
    bad = dataclasses.replace(rep, doublyQ=True, doublyComplex=False)
    with pytest.raises(ClassificationError):
        check_hierarchy(bad)


def test_intersection_property_on_gr_net(gr):
    env = propagate_envelope(gr.net, gr.p, rng=np.random.default_rng(5))
    cl = congruence_lines(gr.net, env, "L")
    res = intersection_property(cl, 1)
    assert res.holds
    for i, j in np.ndindex(res.pairing.shape):
        I1 = intersection_point_formula(gr.net, gr.p, env, (i, j), 1)
        assert pc.proj_distance(res.points[i, j], I1) < 1e-9
    assert not intersection_property(cl, 2).holds


def test_remark_t_check(gr, pm_net):
    assert remark_t_check(gr.net, gr.p) < 1e-10
    assert remark_t_check(*pm_net) > 1e-4


def test_demoulin_points_relabel(demoulin, pm_net):
    geo = demoulin_envelope_geometry(demoulin.net, demoulin.p)
    assert geo.holds
    assert max(geo.relabel.values()) < 1e-10
    with pytest.raises(InconsistencyError):
        demoulin_envelope_geometry(*pm_net)
    with pytest.raises(InconsistencyError):
        demoulin_seed(*pm_net)


def test_demoulin_is_not_tzitzeica(demoulin):
    tz = tzitzeica_test(demoulin.net, demoulin.p, demoulin.envelope)
    assert not tz.holds and tz.residual.max() > 1e-3
    with pytest.raises(InconsistencyError):
        tzitzeica_potential_affine(demoulin.net, demoulin.p, demoulin.envelope)


def test_potential_closes_iff_s1t_equals_t2s():
    rng = np.random.default_rng(0)
    # s and t read off a given phi always satisfy s1 t = t2 s
    a, b = rng.uniform(0.5, 2, 4), rng.uniform(0.5, 2, 4)
    phi0 = np.outer(a, b)
    t = -phi0[1:, :] / phi0[:-1, :]
    s = -phi0[:, 1:] / phi0[:, :-1]
    t = np.vstack([t, t[-1:]])
    s = np.hstack([s, s[:, -1:]])
    phi, mism = potential(s, t)
    assert mism.max() < 1e-14
    np.testing.assert_allclose(phi, phi0 / phi0[0, 0], rtol=1e-12)
    s[1, 1] *= 1.1
    assert potential(s, t)[1].max() > 1e-3


def test_common_point_of_concurrent_lines():
    rng = np.random.default_rng(1)
    O = rng.normal(size=4)
    lines = [pc.line_through(O, rng.normal(size=4)) for _ in range(6)]
    X, worst = common_point(lines)
    assert worst < 1e-12 and pc.proj_distance(X, O) < 1e-10


def test_st_residual_of_generic_envelope(pm_net):
    net, p = pm_net
    env = propagate_envelope(net, p, rng=np.random.default_rng(2))
    assert st_residual(env).max() > 1e-6
