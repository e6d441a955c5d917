import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from latticelie import cli_io
from latticelie.cauchy import random_cauchy_data, rational_net
from latticelie.cli_io import (NetFormatError, VersionError, document_from_cauchy, document_from_net,
                               export_obj, from_json, load_net, main, save_net, to_json)
from latticelie.envelope import propagate_envelope

from oracles.checks import parse_obj


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=36, max_size=36))
def test_float_roundtrip_is_bit_exact(vals):
    pts = np.array(vals).reshape(3, 3, 4)
    doc = cli_io.NetDocument(3, 3, pts)
    back = from_json(json.loads(json.dumps(to_json(doc))))
    assert np.array_equal(back.points, pts)


def test_rational_roundtrip():
    net = rational_net(2, 3, 3)
    doc = document_from_net(net)
    back = from_json(json.loads(json.dumps(to_json(doc))), rational=True)
    assert back.points.dtype == object
    assert all(a == b for a, b in zip(back.points.ravel(), net.points.ravel()))
    # decimal strings are read exactly in rational mode
    obj = to_json(doc)
    obj["points"][0][0] = "0.1"
    assert from_json(obj, rational=True).points[0, 0, 0] == Fraction(1, 10)


def test_document_with_quadrics_and_envelope(tmp_path, pm_net):
    net, p = pm_net
    env = propagate_envelope(net, p, rng=np.random.default_rng(0))
    path = tmp_path / "n.json"
    save_net(document_from_net(net, p, env, {"seed": 7}), path)
    doc = load_net(path)
    np.testing.assert_array_equal(doc.p_field, p)
    again = doc.envelope_object(doc.net(), doc.p_field)
    np.testing.assert_allclose(np.abs(again.points), np.abs(env.points), atol=1e-12)
    assert doc.metadata == {"seed": 7}


def test_cauchy_document(tmp_path):
    data = random_cauchy_data(1, 4, 5)
    path = tmp_path / "c.json"
    save_net(document_from_cauchy(data), path)
    doc = load_net(path)
    back = doc.cauchy()
    assert back.p0 == data.p0
    np.testing.assert_array_equal(np.isnan(back.points), np.isnan(data.points))
    with pytest.raises(NetFormatError):
        doc.net()


@pytest.mark.parametrize("mutate, field", [
    (lambda o: o.pop("rows"), "rows"),
    (lambda o: o["points"].pop(), "points"),
    (lambda o: o["points"][3].__setitem__(1, "abc"), "points[3][1]"),
    (lambda o: o["points"][2].__setitem__(0, 1.5), "points[2][0]"),
    (lambda o: o.__setitem__("kind", "mesh"), "kind"),
    (lambda o: o.__setitem__("p_field", [["1.0"]]), "p_field"),
])
def test_malformed_documents_name_the_field(mutate, field):
    obj = to_json(document_from_net(rational_net(1, 3, 3).to_float()))
    mutate(obj)
    with pytest.raises(NetFormatError) as info:
        from_json(obj)
    assert info.value.field == field


def test_version_checked():
    obj = to_json(document_from_net(rational_net(1, 3, 3)))
    obj["format_version"] = 99
    with pytest.raises(VersionError):
        from_json(obj)


def test_obj_export(tmp_path, pm_net):
    net, p = pm_net
    env = propagate_envelope(net, p, rng=np.random.default_rng(0))
    rep = export_obj(net, tmp_path / "m.obj", p, env, samples=4)
    verts, faces, groups = parse_obj(tmp_path / "m.obj")
    assert groups[:2] == ["net", "envelope"] and f"quadric_{net.rows - 2}_{net.cols - 2}" in groups
    assert len(verts) == rep.vertices == net.rows * net.cols + env.shape[0] * env.shape[1] + 25 * 16
    assert len(faces) == rep.faces
    assert np.all(np.isfinite(verts))


def test_obj_chart_avoids_infinity(tmp_path):
    pts = np.random.default_rng(0).normal(size=(3, 3, 4))
    pts[..., 3] = 0.0
    from latticelie.net import AsymptoticNet
    rep = export_obj(AsymptoticNet(pts), tmp_path / "c.obj")
    assert rep.chart != 3 and rep.clipped == 0


def test_cli_pipeline(tmp_path, capsys):
    c, e, o = tmp_path / "c.json", tmp_path / "e.json", tmp_path / "m.obj"
    assert run(["generate", "--seed", 3, "--rows", 5, "--cols", 5, "--out", c], capsys)[0] == 0
    assert run(["evolve", "--cauchy", c, "--p0", 0.8, "--out", e], capsys)[0] == 0
    code, out, _ = run(["classify", "--net", e, "--json"], capsys)
    rep = json.loads(out)
    assert code == 0 and rep["pm"] and rep["label"] == "generic PM" and rep["backend"] == "float"
    code, out, _ = run(["envelope", "--net", e, "--s0", 0.3, "--t0", -0.7, "--out", e], capsys)
    assert code == 0 and json.loads(out)["closes"]
    code, out, _ = run(["verify", "--net", e], capsys)
    assert code == 0 and json.loads(out)["passed"]
    assert run(["export", "--net", e, "--out", o], capsys)[0] == 0
    parse_obj(o)


def test_cli_errors(tmp_path, capsys):
    assert run(["classify"], capsys)[0] == 2
    assert run(["verify", "--net", tmp_path / "missing.json"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["verify", "--net", bad], capsys)
    assert code == 2 and "line 1" in err
    # a net that is not asymptotic fails verification with exit 1
    pts = np.random.default_rng(0).normal(size=(4, 4, 4))
    save_net(cli_io.NetDocument(4, 4, pts), tmp_path / "x.json")
    code, out, _ = run(["verify", "--net", tmp_path / "x.json"], capsys)
    assert code == 1 and not json.loads(out)["checks"]["asymptotic"]["passed"]


def test_backend_variable(tmp_path, capsys, monkeypatch):
    save_net(document_from_net(rational_net(3, 4, 4)), tmp_path / "r.json")
    monkeypatch.setenv("LATTICE_LIE_BACKEND", "rational")
    code, out, _ = run(["verify", "--net", tmp_path / "r.json"], capsys)
    assert code == 0 and json.loads(out)["backend"] == "rational"
    monkeypatch.setenv("LATTICE_LIE_BACKEND", "quad")
    assert run(["verify", "--net", tmp_path / "r.json"], capsys)[0] == 2
