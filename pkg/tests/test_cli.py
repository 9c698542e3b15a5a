import json
import random

import pytest

from coarsefields import blocks, cli, io, metric


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture
def files(tmp_path):
    rng = random.Random(7)
    X, Y, Z = (metric.random_space(rng, 3, prefix=p) for p in "xyz")
    d1, d2 = metric.random_glue(rng, X, Y), metric.random_glue(rng, Y, Z)
    paths = {}
    for name, doc in {
        "X": io.enc_space(X),
        "Y": io.enc_space(Y),
        "d1": io.enc_glue(d1),
        "d2": io.enc_glue(d2),
        "chain3": {"elements": [0, 1, 2], "relation": [[0, 1], [1, 2]]},
        "b3": io.enc_block(blocks.b_sequence(3)),
        "diag": io.enc_block(blocks.diagonal({1: "I", 2: "I"})),
        "wide": io.enc_block(blocks.BlockClassMatrix({(1, 1): "I", (2, 2): "I", (3, 4): "I"})),
        "bad": {"entries": [{"i": 1, "j": 1, "class": "I"}, {"i": 1, "j": 2, "class": "I"}]},
    }.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        paths[name] = str(p)
    paths["dir"] = tmp_path
    return paths


def test_corona_phi_reports_value_and_index(capsys, files):
    code, rep = run(capsys, "corona", "phi", "--matrix", files["b3"], "--margin", "16")
    assert code == 0 and rep["result"]["value"] == 1 and rep["result"]["N"] == 3
    assert rep["anchor"]


def test_compose_writes_the_glue_with_midpoints(capsys, files):
    out = files["dir"] / "d.json"
    code, rep = run(capsys, "metric", "compose", "--left", files["d1"], "--right", files["d2"], "--out", str(out))
    assert code == 0
    d = io.dec_glue(json.loads(out.read_text()))
    assert d.midpoints is not None and len(d.cross) == 3


def test_spectrum_of_a_chain(capsys, files):
    code, rep = run(capsys, "topology", "spectrum", "--poset", files["chain3"], "--generators", "all")
    assert code == 0 and len(rep["result"]["points"]) == 3


def test_metric_group(capsys, files):
    assert run(capsys, "metric", "validate", "--input", files["d1"])[0] == 0
    assert run(capsys, "metric", "derive", "--glue", files["d1"])[0] == 0
    assert run(capsys, "metric", "compare", "--first", files["d1"], "--second", files["d1"])[1]["result"]["kind"] == "equivalent"
    code, rep = run(capsys, "metric", "smallest", "--left", files["X"], "--right", files["Y"])
    assert code == 0 and rep["result"]["gap"] == [1, 1]
    code, rep = run(capsys, "--seed", "3", "metric", "glue", "--left", files["X"], "--right", files["Y"])
    assert code == 0


def test_topology_group(capsys, files):
    assert run(capsys, "topology", "subbase", "--poset", files["chain3"])[0] == 0
    code, rep = run(capsys, "topology", "separate", "--poset", files["chain3"], "--a", "0", "--b", "2")
    assert rep["result"]["first"]["term"] == "V_2"
    code, rep = run(capsys, "topology", "urysohn", "--poset", files["chain3"], "--closed", "[2]", "--a", "1")
    assert rep["result"]["f"]["1"] == 1 and rep["result"]["f"]["2"] == 0
    code, rep = run(capsys, "topology", "refute-cover", "--poset", files["chain3"], "--candidate", "[]")
    assert rep["result"]["uncovered"] == 0


def test_corona_group_exit_codes(capsys, files):
    assert run(capsys, "corona", "validate", "--matrix", files["bad"])[0] == 1
    assert run(capsys, "corona", "leq", "--left", files["diag"], "--right", files["wide"])[0] == 3
    code, rep = run(capsys, "corona", "leq", "--left", files["b3"], "--right", files["diag"])
    assert code == 0 and rep["result"]["verdict"] == "not-leq"
    code, rep = run(capsys, "corona", "refute", "--matrix", files["b3"])
    assert rep["result"]["exceptions"] == [1, 2, 3]
    code, rep = run(capsys, "corona", "escape", "--matrix", files["b3"])
    assert rep["result"]["branch"] == "b_4"
    assert run(capsys, "corona", "bseq", "--k", "0")[0] == 2


def test_malformed_input_exits_2(capsys, files):
    code, rep = run(capsys, "metric", "validate", "--input", str(files["dir"] / "missing.json"))
    assert code == 2 and rep["error"] == "StructuralError"
    with pytest.raises(SystemExit) as err:
        cli.main(["corona"])
    assert err.value.code == 2


def test_export_dot(capsys, files):
    out = files["dir"] / "p.dot"
    code, rep = run(capsys, "export", "dot", "--poset", files["chain3"], "--out", str(out))
    assert code == 0 and out.read_text().startswith("digraph")


def test_exit_code_contract_is_total():
    from coarsefields import errors

    classes = [errors.StructuralError, errors.PreconditionError, errors.InvariantViolation,
               errors.GridTooCoarse, errors.Inconclusive]
    assert {c.exit_code for c in classes} == {1, 2, 3}
