from __future__ import annotations

import json

import pytest

from hbundle.cli import main


def run(tmp_path, capsys, *argv):
    out = tmp_path / "report.json"
    code = main(["--out", str(out), *argv])
    err = capsys.readouterr().err
    rep = json.loads(out.read_text()) if out.exists() else None
    return code, rep, err


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def test_sl2_identity(tmp_path, capsys):
    code, rep, _ = run(tmp_path, capsys, "sl2", "--in", write(tmp_path, "m.json", {"gamma": [[1, 0], [0, 1]]}))
    assert code == 0
    assert rep["pass"]
    assert rep["data"]["gr_dims"] == {"0": 2}


def test_malformed_json_exit_2_with_location(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "sl2", "--in", write(tmp_path, "bad.json", '{"gamma": [[1, 1], [0'))
    assert code == 2
    assert "bad.json:1:" in err


def test_bad_entry_names_position(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "sl2", "--in", write(tmp_path, "m.json", {"gamma": [[1, True], [0, 1]]}))
    assert code == 2
    assert "[0][1]" in err


def test_energy_example(tmp_path, capsys):
    code, rep, _ = run(tmp_path, capsys, "energy", "--model", write(tmp_path, "m.json", {"profile": [2]}), "--y0", "10")
    assert code == 0
    assert rep["data"]["rel_err"] < 5e-3


def test_dbar_excluded_weight(tmp_path, capsys):
    code, _, err = run(tmp_path, capsys, "dbar", "--k", "1")
    assert code == 1
    assert "excluded weight" in err


def test_dbar_named_case(tmp_path, capsys):
    rhs = write(tmp_path, "rhs.json", {"case": "tbar_over_abs2"})
    code, rep, _ = run(tmp_path, capsys, "dbar", "--k", "2", "--rhs", rhs, "--grid", "128x64")
    assert code == 0
    assert rep["pass"]


def test_failing_check_exit_1(tmp_path, capsys):
    model = write(tmp_path, "m.json", {"profile": [3], "normalization": "chain"})
    code, _, err = run(tmp_path, capsys, "kahler", "--model", model, "--trials", "2", "--sizes", "16", "32")
    # the chain model is not harmonic, so the Laplacian identity fails
    assert code == 1
    assert "failing checks" in err


def test_l2check_germs(tmp_path, capsys):
    germs = [
        {"vars": 2, "terms": [{"a": [0, 0], "form": [], "labels": [0, 0]}]},
        {"vars": 2, "terms": [{"a": [0, 0], "form": ["dt1/t1"], "labels": [0, 0]}]},
    ]
    code, rep, _ = run(tmp_path, capsys, "l2check", "--germs", write(tmp_path, "g.json", germs))
    assert code == 0
    assert [r["predicate"] for r in rep["data"]["germs"]] == [True, False]


def test_reports_are_reproducible(tmp_path, capsys):
    model = write(tmp_path, "m.json", {"profile": [3], "normalization": "unitary"})
    texts = []
    for i in range(2):
        out = tmp_path / f"r{i}.json"
        assert main(["--out", str(out), "model", "--model", model, "--seed", "4"]) == 0
        texts.append(out.read_text())
    assert texts[0] == texts[1]
    assert "wall_time" not in texts[0]


def test_unknown_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["bogus"])
    assert e.value.code == 2
