import json
import subprocess
import sys
from pathlib import Path

import pytest

from pretangent import __version__
from pretangent.cli import EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_OK, run

CFG = Path(__file__).resolve().parents[1] / "configs"
LIGHT = ["--n-sphere", "64", "--n-target", "512", "--jobs", "1"]


def test_version(capsys):
    assert run(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_analyze(tmp_path):
    out = tmp_path / "r.json"
    code = run(["analyze", "--space", str(CFG / "reals.json"), "--sequences",
                str(CFG / "seqs_reals.json"), "--norm", str(CFG / "norm_1n.json"),
                "--out", str(out), "--jobs", "1"])
    rep = json.loads(out.read_text())
    assert code == EXIT_OK
    res = rep["result"]
    assert res["family"] == ["a~", "1/n", "2/n"]
    assert res["classes"] == [[0], [1], [2]]
    assert res["rejected"][0]["candidate"] == "interleaved"
    assert res["probes"]["verdict"] == "Not-tangent"
    assert rep["provenance"]["seed"] == 0 and len(rep["provenance"]["schedule"]) == 24


def test_derivative_chain_rule(tmp_path):
    out = tmp_path / "d.json"
    fam = str(CFG / "family_reals.json")
    code = run(["derivative", "--f", str(CFG / "map_double.json"), "--src", fam, "--tgt", fam,
                "--g", str(CFG / "map_triple.json"), "--out", str(out), "--jobs", "1"])
    res = json.loads(out.read_text())["result"]
    assert code == EXIT_OK
    assert res["conditions"]["status"] == "Differentiable"
    # 1/n -> 2/n; 2/n -> 4/n (new class); 6/n -> 12/n (new class)
    assert res["derivative"]["class_map"] == [0, 2, 4, 5]
    assert res["chain_rule"]["holds"] is True


def test_tangency_circle_and_csv(tmp_path):
    plane = tmp_path / "plane.json"
    plane.write_text('{"kind": "euclidean", "dimension": 2}')
    out, csv = tmp_path / "t.json", tmp_path / "t.csv"
    args = ["tangency", "--space", str(plane), "--sub-y", str(CFG / "circle.json"),
            "--sub-z", str(CFG / "tangent_line.json"), "--point", str(CFG / "point_10.json"),
            "--t0", "0.1", "--out", str(out), "--csv", str(csv), *LIGHT]
    assert run(args) == EXIT_OK
    rep = json.loads(out.read_text())
    assert rep["result"]["verdict"]["kind"] == "StronglyTangentEquivalent"
    lines = csv.read_text().splitlines()
    assert lines[0] == "t,eps_zy,eps_yz,eps_min,ratio,empty_flag"
    assert len(lines) == 21  # default 20-point grid
    for row in lines[1:]:
        t, _, _, eps, ratio, _ = row.split(",")
        assert float(ratio) == float(eps) / float(t)
    ts = [float(r.split(",")[0]) for r in lines[1:]]
    assert ts == sorted(ts, reverse=True)


def test_empty_rows_kept(tmp_path):
    seg = tmp_path / "seg.json"
    seg.write_text('{"kind": "parametrized", "chart": "line", '
                   '"params": {"point": [1, 0], "direction": [0, 1], "extent": 0.02}}')
    csv = tmp_path / "e.csv"
    args = ["tangency", "--sub-y", str(CFG / "circle.json"), "--sub-z", str(seg),
            "--point", str(CFG / "point_10.json"), "--t0", "0.1", "--grid-len", "8",
            "--csv", str(csv), "--out", str(tmp_path / "e.json"), *LIGHT]
    run(args)
    rows = csv.read_text().splitlines()[1:]
    assert len(rows) == 8 and any(r.endswith(",1") for r in rows)


def test_missing_file_exit_3(tmp_path, capsys):
    code = run(["validate", "--space", str(tmp_path / "nope.json")])
    assert code == EXIT_INPUT and "nope.json" in capsys.readouterr().err


def test_unknown_key_exit_3(tmp_path, capsys):
    bad = tmp_path / "s.json"
    bad.write_text('{"kind": "euclidean", "dimension": 2, "colour": "red"}')
    assert run(["validate", "--space", str(bad)]) == EXIT_INPUT
    assert "space.colour" in capsys.readouterr().err


def test_bad_flag_exit_3():
    assert run(["validate", "--space", "x.json", "--sample-count", "-4"]) == EXIT_INPUT


def test_unwritable_csv_exit_3(tmp_path):
    args = ["tangency", "--sub-y", str(CFG / "circle.json"), "--sub-z",
            str(CFG / "tangent_line.json"), "--point", str(CFG / "point_10.json"),
            "--grid-len", "8", "--csv", str(tmp_path / "no" / "dir" / "x.csv"),
            "--out", str(tmp_path / "x.json"), *LIGHT]
    assert run(args) == EXIT_INPUT


def test_validate_finite_failure(tmp_path):
    bad = tmp_path / "f.json"
    bad.write_text('{"kind": "finite", "matrix": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]}')
    assert run(["validate", "--space", str(bad)]) == EXIT_INPUT


def test_rotation_small_alpha_exit_2(tmp_path):
    out = tmp_path / "g.json"
    code = run(["gallery", "run", "rotation-body", "--alpha", "0.05", "--out", str(out),
                "--n-sphere", "128", "--n-target", "1024", "--jobs", "1"])
    assert code == EXIT_INCONCLUSIVE
    rep = json.loads(out.read_text())
    assert rep["result"]["rotation-body"]["verdict"]["kind"] == "Inconclusive"


def test_report_round_trip(tmp_path):
    out = tmp_path / "r.json"
    run(["analyze", "--space", str(CFG / "reals.json"), "--sequences",
         str(CFG / "seqs_reals.json"), "--norm", str(CFG / "norm_1n.json"), "--out", str(out),
         "--no-probe", "--jobs", "1"])
    text = out.read_text()
    again = json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"
    assert again.rstrip("\n") == text.rstrip("\n")


def test_console_script_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"v{k}.json"
        subprocess.run([sys.executable, "-m", "pretangent.cli", "validate", "--space",
                        str(CFG / "reals.json"), "--out", str(out), "--seed", "5"], check=True)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
