import csv
import json

import pytest

from stmg import cli


def run_cli(argv):
    return cli.main(argv)


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli(["lfa", "--help"])
    assert exc.value.code == 0
    assert "usage" in capsys.readouterr().out


def test_bad_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli(["lfa", "--strategy", "diag", "--pt", "0"])
    assert exc.value.code == 2
    assert "--strategy" in capsys.readouterr().err


def test_lfa_command_writes_csv_and_manifest(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code = run_cli(
        [
            "lfa",
            "--strategy",
            "full",
            "--pt",
            "1",
            "--mu-list",
            "800",
            "--nx",
            "32",
            "--slabs",
            "8",
            "--threads",
            "1",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 1
    assert float(rows[0]["contraction"]) == pytest.approx(0.375, abs=0.02)
    manifest = json.loads(out.with_suffix(".manifest.json").read_text())
    assert manifest["command"] == "lfa"
    assert manifest["parameters"]["pt"] == 1


def test_solve_command_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = [
        "solve",
        "--pt",
        "0",
        "--px",
        "0",
        "--mu",
        "600",
        "--nx",
        "64",
        "--slabs",
        "8",
        "--iters",
        "20",
    ]
    assert run_cli(argv + ["--out", str(out1)]) == 0
    assert run_cli(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = list(csv.DictReader(out1.open()))
    assert rows[0]["iteration"] == "0"
    assert rows[-1]["rate"] != ""
    assert 0.0 < float(rows[-1]["rate"]) < 1.0


def test_solve_single_iteration_has_no_rate(tmp_path):
    out = tmp_path / "one.csv"
    code = run_cli(
        ["solve", "--pt", "0", "--px", "0", "--mu", "10", "--nx", "16", "--slabs", "4",
         "--iters", "1", "--out", str(out)]
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert all(r["rate"] == "" for r in rows)
    assert rows[1]["ratio"] != ""


def test_solve_rejects_rectangular_2d(tmp_path, capsys):
    code = run_cli(
        ["solve", "--dims", "2", "--pt", "0", "--px", "0", "--mu", "10", "--nx", "8",
         "--ny", "16", "--slabs", "4", "--out", str(tmp_path / "x.csv")]
    )
    assert code == 2


def test_verify_passes():
    assert run_cli(["verify"]) == 0


def test_verify_json(capsys):
    assert run_cli(["verify", "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert all(entry["passed"] for entry in doc)
    names = [entry["name"] for entry in doc]
    assert names[0] == "lobatto_equivalence"


def test_verify_fault_injection(capsys):
    code = run_cli(["verify", "--inject-fault", "ctau-sign"])
    assert code == 1
    err = capsys.readouterr().err
    assert "lobatto_equivalence" in err


def test_verify_rejects_unknown_fault(capsys):
    code = run_cli(["verify", "--inject-fault", "nonsense"])
    assert code == 2
    assert "unknown fault" in capsys.readouterr().err
