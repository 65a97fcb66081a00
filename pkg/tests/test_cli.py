import csv
import io
import json
import math
import subprocess
import sys

import pytest

from conftest import FIXTURES, GOLDEN_CASES, golden, run_captured


@pytest.mark.parametrize("name", sorted(GOLDEN_CASES))
def test_golden_runs(name):
    code, out, _ = run_captured(GOLDEN_CASES[name])
    want_code, want_out = golden(name)
    assert code == want_code
    assert out == want_out


def test_golden_values_are_sensible():
    rows = list(csv.reader(io.StringIO(golden("extremal_1_10")[1])))
    assert rows[0] == ["n0", "L", "k", "l", "x0", "min_prob", "poisson_prob", "gap"]
    row = dict(zip(rows[0], rows[1]))
    assert abs(float(row["min_prob"]) - math.exp(-1)) < 1e-7
    assert 0 <= float(row["gap"]) <= 1e-7

    v = json.loads(golden("validate_112")[1])
    assert v["is_log_concave"] is False and v["worst_index"] == 1
    t = json.loads(golden("verify_2_15")[1])
    assert t["violations"] == 0


def test_reruns_are_byte_identical():
    argv = ["dof", "--input", "{fixtures}/seq_112.json"]
    assert run_captured(argv) == run_captured(argv)


def test_validate_pmf_reports_ulc(tmp_path):
    f = tmp_path / "p.json"
    f.write_text(json.dumps({"offset": 0, "values": [0.25, 0.5, 0.25], "kind": "pmf"}))
    code, out, _ = run_captured(["validate", "--input", str(f)])
    assert code == 0 and json.loads(out)["ulc_inf"] is True
    f.write_text(json.dumps({"offset": 0, "values": [0.2] * 5, "kind": "pmf"}))
    code, out, _ = run_captured(["validate", "--input", str(f)])
    assert code == 1 and json.loads(out)["ulc_inf"] is False


def test_dof_subcommand(tmp_path):
    f = tmp_path / "g.json"
    f.write_text(json.dumps({"offset": 0, "values": [1, 0.5, 0.25, 0.125]}))
    code, out, _ = run_captured(["dof", "--input", str(f), "--samples", "30"])
    assert code == 0
    d = json.loads(out)
    assert len(d["basis"]) == 2 and d["trials"] == 30


def test_family_subcommand():
    code, out, err = run_captured(["family", "--k", "1", "--l", "2", "--x", "1.5"])
    assert code == 0 and "checks pass" in err
    d = json.loads(out)
    assert math.isclose(d["y0"], math.sqrt(2), rel_tol=1e-10)
    assert d["claim1_ok"] is True and d["h_check"]["ok"] is True


def test_family_csv_is_flat():
    code, out, _ = run_captured(["family", "--k", "0", "--l", "4", "--x", "2", "--emit", "csv"])
    header, row = list(csv.reader(io.StringIO(out)))
    assert code == 0 and "profile.claim1" in header and len(header) == len(row)


def test_suite_subcommand():
    code, out, _ = run_captured(["suite", "--support", "6", "--cases", "20", "--seed", "1"])
    assert code == 0 and json.loads(out)["ok"] is True


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["bogus"],
        ["extremal", "--mean", "x", "--support", "3"],
        ["extremal", "--mean", "5", "--support", "3"],
        ["verify", "--mean", "0", "--support", "3"],
        ["validate", "--input", "/nonexistent/file.json"],
        ["family", "--k", "3", "--l", "1", "--x", "1"],
        ["family", "--k", "0", "--l", "2", "--x", "-1"],
        ["suite", "--support", "1"],
        ["validate", "--input", "{fixtures}/seq_112.json", "--emit", "xml"],
    ],
)
def test_usage_errors_exit_two(argv):
    assert run_captured(argv)[0] == 2


def test_malformed_json_message_is_line_anchored(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"offset": 0,\n "values": [1, 2,]}')
    code, out, err = run_captured(["validate", "--input", str(f)])
    assert code == 2 and out == ""
    assert f"{f}:2:" in err


def test_invalid_sequence_message(tmp_path):
    f = tmp_path / "str.json"
    f.write_text(json.dumps({"offset": 0, "values": [1, "a"]}))
    code, _, err = run_captured(["dof", "--input", str(f)])
    assert code == 2 and f"{f}:1:" in err


def test_help_exits_zero():
    assert run_captured(["--help"])[0] == 0


def test_console_entry_point():
    r = subprocess.run(
        [sys.executable, "-m", "ulc.cli", "validate", "--input", str(FIXTURES / "seq_112.json")],
        capture_output=True, text=True,
    )
    assert r.returncode == 1
    assert r.stdout == golden("validate_112")[1]
