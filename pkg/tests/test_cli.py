import json
import subprocess
import sys

import pytest

from choreogame.cli import dumps, main
from conftest import ROOT

TOY = ROOT / "instances" / "toy_completion.json"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_analyze_pair(capsys, example1_path):
    code, rep, err = run(capsys, "analyze", example1_path, "--coalition", "O2,O4",
                         "--alpha-override", "2")
    assert code == 0
    x = rep["payload"]["imputation"]
    assert x[1] == 9 and x[3] == 9
    assert "feasible" in err


def test_analyze_grand(capsys, example1_path):
    code, rep, _ = run(capsys, "analyze", example1_path, "--alpha-override", "2")
    assert code == 0
    assert rep["payload"]["imputation"] == [168, 0, 24, 24]
    assert rep["instance"] == {"n": 4, "objective": "sum_energy", "alpha": 2,
                               "organizations": ["O1", "O2", "O3", "O4"]}


def test_analyze_infeasible_exit_code(capsys, tmp_path):
    doc = {"objective": "sum_energy", "alpha": 2.0, "organizations": [
        {"id": "A", "machines": 1, "jobs": []},
        {"id": "B", "machines": 2, "jobs": []},
        {"id": "C", "machines": 1, "jobs": [{"deadline": 1}] * 4}]}
    path = tmp_path / "neg.json"
    path.write_text(json.dumps(doc))
    code, rep, _ = run(capsys, "analyze", path)
    assert code == 3
    assert rep["payload"]["violating"] == [0]


def test_missing_file(capsys):
    code, rep, err = run(capsys, "analyze", "missing.json")
    assert code == 1 and rep is None and "cannot read" in err


def test_bad_instance(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"objective": "sum_energy", "alpha": 1.0, "organizations": []}')
    code, _, err = run(capsys, "value", path)
    assert code == 1 and "alpha must exceed 1" in err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["analyze"])
    assert info.value.code == 1


@pytest.mark.parametrize("coalition, alpha, expected", [
    ("O1,O3,O4", "2", 216), ("O3,O4", "2", 0), ("O2", "2", 0), ("O1,O3,O4", "3", 19 ** 3 + 2 - 3 * 7 ** 3)])
def test_value(capsys, example1_path, coalition, alpha, expected):
    code, rep, _ = run(capsys, "value", example1_path, "--coalition", coalition,
                       "--alpha-override", alpha)
    assert code == 0 and rep["payload"]["value"] == expected


def test_schedule_grand(capsys, example1_path):
    code, rep, _ = run(capsys, "schedule", example1_path)
    assert code == 0
    pay = rep["payload"]
    assert pay["total_cost"] == 4 * 7 ** 3
    per_machine = {}
    for piece in pay["placement"]:
        per_machine[piece["machine"]] = per_machine.get(piece["machine"], 0) + \
            (piece["end"] - piece["start"]) * piece["speed"]
    assert all(w == pytest.approx(7.0) for w in per_machine.values())
    assert len(per_machine) == 4


def test_schedule_singleton_is_localcost(capsys, example1_path):
    code, rep, _ = run(capsys, "schedule", example1_path, "--coalition", "O2")
    assert rep["payload"]["total_cost"] == 7 ** 3


def test_schedule_completion_toy(capsys):
    code, rep, _ = run(capsys, "schedule", TOY)
    assert code == 0 and rep["payload"]["total_cost"] == 10


def test_verify(capsys, example1_path):
    code, rep, _ = run(capsys, "verify", example1_path, "--coalition", "O2,O4",
                       "--alpha-override", "2", "--imputation", "9,9", "--epsilon", "1e-3")
    assert code == 0 and rep["payload"]["stable"] is True
    code, rep, _ = run(capsys, "verify", example1_path, "--coalition", "O2,O4",
                       "--alpha-override", "2", "--imputation", "10,8")
    assert code == 3
    matrix = rep["payload"]["counter_bound_matrix"]
    assert matrix[3][1] is False and matrix[1][3] is True


def test_verify_wrong_length(capsys, example1_path):
    code, _, err = run(capsys, "verify", example1_path, "--imputation", "1,2,3")
    assert code == 1 and "entries" in err


def test_reports_are_byte_identical(example1_path):
    cmd = [sys.executable, "-m", "choreogame", "analyze", str(example1_path)]
    a = subprocess.run(cmd, capture_output=True, check=True).stdout
    b = subprocess.run(cmd, capture_output=True, check=True).stdout
    assert a == b and a


def test_dumps_17_digits():
    text = dumps({"a": 0.1, "b": [1.0 / 3], "c": None, "d": True})
    assert text == '{"a": 0.10000000000000001, "b": [0.33333333333333331], "c": null, "d": true}'
    back = json.loads(text)
    assert back["a"] == 0.1 and back["b"][0] == 1.0 / 3
