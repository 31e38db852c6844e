import json
import subprocess
import sys

import pytest

from nilzeta.cli import corpus_names, main


def run(capsys, *argv):
    status = main(list(argv))
    return status, json.loads(capsys.readouterr().out)


def test_corpus_is_bundled():
    assert corpus_names() == ["class3_example", "free_class2_3gen", "heisenberg", "heisenberg_plus_abelian"]


def test_local_zeta(capsys):
    status, doc = run(capsys, "local-zeta", "--lattice", "heisenberg.json", "--p", "3", "--n-max", "3")
    assert status == 0
    assert [c for _, c in doc["coeffs"]] == ["1", "2", "6", "18"]


def test_local_zeta_quadratic(capsys):
    status, doc = run(
        capsys, "local-zeta", "--lattice", "heisenberg", "--p", "3", "--f", "2", "--g", "1,0,1", "--n-max", "2"
    )
    assert status == 0 and doc["q"] == 9
    assert [c for _, c in doc["coeffs"]] == ["1", "8", "72"]


def test_analyze_rays(capsys):
    status, doc = run(capsys, "analyze", "--rays", "[[1,-1]]")
    assert status == 0
    assert (doc["a"], doc["beta"], doc["P"]) == ("2", 1, ["1"])


def test_validate_reports_jacobi_witness(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"rank": 4, "brackets": [[1, 2, [0, 0, 1, 0]], [2, 3, [0, 0, 0, 1]], [1, 4, [0, 0, 0, 1]]]}))
    status, doc = run(capsys, "validate", "--lattice", str(bad))
    assert status == 2
    assert doc["error"] == "JacobiViolation" and doc["witness"] == [1, 2, 3]


def test_validate_ok(capsys):
    status, doc = run(capsys, "validate", "--lattice", "class3_example", "--p", "5")
    assert status == 0
    assert doc["nilpotency_class"] == 3 and doc["exclusion_index"] == "36"
    assert doc["adapted_basis"]["d"] == 2


def test_module_errors_become_json(capsys):
    status, doc = run(capsys, "local-zeta", "--lattice", "class3_example", "--p", "3", "--n-max", "1")
    assert status == 2 and doc["error"] == "ExcludedPrime"
    status, doc = run(capsys, "local-zeta", "--lattice", "missing.json", "--p", "3", "--n-max", "1")
    assert status == 2 and doc["error"] == "FileNotFoundError"


def test_fit_predict_and_analyze(capsys, tmp_path):
    out = tmp_path / "fit.json"
    status, doc = run(capsys, "fit", "--lattice", "heisenberg", "--predict", "11", "-o", str(out))
    assert status == 0
    assert doc["W"] == {"num": [[0, 0, "1"], [0, 1, "-1"]], "den": [[1, 1]]}
    assert doc["functional_equation"] == {"sign": 1, "a": 1, "b": 0, "verified": True}
    assert doc["predictions"][0]["coeffs"] == ["1", "10", "110", "1210"]
    assert json.loads(out.read_text()) == doc
    assert "timestamp" in json.loads((tmp_path / "fit.json.meta.json").read_text())
    status, doc = run(capsys, "analyze", "--fit", str(out))
    assert (doc["a"], doc["beta"], doc["P"]) == ("2", 1, ["1"])


def test_fit_from_series_literal(capsys):
    series = json.dumps([{"q": q, "coeffs": [1, 0, 0, 0, 0]} for q in (2, 3, 5)])
    status, doc = run(capsys, "fit", "--series", series)
    assert status == 0 and doc["W"] == {"num": [[0, 0, "1"]], "den": []}


def test_euler(capsys):
    status, doc = run(capsys, "euler", "--lattice", "heisenberg", "--N-bound", "10")
    assert doc["coeffs"] == ["1", "1", "2", "2", "4", "2", "6", "4", "6", "4"]


def test_oracle_and_compare(capsys):
    status, doc = run(capsys, "oracle", "--lattice", "heisenberg", "--p", "3")
    assert (doc["order"], doc["classes"], doc["degrees"], doc["twist_counts"]) == (
        27,
        11,
        {"1": 9, "3": 2},
        {"1": 1, "3": 2},
    )
    status, doc = run(capsys, "compare", "--lattice", "heisenberg", "--p", "3", "--N", "2")
    assert status == 0 and doc["matched"] and doc["oracle_counts"] == [1, 2]


def test_report(capsys):
    status, doc = run(capsys, "report", "--lattice", "heisenberg", "--field", "Q(i)", "--n-max", "4", "--N-bound", "50")
    assert status == 0
    assert doc["analysis"]["a"] == "2" and doc["global_coefficients"][4] == "8"


def test_output_is_byte_identical_across_runs_and_workers(tmp_path):
    outputs = []
    for workers in ("1", "8", "1"):
        path = tmp_path / f"out{len(outputs)}.json"
        subprocess.run(
            [sys.executable, "-m", "nilzeta", "local-zeta", "--lattice", "free_class2_3gen", "--p", "3",
             "--n-max", "1", "--workers", workers, "-o", str(path)],
            check=True,
            capture_output=True,
        )
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_bad_arguments_exit_nonzero():
    with pytest.raises(SystemExit):
        main(["local-zeta", "--lattice", "heisenberg", "--p", "0", "--n-max", "1"])
