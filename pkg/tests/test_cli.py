import json
import subprocess
import sys

import pytest

from cyclosgp.cli import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("argv,code", [
    (["simulate", "--n", "256"], EXIT_USAGE),
    (["simulate", "--d", "2", "--n", "100"], EXIT_USAGE),
    (["simulate", "--d", "2", "--trials", "0"], EXIT_USAGE),
    (["attack", "--k", "13"], EXIT_USAGE),
    (["attack", "--k", "10"], EXIT_USAGE),
    (["attack", "--k", "9", "--mode", "pip"], EXIT_USAGE),
    (["resources", "--k", "13"], EXIT_USAGE),
    (["schemes", "--only", "nonexistent"], EXIT_USAGE),
    (["schemes", "--mode", "empirical"], EXIT_USAGE),
    (["schemes", "--empirical", "/nonexistent/stats.json"], EXIT_USAGE),
    (["bogus"], EXIT_USAGE),
    (["attack", "--k", "4", "--threads", "0"], EXIT_USAGE),
])
def test_usage_errors(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", "--d", "4", "--n", "256", "--trials", "500", "--seed", "1", "--threads", "2")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["schema_version"] == 1
    assert 8 < d["summary"]["median_gamma"] < 20


def test_simulate_gaussian_sigma(capsys):
    code, out, _ = run(capsys, "simulate", "--model", "gaussian", "--d", "1", "--trials", "3000", "--threads", "2")
    assert json.loads(out)["summary"]["mean_sigma_sq"] == pytest.approx(0.411, rel=0.05)


def test_simulate_byte_identical_without_meta(capsys):
    args = ("simulate", "--d", "2", "--trials", "200", "--no-meta")
    a = run(capsys, *args, "--threads", "1")[1]
    b = run(capsys, *args, "--threads", "3")[1]
    assert a == b


def test_simulate_plot_data(capsys, tmp_path):
    p = tmp_path / "plot.csv"
    code, _, _ = run(capsys, "simulate", "--d", "1", "--n", "64", "--trials", "200", "--emit-plot-data", str(p))
    assert code == EXIT_OK and p.read_text().startswith("series,x,y")


def test_attack_k6(capsys):
    code, out, err = run(capsys, "attack", "--k", "6", "--exp-bound", "64", "--seed", "7", "--no-meta")
    assert code == EXIT_OK
    d = json.loads(out)
    assert d["exact_recovery"] and d["planted_exponents"] == d["recovered_exponents"]
    assert "PASS" in err


def test_attack_k3(capsys):
    code, out, _ = run(capsys, "attack", "--k", "3", "--exp-bound", "5", "--no-meta")
    assert code == EXIT_OK and json.loads(out)["exact_recovery"]


def test_attack_threshold_failure_exit_1(capsys):
    code, _, err = run(capsys, "attack", "--k", "5", "--threshold", "1.0", "--retries", "0")
    assert code == EXIT_FAILURE and "FAIL" in err


def test_attack_pip_mode(capsys):
    code, out, _ = run(capsys, "attack", "--k", "5", "--mode", "pip", "--seed", "3", "--no-meta")
    assert code == EXIT_OK and json.loads(out)["verified"]
    code, out, _ = run(capsys, "attack", "--k", "3", "--mode", "pip", "--exp-bound", "3", "--no-meta")
    assert code == EXIT_OK and json.loads(out)["e"] == 3


def test_attack_byte_identical(capsys):
    args = ("attack", "--k", "5", "--seed", "2", "--no-meta")
    assert run(capsys, *args)[1] == run(capsys, *args)[1]


def test_resources(capsys):
    code, out, _ = run(capsys, "resources", "--k", "9")
    assert code == EXIT_OK
    row = next(line for line in out.splitlines() if line.startswith("Oracle gates per HSP call"))
    assert row.split()[-1] == "2048"
    code, out, _ = run(capsys, "resources", "--k", "3")
    assert code == EXIT_OK and "New units at top level (Delta r_3)" in out
    code, out, _ = run(capsys, "resources", "--k", "9", "--format", "json", "--no-meta")
    d = json.loads(out)
    assert d["rows"]["oracle_gates_top"] == 2048 and d["logical_qubits"] == 1400


def test_schemes_table(capsys):
    code, out, _ = run(capsys, "schemes")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0].split() == ["Scheme", "Family", "d", "n", "q", "γ_th", "γ_99%", "Threshold", "Margin"]
    assert sum(1 for line in lines[2:] if line and line.split()[0].rstrip("^") in
               {"ML-KEM-512", "ML-KEM-768", "ML-KEM-1024", "Falcon-512", "Falcon-1024", "Hawk-256", "Hawk-512",
                "Hawk-1024", "NTRU-HPS-2048-509", "NTRU-HPS-2048-677", "NTRU-HPS-4096-821", "NTRU-HRSS-701"}) == 12


def test_schemes_hawk_empirical(capsys, tmp_path):
    stats = tmp_path / "stats.json"
    assert run(capsys, "simulate", "--model", "gaussian", "--d", "2", "--trials", "1000", "--per-trial",
               "--out", str(stats))[0] == EXIT_OK
    code, out, _ = run(capsys, "schemes", "--only", "hawk-256", "--empirical", str(stats), "--format", "json",
                       "--no-meta")
    assert code == EXIT_OK
    item = json.loads(out)["schemes"][0]
    assert item["kappa_emp_margin"] == pytest.approx(2.02, abs=0.02)
    assert item["flag"].startswith("conditionally broken")


def test_schemes_stats_without_per_trial(capsys, tmp_path):
    stats = tmp_path / "stats.json"
    run(capsys, "simulate", "--model", "gaussian", "--d", "2", "--trials", "100", "--out", str(stats))
    assert run(capsys, "schemes", "--empirical", str(stats))[0] == EXIT_USAGE


def test_data_dir_env(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("CYCLOSGP_DATA_DIR", str(tmp_path))
    assert run(capsys, "resources", "--k", "4", "--out", "res.txt")[0] == EXIT_OK
    assert (tmp_path / "res.txt").exists()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "cyclosgp", "attack", "--k", "13"], capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE
    r = subprocess.run([sys.executable, "-m", "cyclosgp", "--help"], capture_output=True, text=True)
    assert r.returncode == EXIT_OK and "simulate" in r.stdout
