import json

import pytest

from tetraspin.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_bracket_closed(capsys):
    code, out = run(capsys, "--format", "json", "bracket", "--s", "2", "--t", "2", "--word", "a+ a+",
                    "--q", "0.4", "--x", "0.3")
    data = json.loads(out)
    p = -0.16
    assert code == 0 and abs(data["value"][0] - 0.3 * (1 - p * p) / (1 - p * p * 0.3)) < 1e-12


def test_bracket_exploratory_defaults_to_contraction(capsys):
    code, out = run(capsys, "bracket", "--s", "1", "--t", "2", "--word", "k", "--format", "json")
    assert code == 0 and json.loads(out)["method"] == "contract"


def test_bracket_unsupported_closed(capsys):
    code = main(["bracket", "--s", "1", "--t", "2", "--word", "k", "--method", "closed"])
    assert code == 2


def test_build_r_with_dump(capsys, tmp_path):
    path = tmp_path / "r.coo"
    code, out = run(capsys, "build-r", "--s", "2", "--t", "1", "--n", "1", "--dump", str(path),
                    "--format", "json")
    info = json.loads(out)
    assert code == 0 and info["dim"] == 4 and path.exists()
    assert "# q: 0.4" in path.read_text()


@pytest.mark.parametrize("argv", [
    ["check", "tetra", "--cutoff", "5"],
    ["check", "chi", "--s", "2", "--cutoff", "12"],
    ["check", "ybe", "--s", "1", "--t", "2", "--n", "1"],
    ["check", "intertwiner", "--algebra", "D2", "--n", "2", "--oracle"],
    ["check", "spectrum", "--algebra", "D2", "--n", "1"],
    ["check", "z", "--kind", "z0p", "--seed", "3"],
])
def test_check_commands_pass(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == 0 and "PASS" in out and "FAIL" not in out


def test_suite_preset_json_to_file(capsys, tmp_path):
    out_path = tmp_path / "rep.json"
    code, _ = run(capsys, "--format", "json", "--out", str(out_path), "suite", "--preset", "quick")
    data = json.loads(out_path.read_text())
    assert code == 0 and data["suite"] == "quick" and data["summary"]["fail"] == 0


def test_global_flags_after_subcommand(capsys):
    code, out = run(capsys, "check", "ybe", "--s", "2", "--t", "1", "--format", "csv", "--tol", "1e-9")
    assert code == 0 and out.startswith("id,anchor")


def test_invalid_parameters_exit_code(capsys):
    assert main(["check", "ybe", "--s", "2", "--t", "1", "--q", "1.5"]) == 2


def test_resource_guard_exit_code(capsys):
    assert main(["build-r", "--s", "1", "--t", "1", "--n", "5"]) == 3


def test_module_entry_point():
    import subprocess
    import sys
    res = subprocess.run([sys.executable, "-m", "tetraspin", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "0.1.0" in res.stdout
