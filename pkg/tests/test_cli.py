import json
import subprocess
import sys

import pytest

from caprecap.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_datasets_list(capsys):
    code, out, _ = run_cli(capsys, "datasets")
    assert code == 0
    names = json.loads(out)
    assert "new_orleans" in names and "artificial3" in names


def test_datasets_dump(capsys):
    code, out, _ = run_cli(capsys, "datasets", "artificial3")
    assert code == 0
    obj = json.loads(out)
    assert obj["labels"] == ["A", "B", "C"]
    assert {"history": ["A", "B"], "count": 6} in obj["cells"]


def test_fit_json(capsys):
    code, out, _ = run_cli(capsys, "fit", "--data", "uk", "--model", "full")
    assert code == 0
    obj = json.loads(out)
    assert obj["coefficients"]["LA:GP"] == "-inf"
    assert obj["converged"] is True


def test_fit_with_pairs(capsys):
    code, out, _ = run_cli(capsys, "fit", "--data", "new_orleans", "--pairs", "D:E")
    assert code == 0
    obj = json.loads(out)
    assert obj["population_estimate"] == pytest.approx(1184, abs=1)


def test_check_nonexistent_exit_code(capsys):
    code, out, _ = run_cli(capsys, "check", "--data", "artificial3", "--pairs", "A:B")
    assert code == 2
    obj = json.loads(out)
    assert obj["verdict"] == "nonexistent_mle"
    assert obj["s_max"] == pytest.approx(0.0, abs=1e-9)


def test_check_ok_exit_code(capsys):
    code, out, _ = run_cli(capsys, "check", "--data", "artificial3", "--pairs", "B:C")
    assert code == 0
    assert json.loads(out)["s_max"] == pytest.approx(3.0, abs=1e-9)


def test_check_all_csv(capsys):
    code, out, err = run_cli(capsys, "check-all", "--data", "artificial3")
    assert code == 2
    lines = out.strip().split("\n")
    assert lines[0] == "pairs,s_max,verdict"
    assert len(lines) == 8  # header + 4 sweep + 3 descent rows
    assert any("nonexistent_mle" in line for line in lines)
    assert "failing models" in err


def test_check_all_ok(capsys):
    code, out, _ = run_cli(capsys, "check-all", "--data", "western")
    assert code == 0
    assert len(out.strip().split("\n")) == 5


def test_estimate_point_only(capsys):
    code, out, _ = run_cli(
        capsys, "estimate", "--data", "new_orleans", "--pthresh", "0.02", "--nboot", "0"
    )
    assert code == 0
    obj = json.loads(out)
    assert obj["estimate"] == pytest.approx(1184, abs=1)
    assert obj["model_pairs"] == ["D:E"]
    assert "intervals" not in obj


def test_estimate_western(capsys):
    code, out, _ = run_cli(
        capsys, "estimate", "--data", "western", "--pthresh", "0.02", "--nboot", "0"
    )
    assert code == 0
    assert json.loads(out)["estimate"] == pytest.approx(2483, abs=1)


def test_estimate_with_bootstrap_prints_seed(capsys):
    code, out, err = run_cli(
        capsys,
        "estimate",
        "--data",
        "western",
        "--nboot",
        "20",
        "--seed",
        "5",
        "--levels",
        "0.9",
    )
    assert code == 0
    obj = json.loads(out)
    assert obj["seed"] == 5
    assert "0.9" in obj["intervals"]
    assert "seed: 5" in err


def test_estimate_repeatable_bytes(capsys):
    args = ("estimate", "--data", "western", "--nboot", "15", "--seed", "8")
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    assert out1 == out2


def test_bootstrap_dump_replicates(capsys, tmp_path):
    path = tmp_path / "reps.txt"
    code, out, _ = run_cli(
        capsys,
        "bootstrap",
        "--data",
        "western",
        "--nboot",
        "10",
        "--seed",
        "4",
        "--dump-replicates",
        str(path),
    )
    assert code == 0
    values = [float(line) for line in path.read_text().splitlines()]
    assert len(values) == 10
    obj = json.loads(out)
    assert obj["n_requested"] == 10


def test_stepwise_table(capsys):
    code, out, _ = run_cli(
        capsys, "stepwise", "--data", "new_orleans", "--format", "table"
    )
    assert code == 0
    assert "D:E" in out
    assert "population estimate" in out


def test_stepwise_json(capsys):
    code, out, _ = run_cli(capsys, "stepwise", "--data", "new_orleans")
    assert code == 0
    obj = json.loads(out)
    assert obj["final_pairs"] == ["D:E"]
    assert obj["estimate"] == pytest.approx(1184, abs=1)


def test_csv_input(capsys, tmp_path):
    path = tmp_path / "data.csv"
    path.write_text("A,B,C,count\n1,0,0,40\n0,1,0,30\n0,0,1,20\n1,1,0,6\n")
    code, out, _ = run_cli(capsys, "fit", "--data", str(path))
    assert code == 0
    assert json.loads(out)["population_estimate"] == pytest.approx(96 + 443.094, abs=0.01)


def test_unknown_data_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "fit", "--data", "no_such_thing")
    assert code == 1
    assert "error" in err.lower()
    assert "Traceback" not in err


def test_bad_subcommand_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "frobnicate")
    assert code == 1


def test_bad_pair_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "check", "--data", "uk", "--pairs", "LA-GP")
    assert code == 1


def test_simulate_deviance_qq(capsys):
    code, out, err = run_cli(
        capsys,
        "simulate",
        "deviance-qq",
        "--probs",
        "0.3,0.3,0.3",
        "--nsims",
        "50",
        "--seed",
        "3",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "deviance_reduction,chi2_quantile"
    assert len(lines) == 51
    assert "seed: 3" in err


def test_simulate_threshold_study(capsys):
    code, out, err = run_cli(
        capsys,
        "simulate",
        "threshold-study",
        "--datasets",
        "uk",
        "--nsims",
        "10",
        "--est-thresholds",
        "0,0.02,1",
        "--seed",
        "6",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "scenario_data,0,0.02,1,scenario_model"
    assert lines[-1].startswith("mean,")
    assert "seed: 6" in err


def test_console_entry_point():
    result = subprocess.run(
        [sys.executable, "-m", "caprecap", "datasets"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "western" in result.stdout


def test_bootstrap_threads_flag_identical_output(capsys):
    base = ("bootstrap", "--data", "western", "--nboot", "12", "--seed", "5")
    _, out1, _ = run_cli(capsys, *base, "--threads", "1")
    _, out2, _ = run_cli(capsys, *base, "--threads", "2")
    assert out1 == out2
