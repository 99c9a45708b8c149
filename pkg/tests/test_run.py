import io
import json

import numpy as np

from mom_select.run import EXIT_CONDITION, EXIT_DATA, EXIT_OK, EXIT_USAGE, main


def run_cli(argv: list[str]) -> tuple[int, str]:
    out = io.StringIO()
    code = main(argv, stdout=out)
    return code, out.getvalue()


def write_sample(path, values) -> str:
    np.savetxt(path, np.asarray(values, dtype=float), delimiter=",")
    return str(path)


def test_mean_on_zeros(tmp_path) -> None:
    path = write_sample(tmp_path / "zeros.csv", np.zeros(1000))
    code, text = run_cli(["mean", "--input", path])
    assert code == EXIT_OK
    payload = json.loads(text)
    assert payload["V"] == 3
    assert payload["value"] == 0.0
    assert payload["half_width"] == 0.0


def test_mean_csv_output(tmp_path) -> None:
    path = write_sample(tmp_path / "ones.csv", np.ones(20))
    code, text = run_cli(["mean", "--input", path, "--output", "csv", "--delta", "0.1"])
    assert code == EXIT_OK
    header, row = text.splitlines()
    assert header.split(",") == ["value", "half_width", "V", "n", "delta"]
    assert row.startswith("1.0,")


def test_usage_and_data_errors(tmp_path) -> None:
    assert run_cli([])[0] == EXIT_USAGE
    assert run_cli(["mean"])[0] == EXIT_USAGE
    assert run_cli(["mean", "--output", "xml"])[0] == EXIT_USAGE
    assert run_cli(["mean", "--input", str(tmp_path / "missing.csv")])[0] == EXIT_DATA
    path = write_sample(tmp_path / "small.csv", [1.0, 2.0, 3.0, 4.0])
    assert run_cli(["mean", "--input", path])[0] == EXIT_CONDITION
    assert run_cli(["mean", "--input", path, "--delta", "1.5"])[0] == EXIT_USAGE


def test_lasso_command(tmp_path) -> None:
    sample = np.random.default_rng(0).random(1000)
    code, text = run_cli(["lasso", "--input", write_sample(tmp_path / "u.csv", sample), "--cells", "8"])
    assert code == EXIT_OK
    payload = json.loads(text)
    assert set(payload) == {"problem", "fit"}
    assert payload["fit"]["converged"] is True


def test_select_command(tmp_path) -> None:
    sample = np.random.default_rng(1).random(1000)
    code, text = run_cli(["select", "--input", write_sample(tmp_path / "u.csv", sample), "--max-frequency", "2"])
    assert code == EXIT_OK
    payload = json.loads(text)
    assert payload["mode"] == "robust"
    assert payload["theta_hat"] in {"m0", "m1", "m2"}


def test_mselect_and_mixing_commands(tmp_path) -> None:
    rng = np.random.default_rng(2)
    path = write_sample(tmp_path / "u.csv", rng.random(256))
    code, text = run_cli(["mselect", "--input", path])
    assert code == EXIT_OK
    payload = json.loads(text)
    assert payload["V"] == 8
    assert payload["contrast"] == "l2_density"

    code, text = run_cli(["mixing", "--input", path, "--blocks", "4", "--contrast", "kullback", "--output", "csv"])
    assert code == EXIT_OK
    lines = text.splitlines()
    assert lines[0] == "K,worst_case,selected"
    assert len(lines) == 5

    xs = rng.random(200)
    pairs = tmp_path / "xy.csv"
    np.savetxt(pairs, np.column_stack([xs, 1 + 2 * xs]), delimiter=",")
    code, text = run_cli(["mselect", "--input", str(pairs), "--contrast", "regression"])
    assert code == EXIT_OK
    assert json.loads(text)["contrast"] == "l2_regression"
    assert run_cli(["mselect", "--input", str(pairs)])[0] == EXIT_DATA


def test_experiment_output_is_deterministic(tmp_path) -> None:
    argv = ["experiment", "--kind", "prop21", "--reps", "20", "--seed", "3", "--save-dir", str(tmp_path)]
    first = run_cli(argv)
    second = run_cli(argv)
    assert first[0] == EXIT_OK
    assert first[1] == second[1]
    assert json.loads(first[1])["seed"] == 3
    assert (tmp_path / "prop21_seed3.json").exists()


def test_experiment_condition_violation(tmp_path) -> None:
    cfg = tmp_path / "config.toml"
    cfg.write_text('[experiment]\nkind = "cor22"\nreps = 10\n\n[generator]\nfamily = "student_t"\ndf = 3.0\n', encoding="utf-8")
    assert run_cli(["experiment", "--config", str(cfg)])[0] == EXIT_CONDITION
    assert run_cli(["experiment"])[0] == EXIT_USAGE
