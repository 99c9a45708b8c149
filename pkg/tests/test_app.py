import json

import pytest

from mom_select.app import ExperimentApplication, ExperimentConfig, generator_from_mapping
from mom_select.errors import DataError, DomainError
from mom_select.experiments import ExperimentKind
from mom_select.generators import GeneratorFamily


def test_config_loads_from_toml(tmp_path) -> None:
    cfg_path = tmp_path / "config.toml"
    cfg_path.write_text(
        """
schema_version = 1

[experiment]
kind = "prop21"
n = 400
reps = 150
seed = 9
delta = ""

[generator]
family = "student_t"
df = 5.0

[output]
save_dir = "data/reports"
""",
        encoding="utf-8",
    )

    cfg = ExperimentConfig.from_file(cfg_path)
    assert cfg.kind == ExperimentKind.PROP21
    assert cfg.n == 400
    assert cfg.reps == 150
    assert cfg.delta is None
    assert cfg.generator.family == GeneratorFamily.STUDENT_T
    assert cfg.generator.params["df"] == 5.0
    assert cfg.save_dir == "data/reports"


def test_config_loads_from_json(tmp_path) -> None:
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps({"experiment": {"kind": "thm42", "epsilon": "0.2"}}), encoding="utf-8")
    cfg = ExperimentConfig.from_file(cfg_path)
    assert cfg.kind == ExperimentKind.THM42
    assert cfg.epsilon == 0.2
    assert cfg.generator is None


def test_config_rejects_bad_input(tmp_path) -> None:
    with pytest.raises(DataError):
        ExperimentConfig.from_file(tmp_path / "missing.toml")
    broken = tmp_path / "broken.toml"
    broken.write_text("[experiment\n", encoding="utf-8")
    with pytest.raises(DataError):
        ExperimentConfig.from_file(broken)
    with pytest.raises(DataError):
        ExperimentConfig.from_mapping({"schema_version": 2})
    with pytest.raises(DomainError):
        ExperimentConfig.from_mapping({"experiment": {"n": "many"}})


def test_settings_precedence() -> None:
    cfg = ExperimentConfig.from_mapping({"experiment": {"kind": "prop21", "n": 500, "reps": 120}})
    settings = cfg.to_settings(reps=40, seed=None)
    assert settings.n == 500
    assert settings.reps == 40
    assert settings.seed == 0
    assert settings.delta == 0.05
    assert cfg.to_settings("cor22").kind == ExperimentKind.COR22
    with pytest.raises(DomainError):
        ExperimentConfig().to_settings()


def test_generator_from_mapping() -> None:
    nested = generator_from_mapping(
        {"family": "contaminated", "base": {"family": "gaussian", "sd": 2.0}, "fraction": 0.1, "magnitude": 5.0}
    )
    assert nested.base().params["sd"] == 2.0
    hist = generator_from_mapping({"family": "histogram_density", "cell_probs": [0.5, 0.5]})
    assert hist.params["breakpoints"] == [0.0, 0.5, 1.0]
    with pytest.raises(DomainError):
        generator_from_mapping({"family": "cauchy"})
    with pytest.raises(DomainError):
        generator_from_mapping({"family": "gaussian", "shape": 1.0})
    with pytest.raises(DomainError):
        generator_from_mapping({"df": 3.0})


def test_application_runs_and_saves(tmp_path, capsys) -> None:
    cfg = ExperimentConfig.from_mapping(
        {"experiment": {"kind": "prop21", "n": 200, "reps": 10}, "output": {"save_dir": str(tmp_path / "out")}}
    )
    app = ExperimentApplication(cfg)
    report = app.run_experiment(seed=2)
    stored = app.save(report)
    assert stored.path == tmp_path / "out" / "prop21_seed2.json"
    assert stored.to_dict() == {"path": str(stored.path), "kind": "prop21", "seed": 2, "reps": 10}
    logged = [json.loads(line) for line in capsys.readouterr().err.splitlines()]
    assert {"level": "info", "message": "report saved", **stored.to_dict()} in logged
    assert app.store.load("prop21", 2)["reps"] == 10
    snapshot = app.get_metrics_snapshot()
    assert snapshot.experiments_total == 1
    assert snapshot.replications_total == 10


def test_application_without_store() -> None:
    app = ExperimentApplication(ExperimentConfig(kind=ExperimentKind.PROP21, n=200, reps=5))
    assert app.save(app.run_experiment()) is None
