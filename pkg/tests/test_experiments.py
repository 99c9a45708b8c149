import json
import math

import numpy as np
import pytest

from mom_select.errors import ConditionViolationError, DomainError
from mom_select.experiments import (
    CoverageExperiment,
    ExperimentKind,
    default_settings,
    density_truth,
    run_coverage_experiment,
    summarize_report,
    trigonometric_coefficients,
)
from mom_select.generators import GeneratorSpec
from mom_select.m_select import HistogramEstimate
from mom_select.monitoring import ExperimentMetrics


def make_settings(kind: str, **overrides):
    return default_settings(kind, seed=11, **overrides)


def test_default_settings() -> None:
    settings = default_settings("thm31")
    assert settings.n == 4000
    assert settings.cells == 16
    assert settings.generator.params["cell_probs"][2] == 0.5
    assert default_settings("prop21", reps=50, delta=None).delta == 0.05
    with pytest.raises(ValueError):
        default_settings("unknown")
    with pytest.raises(DomainError):
        default_settings("prop21", reps=0)


def test_density_truth_for_matching_histogram() -> None:
    truth = density_truth(GeneratorSpec.histogram_density([0.1, 0.2, 0.3, 0.4]), [0, 0.25, 0.5, 0.75, 1])
    assert truth.coefficients == pytest.approx([0.2, 0.4, 0.6, 0.8])
    assert truth.residual_sq == pytest.approx(0.0, abs=1e-12)
    assert truth.projection.heights == pytest.approx([0.4, 0.8, 1.2, 1.6])

    coarse = density_truth(GeneratorSpec.histogram_density([0.1, 0.2, 0.3, 0.4]), [0, 0.5, 1])
    assert coarse.residual_sq > 0
    with pytest.raises(DomainError):
        density_truth(GeneratorSpec.gaussian(), [0, 1])


def test_trigonometric_coefficients_of_uniform_density() -> None:
    uniform = HistogramEstimate(np.array([0.0, 1.0]), np.array([1.0]))
    coef = trigonometric_coefficients(uniform, 3)
    assert coef.shape == (7,)
    assert coef == pytest.approx([1.0, 0, 0, 0, 0, 0, 0], abs=1e-12)


def test_prop21_is_deterministic_and_passes() -> None:
    first = run_coverage_experiment("prop21", make_settings("prop21", n=200, reps=100))
    second = run_coverage_experiment("prop21", make_settings("prop21", n=200, reps=100))
    assert [r.statistic for r in first.per_rep] == [r.statistic for r in second.per_rep]
    assert first.passed
    assert first.allowed_rate == 0.05
    assert first.acceptance_limit == pytest.approx(0.05 + 3 * math.sqrt(0.05 * 0.95 / 100))
    assert first.constants["V"] == 3


def test_workers_do_not_change_results() -> None:
    serial = run_coverage_experiment("prop21", make_settings("prop21", n=200, reps=30))
    threaded = run_coverage_experiment("prop21", make_settings("prop21", n=200, reps=30, workers=3))
    assert serial.to_dict() == threaded.to_dict()


def test_cor22_degenerate_gaussian_is_always_covered() -> None:
    report = run_coverage_experiment("cor22", make_settings("cor22", reps=20, generator=GeneratorSpec.gaussian(0.0, 0.0)))
    assert report.coverage == 1.0
    assert report.violations == 0


def test_cor22_aborts_when_the_condition_fails() -> None:
    metrics = ExperimentMetrics()
    settings = make_settings("cor22", reps=20, generator=GeneratorSpec.student_t(3.0))
    with pytest.raises(ConditionViolationError) as excinfo:
        CoverageExperiment(settings, metrics=metrics).run()
    assert excinfo.value.condition == "C(f)"
    assert metrics.snapshot().condition_aborts == 1
    assert metrics.snapshot().experiments_total == 0


def test_lasso_experiment() -> None:
    report = run_coverage_experiment("thm31", make_settings("thm31", reps=3))
    assert report.violations == 0
    assert len(report.constants["population_weight_floors"]) == 16
    assert all(r.extra["active"] <= 16 for r in report.per_rep)
    with pytest.raises(ConditionViolationError) as excinfo:
        run_coverage_experiment("thm31", make_settings("thm31", n=400, reps=3))
    assert excinfo.value.condition == "C(D)"


def test_selection_experiments() -> None:
    classical = run_coverage_experiment("thm41", make_settings("thm41", reps=4))
    assert classical.allowed_rate is None
    assert classical.passed is None
    assert all(r.extra["theta_hat"].startswith("m") for r in classical.per_rep)

    robust = run_coverage_experiment("thm42", make_settings("thm42", reps=4))
    assert robust.allowed_rate == 0.05
    assert robust.constants["leading_constant"] == pytest.approx(0.6 / 20)
    assert robust.details["models"] == ["m0", "m1", "m2", "m3", "m4"]


def test_l2_selection_experiment_with_contamination() -> None:
    report = run_coverage_experiment("thm51_l2", make_settings("thm51_l2", reps=4, contamination=50.0))
    assert report.details["contaminated_block"] == 0
    assert report.constants["V"] == 10
    assert all(r.extra["K_star"] != 0 for r in report.per_rep)


def test_kullback_experiment() -> None:
    report = run_coverage_experiment("prop55_kull", make_settings("prop55_kull", reps=3))
    assert report.allowed_rate is None
    assert report.constants["smoothing"] == pytest.approx(1 / 2000)
    assert report.details["approximation_loss"] > 0


def test_regression_experiment_and_its_sample_size_condition() -> None:
    report = run_coverage_experiment("prop57_reg", make_settings("prop57_reg", reps=3))
    assert report.constants["M_psi"] == pytest.approx(4.8, abs=1e-6)
    assert report.allowed_rate == pytest.approx(0.15)
    with pytest.raises(ConditionViolationError):
        run_coverage_experiment("prop57_reg", make_settings("prop57_reg", n=1000, reps=3))


def test_mixing_experiment() -> None:
    report = run_coverage_experiment("thm63_mixing", make_settings("thm63_mixing", reps=3))
    assert report.constants["V"] == 16
    assert report.constants["q"] == 200
    assert report.allowed_rate == pytest.approx(0.05 + 16 * 2.0 * 0.5**200)
    with pytest.raises(DomainError):
        run_coverage_experiment("thm63_mixing", make_settings("thm63_mixing", reps=3, generator=GeneratorSpec.gaussian()))


def test_report_payload_and_summary() -> None:
    metrics = ExperimentMetrics()
    report = run_coverage_experiment("prop21", make_settings("prop21", n=200, reps=10), metrics=metrics)
    payload = report.to_dict()
    assert {"kind", "config", "seed", "reps", "violations", "coverage", "constants", "per_rep"} <= set(payload)
    assert payload["wall_ms"] is None
    assert payload["constants"]["absolute"]["L6"] is None
    assert len(payload["per_rep"]) == 10
    assert "per_rep" not in report.to_dict(include_reps=False)
    json.dumps(payload)
    summary = summarize_report(report)
    assert summary["kind"] == ExperimentKind.PROP21.value
    assert summary["reps"] == 10
    assert metrics.snapshot().replications_total == 10


def run_full_scale(kind: str, **overrides):
    report = run_coverage_experiment(kind, default_settings(kind, seed=7, **overrides))
    assert report.acceptance_limit == pytest.approx(
        report.allowed_rate + 3 * math.sqrt(report.allowed_rate * (1 - report.allowed_rate) / report.reps)
    )
    return report


def test_mean_coverage_gaussian_and_student_t() -> None:
    for generator in (GeneratorSpec.gaussian(), GeneratorSpec.student_t(3.0)):
        report = run_full_scale("prop21", generator=generator)
        assert report.reps == 10_000
        assert report.constants["V"] == 3
        assert report.passed


def test_variance_control_coverage() -> None:
    report = run_full_scale("cor22")
    assert report.reps == 10_000
    assert report.passed


def test_sparse_lasso_coverage() -> None:
    report = run_full_scale("thm31")
    assert report.reps == 500
    assert report.passed


def test_l2_selection_coverage() -> None:
    report = run_full_scale("thm51_l2")
    assert report.reps == 2000
    assert report.allowed_rate == pytest.approx(0.02)
    assert report.passed


def test_regression_selection_coverage() -> None:
    report = run_full_scale("prop57_reg")
    assert report.reps == 1000
    assert report.passed


def test_mixing_selection_coverage() -> None:
    report = run_full_scale("thm63_mixing")
    assert report.reps == 500
    assert report.passed


def test_l2_selection_avoids_a_contaminated_block() -> None:
    report = run_coverage_experiment("thm51_l2", default_settings("thm51_l2", seed=7, reps=200, contamination=100.0))
    assert report.details["contaminated_block"] == 0
    assert sum(r.extra["K_star"] != 0 for r in report.per_rep) >= 190
