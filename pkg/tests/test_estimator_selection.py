import math

import numpy as np
import pytest

from mom_select.blocks import make_regular_partition
from mom_select.constants import CONSTANTS
from mom_select.dictionary import (
    build_custom_dictionary,
    build_histogram_dictionary,
    build_trigonometric_dictionary,
    regular_breakpoints,
)
from mom_select.errors import DeltaTooSmallError, DomainError, EmptyInputError, UnsupportedModelError
from mom_select.estimator_selection import (
    CandidateEstimator,
    ModelSpec,
    PenaltyRule,
    SelectionConfig,
    SelectionMode,
    classical_criterion,
    classical_penalty,
    lambda_block_counts,
    lambda_partitions,
    nested_models,
    plugin_penalty,
    project_callable,
    project_coefficients,
    projection_candidates,
    robust_criterion,
    robust_oracle_check,
    robust_penalty,
    select,
)

DICT4 = build_histogram_dictionary(regular_breakpoints(4))
ALL4 = DICT4.labels


def make_sample(n: int = 400, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).random(n)


def make_candidate(theta: str, coef, menu: list[ModelSpec]) -> CandidateEstimator:
    return project_coefficients(theta, np.asarray(coef, dtype=float), menu, DICT4)


def test_classical_criterion_zero_estimator() -> None:
    candidate = make_candidate("zero", np.zeros(4), [ModelSpec("full", ALL4)])
    assert classical_criterion(candidate, make_sample(), 1.0, DICT4) == 0.0


def test_classical_criterion_without_projection_gap() -> None:
    sample = make_sample()
    coef = np.array([0.5, 1.0, 1.5, 0.2])
    candidate = make_candidate("c", coef, [ModelSpec("full", ALL4, pen=0.25)])
    means = DICT4.evaluate(sample).mean(axis=0)
    expected = float(coef @ coef) - 2 * float(coef @ means) + 0.25
    assert classical_criterion(candidate, sample, 3.0, DICT4) == pytest.approx(expected)


def test_criterion_takes_cheapest_model() -> None:
    sample = make_sample()
    coef = np.array([0.5, 1.0, 1.5, 0.2])
    cheap = make_candidate("c", coef, [ModelSpec("a", ALL4, 0.1), ModelSpec("b", ALL4, 0.3)])
    only = make_candidate("c", coef, [ModelSpec("a", ALL4, 0.1)])
    assert classical_criterion(cheap, sample, 1.0, DICT4) == pytest.approx(classical_criterion(only, sample, 1.0, DICT4))


def test_empty_menu_is_rejected() -> None:
    candidate = make_candidate("c", np.zeros(4), [])
    with pytest.raises(EmptyInputError):
        classical_criterion(candidate, make_sample(), 1.0, DICT4)


def test_projection_distances() -> None:
    coef = np.array([1.0, 2.0, 0.0, 3.0])
    coarse = ModelSpec("first_two", ALL4[:2])
    candidate = make_candidate("c", coef, [coarse, ModelSpec("full", ALL4)])
    assert candidate.distances["first_two"] == pytest.approx(9.0)
    assert candidate.distances["full"] == pytest.approx(0.0)
    assert candidate.projection_norm_sq("first_two") == pytest.approx(5.0)


def test_project_callable_matches_exact_projection() -> None:
    d = build_trigonometric_dictionary(2)
    menu = nested_models(d)
    coef = np.array([1.0, 0.3, -0.2, 0.1, 0.05])
    exact = project_coefficients("s", coef, menu, d)
    numeric = project_callable("s", lambda x: d.evaluate(x) @ coef, menu, d)
    for model in menu:
        assert numeric.distances[model.id] == pytest.approx(exact.distances[model.id], abs=1e-8)
        assert np.allclose(numeric.projections[model.id], exact.projections[model.id], atol=1e-8)


def test_robust_criterion_with_single_blocks_equals_classical() -> None:
    sample = make_sample(300)
    partitions = {label: make_regular_partition(300, 1) for label in ALL4}
    candidate = make_candidate("c", [0.4, 0.9, 1.3, 0.7], [ModelSpec("coarse", ALL4[:2], 0.05), ModelSpec("full", ALL4, 0.1)])
    robust = robust_criterion(candidate, sample, 2.0, partitions, DICT4)
    assert robust == pytest.approx(classical_criterion(candidate, sample, 2.0, DICT4), abs=1e-12)


def test_robust_criterion_zero_coefficients() -> None:
    sample = make_sample()
    partitions = lambda_partitions(ALL4, 400, 0.05)
    candidate = make_candidate("c", np.zeros(4), [ModelSpec("full", ALL4, 0.7)])
    assert robust_criterion(candidate, sample, 2.0, partitions, DICT4) == pytest.approx(0.7)


def test_lambda_block_counts() -> None:
    counts = lambda_block_counts(ALL4, 400, 0.05)
    assert set(counts.values()) == {math.ceil(math.log(2 / (0.25 * 0.05)))}
    priors = {"cell0": 0.7, "cell1": 0.1, "cell2": 0.1, "cell3": 0.1}
    assert lambda_block_counts(ALL4, 400, 0.05, priors)["cell0"] == math.ceil(math.log(2 / (0.7 * 0.05)))
    with pytest.raises(DeltaTooSmallError):
        lambda_block_counts(ALL4, 6, 0.05)


def test_classical_penalty_on_histogram_model() -> None:
    assert CONSTANTS.L0 == pytest.approx(31.0831, abs=1e-4)
    n, delta = 400, 0.05
    model = ModelSpec("full", ALL4)
    pen = classical_penalty(model, make_sample(n), delta, 1.0, 1.0, dictionary=DICT4, norm_bound=1.0)
    L0 = CONSTANTS.L0
    r = math.sqrt(4.0) * math.log(2 / delta) / n
    expected = (2.5 + 2 * L0) * 4.0 / n + 2 * L0 * r + 2 * L0 * r**2
    assert pen == pytest.approx(expected)
    with pytest.raises(DomainError):
        classical_penalty(model, make_sample(n), delta, 0.0, 1.0, dictionary=DICT4, norm_bound=1.0)


def test_classical_penalty_rejects_unbounded_functions() -> None:
    d = build_custom_dictionary([lambda x: x], labels=["x"], bounded=False)
    with pytest.raises(UnsupportedModelError):
        classical_penalty(ModelSpec("m", ("x",)), make_sample(), 0.05, 1.0, 1.0, dictionary=d, norm_bound=1.0)


def test_plugin_penalty() -> None:
    assert plugin_penalty(ModelSpec("full", ALL4), make_sample(500), 0.05, dictionary=DICT4) == pytest.approx(5 * 4.0 / 500)
    assert plugin_penalty(ModelSpec("none", ()), make_sample(500), 0.05, dictionary=DICT4) == 0.0


def test_robust_penalty() -> None:
    assert CONSTANTS.L4 == pytest.approx(54 * math.e)
    assert CONSTANTS.L4 == pytest.approx(146.787, abs=1e-3)
    d = build_histogram_dictionary([0, 1])
    n, delta, eps = 600, 0.05, 0.1
    V = lambda_block_counts(d.labels, n, delta)["cell0"]
    pen = robust_penalty(ModelSpec("one", d.labels), make_sample(n), eps, delta, dictionary=d)
    assert pen == pytest.approx(2 * CONSTANTS.L4 * V / (eps * n))
    assert robust_penalty(ModelSpec("none", ()), make_sample(n), eps, delta, dictionary=d) == 0.0
    with pytest.raises(DomainError):
        robust_penalty(ModelSpec("one", d.labels), make_sample(n), 0.25, delta, dictionary=d)


def test_select_single_and_duplicate_candidates() -> None:
    sample = make_sample()
    menu = [ModelSpec("full", ALL4)]
    config = SelectionConfig()
    one = select([make_candidate("only", [1, 1, 1, 1], menu)], sample, 1.0, SelectionMode.CLASSICAL, config, DICT4)
    assert one.theta_hat == "only"
    twins = [make_candidate("first", [1, 1, 1, 1], menu), make_candidate("second", [1, 1, 1, 1], menu)]
    result = select(twins, sample, 1.0, SelectionMode.CLASSICAL, config, DICT4)
    assert result.theta_hat == "first"
    assert result.minimizers() == {"first", "second"}
    with pytest.raises(DomainError):
        select([make_candidate("same", [1, 1, 1, 1], menu), make_candidate("same", [0, 0, 1, 1], menu)], sample, 1.0, SelectionMode.CLASSICAL, config, DICT4)
    with pytest.raises(EmptyInputError):
        select([], sample, 1.0, SelectionMode.CLASSICAL, config, DICT4)


def make_menu(pens: tuple[float, float]) -> list[ModelSpec]:
    return [ModelSpec("coarse", ALL4[:2], pens[0]), ModelSpec("full", ALL4, pens[1])]


def make_candidates(pens: tuple[float, float]) -> list[CandidateEstimator]:
    menu = make_menu(pens)
    coefs = ([0.9, 1.1, 1.0, 1.0], [1.5, 0.5, 1.2, 0.8], [1.0, 1.0, 0.0, 0.0])
    return [make_candidate(f"c{i}", c, menu) for i, c in enumerate(coefs)]


def test_constant_penalty_shift() -> None:
    sample = make_sample(seed=4)
    config = SelectionConfig()
    base = select(make_candidates((0.01, 0.02)), sample, 1.5, SelectionMode.ROBUST, config, DICT4)
    shifted = select(make_candidates((0.51, 0.52)), sample, 1.5, SelectionMode.ROBUST, config, DICT4)
    assert shifted.theta_hat == base.theta_hat
    for theta, value in base.criteria.items():
        assert shifted.criteria[theta] == pytest.approx(value + 0.5)


def test_penalty_monotonicity() -> None:
    sample = make_sample(seed=5)
    config = SelectionConfig()
    low = select(make_candidates((0.01, 0.02)), sample, 1.0, SelectionMode.CLASSICAL, config, DICT4)
    high = select(make_candidates((0.01, 0.5)), sample, 1.0, SelectionMode.CLASSICAL, config, DICT4)
    for theta in low.criteria:
        assert high.criteria[theta] >= low.criteria[theta]


def test_minimizers_are_rotation_invariant() -> None:
    sample = make_sample(seed=6)
    config = SelectionConfig()
    candidates = make_candidates((0.01, 0.02))
    reference = select(candidates, sample, 1.0, SelectionMode.CLASSICAL, config, DICT4).minimizers()
    for shift in range(1, len(candidates)):
        rotated = candidates[shift:] + candidates[:shift]
        assert select(rotated, sample, 1.0, SelectionMode.CLASSICAL, config, DICT4).minimizers() == reference


def test_true_density_beats_gross_corruption() -> None:
    d = build_histogram_dictionary(regular_breakpoints(8))
    probs = np.array([0.05, 0.1, 0.15, 0.2, 0.2, 0.15, 0.1, 0.05])
    widths = np.full(8, 1 / 8)
    truth = probs / np.sqrt(widths)
    menu = [ModelSpec("fine", d.labels)]
    candidates = [
        project_coefficients("truth", truth, menu, d),
        project_coefficients("shifted", truth + 10 * np.sqrt(widths), menu, d),
    ]
    rng = np.random.default_rng(8)
    hits = 0
    for _ in range(200):
        cells = rng.choice(8, size=2000, p=probs)
        sample = (cells + rng.random(2000)) / 8
        hits += select(candidates, sample, 1.0, SelectionMode.CLASSICAL, SelectionConfig(), d).theta_hat == "truth"
    assert hits >= 190


def test_penalty_rules_are_applied() -> None:
    sample = make_sample(800, seed=9)
    d = build_trigonometric_dictionary(2)
    models = nested_models(d)
    candidates, coefficients = projection_candidates(sample, d, models)
    assert [c.theta for c in candidates] == ["m0", "m1", "m2"]
    assert np.count_nonzero(coefficients["m0"]) == 1
    robust = select(candidates, sample, 2.0, SelectionMode.ROBUST, SelectionConfig(penalty=PenaltyRule.ROBUST), d)
    plugin = select(candidates, sample, 2.0, SelectionMode.CLASSICAL, SelectionConfig(penalty=PenaltyRule.PLUGIN), d)
    assert robust.penalties["m0"] < robust.penalties["m2"]
    assert plugin.penalties["m2"] == pytest.approx(5 * 5.0 / 800, rel=0.05)
    assert set(robust.to_dict()["breakdown"]) == {"m0", "m1", "m2"}


def test_robust_oracle_check_constant() -> None:
    sample = make_sample(seed=10)
    candidates = make_candidates((0.01, 0.02))
    result = select(candidates, sample, 2.0, SelectionMode.ROBUST, SelectionConfig(), DICT4)
    distances = {c.theta: 1.0 for c in candidates}
    check = robust_oracle_check(result, candidates, distances, epsilon=0.1)
    assert check.leading_constant == pytest.approx(0.6 / 20)
    assert check.lhs == pytest.approx(0.03)
    assert check.holds
