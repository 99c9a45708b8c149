import math

import numpy as np
import pytest

from mom_select.dictionary import build_polynomial_dictionary
from mom_select.errors import DomainError, UnsupportedModelError
from mom_select.generators import (
    GeneratorFamily,
    GeneratorSpec,
    analytic_moments,
    contaminate_block,
    generate,
    regression_moments,
    rep_seeds,
)


def test_generation_is_deterministic_per_seed() -> None:
    spec = GeneratorSpec.student_t(5.0)
    assert np.array_equal(generate(spec, 100, 7), generate(spec, 100, 7))
    assert not np.array_equal(generate(spec, 100, 7), generate(spec, 100, 8))


def test_rep_seeds_depend_only_on_seed_and_index() -> None:
    spec = GeneratorSpec.gaussian()
    short = rep_seeds(3, 5)
    long = rep_seeds(3, 10)
    assert np.array_equal(generate(spec, 20, short[2]), generate(spec, 20, long[2]))
    assert not np.array_equal(generate(spec, 20, long[2]), generate(spec, 20, long[3]))


def test_infinite_variance_families_are_rejected() -> None:
    with pytest.raises(DomainError):
        GeneratorSpec.student_t(2.0)
    with pytest.raises(DomainError):
        GeneratorSpec.pareto(2.0)
    with pytest.raises(DomainError):
        GeneratorSpec.ar1(1.0)
    with pytest.raises(DomainError):
        GeneratorSpec.histogram_density([0.5, 0.6])
    with pytest.raises(DomainError):
        GeneratorSpec.regression(noise="student_t", df=2.0)


def test_contamination_rate() -> None:
    spec = GeneratorSpec.contaminated(GeneratorSpec.gaussian(), fraction=0.05, magnitude=100.0)
    assert spec.base().family == GeneratorFamily.GAUSSIAN
    values = generate(spec, 20000, 11)
    assert np.mean(values > 50.0) == pytest.approx(0.05, abs=0.01)


def test_ar1_marginals() -> None:
    white = generate(GeneratorSpec.ar1(0.0), 20000, 2)
    assert np.var(white) == pytest.approx(1.0, abs=0.05)
    correlated = generate(GeneratorSpec.ar1(0.5), 20000, 3)
    assert np.var(correlated) == pytest.approx(4.0 / 3.0, abs=0.1)
    assert np.corrcoef(correlated[:-1], correlated[1:])[0, 1] == pytest.approx(0.5, abs=0.05)
    uniform = generate(GeneratorSpec.ar1(0.5, uniform_marginal=True), 20000, 4)
    assert np.all((uniform > 0) & (uniform < 1))
    assert uniform.mean() == pytest.approx(0.5, abs=0.02)


def test_histogram_and_regression_shapes() -> None:
    hist = generate(GeneratorSpec.histogram_density([0.0, 1.0], [0.0, 0.5, 1.0]), 500, 5)
    assert hist.shape == (500,)
    assert np.all(hist >= 0.5)
    rows = generate(GeneratorSpec.regression(), 300, 6)
    assert rows.shape == (300, 2)
    assert np.all((rows[:, 0] >= 0) & (rows[:, 0] < 1))


def test_analytic_moments() -> None:
    gaussian = analytic_moments(GeneratorSpec.gaussian(1.0, 2.0))
    assert gaussian.mean == 1.0
    assert gaussian.variance == pytest.approx(4.0)

    t5 = analytic_moments(GeneratorSpec.student_t(5.0))
    assert t5.variance == pytest.approx(5.0 / 3.0)
    assert t5.var_square == pytest.approx(25.0 - 25.0 / 9.0)
    assert math.isinf(analytic_moments(GeneratorSpec.student_t(3.0)).var_square)

    pareto = analytic_moments(GeneratorSpec.pareto(3.0))
    assert pareto.mean == pytest.approx(1.5)
    assert math.isinf(pareto.raw[3])
    assert pareto.to_dict()["var_square"] is None

    uniform = analytic_moments(GeneratorSpec.histogram_density([1.0]))
    assert uniform.raw == pytest.approx((1 / 2, 1 / 3, 1 / 4, 1 / 5))

    mixed = analytic_moments(GeneratorSpec.contaminated(GeneratorSpec.gaussian(), 0.1, 10.0))
    assert mixed.mean == pytest.approx(1.0)
    assert mixed.second == pytest.approx(1.0 + 0.1 * 100.0)

    with pytest.raises(UnsupportedModelError):
        analytic_moments(GeneratorSpec.regression())


def test_regression_moments_for_linear_truth() -> None:
    moments = regression_moments(GeneratorSpec.regression(s_star=(1.0, 1.0)), build_polynomial_dictionary(1))
    assert moments.s_o == pytest.approx([1.0, 1.0], abs=1e-9)
    assert moments.approximation_loss == pytest.approx(0.0, abs=1e-12)
    assert moments.D > 0
    assert moments.M_psi >= 4.0

    quadratic = regression_moments(GeneratorSpec.regression(s_star=(0.0, 0.0, 1.0)), build_polynomial_dictionary(1))
    # best linear fit of x^2 on U(0, 1) is x - 1/6 with squared error 1/180
    assert quadratic.s_o == pytest.approx([-1 / 6, 1.0], abs=1e-9)
    assert quadratic.approximation_loss == pytest.approx(1 / 180, abs=1e-9)


def test_spec_round_trip_and_block_contamination() -> None:
    spec = GeneratorSpec.histogram_density([0.25, 0.75])
    assert GeneratorSpec.from_dict(spec.to_dict()) == spec
    shifted = contaminate_block(np.zeros(6), range(2, 4), 5.0)
    assert shifted.tolist() == [0, 0, 5, 5, 0, 0]
