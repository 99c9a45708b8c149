from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
import math
import time
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

from .blocks import BlockCountMode, check_variance_condition, choose_block_count, make_regular_partition, robust_mean, variance_upper_bound
from .constants import CONSTANTS
from .dictionary import Dictionary, build_histogram_dictionary, build_polynomial_dictionary, build_trigonometric_dictionary, check_dictionary_condition, histogram_cell_moments, regular_breakpoints
from .errors import ConditionViolationError, DomainError
from .estimator_selection import (
    PenaltyRule,
    SelectionConfig,
    SelectionMode,
    classical_oracle_ratio,
    nested_models,
    projection_candidates,
    robust_oracle_check,
    select,
)
from .generators import GeneratorFamily, GeneratorSpec, analytic_moments, contaminate_block, generate, regression_moments, rep_seeds
from .m_select import (
    HistogramEstimate,
    contrast_kullback_histogram,
    contrast_l2_density,
    contrast_l2_regression,
    kullback_excess_loss,
    l2_density_excess_loss,
    rate_bound,
    rate_quantities,
    regression_excess_loss,
    select_m_estimator,
)
from .mixing import ar1_mixing_coefficients, coupling_allowance, mixing_block_count, rate_quantities_mixing, select_m_estimator_mixing
from .monitoring import ExperimentMetrics, log_event
from .robust_lasso import lasso_weights, oracle_bound, solve_lasso

MIN_REPORTED_REPS = 100


class ExperimentKind(str, Enum):
    PROP21 = "prop21"
    COR22 = "cor22"
    THM31 = "thm31"
    THM41 = "thm41"
    THM42 = "thm42"
    THM51_L2 = "thm51_l2"
    PROP55_KULL = "prop55_kull"
    PROP57_REG = "prop57_reg"
    THM63_MIXING = "thm63_mixing"


@dataclass(frozen=True)
class ExperimentSettings:
    kind: ExperimentKind
    n: int
    delta: float
    reps: int
    generator: GeneratorSpec
    seed: int = 0
    cells: int = 4
    alpha: float = 2.0
    epsilon: float = 0.1
    Delta: float = 2.0
    smoothing: float | None = None
    max_frequency: int = 4
    kappa_M: float | None = None
    contamination: float = 0.0
    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ExperimentKind(self.kind))
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if not 0.0 < self.delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {self.delta}")
        if self.reps < 1:
            raise DomainError(f"reps must be positive, got {self.reps}")
        if self.workers < 1:
            raise DomainError(f"workers must be positive, got {self.workers}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "n": self.n,
            "delta": self.delta,
            "reps": self.reps,
            "seed": self.seed,
            "generator": self.generator.to_dict(),
            "cells": self.cells,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "Delta": self.Delta,
            "smoothing": self.smoothing,
            "max_frequency": self.max_frequency,
            "kappa_M": self.kappa_M,
            "contamination": self.contamination,
        }


def _sparse_histogram() -> GeneratorSpec:
    probs = [0.0] * 16
    probs[2] = probs[9] = 0.5
    return GeneratorSpec.histogram_density(probs)


_DEFAULTS: dict[ExperimentKind, Callable[[], dict]] = {
    ExperimentKind.PROP21: lambda: {"n": 2000, "delta": 0.05, "reps": 10_000, "generator": GeneratorSpec.gaussian()},
    ExperimentKind.COR22: lambda: {"n": 2000, "delta": 0.05, "reps": 10_000, "generator": GeneratorSpec.gaussian()},
    ExperimentKind.THM31: lambda: {"n": 4000, "delta": 0.05, "reps": 500, "cells": 16, "generator": _sparse_histogram()},
    ExperimentKind.THM41: lambda: {
        "n": 2000,
        "delta": 0.05,
        "reps": 200,
        "generator": GeneratorSpec.histogram_density([0.1, 0.2, 0.3, 0.4]),
    },
    ExperimentKind.THM42: lambda: {
        "n": 2000,
        "delta": 0.05,
        "reps": 200,
        "generator": GeneratorSpec.histogram_density([0.1, 0.2, 0.3, 0.4]),
    },
    ExperimentKind.THM51_L2: lambda: {"n": 1600, "delta": 0.01, "reps": 2000, "generator": GeneratorSpec.histogram_density([0.25] * 4)},
    ExperimentKind.PROP55_KULL: lambda: {
        "n": 2000,
        "delta": 0.05,
        "reps": 500,
        "generator": GeneratorSpec.histogram_density([0.05, 0.1, 0.15, 0.2, 0.2, 0.15, 0.1, 0.05]),
    },
    ExperimentKind.PROP57_REG: lambda: {"n": 12_000, "delta": 0.05, "reps": 1000, "generator": GeneratorSpec.regression()},
    ExperimentKind.THM63_MIXING: lambda: {
        "n": 6400,
        "delta": 0.05,
        "reps": 500,
        "generator": GeneratorSpec.ar1(0.5, uniform_marginal=True),
    },
}


def default_settings(kind: ExperimentKind | str, **overrides: object) -> ExperimentSettings:
    kind = ExperimentKind(kind)
    values = {"kind": kind, **_DEFAULTS[kind]()}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentSettings(**values)


@dataclass(frozen=True)
class ReplicationResult:
    rep: int
    statistic: float
    bound: float
    violated: bool
    ratio: float
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rep": self.rep,
            "statistic": self.statistic,
            "bound": self.bound,
            "violated": self.violated,
            "ratio": self.ratio,
            **self.extra,
        }


@dataclass(frozen=True)
class ExperimentPlan:
    replicate: Callable[[int, np.random.SeedSequence], ReplicationResult]
    allowed_rate: float | None
    constants: dict
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExperimentReport:
    kind: ExperimentKind
    settings: ExperimentSettings
    reps: int
    violations: int
    coverage: float
    allowed_rate: float | None
    acceptance_limit: float | None
    bound_value: float
    ratio_mean: float
    ratio_p95: float
    constants: dict
    details: dict
    per_rep: tuple[ReplicationResult, ...]
    wall_ms: float | None = None

    @property
    def violation_rate(self) -> float:
        return self.violations / self.reps

    @property
    def passed(self) -> bool | None:
        if self.acceptance_limit is None:
            return None
        return self.violation_rate <= self.acceptance_limit

    def rows(self) -> list[dict]:
        return [r.to_dict() for r in self.per_rep]

    def to_dict(self, include_reps: bool = True) -> dict:
        payload = {
            "kind": self.kind.value,
            "config": self.settings.to_dict(),
            "seed": self.settings.seed,
            "reps": self.reps,
            "violations": self.violations,
            "coverage": self.coverage,
            "allowed_rate": self.allowed_rate,
            "acceptance_limit": self.acceptance_limit,
            "passed": self.passed,
            "bound_value": self.bound_value,
            "ratio_mean": self.ratio_mean,
            "ratio_p95": self.ratio_p95,
            "constants": self.constants,
            "details": self.details,
            "wall_ms": self.wall_ms,
        }
        if include_reps:
            payload["per_rep"] = self.rows()
        return payload


def _ratio(statistic: float, bound: float) -> float:
    if bound == 0:
        return 0.0 if statistic <= 0 else math.inf
    return statistic / bound


def _result(rep: int, statistic: float, bound: float, **extra: object) -> ReplicationResult:
    return ReplicationResult(
        rep=rep,
        statistic=float(statistic),
        bound=float(bound),
        violated=bool(statistic > bound),
        ratio=float(_ratio(statistic, bound)),
        extra=dict(extra),
    )


# --- truths ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DensityTruth:
    """A histogram density s_* and its projection onto a histogram dictionary."""

    density: HistogramEstimate
    dictionary: Dictionary
    coefficients: np.ndarray
    residual_sq: float
    psi_mean: float
    masses: np.ndarray

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.coefficients, self.coefficients)) + self.residual_sq

    @property
    def projection(self) -> HistogramEstimate:
        """s_o as a histogram on the dictionary cells."""
        edges = np.asarray(self.dictionary.params["breakpoints"], dtype=float)
        return HistogramEstimate(edges, self.masses / np.diff(edges))


def _truth_histogram(generator: GeneratorSpec) -> HistogramEstimate:
    if generator.family == GeneratorFamily.HISTOGRAM:
        edges = np.asarray(generator.params["breakpoints"], dtype=float)
        probs = np.asarray(generator.params["cell_probs"], dtype=float)
        return HistogramEstimate(edges, probs / np.diff(edges))
    if generator.family == GeneratorFamily.AR1 and generator.params.get("uniform_marginal", False):
        return HistogramEstimate(np.array([0.0, 1.0]), np.array([1.0]))
    raise DomainError(f"{generator.family.value} generators have no known histogram density")


def density_truth(generator: GeneratorSpec, breakpoints: list[float]) -> DensityTruth:
    density = _truth_histogram(generator)
    dictionary = build_histogram_dictionary(breakpoints)
    probs = density.heights * density.widths
    moments = histogram_cell_moments(dictionary, density.breakpoints, probs)
    total = math.fsum((density.heights**2 * density.widths).tolist())
    coefficients = moments.mean
    return DensityTruth(
        density=density,
        dictionary=dictionary,
        coefficients=coefficients,
        residual_sq=max(total - float(np.dot(coefficients, coefficients)), 0.0),
        psi_mean=float(moments.second.sum()),
        masses=coefficients * np.sqrt(np.diff(np.asarray(breakpoints, dtype=float))),
    )


def trigonometric_coefficients(density: HistogramEstimate, max_frequency: int) -> np.ndarray:
    """Exact <s_*, psi> for the trigonometric system and a histogram s_*."""
    a, b = density.breakpoints[:-1], density.breakpoints[1:]
    h = density.heights
    coef = [math.fsum((h * (b - a)).tolist())]
    for k in range(1, max_frequency + 1):
        w = 2.0 * math.pi * k
        coef.append(math.sqrt(2.0) * float(np.sum(h * (np.sin(w * b) - np.sin(w * a)) / w)))
        coef.append(math.sqrt(2.0) * float(np.sum(h * (np.cos(w * a) - np.cos(w * b)) / w)))
    return np.array(coef)


def _contaminate(sample: np.ndarray, n_blocks: int, magnitude: float) -> np.ndarray:
    if magnitude == 0:
        return sample
    first = make_regular_partition(sample.shape[0], n_blocks).ranges[0]
    return contaminate_block(sample, first, magnitude)


# --- plans -------------------------------------------------------------------


def _plan_prop21(s: ExperimentSettings) -> ExperimentPlan:
    moments = analytic_moments(s.generator)
    V = choose_block_count(s.delta, s.n, BlockCountMode.MEAN)
    partition = make_regular_partition(s.n, V)
    half_width = CONSTANTS.L1 * math.sqrt(moments.variance) * math.sqrt(V / s.n)

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        return _result(rep, robust_mean(sample, None, partition).value - moments.mean, half_width)

    return ExperimentPlan(replicate, s.delta, {"V": V, "half_width": half_width, "variance": moments.variance})


def _plan_cor22(s: ExperimentSettings) -> ExperimentPlan:
    moments = analytic_moments(s.generator)
    V = choose_block_count(s.delta, s.n, BlockCountMode.MEAN)
    if not check_variance_condition(moments.var_square, moments.second, V, s.n):
        raise ConditionViolationError(
            "C(f)",
            f"L1 sqrt(Var f^2)/Pf^2 sqrt(V/n) exceeds 1/2 for {s.generator.family.value} (Var f^2 = {moments.var_square})",
        )
    partition = make_regular_partition(s.n, V)

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        return _result(rep, moments.variance, variance_upper_bound(sample, None, partition))

    return ExperimentPlan(replicate, s.delta, {"V": V, "variance": moments.variance, "var_square": moments.var_square})


def _plan_thm31(s: ExperimentSettings) -> ExperimentPlan:
    truth = density_truth(s.generator, regular_breakpoints(s.cells))
    dictionary = truth.dictionary
    theta_star = truth.coefficients

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        problem = lasso_weights(sample, dictionary, s.delta)
        fit = solve_lasso(problem)
        check = oracle_bound(
            problem,
            fit.theta_hat,
            theta_star,
            theta_star,
            truth_residual_sq=truth.residual_sq,
            alpha=s.alpha,
            kappa_M=s.kappa_M,
        )
        return _result(
            rep,
            check.lhs,
            check.rhs,
            active=len(fit.active_set),
            remainder=check.remainder.value,
            weight_max=float(problem.weights.max()),
        )

    V = choose_block_count(s.delta / (4.0 * dictionary.size), s.n, BlockCountMode.MEAN)
    probs = truth.density.heights * truth.density.widths
    cell_moments = histogram_cell_moments(dictionary, truth.density.breakpoints, probs)
    if not check_dictionary_condition(list(zip(cell_moments.var_square, cell_moments.second)), [V] * dictionary.size, s.n):
        raise ConditionViolationError("C(D)", f"some cell fails L1 sqrt(Var psi^2)/P psi^2 sqrt(V/n) <= 1/2 at V={V}, n={s.n}")
    floors = CONSTANTS.L3 * np.sqrt(cell_moments.second) * math.sqrt(V / s.n)
    return ExperimentPlan(
        replicate,
        2.0 * s.delta,
        {"V": V, "L3": CONSTANTS.L3, "population_weight_floors": floors.tolist()},
        {"theta_star": theta_star.tolist(), "alpha": s.alpha},
    )


def _selection_plan(s: ExperimentSettings, robust: bool) -> ExperimentPlan:
    density = _truth_histogram(s.generator)
    dictionary = build_trigonometric_dictionary(s.max_frequency)
    truth = trigonometric_coefficients(density, s.max_frequency)
    residual = max(math.fsum((density.heights**2 * density.widths).tolist()) - float(np.dot(truth, truth)), 0.0)
    models = nested_models(dictionary)
    config = SelectionConfig(
        delta=s.delta,
        epsilon=s.epsilon,
        penalty=PenaltyRule.ROBUST if robust else PenaltyRule.PLUGIN,
    )
    mode = SelectionMode.ROBUST if robust else SelectionMode.CLASSICAL

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        candidates, coefficients = projection_candidates(sample, dictionary, models)
        distances = {theta: float(np.sum((coef - truth) ** 2)) + residual for theta, coef in coefficients.items()}
        result = select(candidates, sample, s.alpha, mode, config, dictionary)
        if robust:
            check = robust_oracle_check(result, candidates, distances, s.epsilon)
            return _result(rep, check.lhs, check.rhs, theta_hat=result.theta_hat)
        ratio = classical_oracle_ratio(result, candidates, distances)
        return _result(rep, ratio, 1.0, theta_hat=result.theta_hat, loss=distances[result.theta_hat])

    constants = {"L4": CONSTANTS.L4, "L0": CONSTANTS.L0}
    if robust:
        constants["leading_constant"] = min(1.0 - 4.0 * s.epsilon, s.alpha) / (2.0 * (8.0 + s.alpha))
    return ExperimentPlan(replicate, s.delta if robust else None, constants, {"models": [m.id for m in models]})


def _plan_thm51(s: ExperimentSettings) -> ExperimentPlan:
    truth = density_truth(s.generator, regular_breakpoints(s.cells))
    V = choose_block_count(s.delta, s.n, BlockCountMode.M_SELECT)
    spread = truth.psi_mean - float(np.dot(truth.coefficients, truth.coefficients))
    contrast = contrast_l2_density(
        truth.dictionary,
        sigma1_sq=max(spread, 0.0),
        excess_loss_ref=l2_density_excess_loss(truth.coefficients, truth.residual_sq),
    )
    bound = truth.residual_sq + CONSTANTS.L5 * spread * V / s.n
    rates = rate_quantities(contrast.margin, V, s.n, s.Delta)
    to_s_o = l2_density_excess_loss(truth.coefficients)

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = _contaminate(generate(s.generator, s.n, seed), V, s.contamination)
        trace = select_m_estimator(sample, contrast, s.delta)
        best = min(to_s_o(est) for est in trace.estimates)
        return _result(
            rep,
            contrast.excess_loss_ref(trace.estimate),
            bound,
            K_star=trace.K_star,
            rate_bound=rate_bound(rates, best, truth.residual_sq) if rates.nu_n <= 0.5 else None,
        )

    return ExperimentPlan(
        replicate,
        2.0 * s.delta,
        {"V": V, "L5": CONSTANTS.L5, "psi_spread": spread, "rates": rates.to_dict()},
        {"contaminated_block": 0 if s.contamination else None},
    )


def _plan_prop55(s: ExperimentSettings) -> ExperimentPlan:
    breakpoints = regular_breakpoints(s.cells)
    truth = density_truth(s.generator, breakpoints)
    contrast = contrast_kullback_histogram(
        breakpoints,
        smoothing=s.smoothing,
        n=s.n,
        excess_loss_ref=kullback_excess_loss(truth.density),
    )
    V = choose_block_count(s.delta, s.n, BlockCountMode.M_SELECT)
    approximation = contrast.excess_loss_ref(truth.projection)
    scale = s.cells * math.log(s.n) * V / s.n

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        trace = select_m_estimator(sample, contrast, s.delta)
        return _result(rep, contrast.excess_loss_ref(trace.estimate) - approximation, scale, K_star=trace.K_star)

    return ExperimentPlan(
        replicate,
        None,
        {"V": V, "smoothing": s.smoothing if s.smoothing is not None else 1.0 / s.n, "D_log_n_V_over_n": scale},
        {"approximation_loss": approximation},
    )


def _plan_prop57(s: ExperimentSettings) -> ExperimentPlan:
    basis = build_polynomial_dictionary(1)
    moments = regression_moments(s.generator, basis)
    V = choose_block_count(s.delta, s.n, BlockCountMode.M_SELECT)
    if 96.0 * math.e * moments.M_psi * V > s.n:
        raise ConditionViolationError(
            "96eM_PsiV<=n",
            f"96 e M_Psi V = {96.0 * math.e * moments.M_psi * V:.1f} exceeds n = {s.n}",
        )
    coefficients = list(s.generator.params["s_star"])

    def s_star(x: np.ndarray) -> np.ndarray:
        return P.polyval(x, coefficients)

    contrast = contrast_l2_regression(basis, D=moments.D, M_psi=moments.M_psi, excess_loss_ref=regression_excess_loss(s_star))
    bound = moments.approximation_loss + CONSTANTS.L7 * moments.D * V / s.n

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        trace = select_m_estimator(sample, contrast, s.delta)
        return _result(rep, contrast.excess_loss_ref(trace.estimate), bound, K_star=trace.K_star, degenerate=len(trace.degenerate_blocks))

    return ExperimentPlan(
        replicate,
        3.0 * s.delta,
        {"V": V, "L7": CONSTANTS.L7, **moments.to_dict()},
    )


def _plan_thm63(s: ExperimentSettings) -> ExperimentPlan:
    if s.generator.family != GeneratorFamily.AR1:
        raise DomainError("the mixing experiment needs an ar1 generator")
    truth = density_truth(s.generator, regular_breakpoints(s.cells))
    V = mixing_block_count(s.delta)
    usable = (s.n // (2 * V)) * 2 * V
    if usable == 0:
        raise DomainError(f"n={s.n} is too small for 2V={2 * V} blocks")
    q = usable // (2 * V)
    spread = truth.psi_mean - float(np.dot(truth.coefficients, truth.coefficients))
    contrast = contrast_l2_density(
        truth.dictionary,
        sigma1_sq=max(spread, 0.0),
        excess_loss_ref=l2_density_excess_loss(truth.coefficients, truth.residual_sq),
    )
    coeffs = ar1_mixing_coefficients(s.generator.params["a"], horizon=max(q, 1))
    rates = rate_quantities_mixing(contrast.margin, V, usable, s.Delta, coeffs.Phi)
    allowance = coupling_allowance(coeffs, V, q)
    to_s_o = l2_density_excess_loss(truth.coefficients)

    def replicate(rep: int, seed: np.random.SeedSequence) -> ReplicationResult:
        sample = generate(s.generator, s.n, seed)
        if s.contamination:
            sample = contaminate_block(sample, range(0, q), s.contamination)
        trace = select_m_estimator_mixing(sample, contrast, s.delta)
        best = min(to_s_o(est) for est in trace.estimates)
        return _result(rep, contrast.excess_loss_ref(trace.estimate), rate_bound(rates, best, truth.residual_sq), K_star=trace.K_star)

    return ExperimentPlan(
        replicate,
        min(s.delta + allowance, 1.0),
        {"V": V, "q": q, "L8": CONSTANTS.L8, "rates": rates.to_dict(), "mixing": coeffs.to_dict(), "coupling_allowance": allowance},
        {"truncated": s.n - usable, "contaminated_block": 0 if s.contamination else None},
    )


_PLANS: dict[ExperimentKind, Callable[[ExperimentSettings], ExperimentPlan]] = {
    ExperimentKind.PROP21: _plan_prop21,
    ExperimentKind.COR22: _plan_cor22,
    ExperimentKind.THM31: _plan_thm31,
    ExperimentKind.THM41: lambda s: _selection_plan(s, robust=False),
    ExperimentKind.THM42: lambda s: _selection_plan(s, robust=True),
    ExperimentKind.THM51_L2: _plan_thm51,
    ExperimentKind.PROP55_KULL: _plan_prop55,
    ExperimentKind.PROP57_REG: _plan_prop57,
    ExperimentKind.THM63_MIXING: _plan_thm63,
}


def build_plan(settings: ExperimentSettings) -> ExperimentPlan:
    return _PLANS[settings.kind](settings)


# --- runner ------------------------------------------------------------------


class CoverageExperiment:
    """Replicates one procedure with independent seeds and counts bound violations."""

    def __init__(self, settings: ExperimentSettings, metrics: ExperimentMetrics | None = None, timing: bool = False) -> None:
        self.settings = settings
        self.metrics = metrics or ExperimentMetrics()
        self.timing = timing

    def run(self) -> ExperimentReport:
        s = self.settings
        started = time.perf_counter()
        if s.reps < MIN_REPORTED_REPS:
            log_event("warning", "few replications; coverage is imprecise", kind=s.kind.value, reps=s.reps)
        try:
            plan = build_plan(s)
        except ConditionViolationError as exc:
            self.metrics.record_abort()
            log_event("error", "experiment aborted", kind=s.kind.value, condition=exc.condition, detail=exc.detail)
            raise
        seeds = rep_seeds(s.seed, s.reps)
        if s.workers > 1:
            with ThreadPoolExecutor(max_workers=s.workers) as pool:
                results = list(pool.map(plan.replicate, range(s.reps), seeds))
        else:
            results = [plan.replicate(rep, seed) for rep, seed in enumerate(seeds)]
        wall_ms = (time.perf_counter() - started) * 1000.0 if self.timing else None
        report = self._build_report(plan, results, wall_ms)
        self.metrics.record_experiment(
            replications=report.reps,
            violations=report.violations,
            degenerate_fits=sum(int(r.extra.get("degenerate", 0) or 0) for r in results),
        )
        log_event(
            "info",
            "experiment finished",
            kind=s.kind.value,
            reps=report.reps,
            violations=report.violations,
            coverage=report.coverage,
        )
        return report

    def _build_report(self, plan: ExperimentPlan, results: list[ReplicationResult], wall_ms: float | None) -> ExperimentReport:
        reps = len(results)
        violations = sum(1 for r in results if r.violated)
        ratios = np.array([r.ratio for r in results if math.isfinite(r.ratio)], dtype=float)
        allowed = plan.allowed_rate
        limit = None if allowed is None else allowed + 3.0 * math.sqrt(allowed * (1.0 - allowed) / reps)
        return ExperimentReport(
            kind=self.settings.kind,
            settings=self.settings,
            reps=reps,
            violations=violations,
            coverage=1.0 - violations / reps,
            allowed_rate=allowed,
            acceptance_limit=limit,
            bound_value=float(np.mean([r.bound for r in results])),
            ratio_mean=float(ratios.mean()) if ratios.size else math.nan,
            ratio_p95=float(np.percentile(ratios, 95)) if ratios.size else math.nan,
            constants={"absolute": CONSTANTS.to_dict(), **plan.constants},
            details=plan.details,
            per_rep=tuple(results),
            wall_ms=wall_ms,
        )


def run_coverage_experiment(
    kind: ExperimentKind | str,
    config: ExperimentSettings | None = None,
    reps: int | None = None,
    seed: int | None = None,
    metrics: ExperimentMetrics | None = None,
    timing: bool = False,
) -> ExperimentReport:
    settings = config if config is not None else default_settings(kind)
    if ExperimentKind(kind) != settings.kind:
        settings = replace(settings, kind=ExperimentKind(kind))
    if reps is not None:
        settings = replace(settings, reps=reps)
    if seed is not None:
        settings = replace(settings, seed=seed)
    return CoverageExperiment(settings, metrics=metrics, timing=timing).run()


def summarize_report(report: ExperimentReport) -> dict[str, float | int | str | None]:
    return {
        "kind": report.kind.value,
        "reps": report.reps,
        "violations": report.violations,
        "coverage": round(report.coverage, 4),
        "allowed_rate": None if report.allowed_rate is None else round(report.allowed_rate, 4),
        "ratio_mean": round(report.ratio_mean, 4),
        "ratio_p95": round(report.ratio_p95, 4),
    }
