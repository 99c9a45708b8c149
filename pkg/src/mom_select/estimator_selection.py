from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
import math
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import simpson

from .blocks import CEIL_TOL, BlockCountMode, BlockPartition, choose_block_count, make_regular_partition, robust_mean
from .constants import CONSTANTS
from .dictionary import Dictionary
from .errors import DeltaTooSmallError, DimensionError, DomainError, EmptyInputError, UnsupportedModelError

PROJECTION_INTERVALS = 4096


class SelectionMode(str, Enum):
    CLASSICAL = "classical"
    ROBUST = "robust"


class PenaltyRule(str, Enum):
    GIVEN = "given"
    CLASSICAL = "classical"
    PLUGIN = "plugin"
    ROBUST = "robust"


@dataclass(frozen=True)
class ModelSpec:
    id: str
    labels: tuple[str, ...]
    pen: float = 0.0

    def __post_init__(self) -> None:
        if self.pen < 0:
            raise DomainError(f"penalty of model {self.id} must be nonnegative")

    def with_pen(self, pen: float) -> "ModelSpec":
        return replace(self, pen=float(pen))

    def psi(self, dictionary: Dictionary, x: np.ndarray) -> np.ndarray:
        """Psi_m(x) = sum of psi_lambda(x)^2 over the model's labels."""
        design = dictionary.evaluate(x)[:, _label_indices(dictionary, self.labels)]
        return np.sum(design**2, axis=1)

    def to_dict(self) -> dict:
        return {"id": self.id, "labels": list(self.labels), "pen": self.pen}


@dataclass(frozen=True, eq=False)
class CandidateEstimator:
    """An estimator s_theta with its menu and projected coefficients per model.

    ``distances[m]`` is ||s_breve_{theta,m} - s_hat_theta||^2.
    """

    theta: str
    menu: tuple[ModelSpec, ...]
    projections: Mapping[str, np.ndarray]
    distances: Mapping[str, float]
    s_hat: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self) -> None:
        for model in self.menu:
            beta = self.projections.get(model.id)
            if beta is None or np.shape(beta) != (len(model.labels),):
                raise DimensionError(f"candidate {self.theta}: projection for model {model.id} does not match its labels")
            if model.id not in self.distances:
                raise DimensionError(f"candidate {self.theta}: missing distance for model {model.id}")

    def projection_norm_sq(self, model_id: str) -> float:
        beta = self.projections[model_id]
        return float(np.dot(beta, beta))

    def with_menu(self, menu: Sequence[ModelSpec]) -> "CandidateEstimator":
        return replace(self, menu=tuple(menu))


@dataclass(frozen=True)
class SelectionConfig:
    delta: float = 0.05
    epsilon: float = 0.1
    nu: float = 1.0
    norm_bound: float = 1.0
    plugin_factor: float = 5.0
    penalty: PenaltyRule = PenaltyRule.GIVEN
    label_priors: Mapping[str, float] | None = None
    model_priors: Mapping[str, float] | None = None


@dataclass(frozen=True)
class SelectionResult:
    theta_hat: str
    chosen_models: dict[str, str]
    criteria: dict[str, float]
    breakdown: dict[str, dict[str, float]]
    alpha: float
    mode: SelectionMode
    penalties: dict[str, float] = field(default_factory=dict)

    def minimizers(self) -> set[str]:
        best = min(self.criteria.values())
        return {theta for theta, value in self.criteria.items() if value == best}

    def to_dict(self) -> dict:
        return {
            "theta_hat": self.theta_hat,
            "alpha": self.alpha,
            "mode": self.mode.value,
            "criteria": self.criteria,
            "chosen_models": self.chosen_models,
            "breakdown": self.breakdown,
            "penalties": self.penalties,
        }


@dataclass(frozen=True)
class SelectionOracleCheck:
    lhs: float
    rhs: float
    leading_constant: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "leading_constant": self.leading_constant, "holds": self.holds}


def _label_indices(dictionary: Dictionary, labels: Sequence[str]) -> list[int]:
    lookup = {label: i for i, label in enumerate(dictionary.labels)}
    missing = [label for label in labels if label not in lookup]
    if missing:
        raise DimensionError(f"labels {missing} are not in the dictionary")
    return [lookup[label] for label in labels]


def _require_orthonormal(dictionary: Dictionary) -> None:
    if not dictionary.orthonormal or not np.allclose(dictionary.norms, 1.0):
        raise UnsupportedModelError("projections need an orthonormal dictionary")


def project_coefficients(
    theta: str,
    coefficients: np.ndarray | Sequence[float],
    menu: Sequence[ModelSpec],
    dictionary: Dictionary,
    residual_sq: float = 0.0,
) -> CandidateEstimator:
    """Candidate s_theta = sum c_l psi_l + r with r orthogonal to the dictionary span."""
    _require_orthonormal(dictionary)
    coef = np.asarray(coefficients, dtype=float)
    if coef.shape != (dictionary.size,):
        raise DimensionError(f"expected {dictionary.size} coefficients, got shape {coef.shape}")
    total = float(np.dot(coef, coef)) + residual_sq
    projections: dict[str, np.ndarray] = {}
    distances: dict[str, float] = {}
    for model in menu:
        beta = coef[_label_indices(dictionary, model.labels)]
        projections[model.id] = beta
        distances[model.id] = max(total - float(np.dot(beta, beta)), 0.0)
    return CandidateEstimator(
        theta=theta,
        menu=tuple(menu),
        projections=projections,
        distances=distances,
        s_hat=lambda x: dictionary.evaluate(x) @ coef,
    )


def project_callable(
    theta: str,
    s_hat: Callable[[np.ndarray], np.ndarray],
    menu: Sequence[ModelSpec],
    dictionary: Dictionary,
    intervals: int = PROJECTION_INTERVALS,
) -> CandidateEstimator:
    """Candidate from an arbitrary function; inner products by Simpson quadrature."""
    _require_orthonormal(dictionary)
    grid = np.linspace(dictionary.domain[0], dictionary.domain[1], intervals + 1)
    values = np.asarray(s_hat(grid), dtype=float)
    total = float(simpson(values**2, x=grid))
    inner = simpson(dictionary.evaluate(grid) * values[:, None], x=grid, axis=0)
    projections: dict[str, np.ndarray] = {}
    distances: dict[str, float] = {}
    for model in menu:
        beta = np.asarray(inner[_label_indices(dictionary, model.labels)], dtype=float)
        projections[model.id] = beta
        distances[model.id] = max(total - float(np.dot(beta, beta)), 0.0)
    return CandidateEstimator(theta=theta, menu=tuple(menu), projections=projections, distances=distances, s_hat=s_hat)


def nested_models(dictionary: Dictionary) -> list[ModelSpec]:
    """m_j spans the first 2j + 1 trigonometric functions (all frequencies up to j)."""
    if dictionary.kind != "trigonometric":
        raise UnsupportedModelError("nested models are defined for the trigonometric dictionary")
    labels = dictionary.labels
    return [ModelSpec(f"m{j}", labels[: 2 * j + 1]) for j in range(dictionary.params["max_frequency"] + 1)]


def projection_candidates(
    sample: np.ndarray | Sequence[float],
    dictionary: Dictionary,
    menu: Sequence[ModelSpec],
) -> tuple[list[CandidateEstimator], dict[str, np.ndarray]]:
    """One projection estimator per model, indexed by the model id, each carrying the full menu.

    Also returns the coefficient vector of every candidate.
    """
    means = dictionary.evaluate(np.asarray(sample, dtype=float).ravel()).mean(axis=0)
    candidates: list[CandidateEstimator] = []
    coefficients: dict[str, np.ndarray] = {}
    for model in menu:
        mask = np.zeros(dictionary.size, dtype=bool)
        mask[_label_indices(dictionary, model.labels)] = True
        coef = np.where(mask, means, 0.0)
        coefficients[model.id] = coef
        candidates.append(project_coefficients(model.id, coef, menu, dictionary))
    return candidates, coefficients


def empirical_means(sample: np.ndarray | Sequence[float], dictionary: Dictionary) -> dict[str, float]:
    design = dictionary.evaluate(sample)
    if design.shape[0] == 0:
        raise EmptyInputError("empty sample")
    return {label: float(np.mean(design[:, i])) for i, label in enumerate(dictionary.labels)}


def robust_means(
    sample: np.ndarray | Sequence[float],
    dictionary: Dictionary,
    partitions: Mapping[str, BlockPartition],
    power: int = 1,
) -> dict[str, float]:
    """P_bar_{B_lambda} psi_lambda^power for every label with a partition."""
    design = dictionary.evaluate(sample)
    return {
        label: robust_mean(design[:, i] ** power, None, partitions[label]).value
        for i, label in enumerate(dictionary.labels)
        if label in partitions
    }


def _per_model(candidate: CandidateEstimator, means: Mapping[str, float], alpha: float) -> dict[str, float]:
    if not candidate.menu:
        raise EmptyInputError(f"candidate {candidate.theta} has an empty model menu")
    values: dict[str, float] = {}
    for model in candidate.menu:
        beta = candidate.projections[model.id]
        try:
            linear = math.fsum(b * means[label] for b, label in zip(beta.tolist(), model.labels))
        except KeyError as exc:
            raise DimensionError(f"no partition for label {exc.args[0]}") from None
        values[model.id] = (
            candidate.projection_norm_sq(model.id)
            - 2.0 * linear
            + alpha * candidate.distances[model.id]
            + model.pen
        )
    return values


def classical_criterion(
    candidate: CandidateEstimator,
    sample: np.ndarray | Sequence[float],
    alpha: float,
    dictionary: Dictionary,
) -> float:
    return min(_per_model(candidate, empirical_means(sample, dictionary), alpha).values())


def robust_criterion(
    candidate: CandidateEstimator,
    sample: np.ndarray | Sequence[float],
    alpha: float,
    partitions: Mapping[str, BlockPartition],
    dictionary: Dictionary,
) -> float:
    return min(_per_model(candidate, robust_means(sample, dictionary, partitions), alpha).values())


def lambda_block_counts(
    labels: Sequence[str],
    n: int,
    delta: float,
    priors: Mapping[str, float] | None = None,
) -> dict[str, int]:
    """V_lambda = smallest integer >= ln(2/(pi(lambda) delta)), at least 1."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    counts: dict[str, int] = {}
    for label in labels:
        prior = priors[label] if priors is not None else 1.0 / len(labels)
        if not 0.0 < prior <= 1.0:
            raise DomainError(f"prior of {label} must lie in (0, 1], got {prior}")
        V = max(math.ceil(math.log(2.0 / (prior * delta)) - CEIL_TOL), 1)
        if 2 * V > n:
            raise DeltaTooSmallError(f"label {label} needs V={V} blocks but n={n} allows at most {n // 2}")
        counts[label] = V
    return counts


def lambda_partitions(
    labels: Sequence[str],
    n: int,
    delta: float,
    priors: Mapping[str, float] | None = None,
) -> dict[str, BlockPartition]:
    cache: dict[int, BlockPartition] = {}
    result: dict[str, BlockPartition] = {}
    for label, V in lambda_block_counts(labels, n, delta, priors).items():
        if V not in cache:
            cache[V] = make_regular_partition(n, V)
        result[label] = cache[V]
    return result


def plugin_psi_mean(
    model: ModelSpec,
    sample: np.ndarray | Sequence[float],
    dictionary: Dictionary,
    delta: float,
) -> float:
    """Robust plug-in P_bar_B Psi_m on a mean-mode partition."""
    points = np.asarray(sample, dtype=float).ravel()
    partition = make_regular_partition(points.size, choose_block_count(delta, points.size, BlockCountMode.MEAN))
    return robust_mean(model.psi(dictionary, points), None, partition).value


def classical_penalty(
    model: ModelSpec,
    sample: np.ndarray | Sequence[float],
    delta: float,
    nu: float,
    pi_m: float,
    *,
    dictionary: Dictionary,
    norm_bound: float,
) -> float:
    if nu <= 0:
        raise DomainError(f"nu must be positive, got {nu}")
    if not 0.0 < pi_m <= 1.0:
        raise DomainError(f"pi_m must lie in (0, 1], got {pi_m}")
    n = np.asarray(sample).shape[0]
    sup_norm = dictionary.psi_sup_norm(_label_indices(dictionary, model.labels))
    psi_mean = plugin_psi_mean(model, sample, dictionary, delta) if model.labels else 0.0
    r_m = math.sqrt(sup_norm) * math.log(2.0 / (pi_m * delta)) / n
    L0 = CONSTANTS.L0
    return (2.5 + 2.0 * L0 * nu) * psi_mean / n + 2.0 * L0 * norm_bound / nu * r_m + 2.0 * L0 / nu**3 * r_m**2


def plugin_penalty(
    model: ModelSpec,
    sample: np.ndarray | Sequence[float],
    delta: float,
    *,
    dictionary: Dictionary,
    factor: float = 5.0,
) -> float:
    """pen(m) = factor * P_bar_B Psi_m / n."""
    if not model.labels:
        return 0.0
    n = np.asarray(sample).shape[0]
    return factor * plugin_psi_mean(model, sample, dictionary, delta) / n


def robust_penalty(
    model: ModelSpec,
    sample: np.ndarray | Sequence[float],
    epsilon: float,
    delta: float,
    partitions: Mapping[str, BlockPartition] | None = None,
    *,
    dictionary: Dictionary,
    label_priors: Mapping[str, float] | None = None,
) -> float:
    if not 0.0 < epsilon < 0.25:
        raise DomainError(f"epsilon must lie in (0, 1/4), got {epsilon}")
    if not model.labels:
        return 0.0
    n = np.asarray(sample).shape[0]
    if partitions is None:
        partitions = lambda_partitions(dictionary.labels, n, delta, label_priors)
    squares = robust_means(sample, dictionary, {label: partitions[label] for label in model.labels}, power=2)
    total = math.fsum(squares[label] * partitions[label].V for label in model.labels)
    return 2.0 * CONSTANTS.L4 / (epsilon * n) * total


def _distinct_models(candidates: Sequence[CandidateEstimator]) -> dict[str, ModelSpec]:
    models: dict[str, ModelSpec] = {}
    for candidate in candidates:
        for model in candidate.menu:
            models.setdefault(model.id, model)
    return models


def assign_penalties(
    candidates: Sequence[CandidateEstimator],
    sample: np.ndarray | Sequence[float],
    dictionary: Dictionary,
    config: SelectionConfig,
    partitions: Mapping[str, BlockPartition] | None = None,
) -> dict[str, float]:
    models = _distinct_models(candidates)
    rule = PenaltyRule(config.penalty)
    penalties: dict[str, float] = {}
    for model_id, model in models.items():
        if rule == PenaltyRule.GIVEN:
            penalties[model_id] = model.pen
        elif rule == PenaltyRule.PLUGIN:
            penalties[model_id] = plugin_penalty(
                model, sample, config.delta, dictionary=dictionary, factor=config.plugin_factor
            )
        elif rule == PenaltyRule.CLASSICAL:
            prior = config.model_priors[model_id] if config.model_priors is not None else 1.0 / len(models)
            penalties[model_id] = classical_penalty(
                model, sample, config.delta, config.nu, prior, dictionary=dictionary, norm_bound=config.norm_bound
            )
        else:
            penalties[model_id] = robust_penalty(
                model,
                sample,
                config.epsilon,
                config.delta,
                partitions,
                dictionary=dictionary,
                label_priors=config.label_priors,
            )
    return penalties


def select(
    candidates: Sequence[CandidateEstimator],
    sample: np.ndarray | Sequence[float],
    alpha: float,
    mode: SelectionMode | str,
    config: SelectionConfig,
    dictionary: Dictionary,
) -> SelectionResult:
    """argmin over candidates of crit_alpha, first declared candidate on ties."""
    if not candidates:
        raise EmptyInputError("no candidate estimators")
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    mode = SelectionMode(mode)
    thetas = [candidate.theta for candidate in candidates]
    if len(set(thetas)) != len(thetas):
        raise DomainError(f"candidate ids must be unique, got {thetas}")
    points = np.asarray(sample, dtype=float).ravel()
    partitions = None
    if mode == SelectionMode.ROBUST or PenaltyRule(config.penalty) == PenaltyRule.ROBUST:
        partitions = lambda_partitions(dictionary.labels, points.size, config.delta, config.label_priors)
    penalties = assign_penalties(candidates, points, dictionary, config, partitions)
    if mode == SelectionMode.CLASSICAL:
        means = empirical_means(points, dictionary)
    else:
        means = robust_means(points, dictionary, partitions)

    criteria: dict[str, float] = {}
    chosen: dict[str, str] = {}
    breakdown: dict[str, dict[str, float]] = {}
    best_theta = ""
    best_value = math.inf
    for candidate in candidates:
        priced = candidate.with_menu([model.with_pen(penalties[model.id]) for model in candidate.menu])
        per_model = _per_model(priced, means, alpha)
        model_id = min(per_model, key=per_model.__getitem__)
        breakdown[candidate.theta] = per_model
        chosen[candidate.theta] = model_id
        value = per_model[model_id]
        criteria[candidate.theta] = value
        if value < best_value:
            best_value = value
            best_theta = candidate.theta
    return SelectionResult(
        theta_hat=best_theta,
        chosen_models=chosen,
        criteria=criteria,
        breakdown=breakdown,
        alpha=alpha,
        mode=mode,
        penalties=penalties,
    )


def robust_oracle_check(
    result: SelectionResult,
    candidates: Sequence[CandidateEstimator],
    truth_distances: Mapping[str, float],
    epsilon: float,
) -> SelectionOracleCheck:
    """Explicit-constant oracle inequality of the robust selection rule.

    ``truth_distances[theta]`` is ||s_hat_theta - s_*||^2.
    """
    constant = min(1.0 - 4.0 * epsilon, result.alpha) / (2.0 * (8.0 + result.alpha))
    rhs = min(
        truth_distances[c.theta]
        + min(c.distances[m.id] + result.penalties.get(m.id, m.pen) for m in c.menu)
        for c in candidates
    )
    return SelectionOracleCheck(
        lhs=constant * truth_distances[result.theta_hat],
        rhs=rhs,
        leading_constant=constant,
    )


def classical_oracle_ratio(
    result: SelectionResult,
    candidates: Sequence[CandidateEstimator],
    truth_distances: Mapping[str, float],
) -> float:
    """||s_hat_selected - s_*||^2 over the classical oracle right-hand side with unit leading constant."""
    rhs = min(
        truth_distances[c.theta]
        + min(c.distances[m.id] + 2.0 * result.penalties.get(m.id, m.pen) for m in c.menu)
        for c in candidates
    )
    return truth_distances[result.theta_hat] / rhs if rhs > 0 else math.inf
