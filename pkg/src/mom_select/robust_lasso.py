from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np

from .blocks import BlockCountMode, BlockPartition, choose_block_count, make_regular_partition, robust_mean
from .constants import CONSTANTS
from .dictionary import Dictionary, check_lasso_hypotheses, coherence_stats
from .errors import DimensionError, DomainError, IllPosedError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_CYCLES = 10_000
PSD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LassoProblem:
    dictionary: Dictionary
    first_moments: np.ndarray
    second_moments: np.ndarray
    weights: np.ndarray
    V: int
    n: int
    delta: float
    weight_factor: float = 1.0

    def __post_init__(self) -> None:
        M = self.dictionary.size
        for name in ("first_moments", "second_moments", "weights"):
            vector = np.asarray(getattr(self, name), dtype=float)
            if vector.shape != (M,):
                raise DimensionError(f"{name} must have length {M}, got shape {vector.shape}")
            object.__setattr__(self, name, vector)
        if np.any(self.weights < 0):
            raise DomainError("weights must be nonnegative")

    @property
    def quadratic(self) -> np.ndarray:
        return self.dictionary.inner_products()

    def weight_floor(self) -> np.ndarray:
        return CONSTANTS.L3 * np.sqrt(np.maximum(self.second_moments, 0.0)) * math.sqrt(self.V / self.n)

    def weights_meet_floor(self) -> bool:
        return bool(np.all(self.weights >= self.weight_floor() * (1.0 - 1e-12)))

    def to_dict(self) -> dict:
        return {
            "dictionary": self.dictionary.to_dict(),
            "first_moments": self.first_moments.tolist(),
            "second_moments": self.second_moments.tolist(),
            "weights": self.weights.tolist(),
            "V": self.V,
            "n": self.n,
            "delta": self.delta,
            "weight_factor": self.weight_factor,
        }


@dataclass(frozen=True, eq=False)
class LassoFit:
    theta_hat: np.ndarray
    criterion_value: float
    active_set: tuple[int, ...]
    iterations: int
    converged: bool
    weights: np.ndarray
    labels: tuple[str, ...]
    history: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "theta_hat": {self.labels[i]: float(self.theta_hat[i]) for i in self.active_set},
            "weights": self.weights.tolist(),
            "criterion": self.criterion_value,
            "iterations": self.iterations,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class OracleRemainder:
    value: float
    H1: bool
    H2: bool
    H3: bool
    kappa_M: float

    def to_dict(self) -> dict:
        return {"value": self.value, "H1": self.H1, "H2": self.H2, "H3": self.H3, "kappa_M": self.kappa_M}


@dataclass(frozen=True)
class OracleCheck:
    lhs: float
    rhs: float
    remainder: OracleRemainder
    alpha: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "holds": self.holds,
            "alpha": self.alpha,
            "remainder": self.remainder.to_dict(),
        }


def soft_threshold(u: np.ndarray | float, omega: np.ndarray | float) -> np.ndarray:
    value = np.asarray(u, dtype=float)
    return np.sign(value) * np.maximum(np.abs(value) - np.asarray(omega, dtype=float), 0.0)


def lasso_weights(
    sample: np.ndarray | Sequence[float],
    dictionary: Dictionary,
    delta: float,
    weight_factor: float = 1.0,
) -> LassoProblem:
    """Robust moments on one shared partition and weights at the L3 floor."""
    if weight_factor < 1.0:
        raise DomainError(f"weight_factor must be >= 1, got {weight_factor}")
    points = np.asarray(sample, dtype=float).ravel()
    n = points.size
    M = dictionary.size
    # V >= ln(4M/delta) is the mean-mode count at level delta/(4M)
    V = choose_block_count(delta / (4.0 * M), n, BlockCountMode.MEAN)
    partition = make_regular_partition(n, V)
    design = dictionary.evaluate(points)
    first, second = _column_moments(design, partition)
    floor = CONSTANTS.L3 * np.sqrt(np.maximum(second, 0.0)) * math.sqrt(V / n)
    return LassoProblem(
        dictionary=dictionary,
        first_moments=first,
        second_moments=second,
        weights=weight_factor * floor,
        V=V,
        n=n,
        delta=delta,
        weight_factor=weight_factor,
    )


def _column_moments(design: np.ndarray, partition: BlockPartition) -> tuple[np.ndarray, np.ndarray]:
    first = np.array([robust_mean(design[:, j], None, partition).value for j in range(design.shape[1])])
    second = np.array([robust_mean(design[:, j] ** 2, None, partition).value for j in range(design.shape[1])])
    return first, second


def _as_coefficients(problem: LassoProblem, theta: np.ndarray | Sequence[float]) -> np.ndarray:
    coef = np.asarray(theta, dtype=float)
    if coef.shape != (problem.dictionary.size,):
        raise DimensionError(f"theta must have length {problem.dictionary.size}, got shape {coef.shape}")
    return coef


def squared_norm(dictionary: Dictionary, theta: np.ndarray) -> float:
    """||s_theta||^2 from the Gram form."""
    if dictionary.orthonormal and np.allclose(dictionary.norms, 1.0):
        return float(np.dot(theta, theta))
    return float(theta @ dictionary.inner_products() @ theta)


def lasso_criterion(problem: LassoProblem, theta: np.ndarray | Sequence[float]) -> float:
    coef = _as_coefficients(problem, theta)
    return (
        squared_norm(problem.dictionary, coef)
        - 2.0 * float(np.dot(coef, problem.first_moments))
        + 2.0 * float(np.dot(problem.weights, np.abs(coef)))
    )


def solve_lasso(
    problem: LassoProblem,
    tol: float = DEFAULT_TOL,
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> LassoFit:
    """Cyclic coordinate descent in storage order, from theta = 0."""
    if problem.dictionary.smallest_eigenvalue() < -PSD_TOL:
        raise IllPosedError("the Gram matrix is not positive semidefinite")
    Q = problem.quadratic
    b = problem.first_moments
    omega = problem.weights
    M = problem.dictionary.size
    theta = np.zeros(M)
    q = np.zeros(M)  # Q @ theta

    def criterion() -> float:
        return float(theta @ q) - 2.0 * float(b @ theta) + 2.0 * float(omega @ np.abs(theta))

    history = [criterion()]
    converged = False
    cycles = 0
    while cycles < max_cycles:
        cycles += 1
        for j in range(M):
            partial = b[j] - (q[j] - Q[j, j] * theta[j])
            update = float(soft_threshold(partial, omega[j])) / Q[j, j]
            step = update - theta[j]
            if step != 0.0:
                q += Q[:, j] * step
                theta[j] = update
        history.append(criterion())
        if history[-2] - history[-1] < tol:
            converged = True
            break

    return LassoFit(
        theta_hat=theta,
        criterion_value=lasso_criterion(problem, theta),
        active_set=tuple(int(i) for i in np.flatnonzero(theta)),
        iterations=cycles,
        converged=converged,
        weights=omega.copy(),
        labels=problem.dictionary.labels,
        history=tuple(history),
    )


def oracle_remainder(
    problem: LassoProblem,
    theta: np.ndarray | Sequence[float],
    kappa_M: float | None = None,
) -> OracleRemainder:
    """Smallest remainder R(theta) over the hypotheses that hold; inf if none does.

    H1/H2 need strictly positive weights and are reported false otherwise.
    """
    coef = _as_coefficients(problem, theta)
    dictionary = problem.dictionary
    M = dictionary.size
    active = np.flatnonzero(coef)
    zeta = dictionary.smallest_eigenvalue()
    kappa = zeta if kappa_M is None else float(kappa_M)
    H1 = H2 = False
    if np.all(problem.weights > 0):
        stats = coherence_stats(dictionary, coef, problem.weights, problem.n, problem.delta, kappa_M=kappa)
        flags = check_lasso_hypotheses(stats)
        H1, H2 = flags.H1, flags.H2
    H3 = zeta > 0 and kappa > 0 and zeta >= kappa
    candidates = []
    if H1 or H2:
        ratio = np.max(problem.weights[active] / dictionary.norms[active]) if active.size else 0.0
        F_sq = problem.n / math.log(2.0 * M / problem.delta) * float(ratio) ** 2
        candidates.append(F_sq * active.size * math.log(4.0 * M / problem.delta) / problem.n)
    if H3:
        candidates.append(float(np.sum(problem.weights[active] ** 2)) / kappa)
    return OracleRemainder(
        value=min(candidates) if candidates else math.inf,
        H1=H1,
        H2=H2,
        H3=H3,
        kappa_M=kappa,
    )


def oracle_bound(
    problem: LassoProblem,
    theta_hat: np.ndarray | Sequence[float],
    theta: np.ndarray | Sequence[float],
    truth_coefficients: np.ndarray | Sequence[float],
    truth_residual_sq: float = 0.0,
    alpha: float = 2.0,
    kappa_M: float | None = None,
) -> OracleCheck:
    """Both sides of the Lasso oracle inequality at comparator theta.

    The truth is s_* = s_{truth_coefficients} + r with r orthogonal to the
    dictionary span and ||r||^2 = truth_residual_sq.
    """
    if alpha <= 1.0:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    estimate = _as_coefficients(problem, theta_hat)
    comparator = _as_coefficients(problem, theta)
    truth = _as_coefficients(problem, truth_coefficients)
    Q = problem.quadratic
    fit_error = float((estimate - truth) @ Q @ (estimate - truth)) + truth_residual_sq
    comparator_error = float((comparator - truth) @ Q @ (comparator - truth)) + truth_residual_sq
    remainder = oracle_remainder(problem, comparator, kappa_M)
    lhs = fit_error + alpha / (2.0 * (alpha + 1.0)) * float(np.dot(problem.weights, np.abs(comparator - estimate)))
    rhs = (alpha + 1.0) / (alpha - 1.0) * comparator_error + 8.0 * alpha**2 / (alpha - 1.0) * remainder.value
    return OracleCheck(lhs=lhs, rhs=rhs, remainder=remainder, alpha=alpha)
