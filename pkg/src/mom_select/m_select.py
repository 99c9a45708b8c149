from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.integrate import simpson

from .blocks import BlockCountMode, BlockPartition, choose_block_count, make_regular_partition, median
from .constants import CONSTANTS
from .dictionary import Dictionary
from .errors import (
    BlockFitError,
    ConstructionError,
    DimensionError,
    DomainError,
    EmptyInputError,
    InsufficientBlocksError,
    MomSelectError,
    UnsupportedModelError,
)

EXCESS_LOSS_INTERVALS = 4096


class Estimate(Protocol):
    def __call__(self, x: np.ndarray) -> np.ndarray: ...

    def to_dict(self) -> dict: ...


@dataclass(frozen=True, eq=False)
class SeriesEstimate:
    coefficients: np.ndarray
    dictionary: Dictionary

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.dictionary.evaluate(x) @ self.coefficients

    @property
    def norm_sq(self) -> float:
        return float(np.dot(self.coefficients, self.coefficients))

    def to_dict(self) -> dict:
        return {"kind": "series", "coefficients": self.coefficients.tolist()}


@dataclass(frozen=True, eq=False)
class HistogramEstimate:
    breakpoints: np.ndarray
    heights: np.ndarray

    def __call__(self, x: np.ndarray) -> np.ndarray:
        points = np.asarray(x, dtype=float)
        edges = self.breakpoints
        cell = np.clip(np.searchsorted(edges, points, side="right") - 1, 0, self.heights.size - 1)
        inside = (points >= edges[0]) & (points <= edges[-1])
        return np.where(inside, self.heights[cell], 0.0)

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def integral(self) -> float:
        return math.fsum((self.heights * self.widths).tolist())

    def to_dict(self) -> dict:
        return {"kind": "histogram", "breakpoints": self.breakpoints.tolist(), "heights": self.heights.tolist()}


@dataclass(frozen=True, eq=False)
class RegressionEstimate:
    coefficients: np.ndarray
    basis: Dictionary
    degenerate: bool = False

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.basis.evaluate(x) @ self.coefficients

    def to_dict(self) -> dict:
        return {"kind": "regression", "coefficients": self.coefficients.tolist(), "degenerate": self.degenerate}


@dataclass(frozen=True)
class MarginParams:
    sigma0: float = 0.0
    pairs: tuple[tuple[float, float], ...] = ()
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma0 < 0:
            raise DomainError("sigma0 must be nonnegative")
        for alpha, sigma in self.pairs:
            if not 0.0 < alpha < 1.0:
                raise DomainError(f"margin exponents must lie in (0, 1), got {alpha}")
            if sigma < 0:
                raise DomainError("margin scales must be nonnegative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise DomainError(f"epsilon must lie in [0, 1], got {self.epsilon}")

    @property
    def N(self) -> int:
        return len(self.pairs)

    def to_dict(self) -> dict:
        return {"sigma0": self.sigma0, "pairs": [list(p) for p in self.pairs], "epsilon": self.epsilon}


@dataclass(frozen=True)
class ContrastModel:
    name: str
    fit_block: Callable[[np.ndarray], Estimate]
    loss: Callable[[Estimate, np.ndarray], np.ndarray]
    excess_loss_ref: Callable[[Estimate], float] | None = None
    margin: MarginParams | None = None


@dataclass(frozen=True)
class RateQuantities:
    nu_n: float
    R_n: float
    C0: float
    C: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"nu_n": self.nu_n, "R_n": self.R_n, "C0": self.C0, "C": list(self.C)}


@dataclass(frozen=True, eq=False)
class SelectorTrace:
    V: int
    estimates: tuple[Estimate, ...]
    worst_case: tuple[float, ...]
    K_star: int
    pairwise: np.ndarray
    degenerate_blocks: tuple[int, ...] = ()
    truncated: int = 0
    block_sizes: tuple[int, ...] = field(default_factory=tuple)

    @property
    def estimate(self) -> Estimate:
        return self.estimates[self.K_star]

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "K_star": self.K_star,
            "worst_case": list(self.worst_case),
            "pairwise": self.pairwise.tolist(),
            "estimates": [est.to_dict() for est in self.estimates],
            "degenerate_blocks": list(self.degenerate_blocks),
            "truncated": self.truncated,
            "block_sizes": list(self.block_sizes),
        }


# --- contrasts -------------------------------------------------------------


def contrast_l2_density(
    dictionary: Dictionary,
    sigma1_sq: float | None = None,
    excess_loss_ref: Callable[[Estimate], float] | None = None,
) -> ContrastModel:
    """gamma(t)(x) = ||t||^2 - 2 t(x) over an orthonormal dictionary."""
    if not dictionary.orthonormal or not np.allclose(dictionary.norms, 1.0):
        raise UnsupportedModelError("the L2 density contrast needs an orthonormal dictionary")

    def fit_block(block: np.ndarray) -> SeriesEstimate:
        if block.shape[0] == 0:
            raise EmptyInputError("empty block")
        return SeriesEstimate(dictionary.evaluate(block).mean(axis=0), dictionary)

    def loss(estimate: SeriesEstimate, sample: np.ndarray) -> np.ndarray:
        return estimate.norm_sq - 2.0 * estimate(sample)

    margin = None if sigma1_sq is None else MarginParams(0.0, ((0.5, math.sqrt(sigma1_sq)),))
    return ContrastModel("l2_density", fit_block, loss, excess_loss_ref, margin)


def l2_density_excess_loss(
    truth_coefficients: np.ndarray | Sequence[float],
    residual_sq: float = 0.0,
) -> Callable[[SeriesEstimate], float]:
    """||t - s_*||^2 for s_* = s_o + r, s_o in the span, r orthogonal with ||r||^2 = residual_sq."""
    truth = np.asarray(truth_coefficients, dtype=float)

    def excess(estimate: SeriesEstimate) -> float:
        gap = estimate.coefficients - truth
        return float(np.dot(gap, gap)) + residual_sq

    return excess


def kullback_sigma1_sq(smoothing: float) -> float:
    return 2.0 + 3.0 * math.log(1.0 + 1.0 / smoothing)


def contrast_kullback_histogram(
    breakpoints: Sequence[float],
    smoothing: float | None = None,
    n: int | None = None,
    excess_loss_ref: Callable[[Estimate], float] | None = None,
) -> ContrastModel:
    """Smoothed histogram estimates with gamma(t) = -ln t; smoothing defaults to 1/n."""
    edges = np.asarray(breakpoints, dtype=float)
    if edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ConstructionError("breakpoints must be strictly increasing with at least two entries")
    if smoothing is None:
        if n is None or n < 1:
            raise DomainError("either smoothing or a sample size is required")
        smoothing = 1.0 / n
    if smoothing <= 0:
        raise DomainError(f"smoothing must be positive, got {smoothing}")
    x = float(smoothing)
    widths = np.diff(edges)
    span = edges[-1] - edges[0]

    def fit_block(block: np.ndarray) -> HistogramEstimate:
        points = np.asarray(block, dtype=float).ravel()
        if points.size == 0:
            raise EmptyInputError("empty block")
        counts, _ = np.histogram(points, bins=edges)
        raw = counts / (points.size * widths)
        return HistogramEstimate(edges, (raw + x / span) / (1.0 + x))

    def loss(estimate: HistogramEstimate, sample: np.ndarray) -> np.ndarray:
        values = estimate(np.asarray(sample, dtype=float).ravel())
        if np.any(values <= 0):
            raise DomainError("observations outside the histogram support give an infinite loss")
        return -np.log(values)

    margin = MarginParams(0.0, ((0.5, math.sqrt(kullback_sigma1_sq(x))),))
    return ContrastModel("kullback_histogram", fit_block, loss, excess_loss_ref, margin)


def kullback_excess_loss(
    truth: HistogramEstimate | Callable[[np.ndarray], np.ndarray],
    domain: tuple[float, float] = (0.0, 1.0),
) -> Callable[[HistogramEstimate], float]:
    """integral of s_* ln(s_*/t); exact on merged cells when the truth is a histogram."""

    def excess(estimate: HistogramEstimate) -> float:
        if isinstance(truth, HistogramEstimate):
            edges = np.union1d(truth.breakpoints, estimate.breakpoints)
            mids = (edges[:-1] + edges[1:]) / 2.0
            s = truth(mids)
            t = estimate(mids)
            safe = np.where(s > 0, s, 1.0)
            terms = np.where(s > 0, s * np.log(safe / t), 0.0) * np.diff(edges)
            return math.fsum(terms.tolist())
        grid = np.linspace(domain[0], domain[1], EXCESS_LOSS_INTERVALS + 1)
        s = np.asarray(truth(grid), dtype=float)
        t = estimate(grid)
        safe = np.where(s > 0, s, 1.0)
        return float(simpson(np.where(s > 0, s * np.log(safe / t), 0.0), x=grid))

    return excess


def contrast_l2_regression(
    feature_basis: Dictionary,
    D: float | None = None,
    M_psi: float | None = None,
    excess_loss_ref: Callable[[Estimate], float] | None = None,
) -> ContrastModel:
    """Least squares on (x, y) rows; rank-deficient blocks get the minimal-norm solution."""

    def fit_block(block: np.ndarray) -> RegressionEstimate:
        rows = np.asarray(block, dtype=float)
        if rows.ndim != 2 or rows.shape[1] != 2:
            raise DimensionError("regression observations must be (x, y) pairs")
        if rows.shape[0] < 1:
            raise EmptyInputError("a regression block needs at least one observation")
        design = feature_basis.evaluate(rows[:, 0])
        coef, _, rank, _ = np.linalg.lstsq(design, rows[:, 1], rcond=None)
        return RegressionEstimate(coef, feature_basis, degenerate=bool(rank < feature_basis.size))

    def loss(estimate: RegressionEstimate, sample: np.ndarray) -> np.ndarray:
        rows = np.asarray(sample, dtype=float)
        return (rows[:, 1] - estimate(rows[:, 0])) ** 2

    margin = None
    if D is not None and M_psi is not None:
        margin = MarginParams(math.sqrt(2.0 * M_psi), ((0.5, math.sqrt(8.0 * D)),))
    return ContrastModel("l2_regression", fit_block, loss, excess_loss_ref, margin)


def regression_excess_loss(
    s_star: Callable[[np.ndarray], np.ndarray],
    design_density: Callable[[np.ndarray], np.ndarray] | None = None,
    domain: tuple[float, float] = (0.0, 1.0),
) -> Callable[[RegressionEstimate], float]:
    """E(t(X) - s_*(X))^2 by Simpson quadrature against the design density."""
    grid = np.linspace(domain[0], domain[1], EXCESS_LOSS_INTERVALS + 1)
    truth = np.asarray(s_star(grid), dtype=float)
    density = np.ones_like(grid) / (domain[1] - domain[0]) if design_density is None else np.asarray(design_density(grid))

    def excess(estimate: RegressionEstimate) -> float:
        return float(simpson((estimate(grid) - truth) ** 2 * density, x=grid))

    return excess


# --- pairwise statistics and the argmin-max rule ----------------------------


def _pair_statistic(
    diff: np.ndarray,
    partition: BlockPartition,
    eval_blocks: Sequence[int],
    excluded: set[int],
) -> float:
    means = np.add.reduceat(diff, partition.starts) / np.asarray(partition.sizes, dtype=float)
    keep = [J for J in eval_blocks if J not in excluded]
    return median(means[keep])


def loss_matrix(estimates: Sequence[Estimate], sample: np.ndarray, contrast: ContrastModel) -> np.ndarray:
    rows = [np.asarray(contrast.loss(est, sample), dtype=float) for est in estimates]
    G = np.vstack(rows)
    if not np.all(np.isfinite(G)):
        raise DomainError(f"contrast {contrast.name} is not finite on the sample")
    return G


def pairwise_median_loss(
    K: int,
    K_prime: int,
    estimates: Sequence[Estimate],
    sample: np.ndarray,
    partition: BlockPartition,
    contrast: ContrastModel,
) -> float:
    """Median over blocks J not in {K, K'} of the block means of gamma(s_K) - gamma(s_K')."""
    if partition.V < 3:
        raise InsufficientBlocksError(f"need at least 3 blocks, got {partition.V}")
    data = np.asarray(sample, dtype=float)
    G = loss_matrix([estimates[K], estimates[K_prime]], data, contrast)
    return _pair_statistic(G[0] - G[1], partition, range(partition.V), {K, K_prime})


def pairwise_from_losses(
    G: np.ndarray,
    partition: BlockPartition,
    owners: Sequence[int] | None = None,
    eval_blocks: Sequence[int] | None = None,
) -> np.ndarray:
    """Matrix of pairwise statistics; estimate K was fitted on block owners[K]."""
    count = G.shape[0]
    owners = list(range(count)) if owners is None else list(owners)
    eval_blocks = list(range(partition.V)) if eval_blocks is None else list(eval_blocks)
    if len(eval_blocks) < 3:
        raise InsufficientBlocksError(f"need at least 3 evaluation blocks, got {len(eval_blocks)}")
    matrix = np.zeros((count, count))
    for K in range(count):
        for Kp in range(count):
            matrix[K, Kp] = _pair_statistic(G[K] - G[Kp], partition, eval_blocks, {owners[K], owners[Kp]})
    return matrix


def pairwise_matrix(
    estimates: Sequence[Estimate],
    sample: np.ndarray,
    partition: BlockPartition,
    contrast: ContrastModel,
) -> np.ndarray:
    return pairwise_from_losses(loss_matrix(estimates, np.asarray(sample, dtype=float), contrast), partition)


def argmin_max(matrix: np.ndarray) -> tuple[tuple[float, ...], int]:
    worst = matrix.max(axis=1)
    return tuple(float(v) for v in worst), int(np.argmin(worst))


def fit_blocks(sample: np.ndarray, partition: BlockPartition, contrast: ContrastModel, blocks: Sequence[int]) -> list[Estimate]:
    estimates: list[Estimate] = []
    for K in blocks:
        r = partition.ranges[K]
        try:
            estimates.append(contrast.fit_block(sample[r.start : r.stop]))
        except (MomSelectError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise BlockFitError(f"fitting block {K} failed: {exc}", block=K) from exc
    return estimates


def degenerate_indices(estimates: Sequence[Estimate]) -> tuple[int, ...]:
    return tuple(K for K, est in enumerate(estimates) if getattr(est, "degenerate", False))


def select_m_estimator(
    sample: np.ndarray | Sequence,
    contrast: ContrastModel,
    delta: float,
    V: int | None = None,
) -> SelectorTrace:
    """Argmin-max selection among the block estimators; V defaults to max(ceil(ln delta^-2), 8)."""
    data = np.asarray(sample, dtype=float)
    n = data.shape[0]
    if V is None:
        V = choose_block_count(delta, n, BlockCountMode.M_SELECT)
    partition = make_regular_partition(n, V)
    if partition.V < 3:
        raise InsufficientBlocksError(f"need at least 3 blocks, got {partition.V}")
    estimates = fit_blocks(data, partition, contrast, range(V))
    matrix = pairwise_from_losses(loss_matrix(estimates, data, contrast), partition)
    worst, K_star = argmin_max(matrix)
    return SelectorTrace(
        V=V,
        estimates=tuple(estimates),
        worst_case=worst,
        K_star=K_star,
        pairwise=matrix,
        degenerate_blocks=degenerate_indices(estimates),
        block_sizes=partition.sizes,
    )


# --- rate quantities ---------------------------------------------------------


def margin_rates(params: MarginParams, V: int, n: int, Delta: float, C0: float, C: tuple[float, ...]) -> RateQuantities:
    if Delta <= 1.0:
        raise DomainError(f"Delta must exceed 1, got {Delta}")
    scale = math.sqrt(V / n)
    nu = C0 * params.sigma0 * scale + params.N / Delta
    R = math.fsum(
        c * (Delta**alpha * sigma * scale) ** (1.0 / (1.0 - alpha))
        for c, (alpha, sigma) in zip(C, params.pairs)
    )
    return RateQuantities(nu_n=nu, R_n=R, C0=C0, C=C)


def rate_quantities(params: MarginParams, V: int, n: int, Delta: float) -> RateQuantities:
    L1 = CONSTANTS.L1
    C = tuple(4.0 * (1.0 - a) * (L1 * a**a) ** (1.0 / (1.0 - a)) for a, _ in params.pairs)
    return margin_rates(params, V, n, Delta, L1, C)


def rate_bound(
    rates: RateQuantities,
    best_block_loss: float,
    approximation_loss: float,
) -> float:
    """l(s_o, s_*) + (1 + 8 nu) inf_K l(s_K, s_o) + 2 R_n; only valid while nu <= 1/2."""
    if rates.nu_n > 0.5:
        raise DomainError(f"the rate bound needs nu_n <= 1/2, got {rates.nu_n}")
    return approximation_loss + (1.0 + 8.0 * rates.nu_n) * best_block_loss + 2.0 * rates.R_n
