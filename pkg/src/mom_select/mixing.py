from __future__ import annotations

from dataclasses import dataclass
import math
from typing import Sequence

import numpy as np

from .blocks import CEIL_TOL, BlockPartition, SampleFunction, robust_mean
from .constants import CONSTANTS
from .errors import DeltaTooSmallError, DimensionError, DomainError, LayoutError
from .m_select import (
    ContrastModel,
    MarginParams,
    RateQuantities,
    SelectorTrace,
    argmin_max,
    degenerate_indices,
    fit_blocks,
    loss_matrix,
    margin_rates,
    pairwise_from_losses,
)

MIN_MIXING_BLOCKS = 16


@dataclass(frozen=True)
class MixingLayout:
    n: int
    V: int
    q: int
    blocks: tuple[range, ...]

    @property
    def odd_blocks(self) -> tuple[range, ...]:
        """B_1, B_3, ..., B_{2V-1}: every other block starting with the first."""
        return self.blocks[::2]

    @property
    def partition(self) -> BlockPartition:
        return BlockPartition(n=self.n, ranges=self.blocks)

    def to_dict(self) -> dict:
        return {"n": self.n, "V": self.V, "q": self.q, "blocks": 2 * self.V}


@dataclass(frozen=True)
class MixingCoefficients:
    beta: tuple[float, ...]
    phi: tuple[float, ...]
    C_beta_sq: float
    Phi_sq: float
    envelope: bool
    a: float | None = None

    @property
    def Phi(self) -> float:
        return math.sqrt(self.Phi_sq)

    def beta_at(self, k: int) -> float:
        if k < len(self.beta):
            return self.beta[k]
        if self.a is None:
            raise DimensionError(f"no beta coefficient at lag {k}")
        r = abs(self.a)
        return r**k / (1.0 - r)

    def to_dict(self) -> dict:
        return {
            "beta_head": list(self.beta[:8]),
            "C_beta_sq": self.C_beta_sq,
            "Phi_sq": self.Phi_sq,
            "envelope": self.envelope,
            "a": self.a,
        }


def make_mixing_layout(n: int, V: int) -> MixingLayout:
    if V < 1:
        raise DomainError(f"V must be at least 1, got {V}")
    width = 2 * V
    if n < width or n % width:
        raise LayoutError(
            f"n={n} is not a positive multiple of 2V={width}",
            suggested_n=(n // width) * width,
        )
    q = n // width
    blocks = tuple(range(K * q, (K + 1) * q) for K in range(width))
    return MixingLayout(n=n, V=V, q=q, blocks=blocks)


def robust_mean_mixing(sample: np.ndarray | Sequence, f: SampleFunction | None, layout: MixingLayout) -> float:
    """Median of the means of all 2V blocks."""
    return robust_mean(sample, f, layout.partition).value


def odd_block_sample(sample: np.ndarray | Sequence, layout: MixingLayout) -> np.ndarray:
    data = np.asarray(sample, dtype=float)
    if data.shape[0] != layout.n:
        raise DimensionError(f"sample has {data.shape[0]} observations, layout expects {layout.n}")
    return np.concatenate([data[r.start : r.stop] for r in layout.odd_blocks])


def mixing_block_count(delta: float) -> int:
    """V = max(ceil(ln(2 delta^-2)), 16)."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    return max(math.ceil(math.log(2.0 / delta**2) - CEIL_TOL), MIN_MIXING_BLOCKS)


def select_m_estimator_mixing(
    sample: np.ndarray | Sequence,
    contrast: ContrastModel,
    delta: float,
    V: int | None = None,
) -> SelectorTrace:
    """Estimators fitted on odd blocks, compared by medians over the remaining odd blocks.

    Trailing observations beyond the largest multiple of 2V are dropped and counted
    in ``truncated``.
    """
    data = np.asarray(sample, dtype=float)
    n = data.shape[0]
    if V is None:
        V = mixing_block_count(delta)
    usable = (n // (2 * V)) * 2 * V
    if usable == 0:
        raise DeltaTooSmallError(f"V={V} needs at least {2 * V} observations, got {n}")
    data = data[:usable]
    layout = make_mixing_layout(usable, V)
    partition = layout.partition
    owners = list(range(0, 2 * V, 2))
    estimates = fit_blocks(data, partition, contrast, owners)
    matrix = pairwise_from_losses(loss_matrix(estimates, data, contrast), partition, owners=owners, eval_blocks=owners)
    worst, K_star = argmin_max(matrix)
    return SelectorTrace(
        V=V,
        estimates=tuple(estimates),
        worst_case=worst,
        K_star=K_star,
        pairwise=matrix,
        degenerate_blocks=degenerate_indices(estimates),
        truncated=n - usable,
        block_sizes=partition.sizes,
    )


def ar1_mixing_coefficients(a: float, horizon: int = 200) -> MixingCoefficients:
    """Geometric envelope beta_k = phi_k = |a|^k / (1 - |a|) of a stationary AR(1).

    The envelope dominates the true coefficients; it is not exact.
    """
    if not -1.0 < a < 1.0:
        raise DomainError(f"AR(1) needs |a| < 1, got {a}")
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    r = abs(a)
    c = 1.0 / (1.0 - r)
    lags = np.arange(horizon + 1, dtype=float)
    envelope = c * np.power(r, lags)  # 0.0 ** 0 == 1.0
    head = math.fsum(((lags + 1.0) * envelope).tolist())
    tail = c * r ** (horizon + 1) * ((horizon + 2) - (horizon + 1) * r) / (1.0 - r) ** 2
    coeffs = tuple(float(v) for v in envelope)
    return MixingCoefficients(
        beta=coeffs,
        phi=coeffs,
        C_beta_sq=2.0 * (head + tail),
        Phi_sq=c * r / (1.0 - r),
        envelope=True,
        a=float(a),
    )


def coupling_allowance(coeffs: MixingCoefficients, V: int, q: int) -> float:
    """V * beta_q, the probability conceded to the coupling event."""
    return V * coeffs.beta_at(q)


def rate_quantities_mixing(params: MarginParams, V: int, n: int, Delta: float, Phi: float) -> RateQuantities:
    C0 = CONSTANTS.L8 * Phi
    C = tuple((1.0 - a) * (C0 * a**a) ** (1.0 / (1.0 - a)) for a, _ in params.pairs)
    return margin_rates(params, V, n, Delta, C0, C)
