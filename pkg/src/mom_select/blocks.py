from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import math
from typing import Callable, Sequence

import numpy as np

from .constants import CONSTANTS
from .errors import DeltaTooSmallError, DimensionError, DomainError, EmptyInputError, InvalidPartitionError

# f maps the whole sample (leading axis = observations) to one real per observation.
SampleFunction = Callable[[np.ndarray], np.ndarray]

# absorbs log() rounding when ln(1/delta) lands on an integer
CEIL_TOL = 1e-12


class BlockCountMode(str, Enum):
    MEAN = "mean"
    M_SELECT = "m_select"


@dataclass(frozen=True)
class BlockPartition:
    n: int
    ranges: tuple[range, ...]

    @property
    def V(self) -> int:
        return len(self.ranges)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.ranges)

    @property
    def starts(self) -> np.ndarray:
        return np.array([r.start for r in self.ranges], dtype=np.intp)

    def to_dict(self) -> dict:
        return {"n": self.n, "V": self.V, "sizes": list(self.sizes)}


@dataclass(frozen=True)
class RobustMeanResult:
    value: float
    block_means: tuple[float, ...]
    V: int
    delta: float | None = None

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "block_means": list(self.block_means),
            "V": self.V,
            "delta": self.delta,
        }


@dataclass(frozen=True)
class MeanConfidence:
    value: float
    half_width: float
    V: int
    n: int
    delta: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "half_width": self.half_width,
            "V": self.V,
            "n": self.n,
            "delta": self.delta,
        }


def make_regular_partition(n: int, V: int) -> BlockPartition:
    """Contiguous partition of n indices into V blocks, larger blocks first."""
    if V < 1 or 2 * V > n:
        raise InvalidPartitionError(
            f"need 1 <= V <= n/2, got n={n}, V={V}; the confidence level is too small for this sample"
        )
    base, extra = divmod(n, V)
    ranges: list[range] = []
    start = 0
    for k in range(V):
        size = base + 1 if k < extra else base
        ranges.append(range(start, start + size))
        start += size
    return BlockPartition(n=n, ranges=tuple(ranges))


def median(values: Sequence[float] | np.ndarray) -> float:
    """Median with the midpoint convention for even counts."""
    ordered = np.sort(np.asarray(values, dtype=float).ravel())
    count = ordered.size
    if count == 0:
        raise EmptyInputError("median of an empty sequence")
    mid = count // 2
    if count % 2:
        return float(ordered[mid])
    return float((ordered[mid - 1] + ordered[mid]) / 2.0)


def evaluate_on_sample(sample: np.ndarray | Sequence, f: SampleFunction | None) -> np.ndarray:
    data = np.asarray(sample, dtype=float)
    values = data if f is None else np.asarray(f(data), dtype=float)
    if values.ndim != 1:
        raise DimensionError(f"f must return one value per observation, got shape {values.shape}")
    return values


def block_means(values: np.ndarray, partition: BlockPartition) -> tuple[float, ...]:
    if values.shape[0] != partition.n:
        raise DimensionError(f"sample has {values.shape[0]} observations, partition expects {partition.n}")
    return tuple(math.fsum(values[r.start : r.stop].tolist()) / len(r) for r in partition.ranges)


def robust_mean(
    sample: np.ndarray | Sequence,
    f: SampleFunction | None,
    partition: BlockPartition,
    delta: float | None = None,
) -> RobustMeanResult:
    means = block_means(evaluate_on_sample(sample, f), partition)
    return RobustMeanResult(value=median(means), block_means=means, V=partition.V, delta=delta)


def choose_block_count(delta: float, n: int, mode: BlockCountMode | str = BlockCountMode.MEAN) -> int:
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    mode = BlockCountMode(mode)
    if mode == BlockCountMode.MEAN:
        V = max(math.ceil(math.log(1.0 / delta) - CEIL_TOL), 1)
    else:
        V = max(math.ceil(2.0 * math.log(1.0 / delta) - CEIL_TOL), 8)
    if 2 * V > n:
        raise DeltaTooSmallError(f"delta={delta} needs V={V} blocks but n={n} allows at most {n // 2}")
    return V


def variance_upper_bound(sample: np.ndarray | Sequence, f: SampleFunction | None, partition: BlockPartition) -> float:
    values = evaluate_on_sample(sample, f)
    return 2.0 * robust_mean(values * values, None, partition).value


def check_variance_condition(var_f2: float, mean_f2: float, V: int, n: int) -> bool:
    if var_f2 < 0:
        raise DomainError(f"variance must be nonnegative, got {var_f2}")
    if mean_f2 == 0:
        return True
    return CONSTANTS.L1 * math.sqrt(var_f2) / mean_f2 * math.sqrt(V / n) <= 0.5


def mean_half_width(sample: np.ndarray | Sequence, f: SampleFunction | None, partition: BlockPartition) -> float:
    return CONSTANTS.L1 * math.sqrt(variance_upper_bound(sample, f, partition)) * math.sqrt(partition.V / partition.n)


def robust_mean_confidence(sample: np.ndarray | Sequence, f: SampleFunction | None, delta: float) -> MeanConfidence:
    values = evaluate_on_sample(sample, f)
    n = values.shape[0]
    partition = make_regular_partition(n, choose_block_count(delta, n, BlockCountMode.MEAN))
    result = robust_mean(values, None, partition, delta=delta)
    return MeanConfidence(
        value=result.value,
        half_width=mean_half_width(values, None, partition),
        V=partition.V,
        n=n,
        delta=delta,
    )
