from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import simpson
from scipy.signal import lfilter
from scipy.stats import norm

from .dictionary import Dictionary
from .errors import DomainError, UnsupportedModelError

Seed = int | np.random.SeedSequence | np.random.Generator
MOMENT_INTERVALS = 4096


class GeneratorFamily(str, Enum):
    GAUSSIAN = "gaussian"
    STUDENT_T = "student_t"
    PARETO = "pareto"
    HISTOGRAM = "histogram_density"
    CONTAMINATED = "contaminated"
    AR1 = "ar1"
    REGRESSION = "regression"


@dataclass(frozen=True)
class GeneratorSpec:
    family: GeneratorFamily
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", GeneratorFamily(self.family))
        validate_spec(self)

    @staticmethod
    def gaussian(mean: float = 0.0, sd: float = 1.0) -> "GeneratorSpec":
        return GeneratorSpec(GeneratorFamily.GAUSSIAN, {"mean": mean, "sd": sd})

    @staticmethod
    def student_t(df: float, loc: float = 0.0, scale: float = 1.0) -> "GeneratorSpec":
        return GeneratorSpec(GeneratorFamily.STUDENT_T, {"df": df, "loc": loc, "scale": scale})

    @staticmethod
    def pareto(shape: float, scale: float = 1.0) -> "GeneratorSpec":
        return GeneratorSpec(GeneratorFamily.PARETO, {"shape": shape, "scale": scale})

    @staticmethod
    def histogram_density(cell_probs: Sequence[float], breakpoints: Sequence[float] | None = None) -> "GeneratorSpec":
        probs = [float(p) for p in cell_probs]
        edges = [i / len(probs) for i in range(len(probs) + 1)] if breakpoints is None else [float(b) for b in breakpoints]
        return GeneratorSpec(GeneratorFamily.HISTOGRAM, {"cell_probs": probs, "breakpoints": edges})

    @staticmethod
    def contaminated(base: "GeneratorSpec", fraction: float, magnitude: float) -> "GeneratorSpec":
        return GeneratorSpec(
            GeneratorFamily.CONTAMINATED,
            {"base": base.to_dict(), "fraction": fraction, "magnitude": magnitude},
        )

    @staticmethod
    def ar1(a: float, noise_sd: float = 1.0, uniform_marginal: bool = False) -> "GeneratorSpec":
        return GeneratorSpec(GeneratorFamily.AR1, {"a": a, "noise_sd": noise_sd, "uniform_marginal": uniform_marginal})

    @staticmethod
    def regression(
        s_star: Sequence[float] = (1.0, 1.0),
        sigma: Sequence[float] = (0.5, 1.0),
        noise: str = "gaussian",
        df: float | None = None,
    ) -> "GeneratorSpec":
        """Polynomial s_* and noise scale in ascending coefficient order, X ~ U(0, 1)."""
        return GeneratorSpec(
            GeneratorFamily.REGRESSION,
            {"s_star": [float(c) for c in s_star], "sigma": [float(c) for c in sigma], "noise": noise, "df": df},
        )

    @staticmethod
    def from_dict(payload: dict) -> "GeneratorSpec":
        family = GeneratorFamily(payload["family"])
        params = {k: v for k, v in payload.items() if k != "family"}
        if "params" in payload:
            params = dict(payload["params"])
        return GeneratorSpec(family, params)

    def base(self) -> "GeneratorSpec":
        return GeneratorSpec.from_dict(self.params["base"])

    def to_dict(self) -> dict:
        return {"family": self.family.value, "params": self.params}


@dataclass(frozen=True)
class AnalyticMoments:
    """Raw moments E X^k, k = 1..4, of a scalar family (inf when they diverge)."""

    raw: tuple[float, float, float, float]

    @property
    def mean(self) -> float:
        return self.raw[0]

    @property
    def second(self) -> float:
        return self.raw[1]

    @property
    def variance(self) -> float:
        return self.raw[1] - self.raw[0] ** 2

    @property
    def var_square(self) -> float:
        """Var(X^2)."""
        if math.isinf(self.raw[3]):
            return math.inf
        return self.raw[3] - self.raw[1] ** 2

    def to_dict(self) -> dict:
        finite = lambda v: None if math.isinf(v) else v  # noqa: E731
        return {
            "raw": [finite(v) for v in self.raw],
            "mean": finite(self.mean),
            "variance": finite(self.variance),
            "var_square": finite(self.var_square),
        }


@dataclass(frozen=True)
class RegressionMoments:
    s_o: np.ndarray
    approximation_loss: float
    D: float
    M_psi: float

    def to_dict(self) -> dict:
        return {
            "s_o": self.s_o.tolist(),
            "approximation_loss": self.approximation_loss,
            "D": self.D,
            "M_psi": self.M_psi,
        }


def validate_spec(spec: GeneratorSpec) -> None:
    p = spec.params
    family = spec.family
    if family == GeneratorFamily.GAUSSIAN and p.get("sd", 1.0) < 0:
        raise DomainError("sd must be nonnegative")
    if family == GeneratorFamily.STUDENT_T and not p["df"] > 2:
        raise DomainError(f"student_t needs df > 2 for a finite variance, got df={p['df']}")
    if family == GeneratorFamily.PARETO and not p["shape"] > 2:
        raise DomainError(f"pareto needs shape > 2 for a finite variance, got shape={p['shape']}")
    if family == GeneratorFamily.HISTOGRAM:
        probs = np.asarray(p["cell_probs"], dtype=float)
        edges = np.asarray(p["breakpoints"], dtype=float)
        if edges.size != probs.size + 1 or np.any(np.diff(edges) <= 0):
            raise DomainError("histogram density needs increasing breakpoints, one more than cells")
        if np.any(probs < 0) or not math.isclose(float(probs.sum()), 1.0, abs_tol=1e-12):
            raise DomainError("cell probabilities must be nonnegative and sum to 1")
    if family == GeneratorFamily.CONTAMINATED:
        if not 0.0 <= p["fraction"] <= 1.0:
            raise DomainError("contamination fraction must lie in [0, 1]")
        spec.base()
    if family == GeneratorFamily.AR1 and not -1.0 < p["a"] < 1.0:
        raise DomainError(f"ar1 needs |a| < 1 for stationarity, got a={p['a']}")
    if family == GeneratorFamily.REGRESSION:
        if p.get("noise", "gaussian") not in ("gaussian", "student_t"):
            raise DomainError(f"unknown regression noise {p.get('noise')!r}")
        if p.get("noise") == "student_t" and not (p.get("df") or 0) > 2:
            raise DomainError("student_t regression noise needs df > 2")


def rep_seeds(seed: int, reps: int) -> list[np.random.SeedSequence]:
    """Independent per-replication streams; rep i depends only on (seed, i)."""
    return np.random.SeedSequence(seed).spawn(reps)


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def generate(spec: GeneratorSpec, n: int, seed: Seed) -> np.ndarray:
    """n draws from spec; shape (n,) for scalar families and (n, 2) for regression."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    rng = _rng(seed)
    p = spec.params
    family = spec.family
    if family == GeneratorFamily.GAUSSIAN:
        return rng.normal(p.get("mean", 0.0), p.get("sd", 1.0), n)
    if family == GeneratorFamily.STUDENT_T:
        return p.get("loc", 0.0) + p.get("scale", 1.0) * rng.standard_t(p["df"], n)
    if family == GeneratorFamily.PARETO:
        # numpy draws the Lomax law; shifting by one gives the classical Pareto
        return p.get("scale", 1.0) * (1.0 + rng.pareto(p["shape"], n))
    if family == GeneratorFamily.HISTOGRAM:
        probs = np.asarray(p["cell_probs"], dtype=float)
        edges = np.asarray(p["breakpoints"], dtype=float)
        cells = rng.choice(probs.size, size=n, p=probs)
        return edges[cells] + np.diff(edges)[cells] * rng.random(n)
    if family == GeneratorFamily.CONTAMINATED:
        values = generate(spec.base(), n, rng)
        hit = rng.random(n) < p["fraction"]
        return values + p["magnitude"] * hit
    if family == GeneratorFamily.AR1:
        return _ar1_path(p["a"], p.get("noise_sd", 1.0), bool(p.get("uniform_marginal", False)), n, rng)
    return _regression_sample(p, n, rng)


def _ar1_path(a: float, noise_sd: float, uniform_marginal: bool, n: int, rng: np.random.Generator) -> np.ndarray:
    """x_t = a x_{t-1} + e_t started from the stationary law."""
    stationary_sd = noise_sd / math.sqrt(1.0 - a * a)
    start = rng.normal(0.0, stationary_sd)
    noise = rng.normal(0.0, noise_sd, n)
    path, _ = lfilter([1.0], [1.0, -a], noise, zi=[a * start])
    if uniform_marginal:
        return norm.cdf(path / stationary_sd)
    return path


def _regression_sample(p: dict, n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.random(n)
    if p.get("noise", "gaussian") == "gaussian":
        eps = rng.normal(0.0, 1.0, n)
    else:
        df = float(p["df"])
        eps = rng.standard_t(df, n) * math.sqrt((df - 2.0) / df)
    y = P.polyval(x, p["s_star"]) + P.polyval(x, p["sigma"]) * eps
    return np.column_stack([x, y])


def contaminate_block(sample: np.ndarray, block: range, magnitude: float) -> np.ndarray:
    """Copy of sample with every observation of one block shifted by magnitude."""
    shifted = np.array(sample, dtype=float, copy=True)
    shifted[block.start : block.stop] += magnitude
    return shifted


def _gaussian_raw(mean: float, sd: float) -> tuple[float, float, float, float]:
    v = sd * sd
    return (mean, mean**2 + v, mean**3 + 3 * mean * v, mean**4 + 6 * mean**2 * v + 3 * v * v)


def _shift_raw(raw: Sequence[float], shift: float, scale: float = 1.0) -> tuple[float, ...]:
    """Raw moments of shift + scale * X from those of X."""
    moments = (1.0, *raw)
    out = []
    for k in range(1, 5):
        total = 0.0
        for j in range(k + 1):
            if math.isinf(moments[j]) and math.comb(k, j) * scale**j != 0:
                total = math.inf
                break
            total += math.comb(k, j) * shift ** (k - j) * scale**j * moments[j]
        out.append(total)
    return tuple(out)


def analytic_moments(spec: GeneratorSpec) -> AnalyticMoments:
    p = spec.params
    family = spec.family
    if family == GeneratorFamily.GAUSSIAN:
        return AnalyticMoments(_gaussian_raw(p.get("mean", 0.0), p.get("sd", 1.0)))
    if family == GeneratorFamily.STUDENT_T:
        df = p["df"]
        standard = (
            0.0,
            df / (df - 2.0),
            0.0 if df > 3 else math.inf,
            3.0 * df * df / ((df - 2.0) * (df - 4.0)) if df > 4 else math.inf,
        )
        return AnalyticMoments(_shift_raw(standard, p.get("loc", 0.0), p.get("scale", 1.0)))
    if family == GeneratorFamily.PARETO:
        shape, scale = p["shape"], p.get("scale", 1.0)
        return AnalyticMoments(
            tuple(shape * scale**k / (shape - k) if shape > k else math.inf for k in range(1, 5))
        )
    if family == GeneratorFamily.HISTOGRAM:
        probs = np.asarray(p["cell_probs"], dtype=float)
        edges = np.asarray(p["breakpoints"], dtype=float)
        left, right = edges[:-1], edges[1:]
        return AnalyticMoments(
            tuple(
                float(np.sum(probs * (right ** (k + 1) - left ** (k + 1)) / ((k + 1) * (right - left))))
                for k in range(1, 5)
            )
        )
    if family == GeneratorFamily.CONTAMINATED:
        base = analytic_moments(spec.base()).raw
        shifted = _shift_raw(base, p["magnitude"])
        frac = p["fraction"]
        return AnalyticMoments(tuple((1.0 - frac) * b + frac * s for b, s in zip(base, shifted)))
    if family == GeneratorFamily.AR1:
        if p.get("uniform_marginal", False):
            return AnalyticMoments((1 / 2, 1 / 3, 1 / 4, 1 / 5))
        a = p["a"]
        return AnalyticMoments(_gaussian_raw(0.0, p.get("noise_sd", 1.0) / math.sqrt(1.0 - a * a)))
    raise UnsupportedModelError("regression generators use regression_moments")


def regression_moments(spec: GeneratorSpec, basis: Dictionary) -> RegressionMoments:
    """s_o, l(s_o, s_*), D and M_Psi of a regression generator, by quadrature over X ~ U(0, 1)."""
    if spec.family != GeneratorFamily.REGRESSION:
        raise UnsupportedModelError("regression_moments needs a regression generator")
    grid = np.linspace(0.0, 1.0, MOMENT_INTERVALS + 1)
    phi = basis.evaluate(grid)
    truth = P.polyval(grid, spec.params["s_star"])
    scale = P.polyval(grid, spec.params["sigma"])
    gram = simpson(phi[:, :, None] * phi[:, None, :], x=grid, axis=0)
    s_o = np.linalg.solve(gram, simpson(phi * truth[:, None], x=grid, axis=0))
    fitted = phi @ s_o
    psi = np.einsum("ij,jk,ik->i", phi, np.linalg.inv(gram), phi)
    return RegressionMoments(
        s_o=s_o,
        approximation_loss=float(simpson((fitted - truth) ** 2, x=grid)),
        D=float(simpson(((truth - fitted) ** 2 + scale**2) * psi, x=grid)),
        M_psi=float(simpson(psi**2, x=grid)),
    )
