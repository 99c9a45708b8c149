from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.linalg import eigvalsh

from .constants import CONSTANTS
from .errors import ConstructionError, DimensionError, DomainError, UnsupportedModelError

GRAM_INTERVALS = 1024
SUP_GRID_POINTS = 4097
ORTHONORMAL_TOL = 1e-10


class BasisKind(str, Enum):
    HISTOGRAM_CELL = "histogram-cell"
    TRIGONOMETRIC = "trigonometric"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class BasisFunction:
    label: str
    func: Callable[[np.ndarray], np.ndarray]
    l2_norm: float
    kind: BasisKind
    support: tuple[float, float] | None = None
    bounded: bool = True

    def evaluate(self, x: np.ndarray | float) -> np.ndarray:
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True, eq=False)
class Dictionary:
    functions: tuple[BasisFunction, ...]
    gram: np.ndarray
    orthonormal: bool
    kind: str
    params: dict = field(default_factory=dict)
    domain: tuple[float, float] = (0.0, 1.0)

    @property
    def size(self) -> int:
        return len(self.functions)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(fn.label for fn in self.functions)

    @property
    def norms(self) -> np.ndarray:
        return np.array([fn.l2_norm for fn in self.functions], dtype=float)

    def inner_products(self) -> np.ndarray:
        """Unnormalised Gram matrix <psi_l, psi_l'>."""
        norms = self.norms
        return norms[:, None] * self.gram * norms[None, :]

    def evaluate(self, x: np.ndarray | Sequence[float]) -> np.ndarray:
        """Design matrix of shape (len(x), M)."""
        points = np.asarray(x, dtype=float).ravel()
        if not self.functions:
            return np.zeros((points.size, 0))
        return np.column_stack([fn.evaluate(points) for fn in self.functions])

    def smallest_eigenvalue(self) -> float:
        return float(eigvalsh(self.gram)[0])

    def psi_sup_norm(self, indices: Sequence[int]) -> float:
        """||sum_{l in indices} psi_l^2||_inf on a dense grid of the domain."""
        chosen = [self.functions[i] for i in indices]
        if not chosen:
            return 0.0
        unbounded = [fn.label for fn in chosen if not fn.bounded]
        if unbounded:
            raise UnsupportedModelError(
                f"functions {unbounded} are unbounded; use the robust penalty for this model"
            )
        grid = np.linspace(self.domain[0], self.domain[1], SUP_GRID_POINTS)
        psi = np.zeros_like(grid)
        for fn in chosen:
            psi += fn.evaluate(grid) ** 2
        if chosen[0].kind == BasisKind.HISTOGRAM_CELL:
            # cell heights are exact; the grid can miss narrow cells
            cell_max = max(1.0 / (fn.support[1] - fn.support[0]) for fn in chosen if fn.support)
            return float(max(psi.max(), cell_max))
        return float(psi.max())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "labels": list(self.labels),
            "domain": list(self.domain),
            "orthonormal": self.orthonormal,
        }


@dataclass(frozen=True)
class CoherenceStats:
    rho_theta: float
    rho_star: float
    M_theta: int
    J_theta: tuple[int, ...]
    F_theta: float
    G_theta: float
    G_global: float
    zeta_M: float
    kappa_M: float

    def to_dict(self) -> dict:
        return {
            "rho_theta": self.rho_theta,
            "rho_star": self.rho_star,
            "M_theta": self.M_theta,
            "J_theta": list(self.J_theta),
            "F_theta": self.F_theta,
            "G_theta": self.G_theta,
            "G_global": self.G_global,
            "zeta_M": self.zeta_M,
            "kappa_M": self.kappa_M,
        }


@dataclass(frozen=True)
class LassoHypotheses:
    H1: bool
    H2: bool
    H3: bool

    def any(self) -> bool:
        return self.H1 or self.H2 or self.H3


@dataclass(frozen=True)
class CellMoments:
    """Population moments of each dictionary function: P psi, P psi^2, Var psi^2."""

    mean: np.ndarray
    second: np.ndarray
    var_square: np.ndarray


def _cell_function(left: float, right: float, height: float, closed_right: bool) -> Callable[[np.ndarray], np.ndarray]:
    def cell(x: np.ndarray) -> np.ndarray:
        inside = (x >= left) & ((x <= right) if closed_right else (x < right))
        return np.where(inside, height, 0.0)

    return cell


def build_histogram_dictionary(breakpoints: Sequence[float]) -> Dictionary:
    edges = [float(b) for b in breakpoints]
    if len(edges) < 2:
        raise ConstructionError("a histogram needs at least two breakpoints")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConstructionError("breakpoints must be strictly increasing")
    functions = []
    last = len(edges) - 2
    for i, (left, right) in enumerate(zip(edges, edges[1:])):
        height = 1.0 / math.sqrt(right - left)
        functions.append(
            BasisFunction(
                label=f"cell{i}",
                func=_cell_function(left, right, height, closed_right=i == last),
                l2_norm=1.0,
                kind=BasisKind.HISTOGRAM_CELL,
                support=(left, right),
            )
        )
    return Dictionary(
        functions=tuple(functions),
        gram=np.eye(len(functions)),
        orthonormal=True,
        kind="histogram",
        params={"breakpoints": edges},
        domain=(edges[0], edges[-1]),
    )


def regular_breakpoints(cells: int) -> list[float]:
    if cells < 1:
        raise ConstructionError("need at least one cell")
    return [i / cells for i in range(cells + 1)]


def build_trigonometric_dictionary(max_frequency: int) -> Dictionary:
    if max_frequency < 0:
        raise ConstructionError("max_frequency must be >= 0")
    functions = [
        BasisFunction("const", lambda x: np.ones_like(x), 1.0, BasisKind.TRIGONOMETRIC),
    ]
    root2 = math.sqrt(2.0)
    for k in range(1, max_frequency + 1):
        functions.append(
            BasisFunction(f"cos{k}", lambda x, k=k: root2 * np.cos(2.0 * math.pi * k * x), 1.0, BasisKind.TRIGONOMETRIC)
        )
        functions.append(
            BasisFunction(f"sin{k}", lambda x, k=k: root2 * np.sin(2.0 * math.pi * k * x), 1.0, BasisKind.TRIGONOMETRIC)
        )
    return Dictionary(
        functions=tuple(functions),
        gram=np.eye(len(functions)),
        orthonormal=True,
        kind="trigonometric",
        params={"max_frequency": max_frequency},
    )


def quadrature_gram(
    functions: Sequence[Callable[[np.ndarray], np.ndarray]],
    domain: tuple[float, float] = (0.0, 1.0),
    intervals: int = GRAM_INTERVALS,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Simpson inner products; returns (normalised gram, l2 norms)."""
    grid = np.linspace(domain[0], domain[1], intervals + 1)
    values = np.vstack([np.asarray(fn(grid), dtype=float) for fn in functions])
    raw = simpson(values[:, None, :] * values[None, :, :], x=grid, axis=-1)
    raw = (raw + raw.T) / 2.0
    norms = np.sqrt(np.diag(raw))
    if np.any(norms <= 0):
        raise ConstructionError("dictionary functions must have a positive L2 norm")
    gram = raw / np.outer(norms, norms)
    np.fill_diagonal(gram, 1.0)
    return gram, norms


def build_custom_dictionary(
    functions: Sequence[Callable[[np.ndarray], np.ndarray]],
    domain: tuple[float, float] = (0.0, 1.0),
    labels: Sequence[str] | None = None,
    bounded: bool = True,
) -> Dictionary:
    if not functions:
        raise ConstructionError("a dictionary needs at least one function")
    names = list(labels) if labels is not None else [f"psi{i}" for i in range(len(functions))]
    if len(names) != len(functions):
        raise ConstructionError("one label per function")
    gram, norms = quadrature_gram(functions, domain)
    basis = tuple(
        BasisFunction(label, fn, float(norm), BasisKind.CUSTOM, bounded=bounded)
        for label, fn, norm in zip(names, functions, norms)
    )
    orthonormal = bool(np.allclose(gram, np.eye(len(basis)), atol=ORTHONORMAL_TOL, rtol=0.0)) and bool(
        np.allclose(norms, 1.0, atol=ORTHONORMAL_TOL, rtol=0.0)
    )
    return Dictionary(
        functions=basis,
        gram=gram,
        orthonormal=orthonormal,
        kind="custom",
        params={"labels": names},
        domain=(float(domain[0]), float(domain[1])),
    )


def build_polynomial_dictionary(degree: int, domain: tuple[float, float] = (0.0, 1.0)) -> Dictionary:
    """Monomials 1, x, ..., x^degree (not orthonormal); a regression feature basis."""
    if degree < 0:
        raise ConstructionError("degree must be >= 0")
    functions = [lambda x: np.ones_like(np.asarray(x, dtype=float))]
    functions += [lambda x, k=k: np.asarray(x, dtype=float) ** k for k in range(1, degree + 1)]
    labels = ["one"] + ["x" if k == 1 else f"x{k}" for k in range(1, degree + 1)]
    return build_custom_dictionary(functions, domain, labels)


def dictionary_from_dict(payload: dict) -> Dictionary:
    kind = payload.get("kind")
    params = payload.get("params", {})
    if kind == "histogram":
        return build_histogram_dictionary(params["breakpoints"])
    if kind == "trigonometric":
        return build_trigonometric_dictionary(int(params["max_frequency"]))
    raise ConstructionError(f"cannot rebuild a dictionary of kind {kind!r} from its description")


def coherence_stats(
    dictionary: Dictionary,
    theta: np.ndarray | Sequence[float],
    weights: np.ndarray | Sequence[float],
    n: int,
    delta: float,
    kappa_M: float | None = None,
) -> CoherenceStats:
    """Coherence quantities of the Lasso hypotheses.

    ``kappa_M`` defaults to the smallest Gram eigenvalue itself.
    """
    coef = np.asarray(theta, dtype=float)
    omega = np.asarray(weights, dtype=float)
    M = dictionary.size
    if coef.shape != (M,) or omega.shape != (M,):
        raise DimensionError(f"expected vectors of length {M}")
    if np.any(omega <= 0):
        raise DomainError("weights must be strictly positive")
    norms = dictionary.norms
    rho = np.abs(dictionary.gram)
    active = tuple(int(i) for i in np.flatnonzero(coef != 0))
    log_term = math.log(2.0 * M / delta)

    rho_theta = 0.0
    rho_star = 0.0
    for lam in active:
        others = np.delete(rho[lam], lam)
        if others.size:
            rho_theta = max(rho_theta, float(others.max()))
        rho_star += float(rho[lam, lam + 1 :].sum())

    F_theta = 0.0
    if active:
        F_theta = math.sqrt(n / log_term) * float(np.max(omega[list(active)] / norms[list(active)]))
    G_global = math.sqrt(log_term / n) * float(np.max(norms / omega))
    G_theta = float(np.sum(omega[list(active)] ** 2)) if active else 0.0
    zeta = dictionary.smallest_eigenvalue()
    return CoherenceStats(
        rho_theta=rho_theta,
        rho_star=rho_star,
        M_theta=len(active),
        J_theta=active,
        F_theta=F_theta,
        G_theta=G_theta,
        G_global=G_global,
        zeta_M=zeta,
        kappa_M=zeta if kappa_M is None else float(kappa_M),
    )


def check_lasso_hypotheses(stats: CoherenceStats) -> LassoHypotheses:
    gf = stats.G_global * stats.F_theta
    return LassoHypotheses(
        H1=16.0 * gf * stats.M_theta <= 1.0,
        H2=16.0 * gf * stats.rho_star * math.sqrt(stats.M_theta) <= 1.0,
        H3=stats.zeta_M > 0 and stats.kappa_M > 0 and stats.zeta_M >= stats.kappa_M,
    )


def check_dictionary_condition(
    moments: Sequence[tuple[float, float]],
    V_lambda: Sequence[int],
    n: int,
) -> bool:
    """C(D): every (Var psi^2, P psi^2) pair satisfies the variance condition at its V."""
    if len(moments) != len(V_lambda):
        raise DimensionError("one block count per dictionary function")
    ok = True
    for (var_sq, mean_sq), V in zip(moments, V_lambda):
        if var_sq < 0:
            raise DomainError(f"variance must be nonnegative, got {var_sq}")
        if mean_sq != 0 and CONSTANTS.L1 * math.sqrt(var_sq) / mean_sq * math.sqrt(V / n) > 0.5:
            ok = False
    return ok


def histogram_cell_moments(
    dictionary: Dictionary,
    breakpoints: Sequence[float],
    cell_probs: Sequence[float],
) -> CellMoments:
    """Exact moments of histogram-cell functions under a histogram density."""
    edges = np.asarray(breakpoints, dtype=float)
    probs = np.asarray(cell_probs, dtype=float)
    if edges.size != probs.size + 1:
        raise DimensionError("need one probability per density cell")
    widths = np.diff(edges)
    means, seconds, var_squares = [], [], []
    for fn in dictionary.functions:
        if fn.kind != BasisKind.HISTOGRAM_CELL or fn.support is None:
            raise UnsupportedModelError("exact cell moments need a histogram dictionary")
        left, right = fn.support
        overlap = np.clip(np.minimum(edges[1:], right) - np.maximum(edges[:-1], left), 0.0, None)
        mass = float(np.sum(probs * overlap / widths))
        height = 1.0 / math.sqrt(right - left)
        means.append(height * mass)
        seconds.append(height**2 * mass)
        var_squares.append(height**4 * mass * (1.0 - mass))
    return CellMoments(np.array(means), np.array(seconds), np.array(var_squares))
