"""
Function space parameters and norms on trigonometric polynomials
Weighted Wiener, plain Wiener, Besov, Littlewood-Paley Sobolev and Lebesgue
"""

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from src.services.hyperbolic_index import block_labels, weights
from src.services.trig_poly import (GridSpec, SparseTrigPoly, default_grid, evaluate_grid,
                                    grid_lq_norm, lebesgue_norm, lp_norm)
from src.utils.errors import ParameterError, require

INF = math.inf


def _fmt(x: float) -> str:
    return 'inf' if math.isinf(x) else format(x, 'g')


@dataclass(frozen=True)
class WienerWeighted:
    """S^r_theta A: (sum w_k^(r theta) |c_k|^theta)^(1/theta)"""

    r: float
    theta: float

    tag = 'wiener'

    def __post_init__(self):
        require(self.r >= 0, "r >= 0", r=self.r)
        require(self.theta > 0, "theta > 0", theta=self.theta)

    def describe(self) -> str:
        return f"WienerWeighted(r={_fmt(self.r)}, theta={_fmt(self.theta)})"


@dataclass(frozen=True)
class WienerPlain:
    """A_eta: l_eta norm of the coefficients"""

    eta: float

    tag = 'wiener-plain'

    def __post_init__(self):
        require(self.eta > 0, "eta > 0", eta=self.eta)

    def describe(self) -> str:
        return f"WienerPlain(eta={_fmt(self.eta)})"


@dataclass(frozen=True)
class Besov:
    """S^r_{p,theta} B via dyadic block norms"""

    r: float
    p: float
    theta: float

    tag = 'besov'

    def __post_init__(self):
        require(1 < self.p < INF, "1 < p < inf", p=self.p)
        require(self.theta > 0, "theta > 0", theta=self.theta)

    def describe(self) -> str:
        return f"Besov(r={_fmt(self.r)}, p={_fmt(self.p)}, theta={_fmt(self.theta)})"


@dataclass(frozen=True)
class SobolevW:
    """S^r_p W via the Littlewood-Paley square function; r = 0 is L_p"""

    r: float
    p: float

    tag = 'sobolev'

    def __post_init__(self):
        require(1 < self.p < INF, "1 < p < inf", p=self.p)

    def describe(self) -> str:
        return f"SobolevW(r={_fmt(self.r)}, p={_fmt(self.p)})"


@dataclass(frozen=True)
class Lebesgue:
    """L_q on T^d with normalized measure"""

    q: float

    tag = 'lebesgue'

    def __post_init__(self):
        require(self.q >= 1, "1 <= q <= inf", q=self.q)

    def describe(self) -> str:
        return f"Lebesgue(q={_fmt(self.q)})"


SpaceParams = Union[WienerWeighted, WienerPlain, Besov, SobolevW, Lebesgue]

SPACE_NAMES = ('wiener', 'wiener-plain', 'besov', 'sobolev', 'lebesgue')


def space_from_name(name: str, r: float = 0.0, p: float = 2.0, theta: float = 1.0,
                    q: float = 2.0, eta: float = 1.0) -> SpaceParams:
    """Build SpaceParams from a CLI space name"""
    if name == 'wiener':
        return WienerWeighted(r, theta)
    if name == 'wiener-plain':
        return WienerPlain(eta)
    if name == 'besov':
        return Besov(r, p, theta)
    if name == 'sobolev':
        return SobolevW(r, p)
    if name == 'lebesgue':
        return Lebesgue(q)
    raise ParameterError(f"unknown space {name!r}", inequality=f"space in {SPACE_NAMES}")


def weighted_magnitudes(f: SparseTrigPoly, r: float) -> np.ndarray:
    """w_k^r |c_k| per support element"""
    magnitudes = np.abs(f.coefficients)
    if r == 0:
        return magnitudes
    return weights(f.frequencies) ** r * magnitudes


def _group_by_block(f: SparseTrigPoly):
    labels = block_labels(f.frequencies)
    unique, inverse = np.unique(labels, axis=0, return_inverse=True)
    return unique, inverse.reshape(-1)


def block_lp_norms(f: SparseTrigPoly, p: float, oversampling: Optional[float] = None,
                   grid: Optional[GridSpec] = None):
    """
    L_p norm of every nonempty dyadic block component of f.

    Without an explicit grid each block gets its own grid sized from its
    per-axis maximum frequency, and p = 2 uses the coefficient l_2 identity.
    An explicit grid is shared by every block.

    Returns:
        (labels (B, d) array, norms (B,) array)
    """
    if f.support_size == 0:
        return np.zeros((0, f.dim), dtype=np.int64), np.zeros(0)
    labels, inverse = _group_by_block(f)
    norms = np.empty(len(labels))
    for b in range(len(labels)):
        component = f.restrict(inverse == b)
        if grid is None and p == 2:
            norms[b] = lp_norm(component.coefficients, 2.0)
        else:
            block_grid = grid or default_grid(component, p, oversampling=oversampling)
            norms[b] = grid_lq_norm(evaluate_grid(component, block_grid), p)
    return labels, norms


def besov_norm(f: SparseTrigPoly, space: Besov, oversampling: Optional[float] = None,
               grid: Optional[GridSpec] = None) -> float:
    labels, norms = block_lp_norms(f, space.p, oversampling, grid=grid)
    if len(norms) == 0:
        return 0.0
    scale = 2.0 ** (space.r * labels.sum(axis=1))
    return lp_norm(scale * norms, space.theta)


def square_function(f: SparseTrigPoly, r: float, grid: GridSpec) -> np.ndarray:
    """(sum_j |2^(||j||_1 r) block_j f|^2)^(1/2) on a common grid"""
    total = np.zeros(grid.sizes, dtype=np.float64)
    if f.support_size == 0:
        return total
    labels, inverse = _group_by_block(f)
    for b in range(len(labels)):
        component = f.restrict(inverse == b)
        values = evaluate_grid(component, grid)
        total += (2.0 ** (r * labels[b].sum())) ** 2 * np.abs(values) ** 2
    return np.sqrt(total)


def sobolev_norm(f: SparseTrigPoly, space: SobolevW, grid: Optional[GridSpec] = None) -> float:
    if space.r == 0:
        return lebesgue_norm(f, space.p, grid=grid, exact_l2=False)
    if f.support_size == 0:
        return 0.0
    grid = grid or default_grid(f, space.p)
    return grid_lq_norm(square_function(f, space.r, grid), space.p)


def norm(f: SparseTrigPoly, space: SpaceParams, grid: Optional[GridSpec] = None) -> float:
    """
    Norm of f in the given space.

    Args:
        f: Polynomial
        space: SpaceParams variant
        grid: Explicit grid for the grid-based norms (Besov, Sobolev, Lebesgue)

    Returns:
        Non-negative norm value; 0 for the empty polynomial
    """
    if isinstance(space, WienerWeighted):
        return lp_norm(weighted_magnitudes(f, space.r), space.theta)
    if isinstance(space, WienerPlain):
        return lp_norm(f.coefficients, space.eta)
    if isinstance(space, Besov):
        return besov_norm(f, space, grid=grid)
    if isinstance(space, SobolevW):
        return sobolev_norm(f, space, grid)
    if isinstance(space, Lebesgue):
        return lebesgue_norm(f, space.q, grid=grid)
    raise ParameterError(f"unsupported space {space!r}", inequality="space is a SpaceParams variant")
