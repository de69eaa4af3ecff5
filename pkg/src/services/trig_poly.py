"""
Sparse trigonometric polynomials on T^d
Coefficient storage, point and grid evaluation, the de la Vallee Poussin
operator and the coefficient file format
"""

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from src.services.hyperbolic_index import MultiIndex
from src.utils.errors import GridError, ParameterError, require
from src.utils.logger import get_logger

logger = get_logger(__name__)

TWO_PI = 2.0 * np.pi


class SparseTrigPoly:
    """
    Finitely supported map from Z^d to complex coefficients.

    Frequencies are kept as a lexicographically sorted (N, d) int64 array and
    coefficients as a complex128 vector. Exact zeros are never stored and
    instances are immutable.
    """

    __slots__ = ('_dim', '_freqs', '_coeffs')

    def __init__(self, dim: int, frequencies=None, coefficients=None):
        require(dim >= 1, "d >= 1", d=dim)
        if frequencies is None:
            freqs = np.zeros((0, dim), dtype=np.int64)
            coeffs = np.zeros(0, dtype=np.complex128)
        else:
            freqs = np.asarray(frequencies, dtype=np.int64).reshape(-1, dim)
            coeffs = np.asarray(coefficients, dtype=np.complex128).reshape(-1)
            if len(freqs) != len(coeffs):
                raise ParameterError("frequency and coefficient counts differ",
                                     inequality="len(frequencies) == len(coefficients)")
        self._dim = dim
        self._freqs, self._coeffs = self._canonical(freqs, coeffs)
        self._freqs.setflags(write=False)
        self._coeffs.setflags(write=False)

    @staticmethod
    def _canonical(freqs: np.ndarray, coeffs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if len(freqs) == 0:
            return freqs.copy(), coeffs.copy()
        unique, inverse = np.unique(freqs, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        if len(unique) == len(freqs):
            summed = np.empty(len(unique), dtype=np.complex128)
            summed[inverse] = coeffs
        else:
            summed = np.zeros(len(unique), dtype=np.complex128)
            np.add.at(summed, inverse, coeffs)
        keep = summed != 0
        return unique[keep], summed[keep]

    @classmethod
    def from_dict(cls, dim: int, coeffs: Mapping[MultiIndex, complex]) -> 'SparseTrigPoly':
        for k in coeffs:
            if len(k) != dim:
                raise ParameterError(f"frequency {k} does not have {dim} entries",
                                     inequality="len(k) == d")
        keys = list(coeffs.keys())
        return cls(dim, np.array(keys, dtype=np.int64).reshape(-1, dim),
                   np.array([coeffs[k] for k in keys], dtype=np.complex128))

    @classmethod
    def constant(cls, dim: int, value: complex = 1.0) -> 'SparseTrigPoly':
        return cls(dim, np.zeros((1, dim), dtype=np.int64), [value])

    @classmethod
    def monomial(cls, k: Sequence[int], value: complex = 1.0) -> 'SparseTrigPoly':
        return cls(len(k), np.array([k], dtype=np.int64), [value])

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def frequencies(self) -> np.ndarray:
        return self._freqs

    @property
    def coefficients(self) -> np.ndarray:
        return self._coeffs

    @property
    def support_size(self) -> int:
        return len(self._coeffs)

    def __len__(self) -> int:
        return self.support_size

    def as_dict(self) -> Dict[MultiIndex, complex]:
        return {tuple(int(x) for x in k): complex(c) for k, c in zip(self._freqs, self._coeffs)}

    def coefficient(self, k: Sequence[int]) -> complex:
        mask = np.all(self._freqs == np.asarray(k, dtype=np.int64), axis=1)
        hits = np.flatnonzero(mask)
        return complex(self._coeffs[hits[0]]) if len(hits) else 0j

    def max_frequency(self) -> np.ndarray:
        """Largest |k_i| per axis, zeros for the empty polynomial"""
        if self.support_size == 0:
            return np.zeros(self._dim, dtype=np.int64)
        return np.abs(self._freqs).max(axis=0)

    def coefficient_norm(self, p: float = 1.0) -> float:
        """l_p (quasi-)norm of the coefficient sequence"""
        return lp_norm(np.abs(self._coeffs), p)

    def _check_dim(self, other: 'SparseTrigPoly') -> None:
        if other.dim != self._dim:
            raise ParameterError(f"dimension mismatch {self._dim} vs {other.dim}",
                                 inequality="d_left == d_right")

    def __add__(self, other: 'SparseTrigPoly') -> 'SparseTrigPoly':
        self._check_dim(other)
        return SparseTrigPoly(self._dim, np.concatenate([self._freqs, other._freqs]),
                              np.concatenate([self._coeffs, other._coeffs]))

    def __sub__(self, other: 'SparseTrigPoly') -> 'SparseTrigPoly':
        self._check_dim(other)
        return SparseTrigPoly(self._dim, np.concatenate([self._freqs, other._freqs]),
                              np.concatenate([self._coeffs, -other._coeffs]))

    def scale(self, factor: complex) -> 'SparseTrigPoly':
        return SparseTrigPoly(self._dim, self._freqs, self._coeffs * factor)

    def restrict(self, mask: np.ndarray) -> 'SparseTrigPoly':
        """Keep the support rows selected by a boolean mask"""
        mask = np.asarray(mask, dtype=bool)
        return SparseTrigPoly(self._dim, self._freqs[mask], self._coeffs[mask])

    def truncate_to_cube(self, M: int) -> 'SparseTrigPoly':
        """Restriction to [-M, M]^d"""
        return self.restrict(np.all(np.abs(self._freqs) <= M, axis=1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseTrigPoly):
            return NotImplemented
        return (self._dim == other._dim and np.array_equal(self._freqs, other._freqs)
                and np.array_equal(self._coeffs, other._coeffs))

    def __hash__(self):
        return hash((self._dim, self._freqs.tobytes(), self._coeffs.tobytes()))

    def __repr__(self) -> str:
        return f"SparseTrigPoly(d={self._dim}, support={self.support_size})"


def lp_norm(x: np.ndarray, p: float) -> float:
    """l_p norm for p in (0, inf]; a quasi-norm when p < 1"""
    require(p > 0, "p > 0", p=p)
    x = np.abs(np.asarray(x, dtype=np.complex128)).astype(np.float64)
    if x.size == 0:
        return 0.0
    if math.isinf(p):
        return float(x.max())
    scale = x.max()
    if scale == 0:
        return 0.0
    return float(scale * np.sum((x / scale) ** p) ** (1.0 / p))


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid x_j = j / N_i on T^d"""

    sizes: Tuple[int, ...]
    oversampling: float = 1.0

    def __post_init__(self):
        require(len(self.sizes) >= 1 and all(n >= 1 for n in self.sizes), "N_i >= 1",
                sizes=list(self.sizes))

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def total_points(self) -> int:
        return int(np.prod(self.sizes, dtype=np.int64))

    def points(self) -> np.ndarray:
        axes = [np.arange(n) / n for n in self.sizes]
        grids = np.meshgrid(*axes, indexing='ij')
        return np.stack([g.ravel() for g in grids], axis=1)


def next_power_of_two(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(max(x, 1.0))))


def oversampling_for(q: float) -> float:
    """Default grid oversampling s for an L_q norm"""
    if q == 2:
        return 1.0
    from config import get_config
    config = get_config()
    return config.OVERSAMPLING_LINF if math.isinf(q) else config.OVERSAMPLING_LQ


def default_grid(max_frequency: Union[SparseTrigPoly, Sequence[int]], q: float = 2.0,
                 oversampling: Optional[float] = None,
                 point_cap: Optional[int] = None) -> GridSpec:
    """
    Grid with N_i = next power of two >= s * (2 * K_i + 1).

    Args:
        max_frequency: Polynomial or per-axis maximum |k_i|
        q: Target L_q exponent, selects the default oversampling
        oversampling: Explicit s, overrides the default
        point_cap: Maximum total points

    Returns:
        GridSpec
    """
    if isinstance(max_frequency, SparseTrigPoly):
        max_frequency = max_frequency.max_frequency()
    s = oversampling if oversampling is not None else oversampling_for(q)
    sizes = tuple(next_power_of_two(s * (2 * int(k) + 1)) for k in max_frequency)
    grid = GridSpec(sizes, s)
    _check_point_cap(grid, point_cap)
    return grid


def _check_point_cap(grid: GridSpec, point_cap: Optional[int]) -> None:
    if point_cap is None:
        from config import get_config
        point_cap = get_config().GRID_POINT_CAP
    if grid.total_points > point_cap:
        raise GridError(f"grid {grid.sizes} has {grid.total_points} points, cap is {point_cap}",
                        sizes=list(grid.sizes), cap=point_cap)


def check_grid(f: SparseTrigPoly, grid: GridSpec) -> None:
    """Raise GridError unless N_i >= 2 * max|k_i| + 1 on every axis"""
    if grid.dim != f.dim:
        raise GridError(f"grid dimension {grid.dim} differs from polynomial dimension {f.dim}")
    needed = 2 * f.max_frequency() + 1
    too_small = [i for i in range(f.dim) if grid.sizes[i] < needed[i]]
    if too_small:
        raise GridError(f"grid sizes {grid.sizes} below 2*max|k_i|+1 = {tuple(int(x) for x in needed)}",
                        axes=too_small)


def evaluate(f: SparseTrigPoly, x) -> Union[complex, np.ndarray]:
    """
    Evaluate sum_k c_k exp(2 pi i k.x).

    Args:
        f: Polynomial
        x: One point of length d or an (m, d) array of points

    Returns:
        complex for a single point, complex array otherwise
    """
    points = np.asarray(x, dtype=np.float64)
    single = points.ndim == 0 or (points.ndim == 1 and points.size == f.dim)
    points = points.reshape(-1, f.dim)
    if f.support_size == 0:
        values = np.zeros(len(points), dtype=np.complex128)
    else:
        values = np.empty(len(points), dtype=np.complex128)
        freqs = f.frequencies.astype(np.float64)
        # Chunked to keep the (chunk, support) phase matrix bounded
        chunk = max(1, 2 ** 22 // max(1, f.support_size))
        for start in range(0, len(points), chunk):
            phases = points[start:start + chunk] @ freqs.T
            values[start:start + chunk] = np.exp(1j * TWO_PI * phases) @ f.coefficients
    return complex(values[0]) if single else values


def evaluate_grid(f: SparseTrigPoly, grid: GridSpec) -> np.ndarray:
    """Values of f on the full tensor grid via an inverse FFT, shape grid.sizes"""
    check_grid(f, grid)
    spectrum = np.zeros(grid.sizes, dtype=np.complex128)
    if f.support_size:
        index = tuple(f.frequencies[:, i] % grid.sizes[i] for i in range(f.dim))
        spectrum[index] = f.coefficients
    return np.fft.ifftn(spectrum) * grid.total_points


def grid_lq_norm(values: np.ndarray, q: float) -> float:
    """Quadrature L_q norm of grid values (normalized measure)"""
    magnitudes = np.abs(values)
    if magnitudes.size == 0:
        return 0.0
    if math.isinf(q):
        return float(magnitudes.max())
    scale = magnitudes.max()
    if scale == 0:
        return 0.0
    return float(scale * np.mean((magnitudes / scale) ** q) ** (1.0 / q))


def lebesgue_norm(f: SparseTrigPoly, q: float, grid: Optional[GridSpec] = None,
                  exact_l2: bool = True) -> float:
    """
    L_q norm of f.

    q = 2 uses the coefficient l_2 identity unless exact_l2 is False; other q
    use grid quadrature, q = inf the grid maximum.
    """
    require(q >= 1, "1 <= q <= inf", q=q)
    if q == 2 and exact_l2 and grid is None:
        return lp_norm(f.coefficients, 2.0)
    if f.support_size == 0:
        return 0.0
    grid = grid or default_grid(f, q)
    return grid_lq_norm(evaluate_grid(f, grid), q)


def vallee_poussin_multiplier(frequencies: np.ndarray, M: int, d: Optional[int] = None) -> np.ndarray:
    """Tensor multiplier of V_M evaluated at each row"""
    frequencies = np.asarray(frequencies, dtype=np.int64)
    d = d if d is not None else frequencies.shape[1]
    a = np.abs(frequencies).astype(np.float64)
    top = (2 * d + 1) * M
    ramp = (top - a) / (2 * d * M)
    factors = np.where(a <= M, 1.0, np.where(a <= top, ramp, 0.0))
    return np.prod(factors, axis=1)


def vallee_poussin(f: SparseTrigPoly, M: int) -> SparseTrigPoly:
    """
    Apply the tensor de la Vallee Poussin operator V_M.

    Multiplier is 1 on [-M, M], decreases linearly to 0 at (2d+1)M, zero beyond;
    the result is supported in [-(2d+1)M, (2d+1)M]^d.
    """
    require(M >= 1, "M >= 1", M=M)
    factors = vallee_poussin_multiplier(f.frequencies, M, f.dim)
    return SparseTrigPoly(f.dim, f.frequencies, f.coefficients * factors)


def vallee_poussin_sign_poly(d: int, M: int, oversampling: int = 4) -> SparseTrigPoly:
    """
    Polynomial on [-(2d+1)M, (2d+1)M]^d close to the sign of the V_M kernel.

    V_M of it at x = 0 approaches the L_1 norm of the kernel while its sup norm
    stays near 1, so it pushes the L_inf operator ratio towards its maximum.
    """
    require(d >= 1, "d >= 1", d=d)
    require(M >= 1, "M >= 1", M=M)
    top = (2 * d + 1) * M
    size = next_power_of_two(oversampling * (2 * top + 1))
    require(size ** d <= 2 ** 24, "grid points <= 2^24", size=size, d=d)
    axis = np.rint(np.fft.fftfreq(size, 1.0 / size)).astype(np.int64)
    freqs = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1).reshape(-1, d)
    multipliers = vallee_poussin_multiplier(freqs, M, d).reshape((size,) * d)
    kernel = np.real(np.fft.ifftn(multipliers)) * size ** d
    coeffs = (np.fft.fftn(np.sign(kernel)).real / size ** d).ravel()
    inside = np.all(np.abs(freqs) <= top, axis=1)
    return SparseTrigPoly(d, freqs[inside], coeffs[inside])


def best_trig_error_surrogate(f: SparseTrigPoly, M: int) -> float:
    """l_1 mass of the coefficients outside [-M, M]^d, an upper bound for E_{[-M,M]^d}(f)_inf"""
    require(M >= 0, "M >= 0", M=M)
    outside = np.any(np.abs(f.frequencies) > M, axis=1)
    return float(np.sum(np.abs(f.coefficients[outside])))


def format_coefficients(f: SparseTrigPoly) -> str:
    lines = [f"d={f.dim}\n"]
    for k, c in zip(f.frequencies, f.coefficients):
        ks = ' '.join(str(int(x)) for x in k)
        lines.append(f"{ks} {format(c.real, '.17g')} {format(c.imag, '.17g')}\n")
    return ''.join(lines)


def parse_coefficients(text: str) -> SparseTrigPoly:
    lines = [line.strip() for line in text.splitlines()
             if line.strip() and not line.lstrip().startswith('#')]
    if not lines or not lines[0].startswith('d='):
        raise ParameterError("coefficient file must start with a 'd=<d>' header",
                             inequality="header == 'd=<d>'")
    d = int(lines[0][2:])
    freqs, coeffs = [], []
    for line_num, line in enumerate(lines[1:], 2):
        tokens = line.split()
        if len(tokens) != d + 2:
            raise ParameterError(f"line {line_num}: expected {d + 2} fields, got {len(tokens)}",
                                 inequality="fields == d + 2")
        freqs.append([int(t) for t in tokens[:d]])
        coeffs.append(complex(float(tokens[d]), float(tokens[d + 1])))
    return SparseTrigPoly(d, np.array(freqs, dtype=np.int64).reshape(-1, d),
                          np.array(coeffs, dtype=np.complex128))


def write_coefficients(f: SparseTrigPoly, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_coefficients(f), encoding='utf-8')
    logger.debug("coefficients_written", path=str(path), support=f.support_size)
    return path


def read_coefficients(path) -> SparseTrigPoly:
    return parse_coefficients(Path(path).read_text(encoding='utf-8'))


def random_sparse_poly(d: int, support: int, M: int, rng: np.random.Generator) -> SparseTrigPoly:
    """Complex Gaussian coefficients on `support` distinct frequencies drawn from [-M, M]^d"""
    side = 2 * M + 1
    require(support <= side ** d, "support <= (2M+1)^d", support=support, M=M, d=d)
    flat = rng.choice(side ** d, size=support, replace=False)
    freqs = np.stack(np.unravel_index(flat, (side,) * d), axis=1).astype(np.int64) - M
    coeffs = rng.standard_normal(support) + 1j * rng.standard_normal(support)
    return SparseTrigPoly(d, freqs, coeffs)
