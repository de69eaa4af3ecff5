"""
Nonlinear sampling recovery on T^d
Random sample sets, the nonequispaced Fourier measurement system on [-D, D]^d,
OMP and square-root Lasso decoders, the recovery pipeline and the linear baseline
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg

from src.services.function_spaces import WienerPlain
from src.services.hyperbolic_index import log_star, sorted_frequencies
from src.services.mterm_approximation import greedy_mterm
from src.services.trig_poly import (SparseTrigPoly, best_trig_error_surrogate, default_grid,
                                    evaluate, evaluate_grid, grid_lq_norm, lebesgue_norm, lp_norm)
from src.utils.errors import IndexOverflowError, ParameterError, SolverError, require
from src.utils.logger import get_logger
from src.utils.parallel import run_parallel

logger = get_logger(__name__)

TWO_PI = 2.0 * np.pi
MAX_SAMPLES = 2 ** 40
SOLVERS = ('omp', 'sqrt_lasso')

ValueOracle = Callable[[np.ndarray], np.ndarray]


@dataclass
class SampleSet:
    """Sample points in [0,1)^d with the observed values"""

    points: np.ndarray
    values: np.ndarray
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass
class RecoveryConfig:
    """Parameters of one recovery run"""

    n: int
    M: int
    d: int
    q: float = 2.0
    C: float = 2.0
    solver: str = 'omp'
    lam: Optional[float] = None
    max_iter: Optional[int] = None
    tol: Optional[float] = None

    def __post_init__(self):
        require(self.n >= 1, "n >= 1", n=self.n)
        require(self.M >= 1, "M >= 1", M=self.M)
        require(self.d >= 1, "d >= 1", d=self.d)
        require(self.q >= 2, "2 <= q <= inf", q=self.q)
        require(self.C > 0, "C > 0", C=self.C)
        self.solver = canonical_solver(self.solver)
        require(self.solver in SOLVERS, "solver in {omp, sqrt_lasso}", solver=self.solver)
        require(self.lam is None or self.lam > 0, "lam > 0", lam=self.lam)

    @property
    def D(self) -> int:
        """Half-width (2d+1)M of the decoding cube"""
        return (2 * self.d + 1) * self.M

    @property
    def dictionary_size(self) -> int:
        return (2 * self.D + 1) ** self.d

    @property
    def sample_count(self) -> int:
        return sample_budget(self.n, self.M, self.d, self.C)


@dataclass
class SolverOutcome:
    """Decoded polynomial with solver diagnostics"""

    approximant: SparseTrigPoly
    iterations: int
    converged: bool
    history: List[float] = field(default_factory=list)
    objective_gap: float = 0.0
    condition: Optional[float] = None
    lam: Optional[float] = None


@dataclass
class RecoveryReport:
    """Outcome of recover_pipeline; C_emp is NaN when the bound vanishes or is unknown"""

    seed: int
    m: int
    n: int
    M: int
    q: float
    solver: str
    error: float
    sigma_n_A: float
    E_surrogate: float
    C_emp: float
    wall_time_ms: float
    approximant: Optional[SparseTrigPoly] = None

    def to_record(self, include_wall_time: bool = True) -> Dict[str, Any]:
        record = {
            'seed': self.seed, 'm': self.m, 'n': self.n, 'M': self.M, 'q': self.q,
            'solver': self.solver, 'error': self.error, 'sigma_n_A': self.sigma_n_A,
            'E_surrogate': self.E_surrogate, 'C_emp': self.C_emp,
        }
        if include_wall_time:
            record['wall_time_ms'] = self.wall_time_ms
        return record


def canonical_solver(name: str) -> str:
    """Solver tag with dashes read as underscores, so sqrt-lasso names sqrt_lasso"""
    return str(name).strip().lower().replace('-', '_')


def sample_budget(n: int, M: int, d: int, C: float = 2.0) -> int:
    """m = ceil(C n d (log* n)^2 log* M)"""
    require(n >= 1, "n >= 1", n=n)
    require(M >= 1, "M >= 1", M=M)
    require(d >= 1, "d >= 1", d=d)
    require(C > 0, "C > 0", C=C)
    m = math.ceil(C * n * d * log_star(n) ** 2 * log_star(M))
    if m > MAX_SAMPLES:
        raise IndexOverflowError(f"sample budget {m} exceeds {MAX_SAMPLES}", n=n, M=M, d=d)
    return m


def cube_size_for(n: int, r: float, theta: float = 1.0, p: Optional[float] = None) -> int:
    """
    M(n) = ceil(n^((r + 1/theta - 1/2)/r)); with a Besov exponent p given,
    M(n) = ceil(n^((r - 1/p + 1/2)/r)).
    """
    require(r > 0, "r > 0", r=r)
    inv_theta = 0.0 if math.isinf(theta) else 1.0 / theta
    exponent = (r - 1.0 / p + 0.5) / r if p is not None else (r + inv_theta - 0.5) / r
    return max(1, math.ceil(n ** exponent))


def sparsity_for_budget(m: int, d: int, r: float, theta: float = 1.0, C: float = 2.0,
                        p: Optional[float] = None) -> int:
    """Largest n with sample_budget(n, M(n), d, C) <= m"""
    n = 0
    while sample_budget(n + 1, cube_size_for(n + 1, r, theta, p), d, C) <= m:
        n += 1
    if n == 0:
        raise ParameterError(f"m={m} samples do not cover sparsity n=1",
                             inequality="sample_budget(1, M(1), d, C) <= m", m=m, d=d)
    return n


def draw_samples(m: int, d: int, seed: int) -> np.ndarray:
    """m i.i.d. uniform points in [0,1)^d from a seeded generator"""
    require(m >= 1, "m >= 1", m=m)
    require(d >= 1, "d >= 1", d=d)
    return np.random.default_rng(seed).random((m, d))


class FourierSystem:
    """
    Measurement operator c -> (sum_k c_k exp(2 pi i k.x_s))_s on [-D, D]^d.

    Coefficient tensors have shape (2D+1,)*d with index k + D. The
    exponential factors factor over axes, so forward and adjoint are computed
    per sample chunk as a matrix product against a Khatri-Rao row product.
    """

    def __init__(self, points: np.ndarray, D: int, cache_mb: Optional[int] = None,
                 chunk_size: int = 4096):
        require(D >= 0, "D >= 0", D=D)
        self.points = np.asarray(points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ParameterError("points must be an (m, d) array", inequality="points.ndim == 2")
        self.D = D
        self.m, self.d = self.points.shape
        self.side = 2 * D + 1
        self.shape = (self.side,) * self.d
        self.size = self.side ** self.d
        self.chunk_size = chunk_size
        self._axis_freqs = np.arange(-D, D + 1, dtype=np.float64)

        if cache_mb is None:
            from config import get_config
            cache_mb = get_config().MEASURE_CACHE_MB
        factor_bytes = self.m * self.side * self.d * 16
        self._factors = self._axis_factors(slice(0, self.m)) if factor_bytes <= cache_mb * 2 ** 20 else None

    def _axis_factors(self, rows: slice) -> List[np.ndarray]:
        pts = self.points[rows]
        return [np.exp(1j * TWO_PI * np.outer(pts[:, i], self._axis_freqs)) for i in range(self.d)]

    def _chunks(self):
        for start in range(0, self.m, self.chunk_size):
            rows = slice(start, min(start + self.chunk_size, self.m))
            if self._factors is not None:
                yield rows, [F[rows] for F in self._factors]
            else:
                yield rows, self._axis_factors(rows)

    @staticmethod
    def _row_products(factors: Sequence[np.ndarray]) -> np.ndarray:
        out = factors[0]
        for F in factors[1:]:
            out = (out[:, :, None] * F[:, None, :]).reshape(out.shape[0], -1)
        return out

    def measure(self, coeffs: np.ndarray) -> np.ndarray:
        """Forward map of a dense coefficient tensor"""
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(self.shape)
        y = np.empty(self.m, dtype=np.complex128)
        flat = coeffs.reshape(self.side, -1)
        for rows, factors in self._chunks():
            head = factors[0] @ flat
            if self.d == 1:
                y[rows] = head[:, 0]
            else:
                y[rows] = np.sum(head * self._row_products(factors[1:]), axis=1)
        return y

    def adjoint(self, values: np.ndarray) -> np.ndarray:
        """Adjoint map, returns a coefficient tensor"""
        values = np.asarray(values, dtype=np.complex128).reshape(self.m)
        out = np.zeros((self.side, self.size // self.side), dtype=np.complex128)
        for rows, factors in self._chunks():
            head = factors[0].conj().T
            if self.d == 1:
                out[:, 0] += head @ values[rows]
            else:
                out += head @ (values[rows, None] * self._row_products(factors[1:]).conj())
        return out.reshape(self.shape)

    def frequencies(self, flat_indices: Sequence[int]) -> np.ndarray:
        idx = np.unravel_index(np.asarray(flat_indices, dtype=np.int64), self.shape)
        return np.stack(idx, axis=1).astype(np.int64) - self.D

    def columns(self, flat_indices: Sequence[int]) -> np.ndarray:
        """(m, s) matrix of the atoms e_k(x_s) for the given flat indices"""
        freqs = self.frequencies(flat_indices).astype(np.float64)
        return np.exp(1j * TWO_PI * (self.points @ freqs.T))


def measure(coeffs: np.ndarray, points: np.ndarray, D: int) -> np.ndarray:
    """y_i = sum_k c_k exp(2 pi i k.x_i) for a dense (2D+1)^d coefficient tensor"""
    return FourierSystem(points, D).measure(coeffs)


def adjoint(values: np.ndarray, points: np.ndarray, D: int) -> np.ndarray:
    """Adjoint of measure"""
    return FourierSystem(points, D).adjoint(values)


def _solver_defaults():
    from config import get_config
    return get_config()


def omp_recover(samples: SampleSet, D: int, n: int, tol: Optional[float] = None,
                cond_limit: Optional[float] = None,
                system: Optional[FourierSystem] = None) -> SolverOutcome:
    """
    Orthogonal matching pursuit on the normalized system (1/sqrt(m)) e_k(x_s).

    Each iteration adds the atom of largest absolute correlation with the
    residual (lowest lexicographic frequency on ties) and re-fits every
    selected coefficient by least squares.

    Args:
        samples: Sample points and values
        D: Half-width of the frequency cube
        n: Maximum number of iterations and atoms
        tol: Stop once the residual l_2 norm is <= tol
        cond_limit: Largest accepted condition number of the re-fit matrix
        system: Prebuilt measurement system for the same points

    Returns:
        SolverOutcome with an at most n-sparse approximant; residual history is non-increasing
    """
    require(n >= 1, "n >= 1", n=n)
    config = _solver_defaults() if tol is None or cond_limit is None else None
    tol = tol if tol is not None else config.OMP_TOL
    cond_limit = cond_limit if cond_limit is not None else config.COND_LIMIT
    system = system or FourierSystem(samples.points, D)
    scale = 1.0 / math.sqrt(samples.size)

    y = np.asarray(samples.values, dtype=np.complex128) * scale
    residual = y.copy()
    history = [float(np.linalg.norm(residual))]
    selected: List[int] = []
    coef = np.zeros(0, dtype=np.complex128)
    condition = None

    for _ in range(min(n, system.size)):
        if history[-1] <= tol:
            break
        corr = np.abs(system.adjoint(residual)).ravel() * scale
        if selected:
            corr[selected] = -1.0
        selected.append(int(np.argmax(corr)))
        A = system.columns(selected) * scale
        coef, _, _, singular = scipy.linalg.lstsq(A, y, lapack_driver='gelsd')
        condition = float(singular[0] / singular[-1]) if singular[-1] > 0 else math.inf
        if condition > cond_limit:
            raise SolverError(f"least-squares re-fit ill-conditioned at {len(selected)} atoms",
                              condition=condition)
        residual = y - A @ coef
        history.append(float(np.linalg.norm(residual)))

    approximant = SparseTrigPoly(system.d, system.frequencies(selected), coef)
    converged = history[-1] <= tol or len(selected) == n
    logger.debug("omp_complete", atoms=len(selected), residual=history[-1], condition=condition)
    return SolverOutcome(approximant=approximant, iterations=len(selected), converged=converged,
                         history=history, condition=condition)


def default_lambda(N: int, m: int) -> float:
    """sqrt(2 log N / m)"""
    return math.sqrt(2.0 * math.log(max(N, 2)) / m)


def _soft_threshold(z: np.ndarray, tau: float) -> np.ndarray:
    magnitudes = np.abs(z)
    shrink = np.maximum(0.0, 1.0 - tau / np.where(magnitudes > 0, magnitudes, 1.0))
    return np.where(magnitudes > tau, z * shrink, 0.0)


def sqrt_lasso_recover(samples: SampleSet, D: int, lam: Optional[float] = None,
                       iters: Optional[int] = None, tol: Optional[float] = None,
                       system: Optional[FourierSystem] = None) -> SolverOutcome:
    """
    Square-root Lasso: minimize ||y - Phi c||_2 / sqrt(m) + lam ||c||_1.

    Proximal gradient steps on the residual norm with complex soft
    thresholding; a step is accepted only if the objective does not increase,
    otherwise the step size is halved. Stops when the relative objective
    decrease falls below tol or at the iteration cap.

    Args:
        samples: Sample points and values
        D: Half-width of the frequency cube
        lam: Penalty, defaults to sqrt(2 log N / m) with N = (2D+1)^d
        iters: Iteration cap, defaults to HYPX_LASSO_ITERS
        tol: Relative objective tolerance, defaults to HYPX_LASSO_TOL

    Returns:
        SolverOutcome with the objective history (non-increasing)
    """
    config = _solver_defaults() if iters is None or tol is None else None
    iters = iters if iters is not None else config.LASSO_ITERS
    tol = tol if tol is not None else config.LASSO_TOL
    system = system or FourierSystem(samples.points, D)
    scale = 1.0 / math.sqrt(samples.size)
    lam = lam if lam is not None else default_lambda(system.size, samples.size)
    require(lam > 0, "lam > 0", lam=lam)

    y = np.asarray(samples.values, dtype=np.complex128) * scale
    c = np.zeros(system.size, dtype=np.complex128)

    def residual_of(coeffs):
        return y - system.measure(coeffs) * scale

    def objective(res, coeffs):
        return float(np.linalg.norm(res) + lam * np.sum(np.abs(coeffs)))

    res = residual_of(c)
    current = objective(res, c)
    history = [current]
    step = 1.0
    converged = False
    gap = math.inf
    iteration = 0

    for iteration in range(1, iters + 1):
        res_norm = np.linalg.norm(res)
        if res_norm == 0:
            converged, gap = True, 0.0
            break
        grad = -system.adjoint(res).ravel() * scale / res_norm
        accepted = False
        while step > 1e-14:
            candidate = _soft_threshold(c - step * grad, step * lam)
            candidate_res = residual_of(candidate)
            value = objective(candidate_res, candidate)
            if value <= current:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # stalled; converged only if some step was taken before
            converged, gap = len(history) > 1, 0.0
            break
        gap = (current - value) / max(current, 1e-300)
        c, res, current = candidate, candidate_res, value
        history.append(current)
        if gap < tol:
            converged = True
            break
        step *= 2.0

    if not converged:
        logger.warning("sqrt_lasso_not_converged", iterations=iteration, objective_gap=gap,
                       objective=current)
    support = np.flatnonzero(c)
    approximant = SparseTrigPoly(system.d, system.frequencies(support), c[support])
    return SolverOutcome(approximant=approximant, iterations=iteration, converged=converged,
                         history=history, objective_gap=float(gap), lam=lam)


def _decode(samples: SampleSet, config: RecoveryConfig) -> SolverOutcome:
    system = FourierSystem(samples.points, config.D)
    if config.solver == 'omp':
        return omp_recover(samples, config.D, config.n, tol=config.tol, system=system)
    return sqrt_lasso_recover(samples, config.D, lam=config.lam, iters=config.max_iter,
                              tol=config.tol, system=system)


def _difference_error(f: Union[SparseTrigPoly, ValueOracle], approximant: SparseTrigPoly,
                      q: float, reference_max: Optional[np.ndarray]) -> float:
    if isinstance(f, SparseTrigPoly):
        return lebesgue_norm(f - approximant, q)
    # Oracle input: quadrature on a grid covering the approximant and the reference band
    band = approximant.max_frequency()
    if reference_max is not None:
        band = np.maximum(band, reference_max)
    grid = default_grid(band, q, oversampling=4.0 if q == 2 else None)
    values = f(grid.points()).reshape(grid.sizes) - evaluate_grid(approximant, grid)
    return grid_lq_norm(values, q)


def recover_pipeline(f: Union[SparseTrigPoly, ValueOracle], config: RecoveryConfig, seed: int,
                     reference: Optional[SparseTrigPoly] = None,
                     keep_approximant: bool = True) -> RecoveryReport:
    """
    Sample, decode and score one recovery run.

    The error bound is n^(1/2-1/q) (n^(-1/2) sigma_n(f)_A + E), with E the l_1
    tail of f outside [-M, M]^d; C_emp = error / bound.

    Args:
        f: Coefficient polynomial or vectorized value oracle on (m, d) points
        config: RecoveryConfig
        seed: Seed of the sample set
        reference: Coefficients of an oracle input, used for sigma_n and E
        keep_approximant: Attach the decoded polynomial to the report

    Returns:
        RecoveryReport
    """
    if isinstance(f, SparseTrigPoly):
        require(f.dim == config.d, "f.d == config.d", f_dim=f.dim, d=config.d)
    start = time.time()
    m = config.sample_count
    points = draw_samples(m, config.d, seed)
    values = evaluate(f, points) if isinstance(f, SparseTrigPoly) else np.asarray(f(points))
    samples = SampleSet(points=points, values=values, seed=seed)

    outcome = _decode(samples, config)
    coefficients = f if isinstance(f, SparseTrigPoly) else reference
    reference_max = reference.max_frequency() if reference is not None else None
    error = _difference_error(f, outcome.approximant, config.q, reference_max)

    if coefficients is not None:
        sigma = greedy_mterm(coefficients, config.n, WienerPlain(1.0)).error
        surrogate = best_trig_error_surrogate(coefficients, config.M)
        inv_q = 0.0 if math.isinf(config.q) else 1.0 / config.q
        bound = config.n ** (0.5 - inv_q) * (sigma / math.sqrt(config.n) + surrogate)
        c_emp = error / bound if bound > 0 else math.nan
    else:
        sigma = surrogate = c_emp = math.nan

    wall_ms = (time.time() - start) * 1000.0
    logger.info("recovery_complete", seed=seed, m=m, n=config.n, M=config.M, solver=config.solver,
                error=error, C_emp=c_emp, ms=round(wall_ms, 1))
    return RecoveryReport(seed=seed, m=m, n=config.n, M=config.M, q=config.q, solver=config.solver,
                          error=float(error), sigma_n_A=float(sigma), E_surrogate=float(surrogate),
                          C_emp=float(c_emp), wall_time_ms=wall_ms,
                          approximant=outcome.approximant if keep_approximant else None)


def _recovery_task(task):
    f, config, seed = task
    return recover_pipeline(f, config, seed, keep_approximant=False)


def recovery_trials(f: SparseTrigPoly, config: RecoveryConfig, seeds: Sequence[int],
                    jobs: int = 1) -> List[RecoveryReport]:
    """Independent recovery runs, one per seed, in seed order"""
    return run_parallel(_recovery_task, [(f, config, int(s)) for s in seeds], jobs)


def linear_baseline(f: SparseTrigPoly, m: int, cap: Optional[int] = None) -> Dict[str, Any]:
    """
    L_2 error of projecting f onto the first m weight-sorted frequencies.

    An idealized lower-bound proxy for linear sampling methods using m samples.
    """
    require(m >= 0, "m >= 0", m=m)
    head = sorted_frequencies(m, f.dim, cap=cap)
    kept = {tuple(int(x) for x in k) for k in head}
    inside = np.array([tuple(int(x) for x in k) in kept for k in f.frequencies], dtype=bool)
    error = lp_norm(f.coefficients[~inside], 2.0) if f.support_size else 0.0
    return {'m': m, 'error': float(error), 'kept': int(inside.sum()),
            'proxy': 'hyperbolic-cross projection'}
