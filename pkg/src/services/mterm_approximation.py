"""
Best m-term approximation with respect to the trigonometric system
Greedy selection, the empirical-mean (Maurey) approximant, the layered
construction on hyperbolic layers and the fooling functions used for lower bounds
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from src.services.function_spaces import (Besov, Lebesgue, SpaceParams, WienerPlain,
                                          WienerWeighted, norm, weighted_magnitudes)
from src.services.hyperbolic_index import (enumerate_layer, layer_cardinality, layer_of,
                                           log_star, sorted_frequencies, weights)
from src.services.trig_poly import SparseTrigPoly, lebesgue_norm, lp_norm
from src.utils.errors import ParameterError, require
from src.utils.logger import get_logger
from src.utils.parallel import derive_seed, run_parallel

logger = get_logger(__name__)

INF = math.inf


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


@dataclass
class MTermResult:
    """Approximant with its term count and error in a stated norm"""

    approximant: SparseTrigPoly
    term_count: int
    error: float
    error_norm: SpaceParams
    seed: Optional[int] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        record = {
            'term_count': self.term_count,
            'error': self.error,
            'error_norm': self.error_norm.describe(),
            'seed': '' if self.seed is None else self.seed,
        }
        record.update(self.details)
        return record


@dataclass(frozen=True)
class LayerBudget:
    """Term budget of the layered construction for m = 2^n"""

    n: int
    d: int
    L: int
    K: int
    layer_terms: Dict[int, int]
    kept_terms: int

    @property
    def total_terms(self) -> int:
        return self.kept_terms + sum(self.layer_terms.values())

    @property
    def constant(self) -> float:
        """Total budget divided by m"""
        return self.total_terms / float(2 ** self.n)


def smoothness_margin_ok(r: float, theta: float) -> bool:
    return r > max(1.0 - _inv(theta), 0.0)


def layer_cutoff(n: int, d: int) -> int:
    """L = ceil(n - (d-1) log* n), the last layer kept exactly; must be positive"""
    L = math.ceil(n - (d - 1) * log_star(n))
    if L <= 0:
        raise ParameterError(f"L = ceil(n - (d-1) log* n) = {L} for n={n}, d={d}; increase m",
                             inequality="n - (d-1) log* n > 0", n=n, d=d)
    return L


def layer_budget(n: int, d: int, r: float, theta: float) -> LayerBudget:
    """
    L, K and the per-layer term counts m_k for m = 2^n.

    L = ceil(n - (d-1) log* n), K = ceil(n (r + 1/theta - 1/2) / (r - 1 + 1/theta) - (d-1) log* n),
    m_k = ceil((k - L)^-2 2^L L^(d-1)) for L < k <= K.
    """
    require(n >= 1, "n >= 1", n=n)
    require(d >= 1, "d >= 1", d=d)
    require(theta >= 1, "theta >= 1 (theta < 1 goes through the S^r_1 A stage)", theta=theta)
    require(smoothness_margin_ok(r, theta), "r > (1 - 1/theta)_+", r=r, theta=theta)

    shift = (d - 1) * log_star(n)
    L = layer_cutoff(n, d)
    gamma = r - 1.0 + _inv(theta)
    K = math.ceil(n * (r + _inv(theta) - 0.5) / gamma - shift)
    layer_terms = {k: math.ceil(2.0 ** L * L ** (d - 1) / (k - L) ** 2) for k in range(L + 1, K + 1)}
    kept = sum(layer_cardinality(k, d) for k in range(L + 1))
    return LayerBudget(n=n, d=d, L=L, K=K, layer_terms=layer_terms, kept_terms=kept)


def sequence_tail(x: np.ndarray, m: int, q: float) -> float:
    """Exact sigma_m(x)_{l_q}: l_q norm after removing the m largest entries"""
    require(m >= 0, "m >= 0", m=m)
    magnitudes = np.sort(np.abs(np.asarray(x)))[::-1]
    return lp_norm(magnitudes[m:], q)


def stechkin_bound(x: np.ndarray, p: float, q: float, m: int) -> float:
    """(m + 1)^(1/q - 1/p) ||x||_p, an upper bound for sigma_m(x)_{l_q} when 0 < p < q <= inf"""
    require(0 < p < q, "0 < p < q <= inf", p=p, q=q)
    require(m >= 0, "m >= 0", m=m)
    return (m + 1) ** (_inv(q) - 1.0 / p) * lp_norm(x, p)


def approximation_error(f: SparseTrigPoly, approximant: SparseTrigPoly, q: float) -> float:
    """||f - approximant||_{L_q}; q = 2 is exact from coefficients"""
    return lebesgue_norm(f - approximant, q)


def _ranking_magnitudes(f: SparseTrigPoly, target: SpaceParams) -> np.ndarray:
    if isinstance(target, WienerWeighted):
        return weighted_magnitudes(f, target.r)
    if isinstance(target, WienerPlain) or (isinstance(target, Lebesgue) and target.q == 2):
        return np.abs(f.coefficients)
    raise ParameterError(f"greedy selection is exact only for coefficient norms, got {target.describe()}",
                         inequality="target in {WienerWeighted, WienerPlain, Lebesgue(2)}")


def greedy_mterm(f: SparseTrigPoly, m: int, target: SpaceParams) -> MTermResult:
    """
    Keep the m coefficients that are largest in the target norm.

    Ties are broken by the lexicographic order of the frequency.

    Args:
        f: Polynomial to approximate
        m: Term budget
        target: WienerWeighted, WienerPlain or Lebesgue(2)

    Returns:
        MTermResult whose error is the exact tail in the target norm
    """
    require(m >= 0, "m >= 0", m=m)
    magnitudes = _ranking_magnitudes(f, target)
    d = f.dim
    keys = tuple(f.frequencies[:, i] for i in reversed(range(d))) + (-magnitudes,)
    order = np.lexsort(keys) if f.support_size else np.zeros(0, dtype=np.int64)
    keep = np.zeros(f.support_size, dtype=bool)
    keep[order[:m]] = True
    approximant = f.restrict(keep)
    error = norm(f.restrict(~keep), target)
    return MTermResult(approximant=approximant, term_count=approximant.support_size,
                       error=error, error_norm=target,
                       details={'method': 'greedy', 'm': m, 'support': f.support_size})


def _maurey_trial(task: Tuple) -> Tuple[float, np.ndarray]:
    dim, freqs, coeffs, m, q, trial_seed = task
    magnitudes = np.abs(coeffs)
    total = magnitudes.sum()
    rng = np.random.default_rng(trial_seed)
    draws = rng.choice(len(coeffs), size=m, p=magnitudes / total)
    counts = np.bincount(draws, minlength=len(coeffs))
    phases = coeffs / magnitudes
    sampled = (total / m) * counts * phases
    if q == 2:
        error = lp_norm(coeffs - sampled, 2.0)
    else:
        error = lebesgue_norm(SparseTrigPoly(dim, freqs, coeffs - sampled), q)
    return error, sampled


def maurey_mterm(f: SparseTrigPoly, m: int, q: float = 2.0, trials: Optional[int] = None,
                 seed: Optional[int] = None, jobs: int = 1) -> MTermResult:
    """
    Empirical-mean m-term approximant, best of R independent trials.

    Frequencies are sampled i.i.d. with probability |c_k| / ||f||_A and the
    approximant is (||f||_A / m) sum_i sign(c_{k_i}) e_{k_i}. Trial t uses a
    seed derived from (seed, t).

    Args:
        f: Polynomial to approximate
        m: Number of samples, >= 1
        q: L_q norm of the reported error, 2 <= q <= inf
        trials: R, defaults to HYPX_MAUREY_TRIALS
        seed: Master seed, defaults to HYPX_DEFAULT_SEED
        jobs: Worker processes for the trials

    Returns:
        MTermResult of the trial with the smallest error (lowest trial index on ties)
    """
    require(m >= 1, "m >= 1", m=m)
    require(q >= 2, "2 <= q <= inf", q=q)
    if trials is None or seed is None:
        from config import get_config
        config = get_config()
        trials = trials if trials is not None else config.MAUREY_TRIALS
        seed = seed if seed is not None else config.DEFAULT_SEED
    require(trials >= 1, "trials >= 1", trials=trials)

    if f.support_size == 0:
        return MTermResult(SparseTrigPoly(f.dim), 0, 0.0, Lebesgue(q), seed,
                           {'method': 'maurey', 'm': m, 'trials': trials, 'best_trial': 0})

    tasks = [(f.dim, f.frequencies, f.coefficients, m, q, derive_seed(seed, t)) for t in range(trials)]
    outcomes = run_parallel(_maurey_trial, tasks, jobs)
    errors = np.array([err for err, _ in outcomes])
    best = int(np.argmin(errors))
    approximant = SparseTrigPoly(f.dim, f.frequencies, outcomes[best][1])
    return MTermResult(approximant=approximant, term_count=approximant.support_size,
                       error=float(errors[best]), error_norm=Lebesgue(q), seed=seed,
                       details={'method': 'maurey', 'm': m, 'trials': trials, 'best_trial': best,
                                'norm_A': float(np.abs(f.coefficients).sum())})


def _layered_stage(f: SparseTrigPoly, budget: LayerBudget, q: float, seed: int,
                   trials: Optional[int], jobs: int) -> Tuple[SparseTrigPoly, Dict[str, Any]]:
    layers = layer_of(f.frequencies) if f.support_size else np.zeros(0, dtype=np.int64)
    kept = f.restrict(layers <= budget.L)
    approximant = kept
    s2_error = 0.0
    s3_error = 0.0
    approximated_layers = 0
    for k in np.unique(layers[layers > budget.L]):
        component = f.restrict(layers == k)
        if k > budget.K:
            s3_error += lebesgue_norm(component, q)
            continue
        result = maurey_mterm(component, budget.layer_terms[int(k)], q=q, trials=trials,
                              seed=derive_seed(seed, int(k)), jobs=jobs)
        approximant = approximant + result.approximant
        s2_error += result.error
        approximated_layers += 1
    details = {
        'L': budget.L,
        'K': budget.K,
        'kept_terms': kept.support_size,
        'approximated_layers': approximated_layers,
        'segment_error_approximated': s2_error,
        'segment_error_dropped': s3_error,
        'budget_total': budget.total_terms,
        'budget_constant': budget.constant,
    }
    return approximant, details


def layered_mterm(f: SparseTrigPoly, m: int, q: float = 2.0, r: float = 1.0, theta: float = 1.0,
                  seed: Optional[int] = None, trials: Optional[int] = None,
                  jobs: int = 1) -> MTermResult:
    """
    Layered m-term construction for m = 2^n.

    Layers 0..L are kept exactly, layers L+1..K get the empirical-mean
    approximant with m_k terms, layers above K are dropped. For theta < 1 the
    m largest S^r_1 A terms are taken first and the theta = 1 construction is
    applied to the remainder.

    Args:
        f: Polynomial in the unit ball of S^r_theta A (not enforced)
        m: Budget, rounded down to a power of two
        q: L_q norm of the error, 2 <= q <= inf
        r: Smoothness, r > (1 - 1/theta)_+
        theta: Summability, 0 < theta <= inf
        seed: Master seed
        trials: R for each layer

    Returns:
        MTermResult with per-segment errors and the budget in details
    """
    require(m >= 2, "m >= 2", m=m)
    require(q >= 2, "2 <= q <= inf", q=q)
    require(smoothness_margin_ok(r, theta), "r > (1 - 1/theta)_+", r=r, theta=theta)
    if seed is None:
        from config import get_config
        seed = get_config().DEFAULT_SEED

    start = time.time()
    n = int(m).bit_length() - 1
    head = SparseTrigPoly(f.dim)
    remainder = f
    stage_theta = theta
    if theta < 1:
        greedy = greedy_mterm(f, 2 ** n, WienerWeighted(r, 1.0))
        head = greedy.approximant
        remainder = f - head
        stage_theta = 1.0

    budget = layer_budget(n, f.dim, r, stage_theta)
    tail, details = _layered_stage(remainder, budget, q, seed, trials, jobs)
    approximant = head + tail
    error = approximation_error(f, approximant, q)
    details.update({'method': 'layered', 'm': m, 'n': n, 'greedy_head_terms': head.support_size})

    logger.info("layered_mterm_complete", n=n, d=f.dim, L=budget.L, K=budget.K,
                terms=approximant.support_size, error=error,
                seconds=round(time.time() - start, 3))
    return MTermResult(approximant=approximant, term_count=approximant.support_size, error=error,
                       error_norm=Lebesgue(q), seed=seed, details=details)


def _unit_coefficient(w: np.ndarray, r: float, theta: float) -> float:
    """c with ||c * 1||_{S^r_theta A} = 1 for weights w"""
    return 1.0 / lp_norm(w ** r, theta)


def fooling_wiener(n: int, d: int, r: float, theta: float, cap: Optional[int] = None) -> SparseTrigPoly:
    """Equal coefficients on H_n, normalized to unit S^r_theta A norm"""
    require(theta > 0, "theta > 0", theta=theta)
    freqs = enumerate_layer(n, d, cap=cap)
    c = _unit_coefficient(weights(freqs), r, theta)
    return SparseTrigPoly(d, freqs, np.full(len(freqs), c, dtype=np.complex128))


def fooling_besov(n: int, d: int, r: float, p: float, theta: float,
                  cap: Optional[int] = None) -> SparseTrigPoly:
    """Dirichlet kernel of H_n normalized to unit S^r_{p,theta} B norm, 1 < p <= 2"""
    require(1 < p <= 2, "1 < p <= 2", p=p)
    freqs = enumerate_layer(n, d, cap=cap)
    kernel = SparseTrigPoly(d, freqs, np.ones(len(freqs), dtype=np.complex128))
    return kernel.scale(1.0 / norm(kernel, Besov(r, p, theta)))


def fooling_a2a(m: int, d: int, r: float, theta: float, cap: Optional[int] = None) -> SparseTrigPoly:
    """sum_{i <= 2m} w_i^-r (2m)^(-1/theta) e_{J^-1(i)}, unit S^r_theta A norm by construction"""
    require(m >= 1, "m >= 1", m=m)
    freqs = sorted_frequencies(2 * m, d, cap=cap)
    coeffs = weights(freqs) ** (-r) * (2.0 * m) ** (-_inv(theta))
    return SparseTrigPoly(d, freqs, coeffs.astype(np.complex128))


def a2a_lower_bound(m: int, d: int, r: float, theta: float, eta: float,
                    cap: Optional[int] = None) -> float:
    """m^(1/eta) w_{2m}^-r (2m)^(-1/theta), below sigma_m(fooling_a2a)_{A_eta}"""
    require(m >= 1, "m >= 1", m=m)
    w_2m = weights(sorted_frequencies(2 * m, d, cap=cap)[-1:])[0]
    return m ** _inv(eta) * w_2m ** (-r) * (2.0 * m) ** (-_inv(theta))


def layered_witness(n: int, d: int, r: float, theta: float, cap: Optional[int] = None) -> SparseTrigPoly:
    """Unit-ball member on layer L+1, the first layer the layered construction approximates"""
    return fooling_wiener(layer_cutoff(n, d) + 1, d, r, theta, cap=cap)


def fooling_layer_for(m: int, d: int, minimum_ratio: float = 2.0) -> int:
    """Smallest layer n with |H_n| >= minimum_ratio * m"""
    n = 0
    while layer_cardinality(n, d) < minimum_ratio * m:
        n += 1
    return n


def multiplicativity_chain(f: SparseTrigPoly, m1: int, m2: int, theta: float,
                           eta: float) -> Dict[str, float]:
    """
    Instance form of the multiplicative property of m-term widths.

    sigma_{m1+m2}(f)_{A_eta} <= sigma_{m2}(f - G_{m1} f)_{A_eta} <= (m2+1)^(1/eta-1/theta) sigma_{m1}(f)_{A_theta},
    where G_{m1} is greedy in A_theta.
    """
    require(0 < theta < eta, "0 < theta < eta <= inf", theta=theta, eta=eta)
    direct = greedy_mterm(f, m1 + m2, WienerPlain(eta)).error
    first = greedy_mterm(f, m1, WienerPlain(theta))
    residual = f - first.approximant
    composed = greedy_mterm(residual, m2, WienerPlain(eta)).error
    bound = (m2 + 1) ** (_inv(eta) - 1.0 / theta) * first.error
    return {'direct': direct, 'composed': composed, 'bound': bound}
