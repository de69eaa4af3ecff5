"""
Numerical checks of norm embeddings and auxiliary inequalities
Random polynomials drawn layer by layer, norm ratios per scale, and
exhaustive or randomized suites for the index and sequence lemmas
"""

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.services.function_spaces import (Besov, SobolevW, SpaceParams, WienerWeighted,
                                          norm)
from src.services.hyperbolic_index import (block_labels, block_size, compositions,
                                           enumerate_block, enumerate_layer, layer_cardinality,
                                           order_weights_holds, sorted_frequencies, weights)
from src.services.mterm_approximation import multiplicativity_chain, sequence_tail, stechkin_bound
from src.services.trig_poly import SparseTrigPoly, lp_norm
from src.utils.errors import ParameterError, require
from src.utils.logger import get_logger
from src.utils.parallel import derive_seed, run_parallel

logger = get_logger(__name__)

INF = math.inf
NORM1_TOLERANCE = 1e-9
SLOPE_LIMIT = 0.05
MARGIN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class EmbeddingPair:
    """Source and target spaces of one embedding for fixed (r, p, theta)"""

    tag: str
    source: SpaceParams
    target: SpaceParams
    norm_one: bool


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


def embedding_pair(tag: str, r: float, p: float, theta: float) -> EmbeddingPair:
    """
    Build the source/target pair for an embedding tag, checking its parameter range.

    Tags:
        B-to-A-norm1: S^{r+1/theta-1/2}_{p,theta} B into S^r_theta A, 0 < theta <= 2 <= p < inf
        B-to-A-general: S^{r+1/p+1/theta-1}_{p,theta} B into S^r_theta A, 1 < p <= 2, 0 < theta <= 2
        W-to-A: S^{r+2/p-1}_p W into S^r_p A, 1 < p <= 2
        A-to-B: S^{r+1-1/p-1/theta}_theta A into S^r_{p,theta} B, 2 <= p < inf, 2 <= theta <= inf
        A-to-W: S^{r+1-2/p}_p A into S^r_p W, 2 <= p < inf
    """
    require(r >= 0, "r >= 0", r=r)
    if tag == 'B-to-A-norm1':
        require(0 < theta <= 2 <= p < INF, "0 < theta <= 2 <= p < inf", theta=theta, p=p)
        return EmbeddingPair(tag, Besov(r + 1 / theta - 0.5, p, theta), WienerWeighted(r, theta), True)
    if tag == 'B-to-A-general':
        require(1 < p <= 2, "1 < p <= 2", p=p)
        require(0 < theta <= 2, "0 < theta <= 2", theta=theta)
        return EmbeddingPair(tag, Besov(r + 1 / p + 1 / theta - 1, p, theta), WienerWeighted(r, theta), False)
    if tag == 'W-to-A':
        require(1 < p <= 2, "1 < p <= 2", p=p)
        return EmbeddingPair(tag, SobolevW(r + 2 / p - 1, p), WienerWeighted(r, p), False)
    if tag == 'A-to-B':
        require(2 <= p < INF, "2 <= p < inf", p=p)
        require(theta >= 2, "2 <= theta <= inf", theta=theta)
        return EmbeddingPair(tag, WienerWeighted(r + 1 - 1 / p - _inv(theta), theta), Besov(r, p, theta), False)
    if tag == 'A-to-W':
        require(2 <= p < INF, "2 <= p < inf", p=p)
        return EmbeddingPair(tag, WienerWeighted(r + 1 - 2 / p, p), SobolevW(r, p), False)
    raise ParameterError(f"unknown embedding {tag!r}", inequality=f"tag in {EMBEDDING_TAGS}")


EMBEDDING_TAGS = ('B-to-A-norm1', 'B-to-A-general', 'W-to-A', 'A-to-B', 'A-to-W')

# (p, theta) inside each parameter range
DEFAULT_EMBEDDING_PARAMS = {
    'B-to-A-norm1': (2.0, 1.0),
    'B-to-A-general': (1.5, 1.0),
    'W-to-A': (1.5, 1.5),
    'A-to-B': (2.0, 2.0),
    'A-to-W': (3.0, 3.0),
}


def random_layered_poly(d: int, n_max: int, rng: np.random.Generator,
                        max_support: int = 24) -> SparseTrigPoly:
    """
    Random polynomial with support drawn layer by layer.

    Each support point picks a layer uniformly in 0..n_max, a block label on
    that layer uniformly, then a uniform frequency in the block; coefficients
    are complex Gaussian.
    """
    size = int(rng.integers(1, max_support + 1))
    labels_by_layer = [list(compositions(n, d)) for n in range(n_max + 1)]
    freqs = np.empty((size, d), dtype=np.int64)
    for i in range(size):
        layer = labels_by_layer[int(rng.integers(0, n_max + 1))]
        label = layer[int(rng.integers(0, len(layer)))]
        for axis, j in enumerate(label):
            if j == 0:
                freqs[i, axis] = 0
            else:
                magnitude = int(rng.integers(1 << (j - 1), 1 << j))
                freqs[i, axis] = magnitude if rng.random() < 0.5 else -magnitude
    coeffs = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return SparseTrigPoly(d, freqs, coeffs)


@dataclass
class EmbeddingReport:
    """Ratios ||f||_target / ||f||_source collected per scale"""

    tag: str
    source: str
    target: str
    trials: int
    scales: List[int]
    max_ratio: Dict[int, float]
    median_ratio: Dict[int, float]
    slope: float
    violations: int
    constant_ratio: float
    norm_one: bool
    seconds: float = 0.0

    @property
    def non_diverging(self) -> bool:
        return self.slope <= SLOPE_LIMIT

    @property
    def passed(self) -> bool:
        if self.norm_one:
            return self.violations == 0 and abs(self.constant_ratio - 1.0) <= NORM1_TOLERANCE
        return self.non_diverging

    def to_record(self) -> Dict[str, Any]:
        return {
            'tag': self.tag, 'source': self.source, 'target': self.target, 'trials': self.trials,
            'scales': self.scales, 'max_ratio': [self.max_ratio[s] for s in self.scales],
            'slope': self.slope, 'violations': self.violations,
            'constant_ratio': self.constant_ratio, 'passed': self.passed,
        }


def _ratio_task(task: Tuple) -> float:
    pair, d, n_max, seed, max_support = task
    f = random_layered_poly(d, n_max, np.random.default_rng(seed), max_support)
    source = norm(f, pair.source)
    return norm(f, pair.target) / source if source > 0 else 0.0


def embedding_check(tag: str, trials: int, scales: Sequence[int], r: float = 1.0, p: float = 2.0,
                    theta: float = 2.0, d: int = 2, seed: int = 0, max_support: int = 24,
                    jobs: int = 1) -> EmbeddingReport:
    """
    Estimate the embedding ratio on random polynomials.

    Args:
        tag: One of EMBEDDING_TAGS
        trials: Random polynomials per scale
        scales: Largest layer index n_max used at each scale
        r, p, theta: Space parameters
        d: Dimension
        seed: Master seed; polynomial (scale, trial) uses a derived seed

    Returns:
        EmbeddingReport; norm-one embeddings count ratios above 1 + 1e-9 as violations,
        the others are non-diverging when the log-ratio slope against log 2^n_max is <= 0.05
    """
    pair = embedding_pair(tag, r, p, theta)
    require(trials >= 1, "trials >= 1", trials=trials)
    scales = sorted(int(s) for s in scales)
    require(len(scales) >= 1 and scales[0] >= 0, "scales non-empty, n_max >= 0", scales=scales)

    start = time.time()
    tasks = [(pair, d, n_max, derive_seed(seed, n_max, t), max_support)
             for n_max in scales for t in range(trials)]
    ratios = np.array(run_parallel(_ratio_task, tasks, jobs)).reshape(len(scales), trials)

    max_ratio = {s: float(ratios[i].max()) for i, s in enumerate(scales)}
    median_ratio = {s: float(np.median(ratios[i])) for i, s in enumerate(scales)}
    if len(scales) >= 2:
        x = np.array(scales, dtype=np.float64) * math.log(2.0)
        y = np.log([max(max_ratio[s], 1e-300) for s in scales])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = 0.0
    violations = int(np.sum(ratios > 1.0 + NORM1_TOLERANCE)) if pair.norm_one else 0

    one = SparseTrigPoly.constant(d)
    constant_ratio = norm(one, pair.target) / norm(one, pair.source)

    report = EmbeddingReport(tag=tag, source=pair.source.describe(), target=pair.target.describe(),
                             trials=trials, scales=scales, max_ratio=max_ratio,
                             median_ratio=median_ratio, slope=slope, violations=violations,
                             constant_ratio=constant_ratio, norm_one=pair.norm_one,
                             seconds=time.time() - start)
    logger.info("embedding_check_complete", tag=tag, slope=round(slope, 4), violations=violations,
                passed=report.passed, seconds=round(report.seconds, 2))
    return report


# ---------------------------------------------------------------------------
# Auxiliary lemma suites
# ---------------------------------------------------------------------------

@dataclass
class LemmaResult:
    """Outcome of one lemma suite; worst_margin < 0 means a violation"""

    name: str
    passed: bool
    instances: int
    worst_margin: float
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class LemmaReport:
    results: Dict[str, LemmaResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results.values())

    def to_records(self) -> List[Dict[str, Any]]:
        return [{'lemma': r.name, 'passed': r.passed, 'instances': r.instances,
                 'worst_margin': r.worst_margin, **r.details} for r in self.results.values()]


def _margin(lhs: float, rhs: float) -> float:
    """Relative slack of lhs <= rhs"""
    return (rhs - lhs) / max(abs(rhs), 1e-300)


def check_partition(max_n: Dict[int, int]) -> LemmaResult:
    """
    Every k in [-2^n, 2^n]^d has exactly one block label, with labels in [0, n+1]^d.

    Blocks with labels in [0, n]^d lie inside the box and map back to their
    label; a label n+1 on an axis covers only the shell points +-2^n there.
    """
    instances = 0
    failures = []
    for d, n_top in max_n.items():
        for n in range(n_top + 1):
            axis = np.arange(-2 ** n, 2 ** n + 1)
            box = np.stack(np.meshgrid(*([axis] * d), indexing='ij'), axis=-1).reshape(-1, d)
            found = block_labels(box)
            in_range = bool(np.all((found >= 0) & (found <= n + 1)))
            labels, counts = np.unique(found, axis=0, return_counts=True)
            per_axis = np.where(labels == 0, 1, np.where(labels == n + 1, 2, 2 ** labels))
            sizes_match = (len(labels) == (n + 2) ** d
                           and np.array_equal(counts, np.prod(per_axis, axis=1)))
            inner = [tuple(int(x) for x in lab) for lab in np.ndindex(*((n + 1,) * d))]
            consistent = all(np.array_equal(block_labels(enumerate_block(j)),
                                            np.tile(np.array(j), (block_size(j), 1)))
                             for j in inner)
            instances += 1
            if not (in_range and sizes_match and consistent):
                failures.append((d, n))
    return LemmaResult('partition', not failures, instances, 0.0 if not failures else -1.0,
                       {'failures': len(failures)})


def check_cardinality(max_n: Dict[int, int]) -> LemmaResult:
    instances = 0
    failures = 0
    for d, n_top in max_n.items():
        for n in range(n_top + 1):
            instances += 1
            if len(enumerate_layer(n, d)) != layer_cardinality(n, d):
                failures += 1
    return LemmaResult('layer_cardinality', failures == 0, instances, 0.0 if not failures else -1.0,
                       {'failures': failures})


def check_weight_sandwich(max_n: Dict[int, int]) -> LemmaResult:
    """2^(n-d) < w_k <= 2^n on H_n"""
    worst = INF
    strict = True
    instances = 0
    for d, n_top in max_n.items():
        for n in range(n_top + 1):
            w = weights(enumerate_layer(n, d))
            instances += len(w)
            strict = strict and bool(w.min() > 2.0 ** (n - d))
            worst = min(worst, _margin(float(w.max()), 2.0 ** n), _margin(2.0 ** (n - d), float(w.min())))
    passed = strict and worst >= -MARGIN_TOLERANCE
    return LemmaResult('weight_sandwich', passed, instances, worst)


def check_order_weights(max_n: Dict[int, int]) -> LemmaResult:
    instances = 0
    failures = 0
    for d, n_top in max_n.items():
        for n in range(d, n_top + 1):
            instances += 1
            if not order_weights_holds(n, d):
                failures += 1
    return LemmaResult('order_weights', failures == 0, instances, 0.0 if not failures else -1.0,
                       {'failures': failures})


def check_sorted_weight_growth(max_n: Dict[int, int], band: float = 4.0) -> LemmaResult:
    """w at sorted position ceil(2^n n^(d-1)) stays within a constant band of 2^n"""
    ratios: Dict[str, float] = {}
    passed = True
    instances = 0
    for d, n_top in max_n.items():
        values = []
        for n in range(2, n_top + 1):
            position = math.ceil(2 ** n * n ** (d - 1))
            w = weights(sorted_frequencies(position, d)[-1:])[0]
            values.append(w / 2.0 ** n)
            instances += 1
        spread = max(values) / min(values)
        ratios[f"d{d}_min"] = min(values)
        ratios[f"d{d}_max"] = max(values)
        passed = passed and spread <= band
    return LemmaResult('sorted_weight_growth', passed, instances, 0.0, ratios)


def geo_sum_ratio(L: int, alpha: float, beta: float, gamma: float, terms: int = 200) -> float:
    """sum_{k=L+1}^{L+terms} (k-L)^alpha k^beta 2^(-gamma k) divided by L^beta 2^(-gamma L)"""
    j = np.arange(1, terms + 1, dtype=np.float64)
    return float(np.sum(j ** alpha * ((L + j) / L) ** beta * 2.0 ** (-gamma * j)))


def check_geo_sum(alphas=(-1.0, 0.0, 1.0), betas=(-1.0, 0.0, 1.0), gammas=(2.0, 3.0),
                  L_range=range(2, 41), stability: float = 2.0) -> LemmaResult:
    """One constant C bounds the weighted geometric tail for all L, stable within a factor"""
    worst_spread = 0.0
    constants = {}
    instances = 0
    for alpha in alphas:
        for beta in betas:
            for gamma in gammas:
                values = [geo_sum_ratio(L, alpha, beta, gamma) for L in L_range]
                instances += len(values)
                spread = max(values) / min(values)
                worst_spread = max(worst_spread, spread)
                constants[f"C({alpha:g},{beta:g},{gamma:g})"] = max(values)
    return LemmaResult('geo_sum', worst_spread <= stability, instances,
                       _margin(worst_spread, stability), {'worst_spread': worst_spread,
                                                          'max_constant': max(constants.values())})


def _random_sequence(rng: np.random.Generator, max_len: int = 50) -> np.ndarray:
    length = int(rng.integers(1, max_len + 1))
    x = rng.standard_normal(length) * rng.exponential(1.0, length)
    x[rng.random(length) < 0.2] = 0.0
    if not np.any(x):
        x[0] = 1.0
    return x


def check_counting_holder(instances: int = 1000, seed: int = 0) -> LemmaResult:
    """||x||_p <= ||x||_q l0(x)^((q-p)/(qp)) for 0 < p <= q <= inf"""
    rng = np.random.default_rng(seed)
    worst = INF
    for _ in range(instances):
        x = _random_sequence(rng)
        p = float(rng.uniform(0.2, 3.0))
        q = INF if rng.random() < 0.1 else p + float(rng.uniform(0.0, 3.0))
        support = int(np.count_nonzero(x))
        exponent = 1.0 / p if math.isinf(q) else (q - p) / (q * p)
        worst = min(worst, _margin(lp_norm(x, p), lp_norm(x, q) * support ** exponent))
    return LemmaResult('counting_holder', worst >= -MARGIN_TOLERANCE, instances, worst)


def check_stechkin(instances: int = 1000, seed: int = 1) -> LemmaResult:
    """sigma_m(x)_{l_q} <= (m+1)^(1/q-1/p) ||x||_p for 0 < p < q <= inf"""
    rng = np.random.default_rng(seed)
    worst = INF
    for _ in range(instances):
        x = _random_sequence(rng)
        p = float(rng.uniform(0.2, 2.5))
        q = INF if rng.random() < 0.1 else p + float(rng.uniform(0.05, 3.0))
        m = int(rng.integers(0, len(x) + 1))
        worst = min(worst, _margin(sequence_tail(x, m, q), stechkin_bound(x, p, q, m)))
    return LemmaResult('stechkin', worst >= -MARGIN_TOLERANCE, instances, worst)


def check_multiplicativity(instances: int = 50, seed: int = 2) -> LemmaResult:
    """sigma_{m1+m2}(f)_{A_eta} <= sigma_{m2}(f - G_m1 f)_{A_eta} <= (m2+1)^(1/eta-1/theta) sigma_m1(f)_{A_theta}"""
    rng = np.random.default_rng(seed)
    worst = INF
    for _ in range(instances):
        f = random_layered_poly(2, 5, rng, max_support=60)
        m1 = int(rng.integers(0, 20))
        m2 = int(rng.integers(0, 20))
        theta = float(rng.uniform(0.3, 1.5))
        eta = theta + float(rng.uniform(0.1, 2.0))
        chain = multiplicativity_chain(f, m1, m2, theta, eta)
        worst = min(worst, _margin(chain['direct'], chain['composed']) if chain['composed'] > 0 else 0.0,
                    _margin(chain['composed'], chain['bound']) if chain['bound'] > 0 else 0.0)
    return LemmaResult('multiplicativity', worst >= -MARGIN_TOLERANCE, instances, worst)


DEFAULT_LEMMA_LIMITS = {
    'partition': {1: 8, 2: 8, 3: 6},
    'layers': {1: 10, 2: 10, 3: 10},
    'growth': {2: 14, 3: 12},
}


def verify_auxiliary_lemmas(limits: Optional[Dict[str, Dict[int, int]]] = None,
                            random_instances: int = 1000, seed: int = 0) -> LemmaReport:
    """
    Run every auxiliary-lemma suite.

    Args:
        limits: Per-suite {d: largest n}; keys 'partition', 'layers', 'growth'
        random_instances: Instances for the randomized sequence lemmas
        seed: Seed of the randomized suites

    Returns:
        LemmaReport keyed by suite name
    """
    limits = {**DEFAULT_LEMMA_LIMITS, **(limits or {})}
    start = time.time()
    suites: List[Tuple[str, Callable[[], LemmaResult]]] = [
        ('partition', lambda: check_partition(limits['partition'])),
        ('layer_cardinality', lambda: check_cardinality(limits['layers'])),
        ('weight_sandwich', lambda: check_weight_sandwich(limits['layers'])),
        ('order_weights', lambda: check_order_weights(limits['layers'])),
        ('sorted_weight_growth', lambda: check_sorted_weight_growth(limits['growth'])),
        ('geo_sum', check_geo_sum),
        ('counting_holder', lambda: check_counting_holder(random_instances, seed)),
        ('stechkin', lambda: check_stechkin(random_instances, seed + 1)),
        ('multiplicativity', lambda: check_multiplicativity(max(1, random_instances // 20), seed + 2)),
    ]
    results = {}
    for name, suite in suites:
        result = suite()
        results[name] = result
        logger.info("lemma_suite", name=name, passed=result.passed, instances=result.instances,
                    worst_margin=result.worst_margin)
    logger.info("lemmas_complete", seconds=round(time.time() - start, 2))
    return LemmaReport(results)
