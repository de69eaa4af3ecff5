"""
Rate sweeps and fits for m-term widths and sampling recovery
Runs dyadic sweeps, fits log err = log c - a log m + b log log* m, and
compares nonlinear recovery against the linear hyperbolic-cross projection
"""

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.services.function_spaces import Lebesgue, WienerPlain
from src.services.hyperbolic_index import log_star, sorted_frequencies, weights
from src.services.mterm_approximation import (a2a_lower_bound, fooling_a2a, fooling_besov,
                                              fooling_layer_for, fooling_wiener, greedy_mterm,
                                              layered_mterm, layered_witness, smoothness_margin_ok)
from src.services.result_writer import write_frame
from src.services.sampling_recovery import (RecoveryConfig, cube_size_for, linear_baseline,
                                            recover_pipeline, sparsity_for_budget)
from src.services.trig_poly import SparseTrigPoly
from src.utils.errors import FitError, ParameterError, require
from src.utils.logger import get_logger
from src.utils.parallel import run_parallel

logger = get_logger(__name__)

TASKS = ('sigma-upper', 'sigma-lower', 'a2a', 'besov-lower', 'recovery')

RATE_KINDS = ('sigma', 'sigma-inf', 'a2a', 'a2a-simple', 'besov-wiener', 'sobolev-wiener',
              'nonlinear-sampling', 'linear-lower', 'gelfand')

MIN_FIT_ROWS = 4


def _inv(x: float) -> float:
    return 0.0 if math.isinf(x) else 1.0 / x


@dataclass(frozen=True)
class SweepParams:
    """Parameters shared by every row of a sweep"""

    d: int = 2
    r: float = 1.0
    theta: float = 1.0
    q: float = 2.0
    eta: float = 2.0
    p: float = 2.0
    C: float = 2.0
    trials: Optional[int] = None
    solver: str = 'omp'

    def __post_init__(self):
        require(self.d >= 1, "d >= 1", d=self.d)
        require(self.r >= 0, "r >= 0", r=self.r)
        require(self.theta > 0, "theta > 0", theta=self.theta)

    def as_dict(self) -> Dict[str, Any]:
        return {k: v for k, v in asdict(self).items() if v is not None}


class RateTable:
    """
    Sweep output: rows of (m, error, seed, ...) plus run metadata.

    Within one seed the m values are strictly increasing.
    """

    def __init__(self, task: str, params: SweepParams, rows: Sequence[Dict[str, Any]],
                 metadata: Optional[Dict[str, Any]] = None):
        self.task = task
        self.params = params
        self.rows = sorted((dict(r) for r in rows), key=lambda r: (r['seed'], r['m']))
        self.metadata = dict(metadata or {})
        self.validate()

    def validate(self) -> None:
        last: Dict[int, int] = {}
        for row in self.rows:
            seed, m = row['seed'], row['m']
            if seed in last and m <= last[seed]:
                raise ParameterError(f"m values must be strictly increasing within seed {seed}",
                                     inequality="m_i < m_(i+1)")
            last[seed] = m

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.rows)
        leading = [c for c in ('m', 'error', 'seed') if c in frame.columns]
        return frame[leading + [c for c in frame.columns if c not in leading]]

    def median_by_m(self) -> pd.DataFrame:
        return self.to_frame().groupby('m', as_index=False)['error'].median()

    def write_csv(self, path):
        return write_frame(self.to_frame(), path)


@dataclass
class RateFit:
    """log err = log c - a log m + b log log* m"""

    a: float
    b: float
    c: float
    residual_rms: float
    b_fixed: bool
    rows_used: int
    m_min: int
    m_max: int

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


def validate_m_list(m_list: Sequence[int], dyadic: bool = False) -> List[int]:
    values = [int(m) for m in m_list]
    require(len(values) > 0, "non-empty m list")
    require(all(b > a for a, b in zip(values, values[1:])), "m strictly increasing", m=values)
    require(values[0] >= 1, "m >= 1", m=values[0])
    if dyadic:
        require(all(m >= 2 and m & (m - 1) == 0 for m in values), "m = 2^n with n >= 1", m=values)
    return values


def check_task_params(task: str, params: SweepParams) -> None:
    """Raise ParameterError naming the first violated inequality of a sweep task"""
    require(task in TASKS, f"task in {TASKS}", task=task)
    if task in ('sigma-upper', 'sigma-lower'):
        require(smoothness_margin_ok(params.r, params.theta), "r > (1 - 1/theta)_+",
                r=params.r, theta=params.theta)
        require(params.q >= 2, "2 <= q <= inf", q=params.q)
    elif task == 'a2a':
        require(params.theta > 0 and params.eta > 0, "0 < theta, eta <= inf", theta=params.theta, eta=params.eta)
        # r = 0 is the unweighted case, valid for theta < eta only
        unweighted = params.r == 0 and params.theta < params.eta
        require(unweighted or params.r > max(0.0, _inv(params.eta) - _inv(params.theta)),
                "r > (1/eta - 1/theta)_+", r=params.r, theta=params.theta, eta=params.eta)
    elif task == 'besov-lower':
        require(1 < params.p <= 2, "1 < p <= 2", p=params.p)
        require(0 < params.theta <= 2, "0 < theta <= 2", theta=params.theta)
        require(params.theta <= params.eta, "theta <= eta", theta=params.theta, eta=params.eta)
        require(params.r > 1.0 / params.p + 1.0 / params.theta - 1.0, "r > 1/p + 1/theta - 1",
                r=params.r, p=params.p, theta=params.theta)
    elif task == 'recovery':
        require(params.r > 0, "r > 0", r=params.r)
        require(smoothness_margin_ok(params.r, params.theta), "r > (1 - 1/theta)_+",
                r=params.r, theta=params.theta)


def _sweep_row(task_args: Tuple) -> Dict[str, Any]:
    task, params, m, seed, record_time = task_args
    start = time.time()
    d, r, theta = params.d, params.r, params.theta
    row: Dict[str, Any] = {'m': m, 'seed': seed}

    if task == 'sigma-upper':
        n = m.bit_length() - 1
        witness = layered_witness(n, d, r, theta)
        result = layered_mterm(witness, m, q=params.q, r=r, theta=theta, seed=seed,
                               trials=params.trials)
        row.update(error=result.error, n=n, L=result.details['L'], K=result.details['K'],
                   term_count=result.term_count, budget_constant=result.details['budget_constant'])
    elif task == 'sigma-lower':
        layer = fooling_layer_for(m, d)
        f = fooling_wiener(layer, d, r, theta)
        row.update(error=greedy_mterm(f, m, Lebesgue(2.0)).error, layer=layer,
                   layer_size=f.support_size)
    elif task == 'a2a':
        t = fooling_a2a(m, d, r, theta)
        row.update(error=greedy_mterm(t, m, WienerPlain(params.eta)).error,
                   lower_bound=a2a_lower_bound(m, d, r, theta, params.eta))
    elif task == 'besov-lower':
        layer = fooling_layer_for(m, d)
        f = fooling_besov(layer, d, r, params.p, theta)
        row.update(error=greedy_mterm(f, m, WienerPlain(params.eta)).error, layer=layer,
                   layer_size=f.support_size)
    elif task == 'recovery':
        n = sparsity_for_budget(m, d, r, theta, params.C)
        M = cube_size_for(n, r, theta)
        layer = fooling_layer_for(n, d)
        f = fooling_wiener(layer, d, r, theta)
        config = RecoveryConfig(n=n, M=M, d=d, q=params.q, C=params.C, solver=params.solver)
        report = recover_pipeline(f, config, seed, keep_approximant=False)
        row.update(error=report.error, samples=report.m, n=n, M=M, layer=layer,
                   sigma_n_A=report.sigma_n_A, E_surrogate=report.E_surrogate, C_emp=report.C_emp)
    if record_time:
        row['wall_time_ms'] = (time.time() - start) * 1000.0
    return row


def rate_sweep(task: str, params: SweepParams, m_list: Sequence[int], seeds: Sequence[int],
               jobs: int = 1, record_wall_time: Optional[bool] = None) -> RateTable:
    """
    Run one sweep task over m_list and seeds.

    Tasks:
        sigma-upper: layered construction on the layer-(L+1) witness, m = 2^n
        sigma-lower: exact L_2 tail of the fooling polynomial on the first layer with |H| >= 2m
        a2a: exact A_eta tail of the A2A fooling polynomial
        besov-lower: exact A_eta tail of the Besov fooling polynomial
        recovery: recover_pipeline with m samples, n and M from the budget

    Args:
        task: One of TASKS
        params: SweepParams
        m_list: Strictly increasing m values
        seeds: Seeds; each (m, seed) pair is one row
        jobs: Worker processes

    Returns:
        RateTable ordered by (seed, m)
    """
    check_task_params(task, params)
    m_values = validate_m_list(m_list, dyadic=(task == 'sigma-upper'))
    if record_wall_time is None:
        from config import get_config
        record_wall_time = get_config().RECORD_WALL_TIME

    start = time.time()
    logger.info("rate_sweep_start", task=task, points=len(m_values), seeds=len(seeds), jobs=jobs)
    tasks = [(task, params, m, int(seed), record_wall_time) for seed in seeds for m in m_values]
    rows = run_parallel(_sweep_row, tasks, jobs)
    table = RateTable(task, params, rows, metadata={'task': task, **params.as_dict()})
    logger.info("rate_sweep_complete", task=task, rows=len(table),
                seconds=round(time.time() - start, 2))
    return table


def fit_rate(table: RateTable, b_fixed: Optional[float] = None) -> RateFit:
    """
    Least-squares fit of log err = log c - a log m + b log log* m.

    Rows with a non-positive or non-finite error are ignored.

    Args:
        table: RateTable
        b_fixed: Fix the log exponent instead of fitting it

    Returns:
        RateFit
    """
    m = np.array([row['m'] for row in table.rows], dtype=np.float64)
    err = np.array([row['error'] for row in table.rows], dtype=np.float64)
    usable = np.isfinite(err) & (err > 0)
    if usable.sum() < len(err):
        logger.warning("fit_rows_dropped", dropped=int(len(err) - usable.sum()))
    m, err = m[usable], err[usable]
    if len(m) < MIN_FIT_ROWS:
        raise FitError(f"need at least {MIN_FIT_ROWS} rows with positive finite error", rows=int(len(m)))

    log_m = np.log(m)
    log_log = np.log([log_star(v) for v in m])
    y = np.log(err)
    if b_fixed is not None:
        design = np.column_stack([np.ones_like(log_m), -log_m])
        target = y - b_fixed * log_log
    else:
        design = np.column_stack([np.ones_like(log_m), -log_m, log_log])
        target = y
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise FitError(f"degenerate design: {len(np.unique(m))} distinct m values for "
                       f"{design.shape[1]} parameters", rows=int(len(m)))

    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coef
    b = float(b_fixed) if b_fixed is not None else float(coef[2])
    return RateFit(a=float(coef[1]), b=b, c=float(np.exp(coef[0])),
                   residual_rms=float(np.sqrt(np.mean(residual ** 2))),
                   b_fixed=b_fixed is not None, rows_used=int(len(m)),
                   m_min=int(m.min()), m_max=int(m.max()))


def predicted_rate(kind: str, params: SweepParams) -> Tuple[float, float]:
    """
    Reference exponents (a, b) of m^-a (log* m)^b for the known asymptotics.

    Kinds:
        sigma: sigma_m(S^r_theta A)_{L_q}, 2 <= q < inf
        sigma-inf: the same in L_inf, with an extra (log* m)^(1/2) for d > 1
        a2a: sigma_m(S^r_theta A)_{A_eta}
        a2a-simple: sigma_m(A_theta)_{A_eta}, no smoothness
        besov-wiener: sigma_m(S^r_{p,theta} B)_{A_eta}
        sobolev-wiener: sigma_m(S^r_p W)_{A_eta}
        nonlinear-sampling: upper bound of the sampling recovery error in L_q
        linear-lower: lower bound for linear sampling methods in L_2
        gelfand: Gelfand width lower bound in L_2
    """
    d, r, theta, q, eta, p = params.d, params.r, params.theta, params.q, params.eta, params.p
    if kind == 'sigma':
        return r + _inv(theta) - 0.5, (d - 1) * r
    if kind == 'sigma-inf':
        return r + _inv(theta) - 0.5, (d - 1) * r + (0.5 if d > 1 else 0.0)
    if kind == 'a2a':
        return r + _inv(theta) - _inv(eta), (d - 1) * r
    if kind == 'a2a-simple':
        return _inv(theta) - _inv(eta), 0.0
    if kind == 'besov-wiener':
        return r + 1 - 1 / p - _inv(eta), (d - 1) * (r + 1 - 1 / p - _inv(theta))
    if kind == 'sobolev-wiener':
        return r + 1 - 1 / p - _inv(eta), (d - 1) * (r + 1 - 2 / p)
    if kind == 'nonlinear-sampling':
        a = r + _inv(theta) + _inv(q) - 1
        return a, (d - 1) * r + 3 * a
    if kind == 'linear-lower':
        return r, (d - 1) * r
    if kind == 'gelfand':
        return r + _inv(theta) - 0.5, (d - 1) * r
    raise ParameterError(f"unknown rate kind {kind!r}", inequality=f"kind in {RATE_KINDS}")


def rate_kind_for_task(task: str, params: SweepParams) -> str:
    if task in ('sigma-upper', 'sigma-lower'):
        return 'sigma-inf' if math.isinf(params.q) else 'sigma'
    return {'a2a': 'a2a', 'besov-lower': 'besov-wiener', 'recovery': 'nonlinear-sampling'}[task]


def linear_witness(m: int, d: int, r: float) -> SparseTrigPoly:
    """Single mode at sorted position m + 1 with unit S^r_theta A norm for every theta"""
    k = sorted_frequencies(m + 1, d)[-1:]
    return SparseTrigPoly(d, k, weights(k) ** (-r))


@dataclass
class GapResult:
    """Paired linear and nonlinear tables over the same (m, seed) grid"""

    linear: RateTable
    nonlinear: RateTable
    params: SweepParams
    witness_layers: Dict[int, int] = field(default_factory=dict)


def _gap_row(task_args: Tuple) -> Tuple[Dict[str, Any], Dict[str, Any], int]:
    params, m, seed = task_args
    d, r, theta = params.d, params.r, params.theta
    n = sparsity_for_budget(m, d, r, theta, params.C)
    M = cube_size_for(n, r, theta)
    top_layer = fooling_layer_for(n, d)
    witnesses = [fooling_wiener(j, d, r, theta) for j in range(top_layer + 1)]
    witnesses.append(linear_witness(m, d, r))

    config = RecoveryConfig(n=n, M=M, d=d, q=2.0, C=params.C, solver=params.solver)
    linear_error = max(linear_baseline(w, m)['error'] for w in witnesses)
    nonlinear_error = max(recover_pipeline(w, config, seed, keep_approximant=False).error
                          for w in witnesses)
    ratio = nonlinear_error / linear_error if linear_error > 0 else math.nan
    linear_row = {'m': m, 'error': linear_error, 'seed': seed}
    nonlinear_row = {'m': m, 'error': nonlinear_error, 'seed': seed, 'n': n, 'M': M,
                     'samples': config.sample_count, 'ratio': ratio}
    return linear_row, nonlinear_row, top_layer


def sampling_gap_experiment(params: SweepParams, m_list: Sequence[int], seeds: Sequence[int],
                            jobs: int = 1) -> GapResult:
    """
    Linear projection versus nonlinear recovery with the same m.

    For every m the witness family is the fooling polynomials on layers
    0..j* (j* the first layer with |H_j| >= 2n(m)) plus the single mode at
    sorted position m + 1; each arm reports its largest error over the family.
    Both arms share the seeds; `ratio` is nonlinear / linear.
    """
    check_task_params('recovery', params)
    m_values = validate_m_list(m_list)
    tasks = [(params, m, int(seed)) for seed in seeds for m in m_values]
    logger.info("gap_experiment_start", points=len(m_values), seeds=len(seeds))
    outcomes = run_parallel(_gap_row, tasks, jobs)
    linear = RateTable('gap-linear', params, [o[0] for o in outcomes], {'arm': 'linear'})
    nonlinear = RateTable('gap-nonlinear', params, [o[1] for o in outcomes], {'arm': 'nonlinear'})
    layers = {row['m']: top for (_, row, top) in outcomes}
    return GapResult(linear=linear, nonlinear=nonlinear, params=params, witness_layers=layers)


def ratio_table(gap: GapResult) -> RateTable:
    """The nonlinear / linear ratio as a RateTable (error column holds the ratio)"""
    rows = [{'m': row['m'], 'error': row['ratio'], 'seed': row['seed']} for row in gap.nonlinear.rows]
    return RateTable('gap-ratio', gap.params, rows, {'arm': 'ratio'})
