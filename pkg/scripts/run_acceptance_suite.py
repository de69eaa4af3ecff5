#!/usr/bin/env python3
"""
Desk-scale acceptance suite for the hypcross toolkit
Runs every acceptance criterion in turn and keeps going after a failed step
"""

import argparse
import math
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np

# Add the project root to the Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from config import get_config  # noqa: E402
from src.services.embedding_checks import (check_cardinality, check_counting_holder,  # noqa: E402
                                           check_geo_sum, check_stechkin, check_weight_sandwich,
                                           embedding_check)
from src.services.function_spaces import WienerWeighted, norm  # noqa: E402
from src.services.mterm_approximation import (fooling_a2a, fooling_layer_for,  # noqa: E402
                                              fooling_wiener, maurey_mterm)
from src.services.rate_experiments import (SweepParams, fit_rate, rate_sweep,  # noqa: E402
                                           ratio_table, sampling_gap_experiment)
from src.services.result_writer import format_record, write_metadata  # noqa: E402
from src.services.sampling_recovery import RecoveryConfig, recovery_trials  # noqa: E402
from src.services.trig_poly import (default_grid, evaluate_grid, grid_lq_norm,  # noqa: E402
                                    random_sparse_poly, vallee_poussin, vallee_poussin_multiplier,
                                    vallee_poussin_sign_poly)
from src.utils.logger import get_logger, setup_logging  # noqa: E402
from src.utils.parallel import run_parallel  # noqa: E402

logger = get_logger(__name__)

DYADIC_M = [2 ** k for k in range(6, 15)]


def _exact_recovery(task) -> int:
    """1 when an exactly n-sparse polynomial inside the cube is recovered to 1e-8"""
    config, seed = task
    sparse = random_sparse_poly(config.d, config.n, config.M, np.random.default_rng(1000 + seed))
    return int(recovery_trials(sparse, config, [seed])[0].error <= 1e-8)


class AcceptanceSuite:
    """Runs the acceptance criteria and collects one result dict per step"""

    def __init__(self, config, jobs: int = 1, quick: bool = False):
        self.config = config
        self.jobs = jobs
        self.quick = quick
        self.start_time = datetime.now()
        self.results = {}

    def run_suite(self, only=None):
        """
        Run all steps, or the numbered subset in `only`.

        Returns:
            True when every executed step succeeded
        """
        steps = [
            (1, 'combinatorics', self._step_combinatorics),
            (2, 'stechkin', self._step_stechkin),
            (3, 'norm_one_embedding', self._step_norm_one_embedding),
            (4, 'vallee_poussin', self._step_vallee_poussin),
            (5, 'maurey_rate', self._step_maurey_rate),
            (6, 'sigma_two_sided', self._step_sigma_two_sided),
            (7, 'a2a_exactness', self._step_a2a),
            (8, 'recovery_guarantee', self._step_recovery),
            (9, 'sampling_gap', self._step_gap),
            (10, 'auxiliary_lemmas', self._step_lemmas),
        ]
        logger.info("acceptance_start", start=self.start_time.isoformat(), quick=self.quick, jobs=self.jobs)
        for number, name, step in steps:
            if only and number not in only:
                continue
            started = time.time()
            try:
                result = step()
            except Exception as e:
                logger.error("acceptance_step_failed", step=name, error=str(e))
                result = {'success': False, 'error': str(e)}
            result['seconds'] = round(time.time() - started, 1)
            self.results[name] = result
            logger.info("acceptance_step", step=number, name=name, success=result['success'],
                        seconds=result['seconds'])
        self._print_final_summary()
        return all(r['success'] for r in self.results.values())

    def _step_combinatorics(self):
        """Layer cardinalities and the weight sandwich, exhaustive for d <= 3, n <= 10"""
        limits = {1: 10, 2: 10, 3: 10}
        cardinality = check_cardinality(limits)
        sandwich = check_weight_sandwich(limits)
        return {'success': cardinality.passed and sandwich.passed,
                'cardinality_instances': cardinality.instances,
                'sandwich_worst_margin': sandwich.worst_margin}

    def _step_stechkin(self):
        result = check_stechkin(1000, seed=1)
        return {'success': result.passed, 'instances': result.instances,
                'worst_margin': result.worst_margin}

    def _step_norm_one_embedding(self):
        """500 random polynomials; ratio <= 1 + 1e-9 on every trial, equality at f = 1"""
        report = embedding_check('B-to-A-norm1', trials=100, scales=[2, 3, 4, 5, 6], r=1.0, p=2.0,
                                 theta=1.0, d=2, seed=0, jobs=self.jobs)
        return {'success': report.passed, 'violations': report.violations,
                'max_ratio': max(report.max_ratio.values()), 'constant_ratio': report.constant_ratio}

    def _step_vallee_poussin(self):
        """Reproduction on the cube, multipliers in [0, 1], L_inf ratio <= e on random and sign-of-kernel inputs"""
        d, M = 2, 4
        rng = np.random.default_rng(4)
        worst_reproduction = 0.0
        worst_ratio = 0.0
        for _ in range(200):
            inside = random_sparse_poly(d, 20, M, rng)
            reproduced = vallee_poussin(inside, M)
            worst_reproduction = max(worst_reproduction,
                                     float(np.max(np.abs(reproduced.coefficients - inside.coefficients))))

            f = random_sparse_poly(d, 30, (2 * d + 1) * M, rng)
            grid = default_grid(f, math.inf)
            ratio = (grid_lq_norm(evaluate_grid(vallee_poussin(f, M), grid), math.inf)
                     / grid_lq_norm(evaluate_grid(f, grid), math.inf))
            worst_ratio = max(worst_ratio, ratio)

        stress = vallee_poussin_sign_poly(d, M)
        stress_grid = default_grid(stress, math.inf)
        stress_ratio = (grid_lq_norm(evaluate_grid(vallee_poussin(stress, M), stress_grid), math.inf)
                        / grid_lq_norm(evaluate_grid(stress, stress_grid), math.inf))

        axis = np.arange(-(2 * d + 2) * M, (2 * d + 2) * M + 1)
        multipliers = vallee_poussin_multiplier(np.stack(np.meshgrid(axis, axis), axis=-1).reshape(-1, 2), M)
        in_range = bool(multipliers.min() >= 0.0 and multipliers.max() <= 1.0)
        return {'success': (worst_reproduction <= 1e-10 and in_range and worst_ratio <= math.e
                            and stress_ratio <= math.e),
                'worst_reproduction': worst_reproduction, 'worst_linf_ratio': worst_ratio,
                'sign_poly_linf_ratio': stress_ratio}

    def _step_maurey_rate(self):
        """Median L_2 error over 50 trials <= 2 m^(-1/2) for a unit-A polynomial on 4096 terms"""
        rng = np.random.default_rng(5)
        f = random_sparse_poly(2, 4096, 64, rng)
        f = f.scale(1.0 / f.coefficient_norm(1.0))
        medians = {}
        for m in [16, 32, 64, 128, 256, 512]:
            errors = [maurey_mterm(f, m, q=2.0, trials=1, seed=seed).error for seed in range(50)]
            medians[m] = float(np.median(errors))
        ok = all(medians[m] <= 2.0 * m ** -0.5 for m in medians)
        return {'success': ok, **{f"median_m{m}": v for m, v in medians.items()}}

    def _step_sigma_two_sided(self):
        """Upper and lower sweeps for d = 2, r = 1, theta = 1, q = 2 with b fixed at 1"""
        params = SweepParams(d=2, r=1.0, theta=1.0, q=2.0)
        m_list = DYADIC_M[:6] if self.quick else DYADIC_M
        upper = rate_sweep('sigma-upper', params, m_list, [0], jobs=self.jobs)
        lower = rate_sweep('sigma-lower', params, m_list, [0], jobs=self.jobs)
        upper_fit = fit_rate(upper, b_fixed=1.0)
        lower_fit = fit_rate(lower, b_fixed=1.0)
        ratios = [u['error'] / l['error'] for u, l in zip(upper.rows, lower.rows)]
        ok = (abs(upper_fit.a - 1.5) <= 0.15 and abs(lower_fit.a - 1.5) <= 0.15
              and max(ratios) <= 8.0)
        return {'success': ok, 'upper_a': upper_fit.a, 'lower_a': lower_fit.a,
                'max_upper_lower_ratio': max(ratios)}

    def _step_a2a(self):
        """Unit norm of the A2A fooling polynomial and its tail exponent r + 1/theta - 1/eta"""
        params = SweepParams(d=2, r=1.0, theta=1.0, eta=2.0)
        m_list = DYADIC_M[:6] if self.quick else DYADIC_M
        norms = [norm(fooling_a2a(m, 2, 1.0, 1.0), WienerWeighted(1.0, 1.0)) for m in m_list]
        table = rate_sweep('a2a', params, m_list, [0], jobs=self.jobs)
        fit = fit_rate(table, b_fixed=1.0)
        worst_norm = max(abs(v - 1.0) for v in norms)
        return {'success': worst_norm <= 1e-12 and abs(fit.a - 1.5) <= 0.1,
                'a': fit.a, 'worst_norm_deviation': worst_norm}

    def _step_recovery(self):
        """d = 2, n = 32, M = 64, q = 2, C = 2 over 20 seeds"""
        n, M, d = 32, 64, 2
        seeds = list(range(10 if self.quick else 20))
        config = RecoveryConfig(n=n, M=M, d=d, q=2.0, C=2.0)
        fooling = fooling_wiener(fooling_layer_for(n, d), d, 1.0, 1.0)
        fooling_runs = recovery_trials(fooling, config, seeds, jobs=self.jobs)
        good_constants = sum(1 for r in fooling_runs if r.C_emp <= 10.0)

        exact = sum(run_parallel(_exact_recovery, [(config, seed) for seed in seeds], self.jobs))
        needed = math.ceil(0.9 * len(seeds))
        return {'success': good_constants >= needed and exact >= needed,
                'samples': config.sample_count, 'C_emp_ok': good_constants, 'exact': exact,
                'runs': len(seeds)}

    def _step_gap(self):
        """Ratio of nonlinear to linear error decays like m^(-1/2), within 0.2"""
        params = SweepParams(d=2, r=1.0, theta=1.0)
        m_list = [2 ** k for k in range(8, 12 if self.quick else 14)]
        gap = sampling_gap_experiment(params, m_list, [0, 1, 2], jobs=self.jobs)
        fit = fit_rate(ratio_table(gap), b_fixed=0.0)
        return {'success': abs(fit.a - 0.5) <= 0.2, 'ratio_exponent': fit.a}

    def _step_lemmas(self):
        geo = check_geo_sum()
        holder = check_counting_holder(1000, seed=0)
        return {'success': geo.passed and holder.passed,
                'geo_sum_spread': geo.details['worst_spread'], 'holder_worst_margin': holder.worst_margin}

    def _print_final_summary(self):
        """Print final acceptance summary"""
        duration = datetime.now() - self.start_time
        print("\n" + "=" * 70)
        print("ACCEPTANCE SUITE - FINAL SUMMARY")
        print("=" * 70)
        print(f"Total duration: {duration}")
        for name, result in self.results.items():
            status = "✓ PASS" if result['success'] else "✗ FAIL"
            print(f"{status}  {name} ({result['seconds']} s)")
            if 'error' in result:
                print(f"        error: {result['error']}")
        print("=" * 70)

    def write_report(self, path):
        sections = {name: {k: v for k, v in result.items()} for name, result in self.results.items()}
        return write_metadata(path, sections)


def main():
    """Main entry point for the acceptance suite"""
    parser = argparse.ArgumentParser(
        description="Run the desk-scale acceptance criteria of the hypcross toolkit",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python scripts/run_acceptance_suite.py                 # All criteria
  python scripts/run_acceptance_suite.py --only 1 2 10   # Fast combinatorial checks
  python scripts/run_acceptance_suite.py --quick --jobs 4
        """
    )
    parser.add_argument('--only', type=int, nargs='*', help='Criterion numbers to run')
    parser.add_argument('--quick', action='store_true', help='Shorter sweeps and fewer seeds')
    parser.add_argument('--jobs', type=int, default=None, help='Worker processes (default: HYPX_JOBS)')
    parser.add_argument('--report', type=str, default=None, help='Write results as a key = value file')
    args = parser.parse_args()

    try:
        config = get_config()
        setup_logging(config)
        suite = AcceptanceSuite(config, jobs=args.jobs or config.JOBS, quick=args.quick)
        passed = suite.run_suite(only=set(args.only) if args.only else None)
        if args.report:
            suite.write_report(args.report)
        else:
            for name, result in suite.results.items():
                print(f"[{name}]")
                print(format_record(result))
        return 0 if passed else 1

    except KeyboardInterrupt:
        print("\n⚠️ Acceptance suite interrupted by user")
        return 130
    except Exception as e:
        logger.error("acceptance_failed", error=str(e))
        return 1


if __name__ == "__main__":
    sys.exit(main())
