#!/usr/bin/env python3
"""
hypcross - Hyperbolic Cross Sparse Approximation Toolkit - Main Entry Point
"""

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from rich.console import Console
from rich.table import Table

from config import Config
from src.services.embedding_checks import (DEFAULT_EMBEDDING_PARAMS, EMBEDDING_TAGS,
                                           embedding_check, verify_auxiliary_lemmas)
from src.services.function_spaces import SPACE_NAMES, Lebesgue, space_from_name, norm
from src.services.hyperbolic_index import enumerate_layer, format_index_set, layer_cardinality
from src.services.mterm_approximation import (fooling_a2a, fooling_besov, fooling_wiener,
                                              greedy_mterm, layered_mterm, layered_witness,
                                              maurey_mterm)
from src.services.rate_experiments import (TASKS, SweepParams, fit_rate, predicted_rate,
                                           rate_kind_for_task, rate_sweep, ratio_table,
                                           sampling_gap_experiment)
from src.services.result_writer import (format_record, read_metadata, sidecar_path, write_frame,
                                        write_metadata)
from src.services.sampling_recovery import (SOLVERS, RecoveryConfig, canonical_solver, cube_size_for,
                                            recovery_trials)
from src.services.trig_poly import (SparseTrigPoly, random_sparse_poly, read_coefficients,
                                    write_coefficients)
from src.utils.errors import FitError, HypcrossError, ParameterError, require
from src.utils.logger import get_logger, setup_logging

__version__ = '0.1.0'

console = Console()
logger = get_logger(__name__)

FAMILIES = ('one', 'fooling-wiener', 'fooling-besov', 'fooling-a2a', 'layered-witness', 'random-sparse')

# Parameters never replayed from a sidecar
_NOT_REPLAYED = {'command', 'config', 'out', 'jobs', 'p_given', 'theta_given'}

# Settings written to the [config] section and restored on replay
_REPLAYED_SETTINGS = ('enum_cap', 'grid_point_cap', 'oversampling_lq', 'oversampling_linf',
                      'maurey_trials', 'budget_constant', 'omp_tol', 'cond_limit', 'lasso_iters',
                      'lasso_tol')


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def parse_m_list(text: str) -> List[int]:
    """`a..b` is every power of two in [a, b]; otherwise a comma separated list"""
    text = text.strip()
    if '..' in text:
        lo, hi = (int(x) for x in text.split('..', 1))
        require(1 <= lo <= hi, "1 <= a <= b in a..b", a=lo, b=hi)
        values = [2 ** k for k in range(hi.bit_length()) if lo <= 2 ** k <= hi]
        require(len(values) > 0, "a..b contains a power of two", a=lo, b=hi)
        return values
    return [int(x) for x in text.split(',') if x.strip()]


def _seed_list(config: Config, args) -> List[int]:
    master = args.seed if args.seed is not None else config.DEFAULT_SEED
    return list(range(master, master + args.seeds))


def _master_seed(config: Config, args) -> int:
    return args.seed if args.seed is not None else config.DEFAULT_SEED


def _require_n(args) -> int:
    if args.n is None:
        raise ParameterError(f"--n is required for '{args.command}'", inequality="n given")
    return args.n


def build_input(config: Config, args) -> SparseTrigPoly:
    """Polynomial from --coeffs, or the built-in --family"""
    if args.coeffs:
        return read_coefficients(args.coeffs)
    family = args.family or 'one'
    d, r, theta = args.d, args.r, args.theta
    if family == 'one':
        return SparseTrigPoly.constant(d)
    if family == 'fooling-wiener':
        return fooling_wiener(_require_n(args), d, r, theta)
    if family == 'fooling-besov':
        return fooling_besov(_require_n(args), d, r, args.p, theta)
    if family == 'fooling-a2a':
        m = parse_m_list(args.m)[0] if args.m else 2 ** _require_n(args)
        return fooling_a2a(m, d, r, theta)
    if family == 'layered-witness':
        return layered_witness(_require_n(args), d, r, theta)
    if family == 'random-sparse':
        support = _require_n(args)
        M = args.M if args.M is not None else support
        return random_sparse_poly(d, support, M, np.random.default_rng(_master_seed(config, args)))
    raise ParameterError(f"unknown family {family!r}", inequality=f"family in {FAMILIES}")


def _sweep_params(config: Config, args) -> SweepParams:
    return SweepParams(d=args.d, r=args.r, theta=args.theta, q=args.q, eta=args.eta, p=args.p,
                       C=args.C if args.C is not None else config.BUDGET_CONSTANT,
                       trials=args.trials, solver=args.solver)


def _replayable(config: Config, args) -> Dict[str, Any]:
    params = {key: value for key, value in sorted(vars(args).items())
              if key not in _NOT_REPLAYED and value is not None}
    params['seed'] = _master_seed(config, args)
    return params


def _write_sidecar(path: Path, config: Config, args, extra: Optional[Dict[str, Dict[str, Any]]] = None) -> Path:
    """Sidecar with everything needed to replay the run through --config"""
    summary = config.get_config_summary()
    sections = {
        'run': {'command': args.command, 'version': __version__,
                'seed': _master_seed(config, args)},
        'params': _replayable(config, args),
        'config': {key: summary[key] for key in _REPLAYED_SETTINGS},
    }
    sections.update(extra or {})
    return write_metadata(sidecar_path(path), sections)


def _output_path(config: Config, args, default_name: str) -> Path:
    return Path(args.out) if args.out else Path(config.OUTPUT_PATH) / default_name


def show_layers(config: Config, args) -> bool:
    """Print the frequencies of layer H_n"""
    n = _require_n(args)
    layer = enumerate_layer(n, args.d)
    text = format_index_set(layer)
    if args.out:
        path = Path(args.out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding='utf-8')
        console.print(f"✓ Wrote {len(layer)} indices to {path}")
    else:
        sys.stdout.write(text)
    sys.stdout.write(f"count = {layer_cardinality(n, args.d)}\n")
    return True


def compute_norm(config: Config, args) -> bool:
    f = build_input(config, args)
    space = space_from_name(args.space or 'wiener', r=args.r, p=args.p, theta=args.theta,
                            q=args.q, eta=args.eta)
    value = norm(f, space)
    sys.stdout.write(format_record({'space': space.describe(), 'support': f.support_size,
                                    'norm': value}))
    return True


def run_mterm(config: Config, args) -> bool:
    """Greedy, empirical-mean or layered m-term approximation of the input"""
    f = build_input(config, args)
    require(args.m is not None, "m given")
    m = parse_m_list(args.m)[-1]
    seed = _master_seed(config, args)
    method = args.method or 'greedy'
    if method == 'greedy':
        target = space_from_name(args.space, r=args.r, p=args.p, theta=args.theta, q=args.q,
                                 eta=args.eta) if args.space else Lebesgue(2.0)
        result = greedy_mterm(f, m, target)
    elif method == 'maurey':
        result = maurey_mterm(f, m, q=args.q, trials=args.trials, seed=seed, jobs=args.jobs)
    elif method == 'layered':
        result = layered_mterm(f, m, q=args.q, r=args.r, theta=args.theta, seed=seed,
                               trials=args.trials, jobs=args.jobs)
    else:
        raise ParameterError(f"unknown method {method!r}", inequality="method in {greedy, maurey, layered}")

    sys.stdout.write(format_record(result.to_record()))
    if args.out:
        path = write_coefficients(result.approximant, args.out)
        _write_sidecar(path, config, args, {'result': result.to_record()})
        console.print(f"✓ Approximant written to {path}")
    return True


def _print_fit(title: str, fit, predicted) -> None:
    table = Table(title=title)
    for column in ('a', 'b', 'c', 'residual_rms', 'rows', 'predicted a', 'predicted b'):
        table.add_column(column, justify='right')
    table.add_row(f"{fit.a:.4f}", f"{fit.b:.4f}" + (" (fixed)" if fit.b_fixed else ""),
                  f"{fit.c:.4g}", f"{fit.residual_rms:.3g}", str(fit.rows_used),
                  f"{predicted[0]:.4f}", f"{predicted[1]:.4f}")
    console.print(table)


def run_rates(config: Config, args) -> bool:
    """Rate sweep to CSV plus a fit with the log exponent fixed at its predicted value"""
    require(args.task in TASKS, f"task in {TASKS}", task=args.task)
    require(args.m is not None, "m given")
    params = _sweep_params(config, args)
    table = rate_sweep(args.task, params, parse_m_list(args.m), _seed_list(config, args), jobs=args.jobs)
    path = table.write_csv(_output_path(config, args, f"rates_{args.task}.csv"))

    predicted = predicted_rate(rate_kind_for_task(args.task, params), params)
    extra = {'predicted': {'a': predicted[0], 'b': predicted[1]}}
    try:
        fit = fit_rate(table, b_fixed=predicted[1])
        extra['fit'] = fit.to_record()
        _print_fit(f"{args.task}: log err = log c - a log m + b log log* m", fit, predicted)
    except FitError as e:
        logger.warning("fit_skipped", reason=e.message)
        console.print(f"✗ Fit skipped: {e.message}")
    _write_sidecar(path, config, args, extra)
    console.print(f"✓ {len(table)} rows written to {path}")
    return True


def run_recover(config: Config, args) -> bool:
    """Monte-Carlo recovery runs of one input, one per seed"""
    n = _require_n(args)
    M = args.M if args.M is not None else cube_size_for(n, args.r, args.theta)
    if args.family is None and not args.coeffs:
        args.family = 'random-sparse'
    if args.M is None:
        args.M = M
    f = build_input(config, args)
    recovery = RecoveryConfig(n=n, M=M, d=f.dim, q=args.q,
                              C=args.C if args.C is not None else config.BUDGET_CONSTANT,
                              solver=args.solver, lam=args.lam, max_iter=args.iters, tol=args.tol)
    reports = recovery_trials(f, recovery, _seed_list(config, args), jobs=args.jobs)
    records = [r.to_record(include_wall_time=config.RECORD_WALL_TIME) for r in reports]

    table = Table(title=f"recovery: n={n}, M={M}, m={recovery.sample_count}, solver={args.solver}")
    for column in ('seed', 'error', 'sigma_n_A', 'E_surrogate', 'C_emp'):
        table.add_column(column, justify='right')
    for record in records:
        table.add_row(str(record['seed']), f"{record['error']:.3e}", f"{record['sigma_n_A']:.3e}",
                      f"{record['E_surrogate']:.3e}", f"{record['C_emp']:.3g}")
    console.print(table)

    if args.out:
        import pandas as pd
        path = write_frame(pd.DataFrame(records), args.out)
        _write_sidecar(path, config, args)
        console.print(f"✓ {len(records)} runs written to {path}")
    return True


def run_embeddings(config: Config, args) -> bool:
    tags = EMBEDDING_TAGS if (args.tag or 'all') == 'all' else (args.tag,)
    n_top = args.n if args.n is not None else 6
    scales = list(range(1, n_top + 1))
    trials = args.trials or 50
    table = Table(title=f"embeddings: {trials} polynomials per scale, n_max 1..{n_top}")
    for column in ('tag', 'source', 'target', 'max ratio', 'slope', 'violations', 'passed'):
        table.add_column(column)
    reports = []
    for tag in tags:
        default_p, default_theta = DEFAULT_EMBEDDING_PARAMS[tag]
        report = embedding_check(tag, trials, scales, r=args.r,
                                 p=args.p if len(tags) == 1 and args.p_given else default_p,
                                 theta=args.theta if len(tags) == 1 and args.theta_given else default_theta,
                                 d=args.d, seed=_master_seed(config, args), jobs=args.jobs)
        reports.append(report)
        table.add_row(tag, report.source, report.target, f"{max(report.max_ratio.values()):.6g}",
                      f"{report.slope:.4f}", str(report.violations), _mark(report.passed))
    console.print(table)
    if args.out:
        import pandas as pd
        path = write_frame(pd.DataFrame([r.to_record() for r in reports]), args.out)
        _write_sidecar(path, config, args)
    return all(r.passed for r in reports)


def run_lemmas(config: Config, args) -> bool:
    report = verify_auxiliary_lemmas(random_instances=args.trials or 1000,
                                     seed=_master_seed(config, args))
    table = Table(title="auxiliary inequalities")
    for column in ('suite', 'instances', 'worst margin', 'passed'):
        table.add_column(column)
    for result in report.results.values():
        table.add_row(result.name, str(result.instances), f"{result.worst_margin:.3g}",
                      _mark(result.passed))
    console.print(table)
    if args.out:
        import pandas as pd
        path = write_frame(pd.DataFrame(report.to_records()), args.out)
        _write_sidecar(path, config, args)
    return report.passed


def run_gap(config: Config, args) -> bool:
    """Paired linear / nonlinear sweep; writes both arms and reports the ratio fit"""
    require(args.m is not None, "m given")
    params = _sweep_params(config, args)
    gap = sampling_gap_experiment(params, parse_m_list(args.m), _seed_list(config, args), jobs=args.jobs)
    base = _output_path(config, args, "gap.csv")
    linear_path = gap.linear.write_csv(base.with_name(base.stem + '_linear.csv'))
    nonlinear_path = gap.nonlinear.write_csv(base.with_name(base.stem + '_nonlinear.csv'))

    extra: Dict[str, Dict[str, Any]] = {'witness_layers': {str(m): j for m, j in gap.witness_layers.items()}}
    try:
        fit = fit_rate(ratio_table(gap), b_fixed=0.0)
        extra['ratio_fit'] = fit.to_record()
        _print_fit("nonlinear / linear error ratio", fit, (0.5, 0.0))
    except FitError as e:
        console.print(f"✗ Ratio fit skipped: {e.message}")
    _write_sidecar(nonlinear_path, config, args, extra)
    console.print(f"✓ Linear arm: {linear_path}")
    console.print(f"✓ Nonlinear arm: {nonlinear_path}")
    return True


def show_config(config: Config, args) -> bool:
    """Show current configuration"""
    table = Table(title="hypcross configuration")
    table.add_column("setting")
    table.add_column("value")
    for key, value in config.get_config_summary().items():
        table.add_row(key, str(value))
    console.print(table)
    return True


COMMANDS = {
    'layers': show_layers,
    'norm': compute_norm,
    'mterm': run_mterm,
    'rates': run_rates,
    'recover': run_recover,
    'embeddings': run_embeddings,
    'lemmas': run_lemmas,
    'gap': run_gap,
    'config': show_config,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='Replay a metadata sidecar; flags on the command line win')
    common.add_argument('--d', type=int, default=2, help='Dimension (default: 2)')
    common.add_argument('--n', type=int, help='Layer index, sparsity or largest scale')
    common.add_argument('--m', help="Term/sample counts: 'a..b' (powers of two) or a comma list")
    common.add_argument('--r', type=float, default=1.0, help='Smoothness (default: 1)')
    common.add_argument('--theta', type=float, default=1.0, help='Summability theta (default: 1)')
    common.add_argument('--p', type=float, default=2.0, help='Besov / Sobolev integrability (default: 2)')
    common.add_argument('--q', type=float, default=2.0, help='Error norm L_q (default: 2)')
    common.add_argument('--eta', type=float, default=2.0, help='Target Wiener exponent (default: 2)')
    common.add_argument('--M', type=int, help='Cube half-width')
    common.add_argument('--C', type=float, help='Sample budget constant (default: HYPX_BUDGET_CONSTANT)')
    common.add_argument('--seed', type=int, help='Master seed (default: HYPX_DEFAULT_SEED)')
    common.add_argument('--seeds', type=int, default=1, help='Number of consecutive seeds (default: 1)')
    common.add_argument('--trials', type=int, help='Trials (Maurey R, random polynomials, lemma instances)')
    common.add_argument('--jobs', type=int, help='Worker processes (default: HYPX_JOBS)')
    common.add_argument('--out', help='Output file')
    common.add_argument('--solver', default='omp', type=canonical_solver, choices=list(SOLVERS),
                        help='Recovery decoder (sqrt-lasso is read as sqrt_lasso)')
    common.add_argument('--lambda', dest='lam', type=float, help='Square-root Lasso lambda')
    common.add_argument('--iters', type=int, help='Square-root Lasso iteration cap')
    common.add_argument('--tol', type=float, help='Solver tolerance')
    common.add_argument('--cap', type=int, help='Enumeration cap (overrides HYPX_ENUM_CAP)')
    common.add_argument('--family', choices=FAMILIES, help='Built-in input when --coeffs is absent')
    common.add_argument('--coeffs', help='Coefficient file input')
    common.add_argument('--space', choices=SPACE_NAMES, help='Function space for norm / greedy target')
    common.add_argument('--method', choices=['greedy', 'maurey', 'layered'], help='m-term method')
    common.add_argument('--task', choices=TASKS, help='Rate sweep task')
    common.add_argument('--tag', choices=EMBEDDING_TAGS + ('all',), help='Embedding to check')

    parser = argparse.ArgumentParser(
        description='hypcross - hyperbolic cross sparse approximation toolkit',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py layers --d 2 --n 3                               # 32 indices of H_3
  python main.py norm --space wiener --r 1 --theta 1              # f = 1 has norm 1
  python main.py mterm --family fooling-wiener --n 6 --m 64 --method layered
  python main.py rates --task sigma-lower --m 64..16384           # 9 dyadic rows
  python main.py recover --n 8 --M 8 --seeds 5 --out runs.csv
  python main.py embeddings --tag B-to-A-norm1 --trials 100
  python main.py lemmas
  python main.py gap --m 256..4096 --seeds 3
  python main.py rates --config data/results/rates_sigma-lower.meta.ini --out replay.csv
        """
    )
    subparsers = parser.add_subparsers(dest='command', help='Available commands')
    subparsers.add_parser('layers', parents=[common], help='List the frequencies of a layer H_n')
    subparsers.add_parser('norm', parents=[common], help='Norm of a polynomial in a function space')
    subparsers.add_parser('mterm', parents=[common], help='m-term approximation of a polynomial')
    subparsers.add_parser('rates', parents=[common], help='Rate sweep with fit')
    subparsers.add_parser('recover', parents=[common], help='Sampling recovery runs')
    subparsers.add_parser('embeddings', parents=[common], help='Numerical embedding checks')
    subparsers.add_parser('lemmas', parents=[common], help='Auxiliary inequality suites')
    subparsers.add_parser('gap', parents=[common], help='Linear versus nonlinear sampling')
    subparsers.add_parser('config', parents=[common], help='Show current configuration')
    return parser


def expand_sidecar(argv: List[str]) -> Tuple[List[str], Dict[str, str]]:
    """
    Splice the [params] of a --config sidecar in front of the explicit flags.

    argparse keeps the last occurrence of a flag, so explicit flags win.

    Returns:
        (argv, settings) where settings maps HYPX_* variables to the values
        recorded in the [config] section
    """
    if '--config' not in argv:
        return argv, {}
    position = argv.index('--config')
    require(position + 1 < len(argv), "--config FILE")
    path = argv[position + 1]
    rest = argv[:position] + argv[position + 2:]
    metadata = read_metadata(path)
    replayed: List[str] = []
    for key, value in metadata.get('params', {}).items():
        if key in _NOT_REPLAYED:
            continue
        flag = '--lambda' if key == 'lam' else f"--{key}"
        replayed.extend([flag, value])

    command = metadata.get('run', {}).get('command')
    if rest and rest[0] in COMMANDS:
        command, rest = rest[0], rest[1:]
    require(command in COMMANDS, "sidecar names a command", command=command)
    recorded = metadata.get('config', {})
    settings = {f"HYPX_{key.upper()}": recorded[key] for key in _REPLAYED_SETTINGS if key in recorded}
    return [command] + replayed + rest, settings


def _given(argv: List[str], flag: str) -> bool:
    return flag in argv


def main(argv: Optional[List[str]] = None) -> int:
    """Main function with command line argument parsing"""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()

    try:
        argv, settings = expand_sidecar(argv)
    except HypcrossError as e:
        sys.stderr.write(json.dumps(e.to_record(), default=str) + "\n")
        return 2
    except OSError as e:
        sys.stderr.write(json.dumps({'error': 'io', 'message': str(e)}) + "\n")
        return 2

    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 1
    args.p_given = _given(argv, '--p')
    args.theta_given = _given(argv, '--theta')

    # Load configuration
    os.environ.update(settings)
    if args.cap is not None:
        os.environ['HYPX_ENUM_CAP'] = str(args.cap)
    try:
        config = Config()
        setup_logging(config)
        if not config.validate_config():
            console.print("✗ Configuration validation failed. Please check your .env file.")
            return 1
    except Exception as e:
        console.print(f"✗ Configuration error: {str(e)}")
        return 1
    if args.jobs is None:
        args.jobs = config.JOBS

    # Handle commands
    try:
        success = COMMANDS[args.command](config, args)
        return 0 if success else 1
    except HypcrossError as e:
        logger.error("command_failed", command=args.command, error=e.kind, message=e.message)
        sys.stderr.write(json.dumps(e.to_record(), default=str) + "\n")
        return 2
    except OSError as e:
        sys.stderr.write(json.dumps({'error': 'io', 'message': str(e)}) + "\n")
        return 2
    except KeyboardInterrupt:
        console.print("\nOperation cancelled by user")
        return 130
    except Exception as e:
        logger.exception("unexpected_failure", command=args.command)
        console.print(f"✗ Error: {str(e)}")
        record = {'error': 'internal', 'type': type(e).__name__, 'message': str(e)}
        sys.stderr.write(json.dumps(record) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
