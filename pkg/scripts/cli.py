"""
CLI - command-line surface: estimate, solve, sweep, simulate and oracle
"""
import argparse
import logging
import os
from dataclasses import replace

from core_model import summary_functionals
from data_io import INTERFERENCE_FILE, INTERVENTION_FILE, OUTCOME_FILE, load_dataset, save_dataset
from errors import EXIT_INFEASIBLE, EXIT_OK, FairBniError, InfeasibleError
from estimation import fit_outcome_alearning, fit_propensity, total_effects
from fair_solver import (FairSolveReport, Method, Rounding, SolveConfig, SolveMode, build_grid,
                         evaluate_factual, min_welfare_reference, solve_fair, solve_optimal, solve_welfare_max)
from oracle import MAX_BINARY_UNITS, oracle_report
from report_manager import ReportManager, RunManifest
from settings import load_settings
from simulation import (METRICS, EffectRegime, SimConfig, SubgroupRule, calibrate_intercepts, generate_dataset,
                        run_monte_carlo)

logger = logging.getLogger(__name__)

MODE_FLAGS = {'clean': SolveMode.CLEAN_SLATE, 'augment': SolveMode.AUGMENTATION}
CURVE_COLUMNS = ('x', 'method', 'status') + METRICS


def positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got '{text}'")
    if not value > 0 or value != value or value == float('inf'):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got '{text}'")
    return value


def nonnegative_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got '{text}'")
    if not value >= 0 or value == float('inf'):
        raise argparse.ArgumentTypeError(f"expected a nonnegative finite number, got '{text}'")
    return value


def unit_interval(text):
    value = nonnegative_float(text)
    if value > 1:
        raise argparse.ArgumentTypeError(f"expected a value in [0, 1], got '{text}'")
    return value


def positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got '{text}'")
    return value


def float_list(text):
    """Comma-separated positive numbers"""
    values = [positive_float(part.strip()) for part in text.split(',') if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def cap_list(text):
    values = [nonnegative_float(part.strip()) for part in text.split(',') if part.strip()]
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def method_list(text):
    methods = [part.strip() for part in text.split(',') if part.strip()]
    unknown = [method for method in methods if method not in Method.ALL]
    if unknown or not methods:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {', '.join(Method.ALL)}")
    return methods


def _add_data_arguments(parser):
    group = parser.add_argument_group("data")
    group.add_argument('--data', help=f"directory holding {OUTCOME_FILE}, {INTERVENTION_FILE}, {INTERFERENCE_FILE}")
    group.add_argument('--outcomes', help="outcome units CSV")
    group.add_argument('--interventions', help="intervention units CSV")
    group.add_argument('--interference', help="interference map CSV (dense or triplets)")
    group.add_argument('--intercept-only-propensity', action='store_true',
                       help="fit the propensity model without covariates")
    group.add_argument('--subgroup-covariate',
                       help="redefine subgroup 1 as outcome units above a quantile of this covariate")
    group.add_argument('--subgroup-quantile', type=unit_interval, help="threshold quantile (default 0.75)")


def _add_solver_arguments(parser):
    group = parser.add_argument_group("solver")
    group.add_argument('--mode', choices=sorted(MODE_FLAGS), help="clean slate or augmentation of the factual policy")
    group.add_argument('--absolute-budget', action='store_true', help="budgets are currency, not fractions")
    group.add_argument('--budget-new-only', action='store_true', default=None,
                       help="budget excludes the cost of factually treated units")
    group.add_argument('--min-welfare-ref', type=positive_float,
                       help="constrain group-0 welfare to welfare maximization's at this reference budget")
    group.add_argument('--K', type=positive_int, help="number of gridpoints")
    group.add_argument('--lambda', dest='lam', type=nonnegative_float, help="slack lambda")
    group.add_argument('--frontier-unconstrained', action='store_true', default=None,
                       help="compute gridpoint optima without the budget")
    group.add_argument('--round', action='store_true', help="add a rounded, budget-feasible binary policy")
    group.add_argument('--workers', type=positive_int, help="threads for independent LP solves")


def build_parser():
    """
    Argument parser for every command

    Returns:
        argparse.ArgumentParser: Parser
    """
    parser = argparse.ArgumentParser(
        prog="fairbni",
        description="Fair, Pareto-optimal treatment allocation under bipartite network interference",
    )
    parser.add_argument('--config', help="settings file (.json or .toml) merged over the defaults")
    parser.add_argument('--out', help="output directory (default from settings)")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help="debug logging")
    verbosity.add_argument('-q', '--quiet', action='store_true', help="warnings only")
    commands = parser.add_subparsers(dest='command', required=True)

    estimate = commands.add_parser('estimate', help="fit models and emit total effects")
    _add_data_arguments(estimate)

    solve = commands.add_parser('solve', help="learn a policy")
    _add_data_arguments(solve)
    _add_solver_arguments(solve)
    solve.add_argument('--method', choices=Method.ALL, default=Method.FAIR)
    solve.add_argument('--budget', type=positive_float, default=1.0)
    solve.add_argument('--nu', type=unit_interval, help="welfare-max weight on group 0 (default p0)")
    solve.add_argument('--disparity-cap', type=nonnegative_float, help="welfare-max disparity cap")

    sweep = commands.add_parser('sweep', help="learn policies across budgets or disparity caps")
    _add_data_arguments(sweep)
    _add_solver_arguments(sweep)
    sweep.add_argument('--budgets', type=float_list, help="comma-separated budgets")
    sweep.add_argument('--caps', type=cap_list, help="comma-separated disparity caps for welfare maximization")
    sweep.add_argument('--budget', type=positive_float, default=1.0, help="budget used with --caps")
    sweep.add_argument('--methods', type=method_list, help="comma-separated methods")

    simulate = commands.add_parser('simulate', help="Monte Carlo study on synthetic data")
    _add_solver_arguments(simulate)
    simulate.add_argument('--reps', type=positive_int)
    simulate.add_argument('--seed', type=int)
    simulate.add_argument('--n', type=positive_int)
    simulate.add_argument('--J', type=positive_int)
    simulate.add_argument('--snr', type=positive_float)
    simulate.add_argument('--regime', choices=EffectRegime.ALL)
    simulate.add_argument('--subgroups', choices=SubgroupRule.ALL)
    simulate.add_argument('--budgets', type=float_list)
    simulate.add_argument('--caps', type=cap_list)
    simulate.add_argument('--methods', type=method_list)
    simulate.add_argument('--oracle', action='store_true', help="learn from the true effects")
    simulate.add_argument('--regret', action='store_true', help="report the gap to fair policies on true effects")
    simulate.add_argument('--no-calibrate', action='store_true')
    simulate.add_argument('--emit-dataset', help="also write one synthetic dataset to this directory")

    oracle = commands.add_parser('oracle', help="brute-force checks on a small dataset")
    _add_data_arguments(oracle)
    _add_solver_arguments(oracle)
    oracle.add_argument('--budget', type=positive_float, default=1.0)

    return parser


def _data_paths(args):
    if args.data:
        return (os.path.join(args.data, OUTCOME_FILE), os.path.join(args.data, INTERVENTION_FILE),
                os.path.join(args.data, INTERFERENCE_FILE))
    paths = (args.outcomes, args.interventions, args.interference)
    if not all(paths):
        raise argparse.ArgumentTypeError("pass --data or all of --outcomes, --interventions, --interference")
    return paths


def _load(args, settings, paths):
    """Load the dataset and apply a quantile subgroup definition when one is configured"""
    dataset = load_dataset(*paths)
    section = settings.get('estimation', {})
    covariate = args.subgroup_covariate or section.get('subgroup_covariate')
    if covariate:
        quantile = args.subgroup_quantile
        if quantile is None:
            quantile = section.get('subgroup_quantile', 0.75)
        dataset = dataset.with_quantile_subgroups(covariate, quantile)
    return dataset


def _estimate(args, settings, dataset):
    section = settings.get('estimation', {})
    propensity = fit_propensity(
        dataset,
        intercept_only=args.intercept_only_propensity or section.get('intercept_only_propensity', False),
        tolerance=section.get('tolerance', 1e-8),
        max_iterations=section.get('max_iterations', 100),
        condition_limit=section.get('condition_limit', 1e12),
    )
    outcome = fit_outcome_alearning(dataset, propensity, condition_limit=section.get('condition_limit', 1e12))
    return propensity, outcome, total_effects(dataset, outcome)


def _solve_config(args, settings, dataset=None, effects=None, budget=None):
    overrides = {
        'budget': budget if budget is not None else getattr(args, 'budget', None),
        'budget_is_fraction': not args.absolute_budget,
        'mode': MODE_FLAGS[args.mode] if args.mode else None,
        'K': args.K,
        'lam': args.lam,
        'frontier_unconstrained': args.frontier_unconstrained,
        'budget_new_only': args.budget_new_only,
        'rounding': Rounding.THRESHOLD_REPAIR if args.round else None,
        'workers': args.workers,
        'disparity_cap': getattr(args, 'disparity_cap', None),
    }
    config = SolveConfig.from_settings(settings, **overrides)
    if args.min_welfare_ref is not None and effects is not None:
        target = min_welfare_reference(effects, dataset, config, args.min_welfare_ref)
        config = replace(config, min_welfare_target=target)
        logger.info("Minimum-welfare target %.6g from reference budget %g", target, args.min_welfare_ref)
    return config


def _run_method(method, effects, dataset, config, nu=None):
    if method == Method.FAIR:
        return solve_fair(effects, dataset, build_grid(effects, dataset, config), config)
    if method == Method.WELFARE_MAX:
        return solve_welfare_max(effects, dataset, config, nu)
    if method == Method.OPTIMAL:
        return solve_optimal(effects, dataset, config)
    return evaluate_factual(effects, dataset)


def _run_method_or_infeasible(method, effects, dataset, config, nu=None):
    """Infeasible grid construction becomes an infeasible result"""
    try:
        return _run_method(method, effects, dataset, config, nu)
    except InfeasibleError as error:
        logger.info("%s infeasible: %s", method, error)
        return FairSolveReport(method)


def command_estimate(args, settings, reports):
    paths = _data_paths(args)
    dataset = _load(args, settings, paths)
    propensity, outcome, effects = _estimate(args, settings, dataset)
    manifest = RunManifest.create('estimate', settings, paths)

    eta = summary_functionals(dataset)
    reports.write_json('effects.json', {
        'dataset': dataset.get_info(),
        'propensity': {'intercept': propensity.intercept, 'coefficients': propensity.coefficients,
                       'iterations': propensity.iterations, 'converged': propensity.converged},
        'outcome': {'alpha': outcome.alpha, 'beta': outcome.beta, 'moment_residual': outcome.moment_residual},
        'effects': effects.get_info(),
    }, manifest)

    columns = ['id', 'cost', 'factual', 'te_overall', 'te_group0', 'te_group1', 'eta_subgroup'] + \
        [f"eta_{name}" for name in dataset.covariate_names]
    rows = []
    for j, unit_id in enumerate(dataset.intervention_ids):
        rows.append([unit_id, dataset.costs[j], int(dataset.A[j]), effects.total_effect_overall[j],
                     effects.te0[j], effects.te1[j]] + eta[j].tolist())
    reports.write_tsv('effects.tsv', columns, rows, manifest, sort=False)
    return EXIT_OK


def _decision_rows(dataset, result):
    rows = []
    for j, unit_id in enumerate(dataset.intervention_ids):
        rounded = result.rounded_policy.probabilities[j] if result.rounded_policy else None
        rows.append([unit_id, dataset.costs[j], int(dataset.A[j]), result.policy.probabilities[j], rounded])
    return rows


def command_solve(args, settings, reports):
    paths = _data_paths(args)
    dataset = _load(args, settings, paths)
    _, _, effects = _estimate(args, settings, dataset)
    config = _solve_config(args, settings, dataset, effects)
    result = _run_method_or_infeasible(args.method, effects, dataset, config, args.nu)

    manifest = RunManifest.create('solve', settings, paths)
    payload = result.to_dict()
    payload['budget'] = {'absolute': config.absolute_budget(dataset), 'capacity': config.capacity(dataset),
                         'universal_cost': dataset.universal_cost}
    payload['mode'] = config.mode
    payload['min_welfare_target'] = config.min_welfare_target
    reports.write_json(f"solve_{args.method}.json", payload, manifest)
    if result.feasible:
        reports.write_tsv(f"decisions_{args.method}.tsv", ['id', 'cost', 'factual', 'pi', 'rounded'],
                          _decision_rows(dataset, result), manifest, sort=False)
        return EXIT_OK
    logger.warning("No feasible %s policy at budget %g", args.method, config.budget)
    return EXIT_INFEASIBLE


def _curve_row(x, method, result):
    if not result.feasible:
        return [x, method, 'infeasible'] + [None] * len(METRICS)
    report = result.report.to_dict()
    return [x, method, 'optimal'] + [report[metric] for metric in METRICS]


def command_sweep(args, settings, reports):
    paths = _data_paths(args)
    dataset = _load(args, settings, paths)
    _, _, effects = _estimate(args, settings, dataset)
    manifest = RunManifest.create('sweep', settings, paths)
    sweep = settings.get('sweep', {})
    methods = args.methods or sweep.get('methods', list(Method.ALL))

    rows = []
    if args.caps:
        base = _solve_config(args, settings, dataset, effects, budget=args.budget)
        for cap in sorted(args.caps):
            result = _run_method_or_infeasible(Method.WELFARE_MAX, effects, dataset, replace(base, disparity_cap=cap))
            rows.append(_curve_row(cap, Method.WELFARE_MAX, result))
        name = 'sweep_caps'
    else:
        budgets = sorted(args.budgets or sweep.get('budgets', [1.0]))
        for budget in budgets:
            config = _solve_config(args, settings, dataset, effects, budget=budget)
            for method in methods:
                rows.append(_curve_row(budget, method, _run_method_or_infeasible(method, effects, dataset, config)))
        name = 'sweep_budgets'

    reports.write_tsv(f"{name}.tsv", CURVE_COLUMNS, rows, manifest)
    reports.write_json(f"{name}.json", {'rows': [dict(zip(CURVE_COLUMNS, row)) for row in rows]}, manifest)
    return EXIT_OK


def command_simulate(args, settings, reports):
    overrides = {
        'replications': args.reps, 'seed': args.seed, 'n': args.n, 'J': args.J, 'snr': args.snr,
        'effect_regime': args.regime, 'subgroup_rule': args.subgroups,
    }
    config = SimConfig.from_settings(settings, **overrides)
    if not args.no_calibrate:
        config = calibrate_intercepts(config)

    if args.emit_dataset:
        dataset, _ = generate_dataset(config)
        save_dataset(dataset, args.emit_dataset)

    sweep = settings.get('sweep', {})
    budgets = args.budgets or sweep.get('budgets', [1.0])
    methods = args.methods or sweep.get('methods', list(Method.ALL))
    solve_config = _solve_config(args, settings, budget=1.0)
    result = run_monte_carlo(config, methods, budgets, args.caps, estimate=not args.oracle,
                             solve_config=solve_config, with_oracle=args.regret, min_welfare_ref=args.min_welfare_ref)

    manifest = RunManifest.create('simulate', settings, seed=config.seed)
    reports.write_json('simulation.json', result.to_dict(), manifest)

    summary = result.summary()
    rows = []
    for record in summary.to_dict(orient='records'):
        x = record['cap'] if record['cap'] == record['cap'] else record['budget']
        feasible = int(record["feasible"])
        status = "optimal" if feasible == result.completed else ("infeasible" if feasible == 0 else "partial")
        rows.append([x, record["method"], status] +
                    [record[f"{metric}_mean"] for metric in METRICS])
    reports.write_tsv('simulation_curves.tsv', CURVE_COLUMNS, rows, manifest)
    return EXIT_OK


def command_oracle(args, settings, reports):
    paths = _data_paths(args)
    dataset = _load(args, settings, paths)
    if dataset.J > MAX_BINARY_UNITS:
        raise argparse.ArgumentTypeError(f"oracle needs J <= {MAX_BINARY_UNITS}, got {dataset.J}")
    _, _, effects = _estimate(args, settings, dataset)
    config = _solve_config(args, settings, dataset, effects)
    grid = build_grid(effects, dataset, config)
    manifest = RunManifest.create('oracle', settings, paths)
    reports.write_json('oracle.json', oracle_report(effects, dataset, grid, config), manifest)
    return EXIT_OK


COMMANDS = {
    'estimate': command_estimate,
    'solve': command_solve,
    'sweep': command_sweep,
    'simulate': command_simulate,
    'oracle': command_oracle,
}


def run(args, parser=None):
    """
    Execute a parsed command

    Args:
        args (argparse.Namespace): Parsed arguments
        parser (argparse.ArgumentParser or None): Parser used for usage errors

    Returns:
        int: Exit code
    """
    try:
        settings = load_settings(args.config)
        directory = args.out or settings.get('output', {}).get('directory', 'reports')
        return COMMANDS[args.command](args, settings, ReportManager(directory))
    except argparse.ArgumentTypeError as error:
        (parser or build_parser()).error(str(error))
    except FairBniError as error:
        logger.error("%s: %s", type(error).__name__, error)
        return error.exit_code


def main(argv=None):
    """Parse and run; returns the exit code"""
    parser = build_parser()
    args = parser.parse_args(argv)
    return run(args, parser)
