"""
Simulation - synthetic bipartite datasets, intercept calibration and the Monte Carlo
study of fair and welfare-maximizing policy learners
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd
from scipy.optimize import bisect
from scipy.spatial.distance import cdist
from scipy.special import expit

from core_model import Dataset, _read_only, standardize_columns
from errors import CalibrationError, FairBniError, InfeasibleError, SimulationError, ValidationError
from estimation import OutcomeModel, PropensityModel, fit_outcome_alearning, fit_propensity, total_effects
from fair_solver import (Method, SolveConfig, build_grid, evaluate_factual, min_welfare_reference, solve_fair,
                         solve_optimal, solve_welfare_max)
from welfare import evaluate_policy

logger = logging.getLogger(__name__)

# Outcome model coefficients: 14 baseline (alpha) then 14 effect (beta) values
DEFAULT_THETA0 = (
    0.649, 0.963, 0.33, 0.411, -0.481, 0.733, 0.566, 0.343,
    0.058, -0.934, -0.277, -0.995, 0.709, 0.419, -0.505,
    0.517, 0.03, -0.723, 0.854, -0.496, -0.393, 0.316,
    0.487, -0.444, -0.653, -0.052, 0.931, 0.143,
)
# Propensity coefficients: intercept then 19 slopes
DEFAULT_GAMMA0 = (
    -0.997, -0.447, -0.04, 0.021, 0.806, -0.689, -0.823,
    -0.909, -0.658, -0.101, 0.908, 0.911, 0.193, 0.408,
    -0.835, 0.392, 0.625, 0.13, 0.022, 0.073,
)
MAX_DEFAULT_P = len(DEFAULT_THETA0) // 2 - 1
MAX_DEFAULT_Q = len(DEFAULT_GAMMA0) - 1

MAX_FAILURE_SHARE = 0.05
BISECTION_BRACKET = 50.0
BISECTION_MAX_ITERATIONS = 100

METRICS = ('w0', 'w1', 'disparity', 'population', 'treated', 'cost')


class SubgroupRule:
    """Subgroup construction enum"""
    MEDIAN = "median"
    ALTERNATE = "alternate"

    ALL = (MEDIAN, ALTERNATE)


class EffectRegime:
    """Effect coefficient enum"""
    STANDARD = "standard"
    ASYMMETRIC = "asymmetric"

    ALL = (STANDARD, ASYMMETRIC)


def default_coefficients(p, q, regime=EffectRegime.STANDARD):
    """
    Leading p + 1 entries of each outcome coefficient half and q + 1 propensity entries

    The asymmetric regime keeps the baseline but sets the effect so that units above the
    median of the first covariate are harmed and the rest protected.

    Args:
        p (int): Outcome covariates
        q (int): Intervention covariates
        regime (str): EffectRegime value

    Returns:
        tuple: (theta0, gamma0) arrays
    """
    if p > MAX_DEFAULT_P or q > MAX_DEFAULT_Q:
        raise ValidationError(
            f"Default coefficients cover p <= {MAX_DEFAULT_P} and q <= {MAX_DEFAULT_Q}; pass theta0/gamma0 explicitly"
        )
    theta = np.array(DEFAULT_THETA0)
    half = MAX_DEFAULT_P + 1
    alpha = theta[:p + 1].copy()
    beta = theta[half:half + p + 1].copy()
    if regime == EffectRegime.ASYMMETRIC:
        beta = 0.2 * beta
        beta[0] = -0.5
        if p >= 1:
            beta[1] = 1.0
    elif regime != EffectRegime.STANDARD:
        raise ValidationError(f"Unknown effect regime '{regime}'")
    return np.concatenate([alpha, beta]), np.array(DEFAULT_GAMMA0[:q + 1])


@dataclass(frozen=True, eq=False)
class SimConfig:
    """
    Synthetic design and Monte Carlo settings

    Attributes:
        n (int): Outcome units
        J (int): Intervention units
        p (int): Outcome covariates
        q (int): Intervention covariates
        theta0 (np.ndarray or None): (alpha, beta), length 2(p + 1); None takes the defaults
        gamma0 (np.ndarray or None): Propensity coefficients, length q + 1
        snr (float): Var(E[Y]) / Var(noise)
        noise (bool): False draws outcomes without noise
        replications (int): Monte Carlo replications
        seed (int): Master seed
        kernel_length (float): Distance decay of the interference kernel
        exposure_scale (float): Mean exposure under all-treated
        subgroup_rule (str): SubgroupRule value
        effect_regime (str): EffectRegime value used when theta0 is None
        treated_rate (float): Calibration target for the mean propensity
        mean_outcome (float): Calibration target for the mean outcome
        tolerance (float): Calibration tolerance
        cost_median (float): Median treatment cost
        cost_sigma (float): Log-scale spread of treatment costs
        workers (int): Threads for replications
    """

    n: int = 2000
    J: int = 40
    p: int = 5
    q: int = 5
    theta0: np.ndarray = None
    gamma0: np.ndarray = None
    snr: float = 3.0
    noise: bool = True
    replications: int = 200
    seed: int = 20240501
    kernel_length: float = 0.2
    exposure_scale: float = 1.0
    subgroup_rule: str = SubgroupRule.MEDIAN
    effect_regime: str = EffectRegime.STANDARD
    treated_rate: float = 0.23
    mean_outcome: float = 0.046
    tolerance: float = 0.01
    cost_median: float = 100.0
    cost_sigma: float = 0.5
    workers: int = 1

    def __post_init__(self):
        for name in ('n', 'J', 'p', 'q', 'replications', 'workers'):
            if int(getattr(self, name)) < 1:
                raise ValidationError(f"{name} must be a positive integer")
        if not self.snr > 0:
            raise ValidationError(f"snr must be positive, got {self.snr}")
        if self.subgroup_rule not in SubgroupRule.ALL:
            raise ValidationError(f"Unknown subgroup rule '{self.subgroup_rule}'")
        if self.kernel_length <= 0 or self.exposure_scale <= 0 or self.cost_median <= 0:
            raise ValidationError("kernel_length, exposure_scale and cost_median must be positive")
        if not 0 < self.treated_rate < 1:
            raise ValidationError(f"treated_rate must lie in (0, 1), got {self.treated_rate}")

        if self.theta0 is None or self.gamma0 is None:
            theta0, gamma0 = default_coefficients(self.p, self.q, self.effect_regime)
            theta0 = theta0 if self.theta0 is None else self.theta0
            gamma0 = gamma0 if self.gamma0 is None else self.gamma0
        else:
            theta0, gamma0 = self.theta0, self.gamma0
        theta0 = _read_only(theta0)
        gamma0 = _read_only(gamma0)
        if theta0.shape != (2 * (self.p + 1),):
            raise ValidationError(f"theta0 must have length {2 * (self.p + 1)}, got {theta0.shape[0]}")
        if gamma0.shape != (self.q + 1,):
            raise ValidationError(f"gamma0 must have length {self.q + 1}, got {gamma0.shape[0]}")
        object.__setattr__(self, 'theta0', theta0)
        object.__setattr__(self, 'gamma0', gamma0)

    @classmethod
    def from_settings(cls, settings, **overrides):
        """
        Build from the 'simulation' section of the settings

        Args:
            settings (dict): Loaded settings
            **overrides: Field values taking precedence

        Returns:
            SimConfig: Config
        """
        values = {key: value for key, value in settings.get('simulation', {}).items()
                  if key in cls.__dataclass_fields__}
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def alpha(self):
        return self.theta0[:self.p + 1]

    @property
    def beta(self):
        return self.theta0[self.p + 1:]

    @property
    def truth(self):
        """Ground-truth outcome and propensity models"""
        return GroundTruth(
            OutcomeModel(self.alpha, self.beta),
            PropensityModel(float(self.gamma0[0]), self.gamma0[1:]),
        )

    def seed_streams(self):
        """
        Independent streams: the first child seeds the fixed structure, the second is
        split into one child per replication

        Returns:
            tuple: (structure SeedSequence, list of replication SeedSequences)
        """
        structure, replication_root = np.random.SeedSequence(self.seed).spawn(2)
        return structure, replication_root.spawn(self.replications)

    def to_dict(self):
        info = {name: getattr(self, name) for name in self.__dataclass_fields__}
        info['theta0'] = self.theta0.tolist()
        info['gamma0'] = self.gamma0.tolist()
        return info


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """True models behind a synthetic dataset"""

    outcome: OutcomeModel
    propensity: PropensityModel


@dataclass(frozen=True, eq=False)
class SyntheticStructure:
    """Covariates, subgroups, interference map and costs held fixed across replications"""

    X_out: np.ndarray
    X_int: np.ndarray
    subgroups: np.ndarray
    H: np.ndarray
    costs: np.ndarray


def generate_structure(config, rng):
    """
    Draw covariates, subgroups, costs and a distance-decay interference map

    Units sit uniformly on the unit square, H_ij = exp(-d_ij / kernel_length) rescaled
    so that the mean exposure under all-treated equals exposure_scale.

    Args:
        config (SimConfig): Config
        rng (np.random.Generator): Random source

    Returns:
        SyntheticStructure: Structure
    """
    X_out = standardize_columns(rng.standard_normal((config.n, config.p)))
    X_int = standardize_columns(rng.standard_normal((config.J, config.q)))

    outcome_locations = rng.random((config.n, 2))
    intervention_locations = rng.random((config.J, 2))
    H = np.exp(-cdist(outcome_locations, intervention_locations) / config.kernel_length)
    H *= config.exposure_scale / H.mean()

    if config.subgroup_rule == SubgroupRule.MEDIAN:
        subgroups = (X_out[:, 0] > np.median(X_out[:, 0])).astype(float)
    else:
        subgroups = (np.arange(config.n) % 2).astype(float)

    costs = config.cost_median * np.exp(config.cost_sigma * rng.standard_normal(config.J))
    return SyntheticStructure(X_out, X_int, subgroups, H, costs)


def build_dataset(structure, treatments, outcomes):
    """
    Wrap a structure and one draw of treatments and outcomes as a Dataset

    Args:
        structure (SyntheticStructure): Fixed structure
        treatments (np.ndarray): J treatments
        outcomes (np.ndarray): n outcomes

    Returns:
        Dataset: Dataset with generated ids
    """
    n, J = structure.H.shape
    return Dataset(
        outcome_ids=[f"o{i}" for i in range(n)],
        outcome_covariates=structure.X_out,
        subgroups=structure.subgroups,
        outcomes=outcomes,
        intervention_ids=[f"u{j}" for j in range(J)],
        intervention_covariates=structure.X_int,
        factual_treatments=treatments,
        costs=structure.costs,
        interference=structure.H,
    )


def draw_replication(config, structure, rng):
    """
    New treatments from the propensity model and new outcomes with noise variance
    Var(E[Y]) / snr

    Args:
        config (SimConfig): Config
        structure (SyntheticStructure): Fixed structure
        rng (np.random.Generator): Random source

    Returns:
        tuple: (treatments, outcomes)
    """
    truth = config.truth
    propensities = truth.propensity.predict(structure.X_int)
    treatments = (rng.random(config.J) < propensities).astype(float)
    exposures = structure.H @ treatments / config.J
    mean = truth.outcome.mean_outcome(structure.X_out, exposures)
    noise = rng.standard_normal(config.n)
    if not config.noise:
        return treatments, mean
    return treatments, mean + math.sqrt(float(mean.var()) / config.snr) * noise


def generate_dataset(config, rng=None):
    """
    Synthetic dataset with its ground truth

    Args:
        config (SimConfig): Config
        rng (np.random.Generator or None): Random source; None uses the seeded streams
            (structure stream, then the first replication stream)

    Returns:
        tuple: (Dataset, GroundTruth)
    """
    if rng is None:
        structure_seed, replication_seeds = config.seed_streams()
        structure = generate_structure(config, np.random.default_rng(structure_seed))
        rng = np.random.default_rng(replication_seeds[0])
    else:
        structure = generate_structure(config, rng)
    treatments, outcomes = draw_replication(config, structure, rng)
    return build_dataset(structure, treatments, outcomes), config.truth


def _solve_bracketed(function, start, name):
    if function(start) == 0.0:
        return start
    low, high = start - BISECTION_BRACKET, start + BISECTION_BRACKET
    try:
        return bisect(function, low, high, xtol=1e-12, maxiter=BISECTION_MAX_ITERATIONS)
    except (ValueError, RuntimeError) as error:
        raise CalibrationError(f"Calibration of the {name} intercept failed: {error}") from error


def calibrate_intercepts(config, structure=None):
    """
    Shift the propensity intercept until the mean propensity hits treated_rate, then the
    baseline intercept until the mean outcome under expected exposure hits mean_outcome

    Intercepts already within tolerance are left unchanged.

    Args:
        config (SimConfig): Config
        structure (SyntheticStructure or None): Structure; None draws the seeded one

    Returns:
        SimConfig: Config with calibrated theta0 and gamma0
    """
    if structure is None:
        structure_seed, _ = config.seed_streams()
        structure = generate_structure(config, np.random.default_rng(structure_seed))

    gamma = np.array(config.gamma0)
    slopes_term = structure.X_int @ gamma[1:]

    def propensity_gap(intercept):
        return float(expit(intercept + slopes_term).mean()) - config.treated_rate

    if abs(propensity_gap(gamma[0])) > config.tolerance:
        gamma[0] = _solve_bracketed(propensity_gap, gamma[0], "propensity")
    propensities = expit(gamma[0] + slopes_term)

    theta = np.array(config.theta0)
    expected = structure.H @ propensities / config.J
    outcome = OutcomeModel(theta[:config.p + 1], theta[config.p + 1:])
    rest = outcome.mean_outcome(structure.X_out, expected) - theta[0]

    def outcome_gap(intercept):
        return float((intercept + rest).mean()) - config.mean_outcome

    if abs(outcome_gap(theta[0])) > config.tolerance:
        theta[0] = _solve_bracketed(outcome_gap, theta[0], "outcome")

    logger.info("Calibrated intercepts: propensity %.6f, outcome %.6f", gamma[0], theta[0])
    return replace(config, theta0=theta, gamma0=gamma)


@dataclass(frozen=True)
class ReplicationRecord:
    """Metrics of one learned policy in one replication, evaluated on the true effects"""

    replication: int
    method: str
    budget: float
    cap: float
    feasible: bool
    w0: float = float('nan')
    w1: float = float('nan')
    disparity: float = float('nan')
    population: float = float('nan')
    treated: float = float('nan')
    cost: float = float('nan')


@dataclass(frozen=True, eq=False)
class SimResult:
    """
    Monte Carlo output

    Attributes:
        config (SimConfig): Config that produced the result
        records (tuple): ReplicationRecord entries in replication order
        failures (tuple): (replication, message) pairs for skipped replications
        truth (dict): Summary of the true effects
        oracle (tuple): ReplicationRecord entries of policies learned from the true effects
        estimates (tuple): Estimated beta per completed replication
    """

    config: SimConfig
    records: tuple
    failures: tuple = ()
    truth: dict = field(default_factory=dict)
    oracle: tuple = ()
    estimates: tuple = ()

    @property
    def completed(self):
        return self.config.replications - len(self.failures)

    def frame(self):
        """Records as a DataFrame"""
        columns = list(ReplicationRecord.__dataclass_fields__)
        return pd.DataFrame([record.__dict__ for record in self.records], columns=columns)

    def summary(self):
        """
        Mean and standard deviation of every metric per method, budget and cap

        Returns:
            pd.DataFrame: One row per (method, budget, cap), sorted
        """
        frame = self.frame()
        frame['cap'] = frame['cap'].astype(float).fillna(-1.0)
        frame[list(METRICS)] = frame[list(METRICS)].astype(float)
        grouped = frame.groupby(['method', 'budget', 'cap'], sort=True)
        summary = grouped[list(METRICS)].agg(['mean', 'std'])
        summary.columns = [f"{metric}_{stat}" for metric, stat in summary.columns]
        summary['feasible'] = grouped['feasible'].sum()
        summary = summary.reset_index()
        summary['cap'] = summary['cap'].where(summary['cap'] >= 0)
        return summary

    def curve(self, method, metric, by='budget'):
        """
        Mean metric for one method against the sweep parameter

        Args:
            method (str): Method name
            metric (str): One of METRICS
            by (str): 'budget' or 'cap'

        Returns:
            list: (x, mean) pairs sorted by x
        """
        summary = self.summary()
        rows = summary[summary['method'] == method].dropna(subset=[by]).sort_values(by)
        return list(zip(rows[by].tolist(), rows[f"{metric}_mean"].tolist()))

    def regret(self):
        """
        Mean |disparity(estimated fair) - disparity(fair on true effects)| per budget

        Returns:
            dict: budget -> mean gap (feasible pairs only)
        """
        if not self.oracle:
            return {}
        reference = {record.budget: record.disparity for record in self.oracle
                     if record.method == Method.FAIR and record.feasible}
        gaps = {}
        for record in self.records:
            if record.method == Method.FAIR and record.feasible and record.budget in reference:
                gaps.setdefault(record.budget, []).append(abs(record.disparity - reference[record.budget]))
        return {budget: float(np.mean(values)) for budget, values in sorted(gaps.items())}

    def beta_rmse(self):
        """Root mean squared error of the estimated effect coefficients"""
        if not self.estimates:
            return float('nan')
        errors = np.array(self.estimates) - self.config.beta
        return float(np.sqrt(np.mean(errors ** 2)))

    def to_dict(self):
        summary = self.summary()
        return {
            'config': self.config.to_dict(),
            'completed': self.completed,
            'failures': [{'replication': index, 'message': message} for index, message in self.failures],
            'truth': self.truth,
            'summary': summary.astype(object).where(summary.notna(), None).to_dict(orient='records'),
            'regret': {str(budget): gap for budget, gap in self.regret().items()},
            'beta_rmse': None if not self.estimates else self.beta_rmse(),
        }


def _record(replication, method, budget, cap, result, true_effects, dataset):
    if not result.feasible:
        return ReplicationRecord(replication, method, budget, cap, False)
    report = evaluate_policy(true_effects, dataset, result.policy)
    return ReplicationRecord(
        replication, method, budget, cap, True,
        report.w0, report.w1, report.disparity, report.population, report.treated, report.cost,
    )


class MonteCarloRunner:
    """
    Drives replications: fresh treatments and outcomes, estimation, policy learning and
    evaluation against the true effects
    """

    def __init__(self, config, methods, budgets, disparity_caps=None, estimate=True, solve_config=None,
                 min_welfare_ref=None):
        """
        Initialize runner

        Args:
            config (SimConfig): Calibrated config
            methods (iterable): Method names
            budgets (list): Budget fractions
            disparity_caps (list or None): Disparity caps applied to welfare maximization
            estimate (bool): Learn from estimated effects; False uses the true effects
            solve_config (SolveConfig or None): Mode, grid and rounding settings
            min_welfare_ref (float or None): Reference budget; each replication constrains group-0
                welfare to welfare maximization's at this budget on its own effects
        """
        unknown = set(methods) - set(Method.ALL)
        if unknown:
            raise ValidationError(f"Unknown methods: {', '.join(sorted(unknown))}")
        if not budgets:
            raise ValidationError("At least one budget is required")
        if min_welfare_ref is not None and not 0.0 < min_welfare_ref <= 1.0:
            raise ValidationError(f"Reference budget must lie in (0, 1], got {min_welfare_ref}")
        self.config = config
        self.methods = [method for method in Method.ALL if method in set(methods)]
        self.budgets = sorted(float(budget) for budget in budgets)
        self.caps = [None] if not disparity_caps else sorted(float(cap) for cap in disparity_caps)
        self.estimate = estimate
        self.solve_config = solve_config or SolveConfig()
        self.min_welfare_ref = min_welfare_ref

        structure_seed, self.replication_seeds = config.seed_streams()
        self.structure = generate_structure(config, np.random.default_rng(structure_seed))
        template = build_dataset(self.structure, np.zeros(config.J), np.zeros(config.n))
        self.true_effects = total_effects(template, config.truth.outcome)

    def _solve_config(self, budget, cap=None, target=None):
        return replace(self.solve_config, budget=budget, budget_is_fraction=True, disparity_cap=cap,
                       min_welfare_target=target)

    def learn(self, effects, dataset, replication):
        """
        Run every method at every budget (and cap) on one dataset

        Args:
            effects (EffectTable): Effects the policies are learned from
            dataset (Dataset): Replication data
            replication (int): Replication index

        Returns:
            list: ReplicationRecord entries
        """
        target = None
        if self.min_welfare_ref is not None:
            target = min_welfare_reference(effects, dataset, self._solve_config(self.min_welfare_ref),
                                           self.min_welfare_ref)
        records = []
        for budget in self.budgets:
            config = self._solve_config(budget, target=target)
            for method in self.methods:
                if method == Method.FAIR:
                    try:
                        result = solve_fair(effects, dataset, build_grid(effects, dataset, config), config)
                    except InfeasibleError:
                        records.append(ReplicationRecord(replication, method, budget, None, False))
                        continue
                    records.append(_record(replication, method, budget, None, result, self.true_effects, dataset))
                elif method == Method.WELFARE_MAX:
                    for cap in self.caps:
                        result = solve_welfare_max(effects, dataset, self._solve_config(budget, cap, target))
                        records.append(_record(replication, method, budget, cap, result, self.true_effects, dataset))
                elif method == Method.OPTIMAL:
                    result = solve_optimal(effects, dataset, config)
                    records.append(_record(replication, method, budget, None, result, self.true_effects, dataset))
                else:
                    result = evaluate_factual(effects, dataset)
                    records.append(_record(replication, method, budget, None, result, self.true_effects, dataset))
        return records

    def run_replication(self, index):
        """
        One replication

        Args:
            index (int): Replication index

        Returns:
            tuple: (records, estimated beta or None)
        """
        rng = np.random.default_rng(self.replication_seeds[index])
        treatments, outcomes = draw_replication(self.config, self.structure, rng)
        dataset = build_dataset(self.structure, treatments, outcomes)
        if not self.estimate:
            return self.learn(self.true_effects, dataset, index), None
        propensity = fit_propensity(dataset)
        outcome = fit_outcome_alearning(dataset, propensity)
        effects = total_effects(dataset, outcome)
        return self.learn(effects, dataset, index), np.array(outcome.beta)

    def _attempt(self, index):
        try:
            return index, self.run_replication(index), None
        except FairBniError as error:
            logger.info("Replication %d skipped: %s", index, error)
            return index, None, f"{type(error).__name__}: {error}"

    def run(self, with_oracle=False):
        """
        Run every replication; results are gathered in replication order

        Args:
            with_oracle (bool): Also learn each method once from the true effects

        Returns:
            SimResult: Result
        """
        indices = range(self.config.replications)
        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                outcomes = list(executor.map(self._attempt, indices))
        else:
            outcomes = [self._attempt(index) for index in indices]

        records = []
        estimates = []
        failures = []
        for index, payload, failure in outcomes:
            if failure is not None:
                failures.append((index, failure))
                continue
            replication_records, beta = payload
            records.extend(replication_records)
            if beta is not None:
                estimates.append(beta)

        if len(failures) > MAX_FAILURE_SHARE * self.config.replications:
            raise SimulationError(
                f"{len(failures)} of {self.config.replications} replications failed; first: {failures[0][1]}"
            )
        if failures:
            logger.warning("%d replications skipped", len(failures))

        oracle = ()
        if with_oracle:
            rng = np.random.default_rng(self.replication_seeds[0])
            treatments, oracle_outcomes = draw_replication(self.config, self.structure, rng)
            dataset = build_dataset(self.structure, treatments, oracle_outcomes)
            oracle = tuple(self.learn(self.true_effects, dataset, -1))

        logger.info("Monte Carlo finished: %d replications, %d skipped", self.config.replications, len(failures))
        return SimResult(
            config=self.config,
            records=tuple(records),
            failures=tuple(failures),
            truth=self.true_effects.get_info(),
            oracle=oracle,
            estimates=tuple(estimates),
        )


def run_monte_carlo(config, methods, budgets, disparity_caps=None, estimate=True, solve_config=None,
                    with_oracle=False, min_welfare_ref=None):
    """
    Monte Carlo study: X, H, S and costs are drawn once; treatments and outcomes are redrawn
    per replication from independent seeded streams

    Args:
        config (SimConfig): Calibrated config
        methods (iterable): Method names
        budgets (list): Budget fractions
        disparity_caps (list or None): Caps for welfare maximization
        estimate (bool): False learns policies from the true effects
        solve_config (SolveConfig or None): Mode, grid and rounding settings
        with_oracle (bool): Also record policies learned from the true effects
        min_welfare_ref (float or None): Reference budget for the per-replication group-0 welfare target

    Returns:
        SimResult: Result
    """
    runner = MonteCarloRunner(config, methods, budgets, disparity_caps, estimate, solve_config, min_welfare_ref)
    return runner.run(with_oracle=with_oracle)
