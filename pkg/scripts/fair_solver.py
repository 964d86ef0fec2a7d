"""
Fair solver - fair policy program by per-gridpoint LPs, plus the welfare-maximization,
optimal-policy and factual baselines
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from core_model import Policy, policy_cost
from errors import InfeasibleError, SolverError, ValidationError
from lp_engine import LinearProgram, solve_lp
from welfare import DEFAULT_GRID_CAP, DEFAULT_SLACK, build_pareto_grid, default_grid_size, evaluate_policy

logger = logging.getLogger(__name__)

BUDGET_TOLERANCE = 1e-9


class SolveMode:
    """Policy mode enum"""
    CLEAN_SLATE = "clean_slate"
    AUGMENTATION = "augmentation"

    ALL = (CLEAN_SLATE, AUGMENTATION)


class Rounding:
    """Rounding option enum"""
    NONE = "none"
    THRESHOLD_REPAIR = "threshold_repair"

    ALL = (NONE, THRESHOLD_REPAIR)


class Method:
    """Policy learner names"""
    FAIR = "fair"
    WELFARE_MAX = "welfare_max"
    OPTIMAL = "optimal"
    FACTUAL = "factual"

    ALL = (FAIR, WELFARE_MAX, OPTIMAL, FACTUAL)


@dataclass(frozen=True)
class SolveConfig:
    """
    Budget, mode and grid settings shared by every learner

    Attributes:
        budget (float): Fraction of universal cost in (0, 1], or absolute when budget_is_fraction is False
        budget_is_fraction (bool): Interpretation of budget
        mode (str): SolveMode value
        min_welfare_target (float or None): Upper bound on W0 (lower is better)
        K (int or None): Grid size; None uses ceil(sqrt(n)) capped at K_cap
        lam (float): Slack lambda
        rounding (str): Rounding value
        frontier_unconstrained (bool): Compute grid optima over the box only
        budget_new_only (bool): Budget excludes the cost of pinned factual units
        disparity_cap (float or None): Maximum disparity for welfare maximization
        K_cap (int): Cap on the default grid size
        workers (int): Threads for independent LP solves
    """

    budget: float = 1.0
    budget_is_fraction: bool = True
    mode: str = SolveMode.CLEAN_SLATE
    min_welfare_target: float = None
    K: int = None
    lam: float = DEFAULT_SLACK
    rounding: str = Rounding.NONE
    frontier_unconstrained: bool = False
    budget_new_only: bool = False
    disparity_cap: float = None
    K_cap: int = DEFAULT_GRID_CAP
    workers: int = 1

    def __post_init__(self):
        if not np.isfinite(self.budget) or self.budget <= 0:
            raise ValidationError(f"Budget must be positive, got {self.budget}")
        if self.budget_is_fraction and self.budget > 1:
            raise ValidationError(f"Budget fraction must lie in (0, 1], got {self.budget}")
        if self.mode not in SolveMode.ALL:
            raise ValidationError(f"Unknown mode '{self.mode}'")
        if self.rounding not in Rounding.ALL:
            raise ValidationError(f"Unknown rounding '{self.rounding}'")
        if self.K is not None and self.K < 1:
            raise ValidationError(f"K must be >= 1, got {self.K}")
        if self.lam < 0:
            raise ValidationError(f"lambda must be >= 0, got {self.lam}")
        if self.disparity_cap is not None and self.disparity_cap < 0:
            raise ValidationError(f"Disparity cap must be >= 0, got {self.disparity_cap}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")

    @classmethod
    def from_settings(cls, settings, **overrides):
        """
        Build from the 'grid' and 'solver' sections of the settings

        Args:
            settings (dict): Loaded settings
            **overrides: Field values taking precedence

        Returns:
            SolveConfig: Config
        """
        grid = settings.get('grid', {})
        solver = settings.get('solver', {})
        values = {
            'K': grid.get('K'),
            'K_cap': grid.get('K_cap', DEFAULT_GRID_CAP),
            'lam': grid.get('lambda', DEFAULT_SLACK),
            'frontier_unconstrained': grid.get('frontier_unconstrained', False),
            'mode': solver.get('mode', SolveMode.CLEAN_SLATE),
            'rounding': solver.get('rounding', Rounding.NONE),
            'budget_new_only': solver.get('budget_new_only', False),
            'workers': solver.get('workers', 1),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def with_budget(self, budget):
        """Copy with another budget in the same units"""
        return SolveConfig(**{**self.__dict__, 'budget': budget})

    def pinned_mask(self, dataset):
        """Units fixed at pi = 1: the factually treated ones in augmentation mode"""
        if self.mode == SolveMode.AUGMENTATION:
            return dataset.A == 1
        return np.zeros(dataset.J, dtype=bool)

    def absolute_budget(self, dataset):
        return self.budget * dataset.universal_cost if self.budget_is_fraction else float(self.budget)

    def capacity(self, dataset):
        """Right-hand side of the total-cost constraint"""
        budget = self.absolute_budget(dataset)
        if self.budget_new_only:
            budget += float(dataset.costs[self.pinned_mask(dataset)].sum())
        return budget

    def grid_size(self, dataset):
        return self.K if self.K is not None else default_grid_size(dataset.n, self.K_cap)


@dataclass(frozen=True)
class GridpointOutcome:
    """Result of the fair LP at one gridpoint (k is 1-based)"""

    k: int
    feasible: bool
    disparity: float = None


@dataclass(frozen=True, eq=False)
class FairSolveReport:
    """
    Learned policy with its welfare report

    policy/report are None when no feasible policy exists.
    """

    method: str
    policy: Policy = None
    report: object = None
    active_gridpoint: int = None
    per_gridpoint: tuple = field(default_factory=tuple)
    rounded_policy: Policy = None
    rounded_report: object = None

    @property
    def feasible(self):
        return self.policy is not None

    @property
    def status(self):
        return "optimal" if self.feasible else "infeasible"

    def to_dict(self):
        return {
            'method': self.method,
            'status': self.status,
            'active_gridpoint': self.active_gridpoint,
            'report': self.report.to_dict() if self.report else None,
            'policy': self.policy.probabilities.tolist() if self.policy else None,
            'rounded_policy': self.rounded_policy.probabilities.tolist() if self.rounded_policy else None,
            'rounded_report': self.rounded_report.to_dict() if self.rounded_report else None,
            'per_gridpoint': [
                {'k': outcome.k, 'feasible': outcome.feasible, 'disparity': outcome.disparity}
                for outcome in self.per_gridpoint
            ],
        }


def fractional_knapsack(gains, costs, capacity=None, pinned=None):
    """
    Minimize sum_j gains_j pi_j over pi in [0, 1]^J with sum_j costs_j pi_j <= capacity

    Greedy: pinned units first, then the most negative gain per unit cost, the last
    unit taken fractionally. Ties keep index order.

    Args:
        gains (np.ndarray): Objective coefficients
        costs (np.ndarray): Positive costs
        capacity (float or None): Cost capacity; None means unlimited
        pinned (np.ndarray or None): Units fixed at 1

    Returns:
        np.ndarray: Optimal pi
    """
    gains = np.asarray(gains, dtype=float)
    costs = np.asarray(costs, dtype=float)
    pinned = np.zeros(gains.shape[0], dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool)

    pi = pinned.astype(float)
    remaining = np.inf if capacity is None else capacity - float(costs[pinned].sum())
    if remaining < -BUDGET_TOLERANCE:
        raise InfeasibleError(f"Pinned units exceed the capacity {capacity:.6g}")

    free = np.flatnonzero(~pinned & (gains < 0))
    order = free[np.argsort(gains[free] / costs[free], kind='stable')]
    for j in order:
        if remaining <= 0:
            break
        take = min(1.0, remaining / costs[j])
        pi[j] = take
        remaining -= take * costs[j]
    return pi


def scalarized_minimum(effects, dataset, nu, capacity=None, pinned=None):
    """
    Minimum of nu W0 + (1 - nu) W1 over the admissible class

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data (costs)
        nu (float): Weight on group 0
        capacity (float or None): Total-cost capacity
        pinned (np.ndarray or None): Units fixed at 1

    Returns:
        tuple: (pi, optimal value)
    """
    gains = effects.combined(nu) / dataset.J
    pi = fractional_knapsack(gains, dataset.costs, capacity, pinned)
    return pi, float(gains @ pi)


def _policy_bounds(dataset, pinned):
    return pinned.astype(float), np.ones(dataset.J)


def build_fair_program(effects, dataset, grid, config, active):
    """
    Fair LP over (pi, t) for a set of active gridpoints

        minimize t
        s.t.  W1(pi) - W0(pi) <= t,  W0(pi) - W1(pi) <= t
              nu_k W0(pi) + (1 - nu_k) W1(pi) <= wbar_k + lambda / K   for k in active
              sum_j c_j pi_j <= capacity
              W0(pi) <= min_welfare_target                            (optional)

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        grid (ParetoGrid): Grid
        config (SolveConfig): Config
        active (list): 1-based gridpoint indices whose slack rows are imposed

    Returns:
        LinearProgram: Program over J + 1 variables
    """
    J = dataset.J
    difference = (effects.te1 - effects.te0) / J
    rows = [np.append(difference, -1.0), np.append(-difference, -1.0)]
    rhs = [0.0, 0.0]

    for k in active:
        nu = grid.weights[k - 1]
        rows.append(np.append(effects.combined(nu) / J, 0.0))
        rhs.append(grid.wbar[k - 1] + grid.tolerance)

    rows.append(np.append(dataset.costs, 0.0))
    rhs.append(config.capacity(dataset))

    if config.min_welfare_target is not None:
        rows.append(np.append(effects.te0 / J, 0.0))
        rhs.append(config.min_welfare_target)

    lower, upper = _policy_bounds(dataset, config.pinned_mask(dataset))
    t_max = float(np.abs(difference).sum()) + 1.0
    objective = np.zeros(J + 1)
    objective[-1] = 1.0
    return LinearProgram(
        objective=objective,
        lower=np.append(lower, 0.0),
        upper=np.append(upper, t_max),
        constraints=np.array(rows),
        rhs=np.array(rhs),
    )


def _check_grid(grid, dataset, config):
    if grid.K < 1:
        raise ValidationError("Pareto grid is empty")
    expected_capacity = None if config.frontier_unconstrained else config.capacity(dataset)
    if (grid.capacity is None) != (expected_capacity is None) or (
            expected_capacity is not None and not np.isclose(grid.capacity, expected_capacity, rtol=1e-12, atol=0.0)):
        raise ValidationError(
            f"Grid was built for capacity {grid.capacity}, the config implies {expected_capacity}"
        )
    pinned = config.pinned_mask(dataset)
    grid_pinned = grid.pinned if grid.pinned is not None else np.zeros(dataset.J, dtype=bool)
    if grid_pinned.shape != pinned.shape or np.any(grid_pinned != pinned):
        raise ValidationError("Grid fixed coordinates do not match the solve mode")


def build_grid(effects, dataset, config):
    """
    Pareto grid with the conventions of a solve config

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        config (SolveConfig): Config

    Returns:
        ParetoGrid: Grid
    """
    pinned = config.pinned_mask(dataset)
    return build_pareto_grid(
        effects, dataset,
        K=config.grid_size(dataset),
        slack=config.lam,
        budget=None if config.frontier_unconstrained else config.capacity(dataset),
        fixed=pinned.astype(int),
        budget_new_only=False,
        workers=config.workers,
    )


def _finish(method, effects, dataset, config, values, benefits, active_gridpoint=None, per_gridpoint=()):
    policy = Policy(np.clip(values, 0.0, 1.0))
    capacity = config.capacity(dataset)
    if not total_cost_check(dataset, policy, capacity):
        raise SolverError(f"{method} policy costs {policy_cost(dataset, policy):.10g}, "
                          f"above the capacity {capacity:.10g}")
    rounded_policy = None
    rounded_report = None
    if config.rounding == Rounding.THRESHOLD_REPAIR:
        rounded_policy = round_policy(policy, dataset, capacity, benefits,
                                      config.pinned_mask(dataset))
        rounded_report = evaluate_policy(effects, dataset, rounded_policy)
    return FairSolveReport(
        method=method,
        policy=policy,
        report=evaluate_policy(effects, dataset, policy),
        active_gridpoint=active_gridpoint,
        per_gridpoint=tuple(per_gridpoint),
        rounded_policy=rounded_policy,
        rounded_report=rounded_report,
    )


def solve_fair(effects, dataset, grid, config):
    """
    Minimum-disparity policy that is approximately Pareto optimal at some gridpoint

    One LP per gridpoint; the feasible gridpoint with the smallest disparity wins,
    ties going to the smallest k.

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        grid (ParetoGrid): Grid built with the same conventions as config
        config (SolveConfig): Config

    Returns:
        FairSolveReport: Result; infeasible when no gridpoint admits a policy
    """
    _check_grid(grid, dataset, config)

    def solve_gridpoint(k):
        return solve_lp(build_fair_program(effects, dataset, grid, config, [k]))

    gridpoints = range(1, grid.K + 1)
    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as executor:
            solutions = list(executor.map(solve_gridpoint, gridpoints))
    else:
        solutions = [solve_gridpoint(k) for k in gridpoints]

    per_gridpoint = []
    best_k = None
    best_t = np.inf
    for k, solution in zip(gridpoints, solutions):
        if not solution.is_optimal:
            per_gridpoint.append(GridpointOutcome(k, False))
            continue
        t = solution.objective_value
        per_gridpoint.append(GridpointOutcome(k, True, t))
        if t < best_t - 1e-12:
            best_t = t
            best_k = k

    if best_k is None:
        logger.info("Fair program infeasible at all %d gridpoints", grid.K)
        return FairSolveReport(Method.FAIR, per_gridpoint=tuple(per_gridpoint))

    values = solutions[best_k - 1].values[:-1]
    logger.debug("Fair program: gridpoint %d, disparity %.6g", best_k, best_t)
    return _finish(Method.FAIR, effects, dataset, config, values, effects.total_effect_overall,
                   best_k, per_gridpoint)


def _solve_linear_objective(method, gains, effects, dataset, config):
    """Minimize gains @ pi under budget, mode, min-welfare and disparity-cap constraints"""
    J = dataset.J
    rows = [dataset.costs]
    rhs = [config.capacity(dataset)]
    if config.min_welfare_target is not None:
        rows.append(effects.te0 / J)
        rhs.append(config.min_welfare_target)
    if config.disparity_cap is not None:
        difference = (effects.te1 - effects.te0) / J
        rows.extend([difference, -difference])
        rhs.extend([config.disparity_cap, config.disparity_cap])

    lower, upper = _policy_bounds(dataset, config.pinned_mask(dataset))
    solution = solve_lp(LinearProgram(gains, lower, upper, np.array(rows), np.array(rhs)))
    if not solution.is_optimal:
        logger.info("%s program infeasible", method)
        return FairSolveReport(method)
    return _finish(method, effects, dataset, config, solution.values, gains)


def solve_welfare_max(effects, dataset, config, nu=None):
    """
    Utilitarian baseline: minimize nu W0 + (1 - nu) W1

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        config (SolveConfig): Budget, mode and optional constraints
        nu (float or None): Weight on group 0; defaults to the group-0 share p0

    Returns:
        FairSolveReport: Result
    """
    if nu is None:
        nu = effects.proportions[0]
    if not 0.0 <= nu <= 1.0:
        raise ValidationError(f"nu must lie in [0, 1], got {nu}")
    return _solve_linear_objective(Method.WELFARE_MAX, effects.combined(nu) / dataset.J, effects, dataset, config)


def solve_optimal(effects, dataset, config):
    """
    Optimal-policy baseline: minimize population welfare from the overall total effects

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        config (SolveConfig): Budget and mode

    Returns:
        FairSolveReport: Result
    """
    gains = effects.total_effect_overall / dataset.J
    return _solve_linear_objective(Method.OPTIMAL, gains, effects, dataset, config)


def evaluate_factual(effects, dataset):
    """
    The observed allocation as a policy

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data

    Returns:
        FairSolveReport: Factual policy with its welfare report
    """
    policy = Policy.from_treatments(dataset.A)
    return FairSolveReport(Method.FACTUAL, policy, evaluate_policy(effects, dataset, policy))


def round_policy(policy, dataset, budget, benefits=None, pinned=None):
    """
    Threshold at 0.5, then un-treat the treated unit with the smallest |benefit| / cost
    until the budget holds

    Args:
        policy (Policy): Fractional policy
        dataset (Dataset): Data (costs)
        budget (float): Absolute budget
        benefits (np.ndarray or None): Per-unit benefit; defaults to the probabilities
        pinned (np.ndarray or None): Units that must stay treated

    Returns:
        Policy: Binary policy
    """
    benefits = policy.probabilities if benefits is None else np.asarray(benefits, dtype=float)
    pinned = np.zeros(dataset.J, dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool)

    treated = (policy.probabilities >= 0.5) | pinned
    ratio = np.abs(benefits) / dataset.costs
    while float(dataset.costs[treated].sum()) > budget + BUDGET_TOLERANCE:
        removable = np.flatnonzero(treated & ~pinned)
        if removable.size == 0:
            logger.warning("Pinned units alone exceed the budget; rounding cannot repair")
            break
        treated[removable[np.argmin(ratio[removable])]] = False
    return Policy.from_treatments(treated.astype(float))


def min_welfare_reference(effects, dataset, config, reference_budget):
    """
    Group-0 welfare of welfare maximization at a reference budget, used as the
    minimum-welfare target of a later fair solve

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        config (SolveConfig): Mode settings
        reference_budget (float): Budget in the units of config.budget

    Returns:
        float: Target for Ŵ0
    """
    reference = SolveConfig(**{**config.__dict__, 'budget': reference_budget,
                               'min_welfare_target': None, 'disparity_cap': None})
    result = solve_welfare_max(effects, dataset, reference)
    if not result.feasible:
        raise InfeasibleError(f"Welfare maximization is infeasible at the reference budget {reference_budget}")
    return result.report.w0


def total_cost_check(dataset, policy, capacity):
    """True when the policy cost stays within capacity, up to a tolerance relative to the capacity"""
    return policy_cost(dataset, policy) <= capacity + BUDGET_TOLERANCE * max(1.0, abs(capacity))
