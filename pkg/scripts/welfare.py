"""
Welfare - subgroup welfare evaluation and the discretized Pareto grid
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from core_model import _read_only, policy_cost
from errors import DimensionError, InfeasibleError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_SLACK = 1.0
DEFAULT_GRID_CAP = 200


@dataclass(frozen=True)
class WelfareReport:
    """
    Welfare of a policy; lower is better for every welfare figure

    Attributes:
        w0 (float): Subgroup 0 welfare
        w1 (float): Subgroup 1 welfare
        disparity (float): |w0 - w1|
        cost (float): Expected policy cost
        population (float): Population welfare (overall total effects)
        treated (float): Expected number of treated intervention units
    """

    w0: float
    w1: float
    disparity: float
    cost: float
    population: float = 0.0
    treated: float = 0.0

    def to_dict(self):
        return {
            'w0': self.w0,
            'w1': self.w1,
            'disparity': self.disparity,
            'cost': self.cost,
            'population': self.population,
            'treated': self.treated,
        }


def evaluate_policy(effects, dataset, policy):
    """
    Estimated subgroup welfares W_s = (1/J) sum_j pi_j TE_j(s)

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data (costs)
        policy (Policy): Policy to evaluate

    Returns:
        WelfareReport: Welfares, disparity and cost
    """
    if effects.J != dataset.J or policy.size != dataset.J:
        raise DimensionError(
            f"Effects ({effects.J}), dataset ({dataset.J}) and policy ({policy.size}) sizes differ"
        )
    pi = policy.probabilities
    J = dataset.J
    w0 = float(pi @ effects.te0 / J)
    w1 = float(pi @ effects.te1 / J)
    return WelfareReport(
        w0=w0,
        w1=w1,
        disparity=abs(w0 - w1),
        cost=policy_cost(dataset, policy),
        population=float(pi @ effects.total_effect_overall / J),
        treated=policy.treated_count,
    )


def default_grid_size(n, cap=DEFAULT_GRID_CAP):
    """K = ceil(sqrt(n)) capped for tractability"""
    return max(1, min(int(math.ceil(math.sqrt(n))), int(cap)))


@dataclass(frozen=True, eq=False)
class ParetoGrid:
    """
    Negishi weights on group 0 with the optimal scalarized welfare of each

    Attributes:
        weights (np.ndarray): K weights strictly increasing inside (0, 1)
        wbar (np.ndarray): K optimal scalarized welfares
        slack (float): lambda; gridpoint tolerance is lambda / K
        capacity (float or None): Total-cost capacity of the admissible class (None: box only)
        pinned (np.ndarray): Intervention units fixed at pi = 1
    """

    weights: np.ndarray
    wbar: np.ndarray
    slack: float
    capacity: float = None
    pinned: np.ndarray = None

    def __post_init__(self):
        weights = _read_only(self.weights)
        wbar = _read_only(self.wbar)
        if weights.ndim != 1 or weights.size == 0:
            raise ValidationError("Pareto grid needs at least one gridpoint")
        if wbar.shape != weights.shape:
            raise DimensionError("Grid weights and optimal welfares differ in length")
        if np.any(weights <= 0) or np.any(weights >= 1) or np.any(np.diff(weights) <= 0):
            raise ValidationError("Grid weights must be strictly increasing inside (0, 1)")
        if not np.all(np.isfinite(wbar)):
            raise ValidationError("Grid optimal welfares must be finite")
        if self.slack < 0:
            raise ValidationError(f"Slack must be nonnegative, got {self.slack}")
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'wbar', wbar)
        if self.pinned is not None:
            pinned = np.asarray(self.pinned, dtype=bool).copy()
            pinned.setflags(write=False)
            object.__setattr__(self, 'pinned', pinned)

    @property
    def K(self):
        return self.weights.shape[0]

    @property
    def tolerance(self):
        """Per-gridpoint slack lambda / K"""
        return self.slack / self.K

    def get_info(self):
        return {
            'K': self.K,
            'slack': self.slack,
            'tolerance': self.tolerance,
            'capacity': self.capacity,
            'weights': self.weights.tolist(),
            'wbar': self.wbar.tolist(),
        }


def build_pareto_grid(effects, dataset, K, slack=DEFAULT_SLACK, budget=None, fixed=None,
                      budget_new_only=False, workers=1):
    """
    Equally spaced interior Negishi weights nu_k = k / (K + 1) with the minimum of
    nu_k W0 + (1 - nu_k) W1 over the admissible class at each

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data (costs)
        K (int): Number of gridpoints
        slack (float): lambda >= 0
        budget (float or None): Absolute budget; None leaves the frontier over the box
        fixed (array-like or None): Binary vector of units pinned to pi = 1
        budget_new_only (bool): Budget covers only units beyond the pinned ones
        workers (int): Threads for the K scalarized solves

    Returns:
        ParetoGrid: Grid
    """
    # Imported here: fair_solver depends on this module
    from fair_solver import scalarized_minimum

    if K < 1:
        raise ValidationError(f"Grid size K must be >= 1, got {K}")
    if slack < 0:
        raise ValidationError(f"Slack must be nonnegative, got {slack}")

    pinned = np.zeros(dataset.J, dtype=bool) if fixed is None else np.asarray(fixed) == 1
    if pinned.shape != (dataset.J,):
        raise DimensionError(f"Fixed vector must have length {dataset.J}")

    capacity = None
    if budget is not None:
        pinned_cost = float(dataset.costs[pinned].sum())
        capacity = budget + pinned_cost if budget_new_only else float(budget)
        if pinned_cost > capacity + 1e-9:
            raise InfeasibleError(
                f"Pinned units cost {pinned_cost:.6g}, above the budget {capacity:.6g}"
            )

    weights = np.arange(1, K + 1) / (K + 1)

    def solve_gridpoint(nu):
        _, value = scalarized_minimum(effects, dataset, nu, capacity, pinned)
        return value

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            wbar = list(executor.map(solve_gridpoint, weights))
    else:
        wbar = [solve_gridpoint(nu) for nu in weights]

    logger.debug("Pareto grid: K=%d, wbar range [%.6g, %.6g]", K, min(wbar), max(wbar))
    return ParetoGrid(weights, np.array(wbar), float(slack), capacity, pinned)
