"""
Oracle - brute-force enumeration on desk-scale instances: LP vertices, binary policies
and activation patterns of the gridpoint indicators
"""
import itertools
import logging

import numpy as np

from core_model import Policy
from errors import ValidationError
from fair_solver import BUDGET_TOLERANCE, build_fair_program, solve_fair
from lp_engine import FEASIBILITY_TOLERANCE, solve_lp
from welfare import evaluate_policy

logger = logging.getLogger(__name__)

MAX_BINARY_UNITS = 16
MAX_VERTEX_VARIABLES = 8
MAX_PATTERN_GRIDPOINTS = 8


def enumerate_vertices(program):
    """
    Minimize a box-bounded LP by enumerating every basic feasible solution

    Each candidate vertex fixes N linearly independent constraints (rows or bounds) at
    equality.

    Args:
        program (LinearProgram): Program with few variables

    Returns:
        tuple: (optimal value or None when infeasible, optimal point or None)
    """
    size = program.num_variables
    if size > MAX_VERTEX_VARIABLES:
        raise ValidationError(f"Vertex enumeration is limited to {MAX_VERTEX_VARIABLES} variables")
    identity = np.eye(size)
    normals = np.vstack([program.constraints, identity, identity])
    offsets = np.concatenate([program.rhs, program.lower, program.upper])

    best_value = None
    best_point = None
    for active in itertools.combinations(range(normals.shape[0]), size):
        matrix = normals[list(active)]
        if size and abs(np.linalg.det(matrix)) < 1e-12:
            continue
        point = np.linalg.solve(matrix, offsets[list(active)]) if size else np.zeros(0)
        if not program.is_feasible(point, FEASIBILITY_TOLERANCE):
            continue
        value = float(program.objective @ point)
        if best_value is None or value < best_value - 1e-12:
            best_value = value
            best_point = point
    return best_value, best_point


def enumerate_binary_policies(size, pinned=None):
    """
    Every binary treatment vector, pinned units held at 1

    Args:
        size (int): J
        pinned (np.ndarray or None): Units fixed at 1

    Yields:
        np.ndarray: Treatment vector
    """
    if size > MAX_BINARY_UNITS:
        raise ValidationError(f"Binary enumeration is limited to {MAX_BINARY_UNITS} units")
    pinned = np.zeros(size, dtype=bool) if pinned is None else np.asarray(pinned, dtype=bool)
    for bits in itertools.product((0.0, 1.0), repeat=size):
        treatments = np.array(bits)
        if np.all(treatments[pinned] == 1):
            yield treatments


def _fair_admissible(effects, dataset, grid, config, treatments):
    J = dataset.J
    if float(dataset.costs @ treatments) > config.capacity(dataset) + BUDGET_TOLERANCE:
        return False
    w0 = float(treatments @ effects.te0) / J
    if config.min_welfare_target is not None and w0 > config.min_welfare_target + BUDGET_TOLERANCE:
        return False
    for nu, wbar in zip(grid.weights, grid.wbar):
        if float(treatments @ effects.combined(nu)) / J <= wbar + grid.tolerance + 1e-12:
            return True
    return False


def binary_fair_minimum(effects, dataset, grid, config):
    """
    Smallest disparity over binary policies that satisfy the budget and the slack
    inequality at some gridpoint

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        grid (ParetoGrid): Grid
        config (SolveConfig): Config

    Returns:
        tuple: (minimum disparity or None when no binary policy qualifies, best policy or None)
    """
    best = None
    best_policy = None
    for treatments in enumerate_binary_policies(dataset.J, config.pinned_mask(dataset)):
        if not _fair_admissible(effects, dataset, grid, config, treatments):
            continue
        disparity = evaluate_policy(effects, dataset, Policy.from_treatments(treatments)).disparity
        if best is None or disparity < best - 1e-15:
            best = disparity
            best_policy = Policy.from_treatments(treatments)
    return best, best_policy


def activation_pattern_minimum(effects, dataset, grid, config):
    """
    Fair optimum with the gridpoint indicators enumerated over all 2^K - 1 nonempty
    activation patterns

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        grid (ParetoGrid): Grid
        config (SolveConfig): Config

    Returns:
        float or None: Optimal disparity, None when every pattern is infeasible
    """
    if grid.K > MAX_PATTERN_GRIDPOINTS:
        raise ValidationError(f"Activation enumeration is limited to K <= {MAX_PATTERN_GRIDPOINTS}")
    best = None
    for count in range(1, grid.K + 1):
        for active in itertools.combinations(range(1, grid.K + 1), count):
            solution = solve_lp(build_fair_program(effects, dataset, grid, config, list(active)))
            if solution.is_optimal and (best is None or solution.objective_value < best):
                best = solution.objective_value
    return best


def oracle_report(effects, dataset, grid, config):
    """
    Compare the fair solve against binary enumeration and activation-pattern enumeration

    Args:
        effects (EffectTable): Total effects
        dataset (Dataset): Data
        grid (ParetoGrid): Grid
        config (SolveConfig): Config

    Returns:
        dict: Disparities from each route and whether the orderings hold
    """
    fair = solve_fair(effects, dataset, grid, config)
    binary_minimum, binary_policy = binary_fair_minimum(effects, dataset, grid, config)
    pattern_minimum = activation_pattern_minimum(effects, dataset, grid, config) \
        if grid.K <= MAX_PATTERN_GRIDPOINTS else None

    lp_disparity = fair.report.disparity if fair.feasible else None
    lp_below_binary = None
    if lp_disparity is not None and binary_minimum is not None:
        lp_below_binary = lp_disparity <= binary_minimum + 1e-9
    patterns_agree = None
    if pattern_minimum is not None and lp_disparity is not None:
        patterns_agree = abs(pattern_minimum - fair.per_gridpoint[fair.active_gridpoint - 1].disparity) <= 1e-9

    logger.info("Oracle: LP %s, binary %s, patterns %s", lp_disparity, binary_minimum, pattern_minimum)
    return {
        'lp_disparity': lp_disparity,
        'lp_integral': bool(fair.policy.is_binary()) if fair.feasible else None,
        'binary_minimum': binary_minimum,
        'binary_policy': binary_policy.probabilities.tolist() if binary_policy else None,
        'pattern_minimum': pattern_minimum,
        'lp_below_binary': lp_below_binary,
        'patterns_agree': patterns_agree,
    }
