"""
LP engine - bounded-variable primal simplex for box-bounded programs

    minimize    c @ x
    subject to  A @ x <= b
                lower <= x <= upper   (all bounds finite)

Every row gets a slack s_i = b_i - A_i x with finite bounds [0, s_max]. Rows that are
violated at the starting vertex (all x at lower bound) get an artificial variable and
phase 1 minimizes the artificials. Dantzig pricing is used until 5 * (m + N) iterations,
then Bland's rule (lowest index) guarantees termination.
"""
import logging
from dataclasses import dataclass

import numpy as np

from errors import DimensionError, SolverError, ValidationError

logger = logging.getLogger(__name__)

PIVOT_TOLERANCE = 1e-10
FEASIBILITY_TOLERANCE = 1e-9
OPTIMALITY_TOLERANCE = 1e-12


class LpStatus:
    """LP status enum"""
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """Minimization program with finite variable bounds and <= rows"""

    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    constraints: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        objective = np.asarray(self.objective, dtype=float)
        if objective.ndim != 1:
            raise DimensionError("Objective must be a vector")
        size = objective.shape[0]
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        constraints = np.asarray(self.constraints, dtype=float)
        if constraints.size == 0:
            constraints = constraints.reshape(0, size)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)

        if lower.shape[0] != size or upper.shape[0] != size:
            raise DimensionError("Bounds must match the number of variables")
        if constraints.ndim != 2 or constraints.shape[1] != size or constraints.shape[0] != rhs.shape[0]:
            raise DimensionError(
                f"Constraint matrix {constraints.shape} inconsistent with {size} variables and {rhs.shape[0]} rows"
            )
        for name, array in (('objective', objective), ('lower', lower), ('upper', upper),
                            ('constraints', constraints), ('rhs', rhs)):
            if not np.all(np.isfinite(array)):
                raise ValidationError(f"Linear program {name} contains NaN or infinite values")
        if np.any(lower > upper):
            raise ValidationError("Lower bound exceeds upper bound")

        for name, array in (('objective', objective), ('lower', lower), ('upper', upper),
                            ('constraints', constraints), ('rhs', rhs)):
            array = array.copy()
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def num_variables(self):
        return self.objective.shape[0]

    @property
    def num_constraints(self):
        return self.rhs.shape[0]

    def is_feasible(self, x, tolerance=FEASIBILITY_TOLERANCE):
        """
        Check a point against rows and bounds

        Args:
            x (np.ndarray): Candidate point
            tolerance (float): Allowed violation

        Returns:
            bool: True if feasible
        """
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lower - tolerance) or np.any(x > self.upper + tolerance):
            return False
        # Row tolerance scales with the magnitude of the row terms
        scale = np.maximum(1.0, np.abs(self.constraints) @ np.abs(x) + np.abs(self.rhs))
        return bool(np.all(self.constraints @ x <= self.rhs + tolerance * scale))


@dataclass(frozen=True, eq=False)
class LpSolution:
    """Solver output"""

    status: str
    values: np.ndarray
    objective_value: float
    iterations: int = 0

    @property
    def is_optimal(self):
        return self.status == LpStatus.OPTIMAL


class _BoundedSimplex:
    """
    Dense tableau state for one solve

    Variables are ordered: structural (N), slacks (m), artificials (a).
    """

    def __init__(self, program):
        self.program = program
        m, size = program.constraints.shape
        self.m = m
        self.size = size

        lower = program.lower
        upper = program.upper
        A = program.constraints
        b = program.rhs

        # Largest slack over the box; negative means the row can never hold
        row_min = np.minimum(A * lower, A * upper).sum(axis=1)
        self.slack_upper = b - row_min

        start_residual = b - A @ lower
        self.artificial_rows = np.flatnonzero(start_residual < 0)
        num_art = self.artificial_rows.size

        total = size + m + num_art
        self.total = total
        matrix = np.zeros((m, total))
        matrix[:, :size] = A
        matrix[:, size:size + m] = np.eye(m)
        for k, row in enumerate(self.artificial_rows):
            matrix[row, size + m + k] = -1.0
        self.matrix = matrix
        self.b = b

        self.lower = np.concatenate([lower, np.zeros(m), np.zeros(num_art)])
        self.upper = np.concatenate([upper, np.maximum(self.slack_upper, 0.0), -start_residual[self.artificial_rows]])
        self.x = self.lower.copy()

        basis = np.arange(size, size + m)
        for k, row in enumerate(self.artificial_rows):
            basis[row] = size + m + k
        self.basis = basis
        self.x[basis] = np.where(start_residual >= 0, start_residual, -start_residual)
        self.iterations = 0

    def _refresh(self):
        """Recompute tableau columns and basic values from the basis"""
        basis_matrix = self.matrix[:, self.basis]
        nonbasic = np.ones(self.total, dtype=bool)
        nonbasic[self.basis] = False
        rhs = self.b - self.matrix[:, nonbasic] @ self.x[nonbasic]
        try:
            tableau = np.linalg.solve(basis_matrix, self.matrix)
            self.x[self.basis] = np.linalg.solve(basis_matrix, rhs)
        except np.linalg.LinAlgError as error:
            raise SolverError(f"Singular basis after {self.iterations} iterations: {error}") from error
        return tableau, nonbasic

    def run(self, costs, bland_after, max_iterations):
        """
        Optimize the given cost vector from the current basic feasible solution

        Args:
            costs (np.ndarray): Cost per variable (length total)
            bland_after (int): Iteration count after which Bland's rule is used
            max_iterations (int): Hard cap

        Returns:
            bool: True when optimal
        """
        use_bland = False
        while True:
            if self.m == 0:
                tableau = np.zeros((0, self.total))
                nonbasic = np.ones(self.total, dtype=bool)
            else:
                tableau, nonbasic = self._refresh()
            reduced = costs - costs[self.basis] @ tableau

            at_upper = nonbasic & (self.x >= self.upper) & (self.upper > self.lower)
            at_lower = nonbasic & ~at_upper & (self.upper > self.lower)
            improving = (at_lower & (reduced < -OPTIMALITY_TOLERANCE)) | (at_upper & (reduced > OPTIMALITY_TOLERANCE))
            candidates = np.flatnonzero(improving)
            if candidates.size == 0:
                return True

            if self.iterations >= max_iterations:
                raise SolverError(f"Simplex exceeded {max_iterations} iterations")
            if not use_bland and self.iterations >= bland_after:
                logger.info("Switching to Bland's rule after %d iterations", self.iterations)
                use_bland = True

            if use_bland:
                entering = int(candidates[0])
            else:
                entering = int(candidates[np.argmax(np.abs(reduced[candidates]))])

            direction = 1.0 if at_lower[entering] else -1.0
            column = tableau[:, entering] * direction

            step = self.upper[entering] - self.lower[entering]
            leaving_row = -1
            leaving_to_upper = False
            for row in range(self.m):
                alpha = column[row]
                var = self.basis[row]
                if alpha > PIVOT_TOLERANCE:
                    limit = max(self.x[var] - self.lower[var], 0.0) / alpha
                    to_upper = False
                elif alpha < -PIVOT_TOLERANCE:
                    limit = max(self.upper[var] - self.x[var], 0.0) / -alpha
                    to_upper = True
                else:
                    continue
                better = limit < step
                if not better and leaving_row >= 0 and limit == step:
                    # Tie between basic rows: lowest variable index
                    better = var < self.basis[leaving_row]
                if better:
                    step = limit
                    leaving_row = row
                    leaving_to_upper = to_upper

            if not np.isfinite(step):
                raise SolverError("Unbounded direction on a boxed program")

            self.iterations += 1
            if self.m:
                self.x[self.basis] -= step * column

            if leaving_row < 0:
                # Bound flip, basis unchanged
                self.x[entering] = self.upper[entering] if direction > 0 else self.lower[entering]
                continue

            self.x[entering] += direction * step

            leaving = self.basis[leaving_row]
            self.x[leaving] = self.upper[leaving] if leaving_to_upper else self.lower[leaving]
            self.basis[leaving_row] = entering


def solve_lp(program, bland_factor=5):
    """
    Solve a box-bounded linear program

    Args:
        program (LinearProgram): Program to solve
        bland_factor (int): Dantzig iterations allowed per (m + N) before Bland's rule

    Returns:
        LpSolution: Optimal vertex or infeasible status
    """
    size = program.num_variables
    empty = np.full(size, np.nan)

    simplex = _BoundedSimplex(program)
    if np.any(simplex.slack_upper < -FEASIBILITY_TOLERANCE * np.maximum(1.0, np.abs(program.rhs))):
        return LpSolution(LpStatus.INFEASIBLE, empty, float('nan'))

    bland_after = bland_factor * (simplex.m + simplex.total)
    max_iterations = 50 * (simplex.m + simplex.total) + 1000

    num_art = simplex.artificial_rows.size
    if num_art:
        phase_one = np.zeros(simplex.total)
        phase_one[size + simplex.m:] = 1.0
        simplex.run(phase_one, bland_after, max_iterations)
        infeasibility = float(simplex.x[size + simplex.m:].sum())
        if infeasibility > FEASIBILITY_TOLERANCE * max(1.0, float(np.abs(program.rhs).max())):
            logger.debug("Phase 1 ended with infeasibility %.3e", infeasibility)
            return LpSolution(LpStatus.INFEASIBLE, empty, float('nan'), simplex.iterations)
        # Artificials are pinned at zero for phase 2
        simplex.upper[size + simplex.m:] = 0.0
        simplex.x[size + simplex.m:] = 0.0

    phase_two = np.zeros(simplex.total)
    phase_two[:size] = program.objective
    simplex.run(phase_two, bland_after, max_iterations)

    values = np.clip(simplex.x[:size], program.lower, program.upper)
    if not program.is_feasible(values):
        raise SolverError("Simplex returned a point violating the constraints")
    return LpSolution(LpStatus.OPTIMAL, values, float(program.objective @ values), simplex.iterations)
