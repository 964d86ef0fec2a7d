"""
Estimation - propensity model, A-learning outcome model and subgroup total effects
"""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import expit, logit

from core_model import _read_only, expected_exposure, exposure
from errors import DegenerateDataError, RankDeficiencyError, SingularityError, ValidationError

logger = logging.getLogger(__name__)

GRADIENT_TOLERANCE = 1e-8
MAX_IRLS_ITERATIONS = 100
CONDITION_LIMIT = 1e12
MOMENT_TOLERANCE = 1e-8
POSITIVITY_FLOOR = 1e-8


@dataclass(frozen=True, eq=False)
class PropensityModel:
    """Logistic model log(e / (1 - e)) = intercept + X_int @ coefficients"""

    intercept: float
    coefficients: np.ndarray
    iterations: int = 0
    gradient_norm: float = 0.0
    converged: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'coefficients', _read_only(np.atleast_1d(self.coefficients)))

    @property
    def parameters(self):
        """Intercept followed by slopes"""
        return np.concatenate([[self.intercept], self.coefficients])

    def predict(self, X_int):
        """
        Propensities for intervention covariates

        Args:
            X_int (np.ndarray): (J, q) covariates

        Returns:
            np.ndarray: J probabilities
        """
        return expit(self.intercept + np.asarray(X_int) @ self.coefficients)


@dataclass(frozen=True, eq=False)
class OutcomeModel:
    """
    Linear baseline f0 = X~ @ alpha and linear effect f_A = X~ @ beta, X~ = (1, X_out)

    baseline_columns restricts the baseline design to a subset of covariates
    (alpha then has len(baseline_columns) + 1 entries).
    """

    alpha: np.ndarray
    beta: np.ndarray
    baseline_columns: tuple = None
    moment_residual: float = 0.0

    def __post_init__(self):
        alpha = _read_only(self.alpha)
        beta = _read_only(self.beta)
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValidationError("Outcome model coefficients must be finite")
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'beta', beta)
        if self.baseline_columns is not None:
            object.__setattr__(self, 'baseline_columns', tuple(int(c) for c in self.baseline_columns))

    def baseline(self, X_out):
        X_out = np.asarray(X_out)
        if self.baseline_columns is not None:
            X_out = X_out[:, list(self.baseline_columns)]
        return self.alpha[0] + X_out @ self.alpha[1:]

    def effect(self, X_out):
        return self.beta[0] + np.asarray(X_out) @ self.beta[1:]

    def mean_outcome(self, X_out, exposures):
        """E[Y | X, exposure] = f0 + exposure * f_A"""
        return self.baseline(X_out) + exposures * self.effect(X_out)


@dataclass(frozen=True, eq=False)
class EffectTable:
    """Per-intervention-unit total effects, overall and by subgroup"""

    total_effect_overall: np.ndarray
    total_effect_by_group: tuple
    proportions: tuple

    def __post_init__(self):
        te0, te1 = (_read_only(te) for te in self.total_effect_by_group)
        p0, p1 = (float(p) for p in self.proportions)
        if te0.shape != te1.shape:
            raise ValidationError("Group effect vectors must have equal length")
        if not (0 < p0 < 1 and 0 < p1 < 1) or abs(p0 + p1 - 1.0) > 1e-12:
            raise ValidationError(f"Subgroup proportions must lie in (0, 1) and sum to 1, got ({p0}, {p1})")
        object.__setattr__(self, 'total_effect_by_group', (te0, te1))
        object.__setattr__(self, 'proportions', (p0, p1))
        object.__setattr__(self, 'total_effect_overall', _read_only(self.total_effect_overall))

    @classmethod
    def from_groups(cls, te0, te1, proportions):
        """Build a table whose overall effect is the exact subgroup mixture"""
        p0, p1 = proportions
        te0 = np.asarray(te0, dtype=float)
        te1 = np.asarray(te1, dtype=float)
        return cls(p0 * te0 + p1 * te1, (te0, te1), (p0, p1))

    @property
    def J(self):
        return self.total_effect_overall.shape[0]

    @property
    def te0(self):
        return self.total_effect_by_group[0]

    @property
    def te1(self):
        return self.total_effect_by_group[1]

    def combined(self, nu):
        """nu * TE(0) + (1 - nu) * TE(1)"""
        return nu * self.te0 + (1.0 - nu) * self.te1

    def get_info(self):
        """
        Summary of the effect distribution

        Returns:
            dict: Mean effects and protective shares per group
        """
        info = {}
        for label, te in (('group0', self.te0), ('group1', self.te1), ('overall', self.total_effect_overall)):
            info[label] = {
                'mean_effect': float(te.mean()),
                'protective_share': float(np.mean(te < 0)),
            }
        info['proportions'] = list(self.proportions)
        return info


def _log_likelihood(design, treatments, coefficients):
    eta = design @ coefficients
    return float(np.sum(treatments * eta - np.logaddexp(0.0, eta)))


def fit_propensity(dataset, intercept_only=False, tolerance=GRADIENT_TOLERANCE,
                   max_iterations=MAX_IRLS_ITERATIONS, condition_limit=CONDITION_LIMIT):
    """
    Logistic regression of the factual treatment on intervention covariates by IRLS
    with step halving

    Args:
        dataset (Dataset): Data
        intercept_only (bool): Ignore covariates (rate-only model)
        tolerance (float): Gradient norm at convergence
        max_iterations (int): Newton iteration cap
        condition_limit (float): Hessian condition number treated as separation

    Returns:
        PropensityModel: Fitted model
    """
    treatments = dataset.A
    J = dataset.J
    rate = float(treatments.mean())
    if rate in (0.0, 1.0):
        raise DegenerateDataError("Propensity fit needs both treated and untreated intervention units")

    active = np.zeros(dataset.q, dtype=bool)
    if not intercept_only:
        if dataset.q >= J:
            raise DegenerateDataError(f"Propensity fit needs q < J (q={dataset.q}, J={J})")
        # All-zero covariates carry no information; their slopes stay 0
        active = np.any(dataset.X_int != 0, axis=0)
    design = np.column_stack([np.ones(J), dataset.X_int[:, active]])

    coefficients = np.zeros(design.shape[1])
    coefficients[0] = logit(rate)
    log_lik = _log_likelihood(design, treatments, coefficients)

    gradient_norm = np.inf
    iteration = 0
    for iteration in range(max_iterations + 1):
        probabilities = expit(design @ coefficients)
        gradient = design.T @ (treatments - probabilities)
        gradient_norm = float(np.linalg.norm(gradient))
        logger.debug("IRLS iteration %d: log-likelihood %.10f, gradient norm %.3e", iteration, log_lik, gradient_norm)
        if gradient_norm <= tolerance or iteration == max_iterations:
            break

        weights = probabilities * (1.0 - probabilities)
        hessian = design.T @ (design * weights[:, None])
        condition = np.linalg.cond(hessian)
        if not np.isfinite(condition) or condition > condition_limit:
            raise SingularityError(
                f"Propensity Hessian condition number {condition:.3e} after {iteration} iterations; "
                f"the treatment is (quasi-)perfectly separated by the covariates "
                f"(min fitted {probabilities.min():.3e}, max fitted {probabilities.max():.3e})"
            )
        step = scipy.linalg.solve(hessian, gradient, assume_a='pos')

        scale = 1.0
        candidate = coefficients + step
        candidate_lik = _log_likelihood(design, treatments, candidate)
        while candidate_lik < log_lik and scale > 1e-10:
            scale *= 0.5
            candidate = coefficients + scale * step
            candidate_lik = _log_likelihood(design, treatments, candidate)
        coefficients = candidate
        log_lik = candidate_lik

    eta = design @ coefficients
    fitted = expit(eta)
    converged = gradient_norm <= tolerance
    treated = treatments == 1
    if design.shape[1] > 1 and np.ptp(eta) > 0 and eta[treated].min() >= eta[~treated].max():
        raise SingularityError(
            f"The fitted index orders every treated unit above every untreated one; "
            f"the covariates separate treated from untreated units "
            f"(min fitted {fitted.min():.3e}, max fitted {fitted.max():.3e})"
        )
    if not converged and (fitted.min() <= POSITIVITY_FLOOR or fitted.max() >= 1.0 - POSITIVITY_FLOOR):
        raise SingularityError(
            f"Propensity fit diverged after {iteration} iterations with gradient norm {gradient_norm:.3e}; "
            f"fitted propensities range over [{fitted.min():.3e}, {fitted.max():.3e}]"
        )
    if not converged:
        logger.warning("Propensity fit stopped after %d iterations with gradient norm %.3e", iteration, gradient_norm)

    slopes = np.zeros(dataset.q)
    slopes[active] = coefficients[1:]
    return PropensityModel(float(coefficients[0]), slopes, iteration, gradient_norm, converged)


def _rank_revealing_solve(matrix, rhs, names, condition_limit):
    """
    Solve matrix @ x = rhs through a column-pivoted QR

    Args:
        matrix (np.ndarray): Square system
        rhs (np.ndarray): Right-hand side
        names (list): Column names for the rank-deficiency diagnostic
        condition_limit (float): Largest acceptable condition number

    Returns:
        np.ndarray: Solution
    """
    q, r, pivots = scipy.linalg.qr(matrix, pivoting=True)
    condition = np.linalg.cond(matrix)
    if not np.isfinite(condition) or condition > condition_limit:
        diagonal = np.abs(np.diag(r))
        weak = [names[pivots[k]] for k in range(len(diagonal)) if diagonal[k] <= diagonal[0] / np.sqrt(condition_limit)]
        if not weak:
            weak = [names[pivots[-1]]]
        raise RankDeficiencyError(f"Moment matrix condition number {condition:.3e} exceeds {condition_limit:.0e}", weak)

    solution = np.empty_like(rhs)
    solution[pivots] = scipy.linalg.solve_triangular(r, q.T @ rhs)
    return solution


def fit_outcome_alearning(dataset, propensity, baseline_columns=None, condition_limit=CONDITION_LIMIT):
    """
    A-learning estimate of (alpha, beta) from the linear moment system

        sum_i Xb_i (Y_i - Xb_i alpha - Abar_i X_i beta) = 0
        sum_i (Abar_i - ebar_i) X_i (Y_i - Xb_i alpha - Abar_i X_i beta) = 0

    with X = (1, X_out), Xb the baseline design and ebar the exposure expected under the
    fitted propensities.

    Args:
        dataset (Dataset): Data
        propensity (PropensityModel): Fitted propensity model
        baseline_columns (list or None): Covariate subset for the baseline model
        condition_limit (float): Condition number triggering the rank-deficiency error

    Returns:
        OutcomeModel: Fitted model
    """
    n = dataset.n
    design = np.column_stack([np.ones(n), dataset.X_out])
    names = ['intercept'] + list(dataset.covariate_names)
    if baseline_columns is None:
        baseline_design = design
        baseline_names = names
    else:
        baseline_columns = [int(c) for c in baseline_columns]
        baseline_design = np.column_stack([np.ones(n), dataset.X_out[:, baseline_columns]])
        baseline_names = ['intercept'] + [dataset.covariate_names[c] for c in baseline_columns]

    if n <= 2 * design.shape[1]:
        raise DegenerateDataError(f"A-learning needs n > 2(p+1) (n={n}, p={dataset.p})")

    realized = exposure(dataset, dataset.A)
    propensities = np.clip(propensity.predict(dataset.X_int), POSITIVITY_FLOOR, 1.0 - POSITIVITY_FLOOR)
    expected = expected_exposure(dataset, propensities)
    residual = realized - expected

    effect_design = design * realized[:, None]
    instrument = design * residual[:, None]
    matrix = np.block([
        [baseline_design.T @ baseline_design, baseline_design.T @ effect_design],
        [instrument.T @ baseline_design, instrument.T @ effect_design],
    ])
    rhs = np.concatenate([baseline_design.T @ dataset.Y, instrument.T @ dataset.Y])

    column_names = [f"alpha:{name}" for name in baseline_names] + [f"beta:{name}" for name in names]
    theta = _rank_revealing_solve(matrix, rhs, column_names, condition_limit)

    moment_residual = float(np.linalg.norm(matrix @ theta - rhs) / n)
    if moment_residual > MOMENT_TOLERANCE:
        logger.warning("A-learning moment residual %.3e exceeds %.0e", moment_residual, MOMENT_TOLERANCE)

    split = baseline_design.shape[1]
    return OutcomeModel(theta[:split], theta[split:], baseline_columns, moment_residual)


def total_effects(dataset, outcome):
    """
    Per-intervention-unit total effects

        TE_j(s) = (1/n) sum_i 1{S_i = s} / p_s * H_ij * f_A(X_i)

    with p_s the empirical subgroup fractions; the overall effect is the p_s mixture.

    Args:
        dataset (Dataset): Data
        outcome (OutcomeModel): Model supplying f_A

    Returns:
        EffectTable: Effects
    """
    proportions = dataset.subgroup_proportions
    if min(proportions) <= 0:
        raise DegenerateDataError("Total effects need both subgroups to be nonempty")

    effect = outcome.effect(dataset.X_out)
    by_group = []
    for group, share in enumerate(proportions):
        weights = (dataset.S == group) / share
        by_group.append(dataset.H.T @ (weights * effect) / dataset.n)
    return EffectTable.from_groups(by_group[0], by_group[1], proportions)
