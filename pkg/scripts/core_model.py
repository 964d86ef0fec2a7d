"""
Core model - bipartite data model, exposure mapping, summary functional and policies
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from errors import DegenerateDataError, DimensionError, ValidationError

logger = logging.getLogger(__name__)

STANDARDIZED_TOLERANCE = 1e-12


def _read_only(array):
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def _as_vector(values, length, name):
    """
    Coerce values to a 1-D float vector of the expected length

    Args:
        values: Array-like input
        length (int): Required length
        name (str): Name used in error messages

    Returns:
        np.ndarray: Float vector
    """
    vector = np.asarray(values, dtype=float)
    if vector.ndim != 1 or vector.shape[0] != length:
        raise DimensionError(f"{name} must have length {length}, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise ValidationError(f"{name} contains NaN or infinite values")
    return vector


def standardize_columns(matrix, labels=None):
    """
    Standardize each column to zero mean and unit variance

    Columns already standardized (within 1e-12) are left untouched, which makes the
    operation exactly idempotent. Zero-variance columns are only centered.

    Args:
        matrix (np.ndarray): Matrix of shape (rows, columns)
        labels (list or None): Column names for log messages

    Returns:
        np.ndarray: Standardized copy
    """
    matrix = np.array(matrix, dtype=float, copy=True)
    if matrix.ndim != 2 or matrix.shape[0] == 0:
        return matrix

    for col in range(matrix.shape[1]):
        column = matrix[:, col]
        mean = column.mean()
        std = column.std()
        centered = abs(mean) <= STANDARDIZED_TOLERANCE
        if std <= STANDARDIZED_TOLERANCE * max(1.0, abs(mean)):
            if not centered:
                label = labels[col] if labels is not None else col
                logger.warning("Covariate %s has zero variance; centering only", label)
                matrix[:, col] = column - mean
            continue
        if centered and abs(std - 1.0) <= STANDARDIZED_TOLERANCE:
            continue
        matrix[:, col] = (column - mean) / std

    return matrix


@dataclass(frozen=True, eq=False)
class OutcomeUnit:
    """Outcome-side node: covariates, subgroup label and observed outcome"""

    id: str
    covariates: np.ndarray
    subgroup: int
    outcome: float

    def __post_init__(self):
        if self.subgroup not in (0, 1):
            raise ValidationError(f"Outcome unit {self.id}: subgroup must be 0 or 1, got {self.subgroup}")
        object.__setattr__(self, 'covariates', _read_only(self.covariates))


@dataclass(frozen=True, eq=False)
class InterventionUnit:
    """Intervention-side node: covariates, factual treatment and treatment cost"""

    id: str
    covariates: np.ndarray
    factual_treatment: int
    cost: float

    def __post_init__(self):
        if self.factual_treatment not in (0, 1):
            raise ValidationError(
                f"Intervention unit {self.id}: factual treatment must be 0 or 1, got {self.factual_treatment}"
            )
        object.__setattr__(self, 'covariates', _read_only(self.covariates))


class InterferenceMap:
    """
    Dense n x J nonnegative matrix linking intervention units to outcome units
    """

    def __init__(self, entries):
        """
        Initialize interference map

        Args:
            entries (array-like): Matrix of shape (n, J), all entries >= 0
        """
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2:
            raise DimensionError(f"Interference map must be 2-D, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValidationError("Interference map contains NaN or infinite entries")
        if np.any(entries < 0):
            rows, cols = np.nonzero(entries < 0)
            raise ValidationError(
                f"Interference map has {rows.size} negative entries (first at row {rows[0]}, column {cols[0]})"
            )
        self.entries = _read_only(entries)

        zero_rows = self.zero_rows
        if zero_rows.size:
            logger.warning(
                "%d outcome units are not exposed to any intervention unit (first index %d)",
                zero_rows.size, zero_rows[0]
            )

    @classmethod
    def from_triplets(cls, rows, cols, weights, shape):
        """
        Build a dense map from coordinate triplets; duplicate coordinates are summed

        Args:
            rows (array-like): Outcome unit indices
            cols (array-like): Intervention unit indices
            weights (array-like): Nonnegative weights
            shape (tuple): (n, J)

        Returns:
            InterferenceMap: Dense map
        """
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        weights = np.asarray(weights, dtype=float)
        if not (rows.shape == cols.shape == weights.shape):
            raise DimensionError("Triplet arrays must have equal length")
        if np.any(weights < 0):
            bad = int(np.flatnonzero(weights < 0)[0])
            raise ValidationError(f"Negative interference weight {weights[bad]} at triplet {bad}")
        n, J = shape
        if rows.size and (rows.min() < 0 or rows.max() >= n or cols.min() < 0 or cols.max() >= J):
            raise DimensionError(f"Triplet index outside shape {shape}")

        entries = np.zeros((n, J))
        np.add.at(entries, (rows, cols), weights)
        return cls(entries)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def zero_rows(self):
        """Indices of outcome units with no exposure at all"""
        return np.flatnonzero(~np.any(self.entries > 0, axis=1))

    def to_triplets(self):
        """
        Nonzero entries as coordinate triplets

        Returns:
            tuple: (rows, cols, weights)
        """
        rows, cols = np.nonzero(self.entries)
        return rows, cols, self.entries[rows, cols]


@dataclass(frozen=True, eq=False)
class Policy:
    """Treatment probability for every intervention unit"""

    probabilities: np.ndarray

    def __post_init__(self):
        probabilities = np.asarray(self.probabilities, dtype=float)
        if probabilities.ndim != 1:
            raise DimensionError(f"Policy must be a vector, got shape {probabilities.shape}")
        if not np.all(np.isfinite(probabilities)):
            raise ValidationError("Policy contains NaN or infinite probabilities")
        if np.any(probabilities < 0) or np.any(probabilities > 1):
            raise ValidationError("Policy probabilities must lie in [0, 1]")
        object.__setattr__(self, 'probabilities', _read_only(probabilities))

    @classmethod
    def zeros(cls, size):
        return cls(np.zeros(size))

    @classmethod
    def from_treatments(cls, treatments):
        """Deterministic policy from a binary treatment vector"""
        return cls(np.asarray(treatments, dtype=float))

    @property
    def size(self):
        return self.probabilities.shape[0]

    @property
    def treated_count(self):
        """Expected number of treated intervention units"""
        return float(self.probabilities.sum())

    def is_binary(self):
        return bool(np.all((self.probabilities == 0) | (self.probabilities == 1)))


class Dataset:
    """
    Joint bipartite data: outcome units, intervention units and the interference map

    Arrays are read-only after construction; replications share covariates and H.
    """

    def __init__(self, outcome_ids, outcome_covariates, subgroups, outcomes,
                 intervention_ids, intervention_covariates, factual_treatments, costs,
                 interference, standardize=True, covariate_names=None, intervention_covariate_names=None):
        """
        Initialize dataset from column arrays

        Args:
            outcome_ids (list): n outcome unit ids
            outcome_covariates (array-like): (n, p) outcome covariates
            subgroups (array-like): n subgroup labels in {0, 1}
            outcomes (array-like): n observed outcomes
            intervention_ids (list): J intervention unit ids
            intervention_covariates (array-like): (J, q) intervention covariates
            factual_treatments (array-like): J factual treatments in {0, 1}
            costs (array-like): J treatment costs, all > 0
            interference (InterferenceMap or array-like): (n, J) map
            standardize (bool): Standardize covariates (idempotent)
            covariate_names (list or None): Outcome covariate names
            intervention_covariate_names (list or None): Intervention covariate names
        """
        self.outcome_ids = tuple(str(i) for i in outcome_ids)
        self.intervention_ids = tuple(str(j) for j in intervention_ids)
        n = len(self.outcome_ids)
        J = len(self.intervention_ids)

        X_out = np.asarray(outcome_covariates, dtype=float).reshape(n, -1)
        X_int = np.asarray(intervention_covariates, dtype=float).reshape(J, -1)
        if not (np.all(np.isfinite(X_out)) and np.all(np.isfinite(X_int))):
            raise ValidationError("Covariates contain NaN or infinite values")

        self.covariate_names = tuple(covariate_names or (f"x{k + 1}" for k in range(X_out.shape[1])))
        self.intervention_covariate_names = tuple(
            intervention_covariate_names or (f"z{k + 1}" for k in range(X_int.shape[1]))
        )
        if len(self.covariate_names) != X_out.shape[1] or len(self.intervention_covariate_names) != X_int.shape[1]:
            raise DimensionError("Covariate names do not match covariate columns")

        if standardize:
            X_out = standardize_columns(X_out, self.covariate_names)
            X_int = standardize_columns(X_int, self.intervention_covariate_names)

        subgroups = _as_vector(subgroups, n, "subgroups")
        if not np.all((subgroups == 0) | (subgroups == 1)):
            raise ValidationError("Subgroup labels must be 0 or 1")
        if not (np.any(subgroups == 0) and np.any(subgroups == 1)):
            raise DegenerateDataError("Both subgroups must contain at least one outcome unit")

        treatments = _as_vector(factual_treatments, J, "factual treatments")
        if not np.all((treatments == 0) | (treatments == 1)):
            raise ValidationError("Factual treatments must be 0 or 1")

        costs = _as_vector(costs, J, "costs")
        if np.any(costs <= 0):
            bad = [self.intervention_ids[j] for j in np.flatnonzero(costs <= 0)]
            raise ValidationError(f"Treatment costs must be positive; offending units: {', '.join(bad)}")

        if not isinstance(interference, InterferenceMap):
            interference = InterferenceMap(interference)
        if interference.shape != (n, J):
            raise DimensionError(f"Interference map shape {interference.shape} does not match ({n}, {J})")

        self.X_out = _read_only(X_out)
        self.X_int = _read_only(X_int)
        self.S = _read_only(subgroups)
        self.Y = _read_only(_as_vector(outcomes, n, "outcomes"))
        self.A = _read_only(treatments)
        self.costs = _read_only(costs)
        self.interference = interference

    @classmethod
    def from_units(cls, outcome_units, intervention_units, interference, standardize=True):
        """
        Build a dataset from unit records

        Args:
            outcome_units (list): OutcomeUnit records
            intervention_units (list): InterventionUnit records
            interference (InterferenceMap): (n, J) map
            standardize (bool): Standardize covariates

        Returns:
            Dataset: Validated dataset
        """
        p_values = {unit.covariates.shape[0] for unit in outcome_units}
        q_values = {unit.covariates.shape[0] for unit in intervention_units}
        if len(p_values) > 1 or len(q_values) > 1:
            raise DimensionError("All units on one side must share the covariate length")

        return cls(
            outcome_ids=[unit.id for unit in outcome_units],
            outcome_covariates=np.array([unit.covariates for unit in outcome_units]),
            subgroups=[unit.subgroup for unit in outcome_units],
            outcomes=[unit.outcome for unit in outcome_units],
            intervention_ids=[unit.id for unit in intervention_units],
            intervention_covariates=np.array([unit.covariates for unit in intervention_units]),
            factual_treatments=[unit.factual_treatment for unit in intervention_units],
            costs=[unit.cost for unit in intervention_units],
            interference=interference,
            standardize=standardize,
        )

    def with_replication(self, treatments, outcomes):
        """
        Copy sharing covariates and H but with new treatments and outcomes

        Args:
            treatments (array-like): J binary treatments
            outcomes (array-like): n outcomes

        Returns:
            Dataset: New dataset
        """
        return Dataset(
            self.outcome_ids, self.X_out, self.S, outcomes,
            self.intervention_ids, self.X_int, treatments, self.costs,
            self.interference, standardize=False,
            covariate_names=self.covariate_names,
            intervention_covariate_names=self.intervention_covariate_names,
        )

    def with_quantile_subgroups(self, covariate, quantile):
        """
        Copy whose subgroup marks outcome units strictly above a covariate quantile

        Standardization is monotone, so the split matches the one on raw values.

        Args:
            covariate (str): Outcome covariate name
            quantile (float): Threshold quantile in (0, 1), e.g. 0.75 for the top quarter

        Returns:
            Dataset: New dataset with S_i = 1 when the covariate exceeds the threshold
        """
        if covariate not in self.covariate_names:
            raise ValidationError(f"Unknown outcome covariate '{covariate}'")
        if not 0.0 < quantile < 1.0:
            raise ValidationError(f"Subgroup quantile must lie in (0, 1), got {quantile}")
        values = self.X_out[:, self.covariate_names.index(covariate)]
        threshold = float(np.quantile(values, quantile))
        subgroups = (values > threshold).astype(float)
        logger.info("Subgroup 1: %s above its %g quantile (%d of %d outcome units)",
                    covariate, quantile, int(subgroups.sum()), self.n)
        return Dataset(
            self.outcome_ids, self.X_out, subgroups, self.Y,
            self.intervention_ids, self.X_int, self.A, self.costs,
            self.interference, standardize=False,
            covariate_names=self.covariate_names,
            intervention_covariate_names=self.intervention_covariate_names,
        )

    @property
    def H(self):
        return self.interference.entries

    @property
    def n(self):
        return len(self.outcome_ids)

    @property
    def J(self):
        return len(self.intervention_ids)

    @property
    def p(self):
        return self.X_out.shape[1]

    @property
    def q(self):
        return self.X_int.shape[1]

    @property
    def universal_cost(self):
        """Cost of treating every intervention unit"""
        return float(self.costs.sum())

    @property
    def subgroup_proportions(self):
        """Empirical (p0, p1)"""
        p1 = float(self.S.mean())
        return 1.0 - p1, p1

    @cached_property
    def outcome_units(self):
        return tuple(
            OutcomeUnit(uid, self.X_out[i], int(self.S[i]), float(self.Y[i]))
            for i, uid in enumerate(self.outcome_ids)
        )

    @cached_property
    def intervention_units(self):
        return tuple(
            InterventionUnit(uid, self.X_int[j], int(self.A[j]), float(self.costs[j]))
            for j, uid in enumerate(self.intervention_ids)
        )

    def get_info(self):
        """
        Summary for logs and reports

        Returns:
            dict: Dimensions, subgroup sizes, treated count and universal cost
        """
        return {
            'n': self.n,
            'J': self.J,
            'p': self.p,
            'q': self.q,
            'n0': int(np.sum(self.S == 0)),
            'n1': int(np.sum(self.S == 1)),
            'factually_treated': int(self.A.sum()),
            'universal_cost': self.universal_cost,
        }


def exposure(dataset, treatments):
    """
    Exposure mapping: (1/J) * sum_j H_ij A_j for every outcome unit

    Args:
        dataset (Dataset): Data
        treatments (array-like): J binary treatments

    Returns:
        np.ndarray: n exposures
    """
    treatments = _as_vector(treatments, dataset.J, "treatments")
    if not np.all((treatments == 0) | (treatments == 1)):
        raise ValidationError("Treatments must be 0 or 1")
    return dataset.H @ treatments / dataset.J


def expected_exposure(dataset, propensities):
    """
    Exposure under treatment probabilities: (1/J) * sum_j H_ij e_j

    Args:
        dataset (Dataset): Data
        propensities (array-like): J probabilities in [0, 1]

    Returns:
        np.ndarray: n expected exposures
    """
    propensities = _as_vector(propensities, dataset.J, "propensities")
    if np.any(propensities < 0) or np.any(propensities > 1):
        raise ValidationError("Propensities must lie in [0, 1]")
    return dataset.H @ propensities / dataset.J


def summary_functional(dataset, j):
    """
    H_j-weighted summary of the stacked (subgroup, covariates) rows:
    (1/n) * sum_i H_ij (S_i, X_i)

    Args:
        dataset (Dataset): Data
        j (int): Intervention unit index

    Returns:
        np.ndarray: Vector of length p + 1, subgroup component first
    """
    if not 0 <= j < dataset.J:
        raise ValidationError(f"Intervention index {j} out of range [0, {dataset.J})")
    stacked = np.column_stack([dataset.S, dataset.X_out])
    return dataset.H[:, j] @ stacked / dataset.n


def summary_functionals(dataset):
    """All J summaries as a (J, p + 1) matrix"""
    stacked = np.column_stack([dataset.S, dataset.X_out])
    return dataset.H.T @ stacked / dataset.n


def policy_cost(dataset, policy):
    """
    Expected cost sum_j pi_j c_j

    Args:
        dataset (Dataset): Data
        policy (Policy): Policy of length J

    Returns:
        float: Cost
    """
    if policy.size != dataset.J:
        raise DimensionError(f"Policy length {policy.size} does not match J={dataset.J}")
    return float(policy.probabilities @ dataset.costs)
