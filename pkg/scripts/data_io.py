"""
Data I/O - CSV loaders and writers for outcome units, intervention units and the
interference map
"""
import logging
import os

import numpy as np
import pandas as pd

from core_model import Dataset, InterferenceMap
from errors import DimensionError, ParseError

logger = logging.getLogger(__name__)

OUTCOME_FILE = "outcome_units.csv"
INTERVENTION_FILE = "intervention_units.csv"
INTERFERENCE_FILE = "interference.csv"

OUTCOME_COLUMNS = ('id', 'subgroup', 'outcome')
INTERVENTION_COLUMNS = ('id', 'treatment', 'cost')
TRIPLET_COLUMNS = ('i_id', 'j_id', 'weight')

FLOAT_FORMAT = "%.17g"


def _read_table(path):
    """Read a headered CSV keeping every cell as text"""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as error:
        raise ParseError(path, None, None, "file not found") from error
    except pd.errors.EmptyDataError as error:
        raise ParseError(path, None, None, "file is empty") from error
    except pd.errors.ParserError as error:
        raise ParseError(path, None, None, f"malformed CSV ({error})") from error
    frame.columns = [str(column).strip() for column in frame.columns]
    return frame


def _require_columns(frame, required, path):
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise ParseError(path, None, missing[0], "required column is missing")


def _to_float(text):
    try:
        value = float(text)
    except ValueError:
        return np.nan
    return value if np.isfinite(value) else np.nan


def _numeric(frame, column, path):
    """
    Convert one text column to floats, reporting the first unparseable cell

    Each cell goes through float() so 17-digit values written by save_dataset
    load back bit for bit.

    Args:
        frame (pd.DataFrame): Text table
        column (str): Column name
        path (str): File path for messages

    Returns:
        np.ndarray: Float values
    """
    values = np.array([_to_float(text) for text in frame[column].str.strip()], dtype=float)
    bad = np.isnan(values)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(path, row + 1, column, f"expected a finite number, got '{frame[column].iloc[row]}'")
    return values


def _ids(frame, column, path):
    ids = frame[column].str.strip()
    empty = ids == ''
    if empty.any():
        raise ParseError(path, int(np.flatnonzero(empty.to_numpy())[0]) + 1, column, "empty id")
    duplicated = ids.duplicated()
    if duplicated.any():
        row = int(np.flatnonzero(duplicated.to_numpy())[0])
        raise ParseError(path, row + 1, column, f"duplicate id '{ids.iloc[row]}'")
    return ids.tolist()


def _binary(frame, column, path):
    values = _numeric(frame, column, path)
    bad = ~((values == 0) | (values == 1))
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise ParseError(path, row + 1, column, f"expected 0 or 1, got '{frame[column].iloc[row]}'")
    return values


def _covariates(frame, required, path):
    names = [column for column in frame.columns if column not in required]
    if not names:
        return np.zeros((len(frame), 0)), names
    return np.column_stack([_numeric(frame, name, path) for name in names]), names


def _read_interference(path, outcome_ids, intervention_ids):
    """
    Interference map from a triplet file (i_id, j_id, weight) or a dense matrix whose
    first column holds outcome ids and whose header lists intervention ids

    Args:
        path (str): File path
        outcome_ids (list): Outcome ids in dataset order
        intervention_ids (list): Intervention ids in dataset order

    Returns:
        InterferenceMap: Map of shape (n, J)
    """
    frame = _read_table(path)
    outcome_index = {unit_id: i for i, unit_id in enumerate(outcome_ids)}
    intervention_index = {unit_id: j for j, unit_id in enumerate(intervention_ids)}
    shape = (len(outcome_ids), len(intervention_ids))

    if tuple(frame.columns) == TRIPLET_COLUMNS:
        rows = []
        cols = []
        for column, index, target in (('i_id', outcome_index, rows), ('j_id', intervention_index, cols)):
            for row, unit_id in enumerate(frame[column].str.strip()):
                if unit_id not in index:
                    raise ParseError(path, row + 1, column, f"unknown unit id '{unit_id}'")
                target.append(index[unit_id])
        weights = _numeric(frame, 'weight', path)
        return InterferenceMap.from_triplets(rows, cols, weights, shape)

    id_column = frame.columns[0]
    header = list(frame.columns[1:])
    unknown = [unit_id for unit_id in header if unit_id not in intervention_index]
    if unknown:
        raise ParseError(path, None, unknown[0], "column is not an intervention unit id")
    if len(header) != len(intervention_ids):
        missing = [unit_id for unit_id in intervention_ids if unit_id not in header]
        raise ParseError(path, None, missing[0] if missing else None, "intervention unit column missing")

    row_ids = _ids(frame, id_column, path)
    for row, unit_id in enumerate(row_ids):
        if unit_id not in outcome_index:
            raise ParseError(path, row + 1, id_column, f"unknown outcome unit id '{unit_id}'")
    if len(row_ids) != shape[0]:
        raise DimensionError(f"{path}: {len(row_ids)} rows for {shape[0]} outcome units")

    entries = np.zeros(shape)
    values = np.column_stack([_numeric(frame, unit_id, path) for unit_id in header])
    entries[np.ix_([outcome_index[i] for i in row_ids], [intervention_index[j] for j in header])] = values
    return InterferenceMap(entries)


def load_dataset(outcomes_path, interventions_path, interference_path, standardize=True):
    """
    Load and validate a dataset from its three CSV files

    Args:
        outcomes_path (str): Outcome units: id, subgroup, outcome, then covariates
        interventions_path (str): Intervention units: id, treatment, cost, then covariates
        interference_path (str): Dense or triplet interference map
        standardize (bool): Standardize covariates

    Returns:
        Dataset: Dataset
    """
    outcomes = _read_table(outcomes_path)
    _require_columns(outcomes, OUTCOME_COLUMNS, outcomes_path)
    outcome_ids = _ids(outcomes, 'id', outcomes_path)
    subgroups = _binary(outcomes, 'subgroup', outcomes_path)
    observed = _numeric(outcomes, 'outcome', outcomes_path)
    X_out, covariate_names = _covariates(outcomes, OUTCOME_COLUMNS, outcomes_path)

    interventions = _read_table(interventions_path)
    _require_columns(interventions, INTERVENTION_COLUMNS, interventions_path)
    intervention_ids = _ids(interventions, 'id', interventions_path)
    treatments = _binary(interventions, 'treatment', interventions_path)
    costs = _numeric(interventions, 'cost', interventions_path)
    X_int, intervention_names = _covariates(interventions, INTERVENTION_COLUMNS, interventions_path)

    interference = _read_interference(interference_path, outcome_ids, intervention_ids)

    dataset = Dataset(
        outcome_ids, X_out, subgroups, observed,
        intervention_ids, X_int, treatments, costs,
        interference, standardize=standardize,
        covariate_names=covariate_names, intervention_covariate_names=intervention_names,
    )
    logger.info("Loaded dataset: n=%d, J=%d, p=%d, q=%d", dataset.n, dataset.J, dataset.p, dataset.q)
    return dataset


def load_dataset_directory(directory):
    """Load the three files with their default names from one directory"""
    return load_dataset(
        os.path.join(directory, OUTCOME_FILE),
        os.path.join(directory, INTERVENTION_FILE),
        os.path.join(directory, INTERFERENCE_FILE),
    )


def save_dataset(dataset, directory, triplets=False):
    """
    Write a dataset as three CSV files with round-trip float precision

    Args:
        dataset (Dataset): Dataset
        directory (str): Output directory (created if missing)
        triplets (bool): Write the interference map as nonzero triplets instead of dense

    Returns:
        tuple: (outcomes path, interventions path, interference path)
    """
    os.makedirs(directory, exist_ok=True)
    paths = tuple(os.path.join(directory, name) for name in (OUTCOME_FILE, INTERVENTION_FILE, INTERFERENCE_FILE))

    outcomes = pd.DataFrame({'id': dataset.outcome_ids, 'subgroup': dataset.S.astype(int), 'outcome': dataset.Y})
    for k, name in enumerate(dataset.covariate_names):
        outcomes[name] = dataset.X_out[:, k]
    outcomes.to_csv(paths[0], index=False, float_format=FLOAT_FORMAT)

    interventions = pd.DataFrame({
        'id': dataset.intervention_ids,
        'treatment': dataset.A.astype(int),
        'cost': dataset.costs,
    })
    for k, name in enumerate(dataset.intervention_covariate_names):
        interventions[name] = dataset.X_int[:, k]
    interventions.to_csv(paths[1], index=False, float_format=FLOAT_FORMAT)

    if triplets:
        rows, cols, weights = dataset.interference.to_triplets()
        interference = pd.DataFrame({
            'i_id': [dataset.outcome_ids[i] for i in rows],
            'j_id': [dataset.intervention_ids[j] for j in cols],
            'weight': weights,
        })
    else:
        interference = pd.DataFrame(dataset.H, columns=list(dataset.intervention_ids))
        interference.insert(0, 'id', dataset.outcome_ids)
    interference.to_csv(paths[2], index=False, float_format=FLOAT_FORMAT)

    logger.info("Saved dataset to %s", directory)
    return paths
