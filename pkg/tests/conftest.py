"""
Shared fixtures: scripts/ on the import path, small random datasets and effect tables
"""
import os
import sys

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, 'scripts'))

from core_model import Dataset  # noqa: E402
from data_io import load_dataset_directory  # noqa: E402
from estimation import EffectTable  # noqa: E402

FIXTURE_DIR = os.path.join(ROOT, 'data', 'fixture')


def random_dataset(rng, n=40, J=8, p=2, q=2, costs=None, treatments=None, H=None):
    """Dataset with alternating subgroups, random covariates, outcomes and interference"""
    if treatments is None:
        treatments = (np.arange(J) % 2 == 0).astype(float)
    if costs is None:
        costs = rng.uniform(1.0, 10.0, J)
    if H is None:
        H = rng.uniform(0.0, 1.0, (n, J))
    return Dataset(
        outcome_ids=[f"o{i}" for i in range(n)],
        outcome_covariates=rng.standard_normal((n, p)),
        subgroups=np.arange(n) % 2,
        outcomes=rng.standard_normal(n),
        intervention_ids=[f"u{j}" for j in range(J)],
        intervention_covariates=rng.standard_normal((J, q)),
        factual_treatments=treatments,
        costs=costs,
        interference=H,
    )


def random_effects(rng, J, proportions=(0.5, 0.5), loc0=0.0, loc1=0.0):
    """Effect table with normal subgroup effects"""
    te0 = rng.normal(loc0, 1.0, J)
    te1 = rng.normal(loc1, 1.0, J)
    return EffectTable.from_groups(te0, te1, proportions)


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def dataset_factory():
    return random_dataset


@pytest.fixture
def effects_factory():
    return random_effects


@pytest.fixture
def fixture_dataset():
    return load_dataset_directory(FIXTURE_DIR)


@pytest.fixture
def fixture_dir():
    return FIXTURE_DIR


@pytest.fixture(autouse=True)
def pinned_timestamp(monkeypatch):
    monkeypatch.setenv('SOURCE_DATE_EPOCH', '1714521600')
    monkeypatch.delenv('FAIRBNI_SEED', raising=False)
