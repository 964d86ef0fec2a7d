import logging

import numpy as np
import pytest

from core_model import (Dataset, InterferenceMap, InterventionUnit, OutcomeUnit, Policy, exposure,
                        expected_exposure, policy_cost, standardize_columns, summary_functional,
                        summary_functionals)
from errors import DegenerateDataError, DimensionError, ValidationError


def test_standardize_columns_is_idempotent(rng):
    matrix = rng.normal(3.0, 2.0, (50, 3))
    once = standardize_columns(matrix)
    np.testing.assert_allclose(once.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(once.std(axis=0), 1.0, atol=1e-12)
    assert np.array_equal(standardize_columns(once), once)


def test_zero_variance_column_is_centered_with_warning(caplog):
    matrix = np.column_stack([np.full(4, 2.5), [1.0, 2.0, 3.0, 4.0]])
    with caplog.at_level(logging.WARNING):
        result = standardize_columns(matrix, ['flat', 'ramp'])
    assert np.all(result[:, 0] == 0.0)
    assert "flat" in caplog.text


def test_interference_map_rejects_negative_entries():
    with pytest.raises(ValidationError):
        InterferenceMap([[0.5, -0.1], [0.2, 0.3]])


def test_interference_map_warns_on_zero_rows(caplog):
    with caplog.at_level(logging.WARNING):
        interference = InterferenceMap([[0.0, 0.0], [0.2, 0.3]])
    assert list(interference.zero_rows) == [0]
    assert "not exposed" in caplog.text


def test_from_triplets_sums_duplicates_and_rejects_negative():
    interference = InterferenceMap.from_triplets([0, 0, 1], [1, 1, 0], [0.25, 0.5, 2.0], (2, 2))
    assert interference.entries[0, 1] == 0.75
    assert interference.entries[1, 0] == 2.0
    with pytest.raises(ValidationError):
        InterferenceMap.from_triplets([0], [0], [-1.0], (1, 1))


def test_units_validate_labels():
    with pytest.raises(ValidationError):
        OutcomeUnit("o1", np.zeros(2), 2, 0.0)
    with pytest.raises(ValidationError):
        InterventionUnit("u1", np.zeros(2), 3, 1.0)


def test_dataset_rejects_nonpositive_costs_naming_units(rng, dataset_factory):
    with pytest.raises(ValidationError, match="u1"):
        dataset_factory(rng, J=3, costs=[1.0, 0.0, 2.0])


def test_dataset_requires_both_subgroups(rng):
    with pytest.raises(DegenerateDataError):
        Dataset(["a", "b"], [[0.0], [1.0]], [1, 1], [0.0, 0.0], ["u"], [[0.0]], [1], [1.0], [[1.0], [1.0]])


def test_dataset_shape_mismatch(rng):
    with pytest.raises(DimensionError):
        Dataset(["a", "b"], [[0.0], [1.0]], [0, 1], [0.0, 0.0], ["u"], [[0.0]], [1], [1.0], [[1.0, 1.0]])


def test_dataset_from_units_matches_column_constructor(rng, dataset_factory):
    dataset = dataset_factory(rng, n=6, J=3)
    rebuilt = Dataset.from_units(dataset.outcome_units, dataset.intervention_units, dataset.interference)
    assert np.array_equal(rebuilt.X_out, dataset.X_out)
    assert np.array_equal(rebuilt.costs, dataset.costs)
    assert rebuilt.outcome_ids == dataset.outcome_ids


def test_exposure_examples(rng, dataset_factory):
    dataset = dataset_factory(rng, n=5, J=4)
    assert np.all(exposure(dataset, np.zeros(4)) == 0.0)

    two = Dataset(["a", "b"], [[0.0], [1.0]], [0, 1], [0.0, 0.0], ["u", "v"], [[0.0], [1.0]], [1, 0],
                  [1.0, 1.0], [[1.0, 3.0], [0.0, 1.0]])
    assert exposure(two, [1, 1])[0] == 2.0

    treatments = np.array([1.0, 0.0, 1.0, 1.0])
    expected = [sum(dataset.H[i, j] * treatments[j] for j in range(4)) / 4 for i in range(5)]
    np.testing.assert_allclose(exposure(dataset, treatments), expected, rtol=1e-14)


def test_exposure_rejects_fractional_treatments(rng, dataset_factory):
    dataset = dataset_factory(rng, n=4, J=2)
    with pytest.raises(ValidationError):
        exposure(dataset, [0.5, 1.0])


def test_exposure_linear_and_monotone(rng, dataset_factory):
    dataset = dataset_factory(rng, n=10, J=6)
    for _ in range(1000):
        a = rng.integers(0, 2, 6).astype(float)
        b = rng.integers(0, 2, 6).astype(float)
        union = np.maximum(a, b)
        intersection = np.minimum(a, b)
        np.testing.assert_allclose(exposure(dataset, union) + exposure(dataset, intersection),
                                   exposure(dataset, a) + exposure(dataset, b), atol=1e-12)
        assert np.all(exposure(dataset, intersection) <= exposure(dataset, union) + 1e-15)


def test_expected_exposure_examples(rng, dataset_factory):
    dataset = dataset_factory(rng, n=3, J=3)
    assert np.all(expected_exposure(dataset, np.zeros(3)) == 0.0)
    np.testing.assert_allclose(expected_exposure(dataset, np.ones(3)), exposure(dataset, np.ones(3)))
    e = rng.uniform(0, 1, 3)
    expected = [sum(dataset.H[i, j] * e[j] for j in range(3)) / 3 for i in range(3)]
    np.testing.assert_allclose(expected_exposure(dataset, e), expected, rtol=1e-14)


def test_summary_functional_examples(rng):
    H = np.array([[0.0, 1.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])
    dataset = Dataset(list("abcd"), np.zeros((4, 2)), [0, 1, 0, 1], np.zeros(4), ["u", "v"],
                      [[0.0], [1.0]], [0, 1], [1.0, 1.0], H)
    assert np.all(summary_functional(dataset, 0) == 0.0)
    np.testing.assert_allclose(summary_functional(dataset, 1), [0.5, 0.0, 0.0])


def test_summary_functional_matches_weighted_sum_and_ignores_order(rng, dataset_factory):
    dataset = dataset_factory(rng, n=4, J=3)
    stacked = np.column_stack([dataset.S, dataset.X_out])
    expected = sum(dataset.H[i, 2] * stacked[i] for i in range(4)) / 4
    np.testing.assert_allclose(summary_functional(dataset, 2), expected, atol=1e-15)

    order = [3, 1, 0, 2]
    permuted = Dataset([dataset.outcome_ids[i] for i in order], dataset.X_out[order], dataset.S[order],
                       dataset.Y[order], dataset.intervention_ids, dataset.X_int, dataset.A, dataset.costs,
                       dataset.H[order], standardize=False)
    np.testing.assert_allclose(summary_functional(permuted, 2), summary_functional(dataset, 2), atol=1e-15)
    np.testing.assert_allclose(summary_functionals(dataset)[2], summary_functional(dataset, 2), atol=1e-15)


def test_policy_cost_examples(rng, dataset_factory):
    dataset = dataset_factory(rng, n=4, J=3, costs=[2.0, 3.0, 5.0])
    assert policy_cost(dataset, Policy.zeros(3)) == 0.0
    assert policy_cost(dataset, Policy(np.ones(3))) == dataset.universal_cost == 10.0
    assert policy_cost(dataset, Policy([0.5, 0.2, 1.0])) == pytest.approx(1.0 + 0.6 + 5.0)


def test_policy_rejects_out_of_range():
    with pytest.raises(ValidationError):
        Policy([0.2, 1.5])
    assert Policy.from_treatments([1, 0]).is_binary()
    assert not Policy([0.5, 1.0]).is_binary()


def test_dataset_arrays_are_read_only(rng, dataset_factory):
    dataset = dataset_factory(rng, n=4, J=2)
    with pytest.raises(ValueError):
        dataset.costs[0] = 1.0


def test_subgroup_proportions_and_replication(rng, dataset_factory):
    dataset = dataset_factory(rng, n=10, J=4)
    assert dataset.subgroup_proportions == (0.5, 0.5)
    replica = dataset.with_replication(np.ones(4), np.zeros(10))
    assert np.array_equal(replica.X_out, dataset.X_out)
    assert replica.A.sum() == 4
    assert replica.get_info()['factually_treated'] == 4


def test_quantile_subgroups_split_on_the_covariate(fixture_dataset):
    top_quarter = fixture_dataset.with_quantile_subgroups('x1', 0.75)
    assert [fixture_dataset.outcome_ids[i] for i in np.flatnonzero(top_quarter.S)] == ["o1", "o3", "o7"]
    assert top_quarter.subgroup_proportions == pytest.approx((0.75, 0.25))
    np.testing.assert_array_equal(top_quarter.Y, fixture_dataset.Y)
    np.testing.assert_array_equal(top_quarter.X_out, fixture_dataset.X_out)

    assert fixture_dataset.with_quantile_subgroups('x1', 0.5).S.sum() == 6
    assert fixture_dataset.with_quantile_subgroups('x1', 0.25).S.sum() == 9
    with pytest.raises(ValidationError):
        fixture_dataset.with_quantile_subgroups('income', 0.75)
    with pytest.raises(ValidationError):
        fixture_dataset.with_quantile_subgroups('x1', 1.0)
