import warnings
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import expit

from errors import SimulationError, ValidationError
from fair_solver import Method, SolveConfig, min_welfare_reference
from simulation import (EffectRegime, MonteCarloRunner, SimConfig, SubgroupRule, build_dataset, calibrate_intercepts,
                        default_coefficients, generate_dataset, generate_structure, run_monte_carlo)

SMALL = dict(n=300, J=30, p=2, q=2, replications=3, seed=99)


def test_default_coefficients_lengths_and_regimes():
    theta, gamma = default_coefficients(5, 5)
    assert theta.shape == (12,) and gamma.shape == (6,)
    asymmetric, _ = default_coefficients(5, 5, EffectRegime.ASYMMETRIC)
    assert asymmetric[6] == -0.5 and asymmetric[7] == 1.0
    np.testing.assert_array_equal(asymmetric[:6], theta[:6])
    with pytest.raises(ValidationError):
        default_coefficients(20, 5)


def test_sim_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(snr=0.0)
    with pytest.raises(ValidationError):
        SimConfig(p=2, theta0=np.zeros(4))
    with pytest.raises(ValidationError):
        SimConfig(subgroup_rule="random")
    config = SimConfig.from_settings({'simulation': {'n': 50, 'unknown': 1}}, J=7, seed=None)
    assert (config.n, config.J) == (50, 7)


def test_generate_dataset_is_deterministic():
    config = SimConfig(**SMALL)
    first, _ = generate_dataset(config)
    second, _ = generate_dataset(config)
    assert np.array_equal(first.Y, second.Y)
    assert np.array_equal(first.A, second.A)
    assert np.array_equal(first.H, second.H)
    other, _ = generate_dataset(replace(config, seed=100))
    assert not np.array_equal(first.Y, other.Y)


def test_structure_is_shared_across_replications():
    config = SimConfig(**SMALL)
    runner = MonteCarloRunner(config, [Method.FACTUAL], [0.5], estimate=False)
    records_a = runner.run_replication(0)[0]
    records_b = runner.run_replication(1)[0]
    assert records_a[0].replication == 0 and records_b[0].replication == 1
    assert runner.true_effects.J == config.J


@pytest.mark.parametrize('rule', SubgroupRule.ALL)
def test_subgroups_are_balanced(rule):
    config = SimConfig(n=500, J=10, p=2, q=2, subgroup_rule=rule)
    structure = generate_structure(config, np.random.default_rng(3))
    assert structure.subgroups.sum() == 250


def test_interference_mean_matches_exposure_scale():
    config = SimConfig(n=100, J=10, p=2, q=2, exposure_scale=2.0)
    structure = generate_structure(config, np.random.default_rng(5))
    assert structure.H.mean() == pytest.approx(2.0)
    assert np.all(structure.H > 0)


def test_calibration_hits_targets():
    config = SimConfig(n=2000, J=40)
    calibrated = calibrate_intercepts(config)
    structure_seed, _ = calibrated.seed_streams()
    structure = generate_structure(calibrated, np.random.default_rng(structure_seed))

    propensities = expit(calibrated.gamma0[0] + structure.X_int @ calibrated.gamma0[1:])
    assert abs(propensities.mean() - 0.23) <= 0.01

    expected = structure.H @ propensities / calibrated.J
    mean = calibrated.truth.outcome.mean_outcome(structure.X_out, expected)
    assert abs(mean.mean() - 0.046) <= 0.01
    np.testing.assert_array_equal(calibrated.gamma0[1:], config.gamma0[1:])
    np.testing.assert_array_equal(calibrated.theta0[1:], config.theta0[1:])


def test_calibration_leaves_intercepts_within_tolerance():
    config = calibrate_intercepts(SimConfig(**SMALL))
    again = calibrate_intercepts(config)
    assert again.gamma0[0] == config.gamma0[0]
    assert again.theta0[0] == config.theta0[0]


def test_noise_variance_follows_snr():
    config = SimConfig(n=10000, J=30, p=2, q=2, snr=3.0, seed=17)
    noisy, _ = generate_dataset(config)
    clean, _ = generate_dataset(replace(config, noise=False))
    ratio = np.var(noisy.Y - clean.Y) / np.var(clean.Y)
    assert ratio == pytest.approx(1.0 / 3.0, abs=0.03)


def test_monte_carlo_is_reproducible():
    config = SimConfig(**SMALL)
    methods = [Method.FAIR, Method.WELFARE_MAX, Method.FACTUAL]
    first = run_monte_carlo(config, methods, [0.2, 0.5], solve_config=SolveConfig(K=3))
    second = run_monte_carlo(config, methods, [0.2, 0.5], solve_config=SolveConfig(K=3))
    assert first.frame().equals(second.frame())
    assert len(first.records) == first.completed * 2 * 3


def test_threaded_replications_match_serial():
    config = SimConfig(**SMALL)
    serial = run_monte_carlo(config, [Method.OPTIMAL], [0.3], estimate=False)
    threaded = run_monte_carlo(replace(config, workers=3), [Method.OPTIMAL], [0.3], estimate=False)
    assert serial.frame().equals(threaded.frame())


def test_asymmetric_regime_fair_versus_welfare_max():
    config = SimConfig(n=400, J=30, p=2, q=2, replications=2, effect_regime=EffectRegime.ASYMMETRIC)
    # K = 5 places a gridpoint at the group-0 share 0.5
    result = run_monte_carlo(config, [Method.FAIR, Method.WELFARE_MAX], [0.3, 0.6], estimate=False,
                             solve_config=SolveConfig(K=5))
    summary = result.summary().set_index(['method', 'budget'])
    for budget in (0.3, 0.6):
        fair = summary.loc[(Method.FAIR, budget)]
        welfare = summary.loc[(Method.WELFARE_MAX, budget)]
        assert fair['disparity_mean'] <= welfare['disparity_mean'] + 1e-9
        assert welfare['population_mean'] <= fair['population_mean'] + 1e-9


def test_factual_without_treatments_has_zero_welfare():
    config = SimConfig(**SMALL, gamma0=[-30.0, 0.0, 0.0])
    result = run_monte_carlo(config, [Method.FACTUAL], [0.5], estimate=False)
    frame = result.frame()
    assert (frame['treated'] == 0).all()
    assert (frame['w0'] == 0).all() and (frame['w1'] == 0).all()


def test_too_many_failed_replications_raise():
    config = SimConfig(**SMALL, gamma0=[-30.0, 0.0, 0.0])
    with pytest.raises(SimulationError):
        run_monte_carlo(config, [Method.FACTUAL], [0.5])


def test_oracle_regret_is_zero_when_learning_from_true_effects():
    config = SimConfig(**SMALL)
    result = run_monte_carlo(config, [Method.FAIR], [0.2, 0.4], estimate=False,
                             solve_config=SolveConfig(K=3), with_oracle=True)
    regret = result.regret()
    assert sorted(regret) == [0.2, 0.4]
    assert all(gap == pytest.approx(0.0, abs=1e-12) for gap in regret.values())


def test_noise_free_estimation_recovers_beta():
    config = SimConfig(**SMALL, noise=False)
    result = run_monte_carlo(config, [Method.OPTIMAL], [0.5])
    assert result.beta_rmse() < 1e-6


def test_summary_and_serialization():
    config = SimConfig(**SMALL)
    result = run_monte_carlo(config, [Method.WELFARE_MAX], [0.5], disparity_caps=[0.01, 0.1], estimate=False)
    with warnings.catch_warnings():
        warnings.simplefilter('error', FutureWarning)
        summary = result.summary()
    assert sorted(summary['cap'].tolist()) == [0.01, 0.1]
    assert (summary['feasible'] == config.replications).all()
    curve = result.curve(Method.WELFARE_MAX, 'disparity', by='cap')
    assert [x for x, _ in curve] == [0.01, 0.1]
    payload = result.to_dict()
    assert payload['completed'] == config.replications
    assert payload['beta_rmse'] is None


@pytest.mark.slow
def test_fair_policy_narrows_disparity_with_estimated_effects():
    config = calibrate_intercepts(SimConfig(n=2000, J=40, p=2, q=2, replications=10, seed=5))
    result = run_monte_carlo(config, [Method.FAIR, Method.WELFARE_MAX], [0.5, 1.0],
                             solve_config=SolveConfig(K=5))
    assert result.completed == 10
    for budget in (0.5, 1.0):
        fair = dict(result.curve(Method.FAIR, 'disparity'))[budget]
        welfare = dict(result.curve(Method.WELFARE_MAX, 'disparity'))[budget]
        assert fair < welfare


@pytest.mark.slow
def test_regret_shrinks_with_more_outcome_units():
    def mean_regret(n):
        config = SimConfig(n=n, J=40, p=2, q=2, replications=40, seed=31)
        result = run_monte_carlo(config, [Method.FAIR], [0.3, 0.6], solve_config=SolveConfig(K=5), with_oracle=True)
        return float(np.mean(list(result.regret().values())))

    regret = [mean_regret(n) for n in (250, 1000, 4000)]
    assert regret[1] <= regret[0] + 0.02
    assert regret[2] <= regret[1] + 0.02
    assert regret[2] < regret[0]


@pytest.mark.slow
def test_welfare_max_disparity_grows_with_budget():
    config = SimConfig(n=2000, J=40, p=2, q=2, replications=20, seed=8, effect_regime=EffectRegime.ASYMMETRIC)
    budgets = [round(0.1 * k, 1) for k in range(1, 10)]
    result = run_monte_carlo(config, [Method.WELFARE_MAX, Method.FAIR], budgets, solve_config=SolveConfig(K=5))
    disparity = [value for _, value in result.curve(Method.WELFARE_MAX, 'disparity')]
    assert all(later >= earlier - 1e-9 for earlier, later in zip(disparity, disparity[1:]))
    fair = dict(result.curve(Method.FAIR, 'disparity'))
    for budget, value in result.curve(Method.WELFARE_MAX, 'disparity'):
        assert fair[budget] <= value + 1e-9


def test_min_welfare_reference_is_resolved_per_replication():
    config = SimConfig(**SMALL)
    runner = MonteCarloRunner(config, [Method.WELFARE_MAX, Method.FAIR], [0.6], estimate=False,
                              solve_config=SolveConfig(K=3), min_welfare_ref=0.3)
    records, _ = runner.run_replication(0)
    template = build_dataset(runner.structure, np.zeros(config.J), np.zeros(config.n))
    target = min_welfare_reference(runner.true_effects, template, SolveConfig(budget=0.3), 0.3)

    welfare = [record for record in records if record.method == Method.WELFARE_MAX]
    assert welfare and all(record.feasible for record in welfare)
    assert all(record.w0 <= target + 1e-9 for record in records if record.feasible)

    with pytest.raises(ValidationError):
        MonteCarloRunner(config, [Method.FAIR], [0.6], min_welfare_ref=1.5)


def test_summary_of_uncapped_runs_raises_no_warnings():
    config = SimConfig(**SMALL)
    result = run_monte_carlo(config, [Method.FAIR, Method.FACTUAL], [0.5], estimate=False,
                             solve_config=SolveConfig(K=3))
    with warnings.catch_warnings():
        warnings.simplefilter('error', FutureWarning)
        summary = result.summary()
    assert summary['cap'].isna().all()
    assert summary['w0_mean'].dtype == float
