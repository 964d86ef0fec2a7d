import json

import pytest

import cli
from cli import build_parser, main
from errors import EXIT_INFEASIBLE, EXIT_OK, EXIT_VALIDATION
from simulation import run_monte_carlo


def _read_tsv(path):
    lines = open(path).read().splitlines()
    assert lines[0].startswith("# manifest ")
    header = lines[1].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[2:]]


def test_parser_defaults():
    args = build_parser().parse_args(['solve', '--data', 'somewhere'])
    assert args.method == "fair"
    assert args.budget == 1.0
    assert args.mode is None


def test_estimate_writes_effects(tmp_path, fixture_dir):
    assert main(['--out', str(tmp_path), 'estimate', '--data', fixture_dir]) == EXIT_OK
    report = json.loads((tmp_path / "effects.json").read_text())
    assert report['manifest']['command'] == "estimate"
    assert set(report['manifest']['inputs']) == {"outcome_units.csv", "intervention_units.csv", "interference.csv"}
    rows = _read_tsv(tmp_path / "effects.tsv")
    assert [row['id'] for row in rows] == ["u1", "u2", "u3", "u4", "u5", "u6"]


def test_solve_respects_budget(tmp_path, fixture_dir):
    assert main(['--out', str(tmp_path), 'solve', '--data', fixture_dir, '--budget', '0.5', '--K', '3']) == EXIT_OK
    report = json.loads((tmp_path / "solve_fair.json").read_text())
    assert report['status'] == "optimal"
    assert report['budget']['absolute'] == pytest.approx(300.0)
    assert report['report']['cost'] <= 300.0 + 1e-6
    rows = _read_tsv(tmp_path / "decisions_fair.tsv")
    assert all(0.0 <= float(row['pi']) <= 1.0 for row in rows)


def test_solve_with_rounding_and_welfare_max(tmp_path, fixture_dir):
    code = main(['--out', str(tmp_path), 'solve', '--data', fixture_dir, '--method', 'welfare_max',
                 '--budget', '0.4', '--round'])
    assert code == EXIT_OK
    rows = _read_tsv(tmp_path / "decisions_welfare_max.tsv")
    assert all(row['rounded'] in ("0.0", "1.0") for row in rows)


def test_infeasible_solve_exits_three(tmp_path, fixture_dir):
    # Augmentation pins the factual units (cost 360), above 10% of the universal cost
    code = main(['--out', str(tmp_path), 'solve', '--data', fixture_dir, '--mode', 'augment', '--budget', '0.1'])
    assert code == EXIT_INFEASIBLE
    report = json.loads((tmp_path / "solve_fair.json").read_text())
    assert report['status'] == "infeasible"
    assert report['policy'] is None


def test_sweep_rows_follow_budgets(tmp_path, fixture_dir):
    code = main(['--out', str(tmp_path), 'sweep', '--data', fixture_dir, '--budgets', '0.5,0.2',
                 '--methods', 'fair,optimal', '--K', '3'])
    assert code == EXIT_OK
    rows = _read_tsv(tmp_path / "sweep_budgets.tsv")
    assert [(row['x'], row['method']) for row in rows] == [
        ("0.2", "fair"), ("0.2", "optimal"), ("0.5", "fair"), ("0.5", "optimal"),
    ]


def test_cap_sweep(tmp_path, fixture_dir):
    code = main(['--out', str(tmp_path), 'sweep', '--data', fixture_dir, '--caps', '0,0.001'])
    assert code == EXIT_OK
    rows = _read_tsv(tmp_path / "sweep_caps.tsv")
    assert [row['method'] for row in rows] == ["welfare_max", "welfare_max"]
    assert all(float(row['disparity']) <= float(row['x']) + 1e-9 for row in rows)


def test_simulate_is_reproducible(tmp_path):
    arguments = ['simulate', '--reps', '1', '--n', '200', '--J', '20', '--budgets', '0.5',
                 '--methods', 'optimal,factual', '--oracle']
    assert main(['--out', str(tmp_path / "a")] + arguments) == EXIT_OK
    assert main(['--out', str(tmp_path / "b")] + arguments) == EXIT_OK
    for name in ("simulation.json", "simulation_curves.tsv"):
        assert (tmp_path / "a" / name).read_text() == (tmp_path / "b" / name).read_text()
    report = json.loads((tmp_path / "a" / "simulation.json").read_text())
    assert report['manifest']['seed'] == 20240501


def test_simulate_emits_dataset(tmp_path):
    emitted = tmp_path / "data"
    code = main(['--out', str(tmp_path), 'simulate', '--reps', '1', '--n', '100', '--J', '10', '--budgets', '0.5',
                 '--methods', 'factual', '--oracle', '--emit-dataset', str(emitted)])
    assert code == EXIT_OK
    for name in ("outcome_units.csv", "intervention_units.csv", "interference.csv"):
        assert (emitted / name).exists()
    assert len((emitted / "outcome_units.csv").read_text().splitlines()) == 101


def test_usage_errors_exit_two(tmp_path):
    with pytest.raises(SystemExit) as error:
        main(['--out', str(tmp_path), 'solve'])
    assert error.value.code == 2
    with pytest.raises(SystemExit) as error:
        main(['solve', '--data', 'x', '--budget', '-1'])
    assert error.value.code == 2


def test_validation_errors_exit_two(tmp_path):
    (tmp_path / "outcome_units.csv").write_text("id,subgroup,outcome\na,0,x\n")
    (tmp_path / "intervention_units.csv").write_text("id,treatment,cost\nu,1,1\n")
    (tmp_path / "interference.csv").write_text("id,u\na,1\n")
    assert main(['--out', str(tmp_path / "out"), 'estimate', '--data', str(tmp_path)]) == EXIT_VALIDATION


def test_simulate_forwards_min_welfare_reference(tmp_path, monkeypatch):
    seen = []

    def recording_run(*args, **kwargs):
        seen.append(kwargs['min_welfare_ref'])
        return run_monte_carlo(*args, **kwargs)

    monkeypatch.setattr(cli, 'run_monte_carlo', recording_run)
    arguments = ['simulate', '--reps', '1', '--n', '200', '--J', '20', '--budgets', '0.6',
                 '--methods', 'welfare_max', '--oracle']
    assert main(['--out', str(tmp_path / "ref")] + arguments + ['--min-welfare-ref', '0.2']) == EXIT_OK
    assert seen == [0.2]
    report = json.loads((tmp_path / "ref" / "simulation.json").read_text())
    assert report['summary'][0]['feasible'] == 1

    code = main(['--out', str(tmp_path / "bad")] + arguments + ['--min-welfare-ref', '1.5'])
    assert code == EXIT_VALIDATION


def test_estimate_with_quantile_subgroups(tmp_path, fixture_dir):
    code = main(['--out', str(tmp_path), 'estimate', '--data', fixture_dir, '--subgroup-covariate', 'x1',
                 '--subgroup-quantile', '0.75'])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "effects.json").read_text())
    assert (report['dataset']['n0'], report['dataset']['n1']) == (9, 3)
    assert report['effects']['proportions'] == pytest.approx([0.75, 0.25])

    code = main(['--out', str(tmp_path), 'estimate', '--data', fixture_dir, '--subgroup-covariate', 'income'])
    assert code == EXIT_VALIDATION
