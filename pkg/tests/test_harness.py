import json
import math

import numpy as np
import pytest

from blockpost.cli import cli_dispatch
from blockpost.harness import (
    RATE_COLUMNS,
    ExperimentConfig,
    RateStudyRow,
    cell_seed,
    emit_report,
    format_rows_csv,
    parse_rows_csv,
    rate_schedule,
    read_report,
    run_rate_study,
    summarize,
)

SMALL = dict(n_grid=[6, 8], k=2, replicates=2, iters=120, burnin=20, M_grid=[0.5, 1.0, 10.0])


@pytest.mark.parametrize("n, k, expected", [(4, 2, 0.346574), (10, 1, 0.0230259), (100, 2, 0.008496)])
def test_rate_schedule_examples(n, k, expected):
    assert rate_schedule(n, k).eps_sq == pytest.approx(expected, abs=5e-6)


def test_rate_schedule_edge_cases():
    assert rate_schedule(3, 3).eps_sq == pytest.approx(math.log(3) / 3)
    with pytest.raises(ValueError):
        rate_schedule(2, 3)
    with pytest.raises(ValueError):
        rate_schedule(5, 0)


def test_rate_schedule_decreasing_beyond_3k():
    for k in range(1, 9):
        vals = [rate_schedule(n, k).eps_sq for n in range(3 * k, 4097)]
        assert all(b < a for a, b in zip(vals, vals[1:]))


def test_config_json_round_trip_and_validation():
    cfg = ExperimentConfig(**SMALL)
    assert ExperimentConfig.from_json(cfg.to_json()) == cfg
    assert ExperimentConfig() == ExperimentConfig.from_json("{}")
    with pytest.raises(ValueError):
        ExperimentConfig.from_json(json.dumps({"n_grid": [32], "bogus": 1}))
    with pytest.raises(ValueError):
        ExperimentConfig(n_grid=[64, 32])
    with pytest.raises(ValueError):
        ExperimentConfig(iters=10, burnin=10)


def test_cell_seed_is_stable():
    assert cell_seed(0, 32, 2, 0) == cell_seed(0, 32, 2, 0)
    assert len({cell_seed(0, n, 2, r) for n in (32, 64) for r in range(10)}) == 20
    assert 0 <= cell_seed(7, 64, 3, 9) < 2**64


def row(n, rep, mse=0.01):
    return RateStudyRow(n, 2, rep, mse, mse / rate_schedule(n, 2).eps_sq, 0.0, 1.5,
                        tail_curve=((1.0, 0.25), (10.0, 0.0)))


def test_rows_csv_round_trip():
    rows = [row(8, 0), row(8, 1, 0.123456789012345), row(16, 0, math.nan)]
    rows[2].status = 'error: ValueError: "quoted", text'
    text = format_rows_csv(rows)
    assert text.splitlines()[0] == ",".join(RATE_COLUMNS)
    back = parse_rows_csv(text)
    assert format_rows_csv(back) == text
    assert back[1].mse == rows[1].mse and back[2].status == rows[2].status


def test_emit_and_read_report(tmp_path):
    rows = [row(8, 0)]
    paths = emit_report(rows, tmp_path)
    assert len(paths["rate_study"].read_text().splitlines()) == 2
    assert paths["rate_curve"].read_text().lstrip().startswith("<?xml")
    back = read_report(tmp_path)
    assert back[0].wall_time == 1.5 and back[0].tail_curve == rows[0].tail_curve
    assert (back[0].n, back[0].mse) == (8, 0.01)
    with pytest.raises(ValueError):
        emit_report([], tmp_path)


def test_small_study_rows_and_tail_monotone():
    rows = run_rate_study(ExperimentConfig(**SMALL))
    assert [(r.n, r.replicate) for r in rows] == [(6, 0), (6, 1), (8, 0), (8, 1)]
    for r in rows:
        assert r.status == "ok" and r.mse >= 0
        masses = [m for _, m in r.tail_curve]
        assert all(b <= a for a, b in zip(masses, masses[1:]))
    assert [s["n"] for s in summarize(rows)] == [6, 8]


def test_study_independent_of_workers(tmp_path):
    a = run_rate_study(ExperimentConfig(**SMALL, workers=1))
    b = run_rate_study(ExperimentConfig(**SMALL, workers=2))
    emit_report(a, tmp_path / "a")
    emit_report(b, tmp_path / "b")
    for name in ("rate_study.csv", "tail_mass.csv", "rate_curve.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_cli_exit_codes(tmp_path, capsys):
    assert cli_dispatch(["no-such-command"]) == 2
    assert cli_dispatch(["simulate", "--n", "5", "--k", "2", "--bogus", "1", "--out", str(tmp_path)]) == 2
    assert cli_dispatch([]) == 2
    assert cli_dispatch(["simulate", "--n", "6", "--k", "2", "--out", str(tmp_path)]) == 0
    truth = json.loads((tmp_path / "truth.json").read_text())
    assert min(truth["z"]) >= 1 and np.shape(truth["Q"]) == (2, 2)
    assert cli_dispatch(["fit", "--adjacency", str(tmp_path / "adjacency.txt"), "--k", "2",
                         "--iters", "60", "--burnin", "10", "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "posterior.csv").read_text().splitlines()) == 51
    assert len((tmp_path / "theta_hat.txt").read_text().splitlines()) == 6


def test_cli_rate_study_and_audits(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(SMALL))
    assert cli_dispatch(["rate-study", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    assert (tmp_path / "out" / "rate_study.csv").exists()
    assert (tmp_path / "out" / "rate_curve.svg").exists()
    assert cli_dispatch(["geometry-check", "--trials", "200", "--attempts", "200", "--seed", "7"]) == 0
    assert cli_dispatch(["prior-check", "--budget", "1000"]) == 0
    assert cli_dispatch(["test-power", "--trials", "2000"]) == 0
    assert cli_dispatch(["evidence-check", "--replicates", "5", "--n", "4"]) == 0
    assert cli_dispatch(["oracle-check", "--n", "4", "--sweeps", "20000"]) == 0
    # an unattainable gate is reported as an audit failure
    assert cli_dispatch(["oracle-check", "--n", "4", "--sweeps", "200", "--tv-tol", "0"]) == 1
