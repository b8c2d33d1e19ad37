import math
from dataclasses import replace

import numpy as np
import pytest

from softrgg.montecarlo import (
    ExperimentSpec,
    Proportion,
    ResourceLimitError,
    TrialBatch,
    collect,
    run_block,
    run_trials,
    summarize,
    sweep,
    trial_rng,
    worker_count,
)
from softrgg.output import dumps_json


def test_same_result_for_any_worker_count(monkeypatch):
    monkeypatch.delenv("SOFTRGG_MAX_WORKERS", raising=False)
    spec = ExperimentSpec(tau=1.0, L=200.0, trials=400, seed=3, coupled=True, m_values=(4,))
    one = run_trials(spec, workers=1)
    four = run_trials(spec, workers=4)
    assert dumps_json(one.to_dict()) == dumps_json(four.to_dict())
    np.testing.assert_array_equal(one.batch.n_iso, four.batch.n_iso)


def test_blocks_are_independent_of_split():
    spec = ExperimentSpec(tau=1.0, L=50.0, trials=30, seed=9)
    whole = run_block(spec, 0, 30)
    parts = TrialBatch.concat([run_block(spec, 20, 30), run_block(spec, 0, 7), run_block(spec, 7, 20)])
    np.testing.assert_array_equal(whole.n_iso, parts.n_iso)
    np.testing.assert_array_equal(whole.connected, parts.connected)


def test_trial_streams_differ():
    a = trial_rng(1, 0).random(4)
    assert not np.array_equal(a, trial_rng(1, 1).random(4))
    assert not np.array_equal(a, trial_rng(2, 0).random(4))
    np.testing.assert_array_equal(a, trial_rng(1, 0).random(4))


def test_mean_matches_expectation():
    spec = ExperimentSpec(tau=1.0, L=100.0, trials=4000, seed=5)
    r = run_trials(spec)
    assert abs(r.mean_n_iso.value - r.expected_n_iso) <= 3 * r.mean_n_iso.se
    assert r.violations == 0


def test_coupled_run_invariants():
    spec = ExperimentSpec(tau=1.0, L=100.0, trials=1000, seed=6, coupled=True, m_values=(2, 32))
    r = run_trials(spec)
    assert r.violations == 0
    b = r.batch
    assert np.all(b.n_iso_truncated >= b.n_iso)
    d = r.to_dict()
    assert [e["m"] for e in d["discretization"]] == [2, 32]
    assert d["discretization"][1]["tv_w"] <= d["discretization"][0]["tv_w"]
    assert r.mean_gap.value >= 0


def test_wilson_examples():
    p = Proportion.wilson(0, 100)
    assert p.lo == 0.0 and 0 < p.hi < 0.1
    p = Proportion.wilson(50, 100)
    assert p.lo < 0.5 < p.hi
    assert p.hi - 0.5 == pytest.approx(0.5 - p.lo)


def test_interval_coverage_over_repeated_experiments():
    # P(no points on the torus) = e^{-L} is known exactly
    L = 2.0
    truth = math.exp(-L)
    base = ExperimentSpec(tau=1.0, L=L, trials=200)
    covered = 0
    for k in range(100):
        b = collect(replace(base, seed=1000 + k))
        p = Proportion.wilson(int(np.count_nonzero(b.n_nodes == 0)), b.n_nodes.size)
        covered += p.lo <= truth <= p.hi
    # nominal coverage 99.7%; 95 or fewer hits out of 100 has probability < 1e-3
    assert covered >= 96


def test_resource_limit():
    spec = ExperimentSpec(tau=1.0, L=1e6, trials=10**5, max_work=1e9)
    with pytest.raises(ResourceLimitError):
        spec.validate()
    with pytest.raises(ResourceLimitError):
        replace(spec, L=1e4, trials=100, mode="exact").validate()


@pytest.mark.parametrize(
    "changes",
    [{"trials": 0}, {"mode": "fast"}, {"m_values": (4,)}, {"seed": -1}, {"tau": 0.001}],
)
def test_spec_validation(changes):
    with pytest.raises(ValueError):
        replace(ExperimentSpec(tau=1.0, L=100.0), **changes).validate()


def test_worker_env_override(monkeypatch):
    monkeypatch.setenv("SOFTRGG_MAX_WORKERS", "1")
    assert worker_count(8) == 1
    monkeypatch.delenv("SOFTRGG_MAX_WORKERS")
    assert worker_count(3) == 3
    assert worker_count(None) == 1


def test_summary_fields_and_trial_rows():
    spec = ExperimentSpec(tau=1.0, L=30.0, trials=50, seed=1, truncated=True)
    r = summarize(spec, collect(spec))
    rows = r.trial_rows()
    assert len(rows) == 50 and rows[0]["trial"] == 0
    assert all(row["n_iso_truncated"] == row["n_iso"] for row in rows)
    assert r.trials == 50
    assert 0 <= r.tv_poisson <= 1


def test_sweep_rows():
    rows = sweep(ExperimentSpec(tau=1.0, L=10.0, trials=20, seed=2), [10, 40])
    assert [r.L for r in rows] == [10.0, 40.0]
    assert rows[1].regime.R_L > rows[0].regime.R_L
    csv_row = rows[0].to_csv_row()
    assert csv_row["trials"] == 20 and 0 <= csv_row["tv_chen_stein"] <= 1
