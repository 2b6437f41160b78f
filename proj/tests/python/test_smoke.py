import math

import pytest

import dmeg

SMALL = {
    "stream": {"kind": "stationary_synthetic", "length": 2000, "dim": 6},
    "architecture": {"hidden_dim": 8, "depth": 3},
    "window": 500,
}


def test_run_returns_summary():
    (summary,) = dmeg.run(SMALL)
    assert summary["rounds"] == 2000
    assert 0.0 <= summary["type1"] <= 1.0
    assert math.isclose(sum(summary["final_p"]), 1.0, abs_tol=1e-12)
    assert summary["config_hash"] == dmeg.config_hash(SMALL)


def test_runs_are_deterministic():
    assert dmeg.trajectory_csv(SMALL) == dmeg.trajectory_csv(SMALL)
    assert dmeg.trajectory_csv(SMALL).startswith("round,typeI_window,typeII_window,constraint_running_avg,lambda,p_0")


def test_sweep_has_one_run_per_gamma():
    cfg = dict(SMALL, gamma_sweep=[0.15, 0.3])
    assert [s["gamma"] for s in dmeg.sweep(cfg)] == [0.15, 0.3]


def test_report_files(tmp_path):
    dmeg.run(SMALL, tmp_path)
    assert len(list(tmp_path.glob("*.summary.json"))) == 1
    assert len(list(tmp_path.glob("*.trajectory.csv"))) == 1


def test_config_errors():
    with pytest.raises(dmeg.ConfigError):
        dmeg.run({"bogus": 1})
    with pytest.raises(ValueError):
        dmeg.canonical_config({"objective": {"gamma": 2.0}})


def test_math_helpers():
    eta, eta_l = dmeg.theorem_rates(1.0, 1.0, 10000, 3)
    assert eta == pytest.approx(math.sqrt(math.log(4) / 1e4))
    assert dmeg.constraint_certificate(1.0, 1.0, 1000000, 3, 0.2) == pytest.approx(0.2047096, abs=1e-6)
    assert dmeg.clipped_bce(0.5, 1) == pytest.approx(math.log(2))
