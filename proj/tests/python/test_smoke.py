import math
import random

import pytest

import confplan


def test_conformal_rank_matches_ceiling_formula():
    for n in (1, 9, 19, 99, 200):
        for c in (0.5, 0.8, 0.9, 0.95):
            k, clipped = confplan.conformal_rank(n, c)
            want = math.ceil((n + 1) * c)
            assert clipped == (want > n)
            assert k == min(want, n)


def test_quantile_threshold_is_kth_order_statistic():
    rng = random.Random(7)
    scores = [rng.random() for _ in range(99)]
    value, clipped = confplan.quantile_threshold(scores, 0.9)
    assert not clipped
    assert value == sorted(scores)[90 - 1]


def test_quantile_table_is_monotone_in_confidence():
    rng = random.Random(3)
    scores = [[rng.expovariate(1.0) * (t + 1) for t in range(6)] for _ in range(50)]
    table = confplan.build_quantile_table(scores, [0.95, 0.9, 0.8])
    assert table.horizon_steps == 6
    assert list(table.levels) == [0.95, 0.9, 0.8]
    for t in range(6):
        assert table.threshold(0, t) >= table.threshold(1, t) >= table.threshold(2, t)
        assert table.lookup(0.9, t) == table.threshold(1, t)
    assert table.to_csv().splitlines()[0].startswith("confidence")


def test_acp_update_moves_lambda_in_the_right_direction():
    acp = confplan.AcpState(lambda0=1.0, kappa=0.1, alpha=0.1)
    assert acp.update(score=5.0, reference=1.0) == 1
    assert acp.lambda_ > 1.0
    before = acp.lambda_
    assert acp.update(score=0.0, reference=1.0) == 0
    assert acp.lambda_ < before
    assert acp.errors() == [1, 0]
    assert acp.lambdas()[0] == 1.0


def test_gate_accepts_same_distribution_and_flags_shift():
    rng = random.Random(11)
    cal = [abs(rng.gauss(0, 1)) for _ in range(200)]
    same = [abs(rng.gauss(0, 1)) for _ in range(100)]
    shifted = [abs(rng.gauss(0, 3)) for _ in range(100)]
    assert confplan.exchangeability_gate(cal, same, seed=1)["verdict"] == "accept"
    r = confplan.exchangeability_gate(cal, shifted, seed=1)
    assert r["verdict"] == "reject"
    assert r["p_value"] <= 0.05
    assert confplan.exchangeability_gate(cal, same[:10])["verdict"] == "insufficient_feedback"


def test_empty_world_spacetime_run(tmp_path):
    report = confplan.run_experiment("empty_spacetime.json", output_dir=tmp_path)
    agg = report["aggregate"]
    assert agg["collision_rate"]["rate"] == 0
    assert agg["goal_rate"]["rate"] == 1
    assert (tmp_path / "report.json").exists()
    svg = confplan.render_plot(
        "trajectory_frames", (tmp_path / confplan.default_data_file("trajectory_frames")).read_text())
    assert svg.startswith("<?xml")


def test_overrides_and_config_errors():
    resolved = confplan.resolve_experiment("empty_spacetime.json", overrides={"test_trials": 3})
    assert resolved["test_trials"] == 3
    with pytest.raises(confplan.ConfigError, match="test_trials"):
        confplan.resolve_experiment("empty_spacetime.json", overrides={"test_trials": 0})


def test_plot_rejects_missing_columns():
    with pytest.raises(confplan.PlotError, match="coverage"):
        confplan.render_plot("coverage_curve", "curve,t\nc=0.9,0\n")


def test_verify_identities_criterion():
    (row,) = confplan.verify(criteria=[7])
    assert row["id"] == 7
    assert row["passed"]
