"""Training, analysis, and error-mapping smoke tests for the bindings."""

import math

import pytest

import tgmem

TINY = {
    "synthetic.num_users": 10,
    "synthetic.num_items": 40,
    "synthetic.num_events": 200,
    "synthetic.num_types": 4,
    "synthetic.period": 50,
    "train.epochs": 2,
    "train.batch_size": 20,
    "model.state_dim": 6,
    "model.message_dim": 6,
}


def test_run_training_returns_per_epoch_metrics():
    result = tgmem.run_training(TINY)
    assert len(result["epochs"]) == 2
    assert result["num_train_batches"] == 7  # floor(200 * 0.7) / 20
    for row in result["epochs"]:
        assert set(row) >= {"epoch", "loss", "ap", "seconds", "penalty", "max_penalty"}
        assert row["loss"] > 0.0
        assert 0.0 < row["ap"] <= 1.0
    assert result["final_val_ap"] == result["epochs"][-1]["ap"]
    assert "gamma" not in result


def test_run_training_is_deterministic():
    a = tgmem.run_training(TINY)
    b = tgmem.run_training(TINY)
    assert [r["loss"] for r in a["epochs"]] == [r["loss"] for r in b["epochs"]]
    assert [r["ap"] for r in a["epochs"]] == [r["ap"] for r in b["epochs"]]


def test_run_training_with_correction_reports_gamma_and_bounded_penalty():
    options = dict(TINY)
    options["pres.enabled"] = True
    options["pres.beta"] = 0.1
    options["pres.collect_coherence"] = True
    result = tgmem.run_training(options)
    assert 0.0 < result["gamma"] < 1.0
    for row in result["epochs"]:
        assert 0.0 <= row["max_penalty"] <= 0.2
    assert len(result["coherence"]) > 0
    assert not math.isnan(result["min_coherence"])


def test_invalid_options_raise_value_error():
    with pytest.raises(ValueError):
        tgmem.run_training({"train.batch_size": 0})
    with pytest.raises(ValueError):
        tgmem.run_training({"train.bogus": 1})


def test_filter_simulation_and_exact_passthrough():
    fused = tgmem.filter_simulation(trials=300, steps=30, seed=5)
    assert fused["mean_pres"] < fused["mean_raw"]
    assert fused["z"] > 0.0
    raw = tgmem.filter_simulation(trials=300, steps=30, seed=5, gamma=1.0)
    assert raw["mse_pres"] == raw["mse_raw"]


def test_lr_schedule_values_and_errors():
    assert tgmem.lr_schedule(0.5, 2.0, 4, 1) == pytest.approx(0.125)
    with pytest.raises(RuntimeError):
        tgmem.lr_schedule(0.0, 2.0, 4, 1)


def test_variance_probe_shape():
    stream = tgmem.make_synthetic_stream(
        num_users=8, num_items=32, num_events=120, num_types=4, period=30, seed=2
    )
    probe = tgmem.epoch_variance_probe(
        stream, [5, 10], resamples=20, negatives_per_batch=2, seed=4, state_dim=4, message_dim=4
    )
    assert probe["batch_sizes"] == [5, 10]
    assert len(probe["trace_variance"]) == 2
    assert all(v > 0.0 for v in probe["trace_variance"])


def test_sweep_covers_the_grid():
    stream = tgmem.make_synthetic_stream(
        num_users=8, num_items=32, num_events=150, num_types=4, period=40, seed=6
    )
    result = tgmem.batch_size_sweep(
        stream,
        {
            "sweep.batch_sizes": [10, 20],
            "sweep.seeds": [1],
            "train.epochs": 1,
            "model.state_dim": 4,
            "model.message_dim": 4,
        },
    )
    assert result["failures"] == []
    rows = result["rows"]
    assert len(rows) == 4
    cells = {(r["batch_size"], r["pres"]) for r in rows}
    assert cells == {(10, False), (10, True), (20, False), (20, True)}
    for r in rows:
        assert 0.0 < r["final_ap"] <= 1.0


def test_coherence_loss_closed_forms():
    aligned = tgmem.coherence_loss(0.0, [[1.0, 0.0]], [[2.0, 0.0]], 0.1)
    assert aligned == pytest.approx(0.0, abs=1e-12)
    opposed = tgmem.coherence_loss(0.0, [[1.0, 0.0]], [[-3.0, 0.0]], 0.1)
    assert opposed == pytest.approx(0.2, abs=1e-12)
    orthogonal = tgmem.coherence_loss(1.5, [[1.0, 0.0]], [[0.0, 2.0]], 0.1)
    assert orthogonal == pytest.approx(1.6, abs=1e-12)
