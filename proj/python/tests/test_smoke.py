import math

import numpy as np
import pytest

import clfd


def test_dtw_and_frechet_small_example():
    a = np.array([[0.0], [1.0], [2.0]])
    b = np.array([[0.0], [2.0]])
    assert clfd.dtw(a, b) == pytest.approx(1.0)
    assert clfd.discrete_frechet(a, b) == pytest.approx(1.0)
    lower = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    upper = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
    assert clfd.swept_area(lower, upper) == pytest.approx(2.0)


def test_exp_log_roundtrip():
    r = np.array([0.1, -0.4, 0.7])
    q = clfd.exp_map(r)
    assert np.linalg.norm(q) == pytest.approx(1.0)
    assert np.allclose(clfd.log_map(q), r, atol=1e-12)
    assert np.allclose(clfd.exp_map([0.0, 0.0, math.pi / 2]), [0.0, 0.0, 0.0, 1.0], atol=1e-15)
    with pytest.raises(clfd.DomainError):
        clfd.exp_map([math.pi, 0.0, 0.0])


def test_metric_fixtures():
    sizes = [2008002 * (i + 1) for i in range(26)]
    assert round(clfd.model_size_efficiency(sizes), 2) == 0.15
    stored = [7000 * (i + 1) for i in range(4)]
    assert clfd.sample_storage_efficiency(stored, 7000 * 4) == pytest.approx(0.375)
    assert clfd.time_efficiency([2.0, 2.0, 2.0]) == 1.0
    score, stability = clfd.aggregate_scores(0.86, 0.97, 1.00, 0.51, 0.92, 1.00)
    assert score == pytest.approx(0.88, abs=0.005)
    assert stability == pytest.approx(0.81, abs=0.005)


def test_parameter_count_growth():
    strategy = clfd.preset("lasa")["strategy"]
    strategy["method"] = "HN"
    grow = clfd.expected_parameter_count(strategy, 3) - clfd.expected_parameter_count(strategy, 2)
    assert grow == 256


def test_tiny_experiment_runs():
    spec = {"name": "py", "kind": "position", "dim": 2, "demos": 3, "length": 20,
            "noise": 0.001, "seed": 2, "tasks": ["arc", "sine"]}
    data = clfd.gen_synthetic(spec)
    assert len(data["tasks"]) == 2
    config = clfd.preset("desk")
    config["strategy"]["node"]["hidden"] = [8, 8]
    config["strategy"]["node"]["iterations"] = 20
    config["subsample_T"] = 10
    out = clfd.run_experiment(config, data, "SG", 0)
    assert [len(r) for r in out["accuracy"]] == [1, 2]
    assert out["metrics"]["rem"] == 1.0
    again = clfd.run_experiment(config, data, "SG", 0)
    assert again["metrics"] == out["metrics"]


def test_bad_dataset_raises():
    bad = {"name": "x", "kind": "position", "dim": 2, "tasks": []}
    with pytest.raises(ValueError):
        clfd.run_experiment(clfd.preset("desk"), bad, "SG", 0)
