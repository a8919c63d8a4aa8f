"""Python access to the clfd native core.

Arrays go in and out as numpy; configs, specs and datasets as plain dicts
with the same schema as the JSON files the CLI reads.
"""

import json

from . import _clfd
from ._clfd import (
    DatasetError,
    DomainError,
    accuracy,
    aggregate_scores,
    discrete_frechet,
    dtw,
    exp_map,
    log_map,
    model_size_efficiency,
    quat_error,
    remembering,
    sample_storage_efficiency,
    swept_area,
    time_efficiency,
)

__all__ = [
    "DatasetError",
    "DomainError",
    "accuracy",
    "aggregate_scores",
    "discrete_frechet",
    "dtw",
    "exp_map",
    "expected_parameter_count",
    "gen_synthetic",
    "load_dataset",
    "log_map",
    "model_size_efficiency",
    "preset",
    "quat_error",
    "remembering",
    "run_experiment",
    "sample_storage_efficiency",
    "swept_area",
    "time_efficiency",
]


def preset(name):
    return json.loads(_clfd.preset_json(name))


def expected_parameter_count(strategy, num_tasks):
    """Trainable scalars after `num_tasks` tasks for a strategy config dict."""
    return _clfd.expected_parameter_count(json.dumps(strategy), num_tasks)


def gen_synthetic(spec):
    return json.loads(_clfd.gen_synthetic_json(json.dumps(spec)))


def load_dataset(path):
    return json.loads(_clfd.load_dataset_json(str(path)))


def run_experiment(config, dataset, method, seed=0):
    """One (method, seed) cell; returns accuracy rows, metrics and ledger."""
    return json.loads(_clfd.run_experiment_json(json.dumps(config), json.dumps(dataset), method, seed))
