import json

import numpy as np
import pytest

from genmetric import GaussianClassConditional, LabeledDataset, save_dataset

TRIANGLE_MEANS = [[0.0, 2.4], [2.078, -1.2], [-2.078, -1.2]]

FAST_CLASSIFIER = {
    "hidden_widths": [16],
    "epochs": 10,
    "batch_size": 32,
    "peak_lr": 0.1,
    "warmup_epochs": 2,
    "decay_epochs": [7],
    "decay_factor": 0.1,
}


@pytest.fixture(scope="session")
def triangle_dataset_dir(tmp_path_factory):
    """A 3-class 2-D Gaussian dataset on disk, shared across CLI tests."""
    gen = GaussianClassConditional(TRIANGLE_MEANS, 1.0)
    rng = np.random.default_rng(42)
    labels = np.repeat(np.arange(3), 180)
    ds = LabeledDataset(gen.sample_batch(labels, rng), labels, 3, name="triangle")
    target = tmp_path_factory.mktemp("data") / "triangle"
    save_dataset(ds, target)
    return target


def write_config(path, dataset_dir, **overrides):
    config = {
        "dataset": str(dataset_dir),
        "test_fraction": 0.3,
        "generator": {"kind": "gaussian", "means": TRIANGLE_MEANS, "covariances": 1.0},
        "classifier": dict(FAST_CLASSIFIER),
        "top_k": 2,
        "seed": 11,
    }
    config.update(overrides)
    path.write_text(json.dumps(config, indent=2))
    return path
