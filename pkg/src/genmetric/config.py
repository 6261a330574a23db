"""Experiment configuration: JSON schema, validation, and construction
of the objects a run needs.

Top-level keys (see README for the full schema):

    dataset         path to a dataset directory, or {"train": p, "test": p}
    test_fraction   split fraction when `dataset` is a single path (default 0.2)
    generator       generator spec (kind tag + parameters), inline or a
                    {"path": file} reference to a JSON document
    classifier      SoftmaxClassifier keyword overrides
    embedder        {"kind": "penultimate" | "identity" |
                     "random_projection", ...}
    metrics         toggles: fid, kid, inception_score, gan_test, nas
    top_k           k for top-k accuracy (default min(5, K))
    nas_fractions   default [0.25, 0.5, 1.0]
    gan_test_size   synthetic test size for GAN-test (default 1000)
    sweep           {"variable": "truncation", "grid": [...]}
    seed            master seed (default 0)
    out_dir         output directory (overridable by --out-dir or
                    GENMETRIC_OUT_DIR)

Generator spec kinds:

    {"kind": "gaussian", "means": KxD, "covariances": scalar|DxD|KxDxD,
     "priors": [...]}                                  (optional priors)
    {"kind": "noise_mixture", "base": {...}, "mix_prob": p,
     "noise_low": [...], "noise_high": [...]}
    {"kind": "memorizer", "mode": "resample"|"identity"}   (source = train split)
    {"kind": "truncated_latent", "weights": KxDxL, "biases": KxD,
     "truncation": t, "nonlinearity": "identity"|"tanh"}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import LabeledDataset, load_dataset, stratified_split
from .generators import (
    GaussianClassConditional,
    MemorizingGenerator,
    NoiseMixtureGenerator,
    TruncatedLatentGenerator,
)
from .seeds import derive_seed

DEFAULT_CLASSIFIER = {
    "hidden_widths": (64,),
    "activation": "relu",
    "epochs": 30,
    "batch_size": 64,
    "peak_lr": 0.1,
    "warmup_epochs": 3,
    "decay_epochs": (15, 25),
    "decay_factor": 0.1,
    "momentum": 0.9,
    "weight_decay": 1e-4,
}

DEFAULT_METRICS = {
    "fid": True,
    "kid": True,
    "inception_score": True,
    "gan_test": False,
    "nas": False,
    "per_class_fid": False,  # opt-in: per-class estimates are high-bias at small n
}

GENERATOR_KINDS = ("gaussian", "noise_mixture", "memorizer", "truncated_latent")
EMBEDDER_KINDS = ("penultimate", "identity", "random_projection")


class ConfigError(ValueError):
    """Configuration is missing, malformed, or references absent files."""


@dataclass
class ExperimentConfig:
    dataset: object
    generator: dict | None
    classifier: dict
    embedder: dict
    metrics: dict
    top_k: int | None
    nas_fractions: list
    gan_test_size: int
    sweep: dict | None
    seed: int
    out_dir: str
    test_fraction: float = 0.2
    base_dir: Path = field(default_factory=Path)

    def snapshot(self) -> dict:
        """Resolved config as plain JSON data; excludes out_dir (an
        environmental choice, not part of the experiment identity)."""
        return {
            "dataset": self.dataset,
            "test_fraction": self.test_fraction,
            "generator": self.generator,
            "classifier": {
                k: list(v) if isinstance(v, tuple) else v
                for k, v in self.classifier.items()
            },
            "embedder": self.embedder,
            "metrics": self.metrics,
            "top_k": self.top_k,
            "nas_fractions": self.nas_fractions,
            "gan_test_size": self.gan_test_size,
            "sweep": self.sweep,
            "seed": self.seed,
        }


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def load_experiment_config(path, overrides: dict | None = None) -> ExperimentConfig:
    """Parse and validate a config file. `overrides` may carry out_dir
    and seed from the command line."""
    path = Path(path)
    _require(path.is_file(), f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "config root must be a JSON object")

    overrides = overrides or {}
    base_dir = path.parent

    dataset = raw.get("dataset")
    _require(dataset is not None, "config needs a 'dataset' entry")
    if isinstance(dataset, dict):
        _require(
            set(dataset) == {"train", "test"},
            "dataset object form needs exactly 'train' and 'test' paths",
        )

    generator = raw.get("generator")
    if generator is not None:
        if isinstance(generator, dict) and set(generator) == {"path"}:
            gen_path = base_dir / generator["path"]
            _require(gen_path.is_file(), f"generator spec file not found: {gen_path}")
            generator = json.loads(gen_path.read_text())
        _require(isinstance(generator, dict), "generator spec must be a JSON object")
        _validate_generator_spec(generator)

    classifier = dict(DEFAULT_CLASSIFIER)
    user_clf = raw.get("classifier", {})
    _require(isinstance(user_clf, dict), "'classifier' must be an object")
    unknown = set(user_clf) - set(DEFAULT_CLASSIFIER) - {"seed"}
    _require(not unknown, f"unknown classifier keys: {sorted(unknown)}")
    classifier.update(user_clf)
    classifier["hidden_widths"] = tuple(classifier["hidden_widths"])
    classifier["decay_epochs"] = tuple(classifier["decay_epochs"])

    embedder = raw.get("embedder", {"kind": "penultimate"})
    _require(isinstance(embedder, dict) and "kind" in embedder, "'embedder' needs a kind")
    _require(
        embedder["kind"] in EMBEDDER_KINDS,
        f"embedder kind must be one of {EMBEDDER_KINDS}, got {embedder['kind']!r}",
    )

    metrics = dict(DEFAULT_METRICS)
    user_metrics = raw.get("metrics", {})
    _require(isinstance(user_metrics, dict), "'metrics' must be an object")
    unknown = set(user_metrics) - set(DEFAULT_METRICS)
    _require(not unknown, f"unknown metric toggles: {sorted(unknown)}")
    metrics.update(user_metrics)

    nas_fractions = raw.get("nas_fractions", [0.25, 0.5, 1.0])
    _require(
        isinstance(nas_fractions, list) and all(f > 0 for f in nas_fractions),
        "'nas_fractions' must be a list of positive numbers",
    )

    sweep = raw.get("sweep")
    if sweep is not None:
        _require(isinstance(sweep, dict), "'sweep' must be an object")
        _require(sweep.get("variable") == "truncation",
                 "only 'truncation' sweeps are supported")
        grid = sweep.get("grid")
        _require(isinstance(grid, list) and len(grid) >= 1, "sweep grid must be nonempty")
        _require(all(g > 0 for g in grid), "truncation grid values must be > 0")

    test_fraction = float(raw.get("test_fraction", 0.2))
    _require(0.0 < test_fraction < 1.0, "'test_fraction' must be in (0, 1)")

    top_k = raw.get("top_k")
    if top_k is not None:
        _require(isinstance(top_k, int) and top_k >= 1, "'top_k' must be a positive integer")

    seed = overrides.get("seed")
    if seed is None:
        seed = raw.get("seed", 0)
    _require(isinstance(seed, int), "'seed' must be an integer")

    out_dir = overrides.get("out_dir") or raw.get("out_dir") or "genmetric-out"

    gan_test_size = raw.get("gan_test_size", 1000)
    _require(
        isinstance(gan_test_size, int) and gan_test_size >= 1,
        "'gan_test_size' must be a positive integer",
    )

    return ExperimentConfig(
        dataset=dataset,
        generator=generator,
        classifier=classifier,
        embedder=embedder,
        metrics=metrics,
        top_k=top_k,
        nas_fractions=nas_fractions,
        gan_test_size=gan_test_size,
        sweep=sweep,
        seed=seed,
        out_dir=out_dir,
        test_fraction=test_fraction,
        base_dir=base_dir,
    )


def _validate_generator_spec(spec: dict) -> None:
    kind = spec.get("kind")
    _require(
        kind in GENERATOR_KINDS,
        f"generator kind must be one of {GENERATOR_KINDS}, got {kind!r}",
    )
    if kind == "gaussian":
        _require("means" in spec and "covariances" in spec,
                 "gaussian generator needs 'means' and 'covariances'")
    elif kind == "noise_mixture":
        for key in ("base", "mix_prob", "noise_low", "noise_high"):
            _require(key in spec, f"noise_mixture generator needs {key!r}")
        _validate_generator_spec(spec["base"])
    elif kind == "truncated_latent":
        for key in ("weights", "biases", "truncation"):
            _require(key in spec, f"truncated_latent generator needs {key!r}")
    elif kind == "memorizer":
        _require(spec.get("mode", "resample") in ("resample", "identity"),
                 "memorizer mode must be 'resample' or 'identity'")


def build_generator(spec: dict, train: LabeledDataset):
    """Instantiate a generator from its JSON spec. The memorizer kind
    memorizes the real training split."""
    kind = spec["kind"]
    if kind == "gaussian":
        return GaussianClassConditional(
            spec["means"], spec["covariances"], spec.get("priors")
        )
    if kind == "noise_mixture":
        return NoiseMixtureGenerator(
            build_generator(spec["base"], train),
            spec["mix_prob"],
            spec["noise_low"],
            spec["noise_high"],
        )
    if kind == "memorizer":
        return MemorizingGenerator(train, mode=spec.get("mode", "resample"))
    if kind == "truncated_latent":
        return TruncatedLatentGenerator(
            spec["weights"],
            spec["biases"],
            spec["truncation"],
            spec.get("nonlinearity", "identity"),
        )
    raise ConfigError(f"unknown generator kind {kind!r}")


def resolve_datasets(cfg: ExperimentConfig):
    """Load (train, test) per the config: either two explicit directories
    or one directory split with the derived split seed."""
    if isinstance(cfg.dataset, dict):
        train = _load_checked(cfg.base_dir / cfg.dataset["train"])
        test = _load_checked(cfg.base_dir / cfg.dataset["test"])
        if train.dim != test.dim or train.num_classes != test.num_classes:
            raise ConfigError("train and test datasets disagree on D or K")
        return train, test
    full = _load_checked(cfg.base_dir / cfg.dataset)
    split_seed = derive_seed(cfg.seed, "split")
    try:
        return stratified_split(full, cfg.test_fraction, split_seed)
    except ValueError as exc:
        raise ConfigError(f"cannot split dataset: {exc}") from exc


def _load_checked(path: Path) -> LabeledDataset:
    try:
        return load_dataset(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load dataset at {path}: {exc}") from exc
