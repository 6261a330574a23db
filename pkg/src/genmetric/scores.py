"""Classifier-based scores: CAS, the real-data baseline, NAS, GAN-test,
and the per-class gap diagnostic.

The common procedure: train a SoftmaxClassifier on some training set,
evaluate top-1 and top-k accuracy on held-out real data. CAS swaps the
real training set for a generator-sampled replacement with the same
class histogram; NAS extends it instead; GAN-test flips the roles and
tests a real-data classifier on synthetic samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classifier import SoftmaxClassifier, evaluate_topk
from .data import (
    LabeledDataset,
    build_augmented_set,
    build_replacement_set,
    class_histogram,
)
from .validation import as_rng

__all__ = [
    "ClassifierScore",
    "CASResult",
    "GapRow",
    "train_and_score",
    "real_baseline",
    "cas",
    "nas",
    "gan_test",
    "per_class_gap",
]


@dataclass(frozen=True)
class ClassifierScore:
    """Top-1/top-k accuracy with per-class breakdowns (NaN = class absent
    from the evaluation set)."""

    top1: float
    topk: float
    k: int
    per_class_top1: np.ndarray
    per_class_topk: np.ndarray


@dataclass(frozen=True)
class CASResult:
    score: ClassifierScore
    model: SoftmaxClassifier
    synthetic_train: LabeledDataset


def _fit(train: LabeledDataset, params: dict) -> SoftmaxClassifier:
    model = SoftmaxClassifier(**params)
    model.fit(train.features.astype(np.float64), train.labels, n_classes=train.num_classes)
    return model


def train_and_score(
    train: LabeledDataset, test: LabeledDataset, params: dict, k: int
) -> tuple[ClassifierScore, SoftmaxClassifier]:
    """Train on `train`, score on `test` at top-1 and top-k."""
    if train.dim != test.dim or train.num_classes != test.num_classes:
        raise ValueError("train and test datasets disagree on D or K")
    model = _fit(train, params)
    top1, per1 = evaluate_topk(model, test, 1)
    topk, perk = evaluate_topk(model, test, k)
    return ClassifierScore(top1, topk, k, per1, perk), model


def real_baseline(
    real_train: LabeledDataset, real_test: LabeledDataset, params: dict, k: int
) -> tuple[ClassifierScore, SoftmaxClassifier]:
    """Accuracy of a classifier trained on the real training set -- the
    reference every generator is compared against."""
    return train_and_score(real_train, real_test, params, k)


def cas(
    gen,
    real_train: LabeledDataset,
    real_test: LabeledDataset,
    params: dict,
    k: int,
    sample_seed,
) -> CASResult:
    """Classification Accuracy Score: replace every real training example
    with a generator sample of the same class, train, test on real."""
    replacement = build_replacement_set(gen, real_train, as_rng(sample_seed))
    score, model = train_and_score(replacement, real_test, params, k)
    return CASResult(score=score, model=model, synthetic_train=replacement)


def nas(
    real_train: LabeledDataset,
    gen,
    fractions,
    real_test: LabeledDataset,
    params: dict,
    k: int,
    sample_seed,
) -> list[tuple[float, ClassifierScore]]:
    """Naive Augmentation Score: one train/test cycle per fraction, each
    on the real set extended with fraction * N generator samples."""
    results = []
    for i, fraction in enumerate(fractions):
        rng = as_rng(_offset_seed(sample_seed, i))
        augmented = build_augmented_set(real_train, gen, fraction, rng)
        score, _ = train_and_score(augmented, real_test, params, k)
        results.append((float(fraction), score))
    return results


def _offset_seed(seed, i: int):
    if isinstance(seed, np.random.Generator):
        return seed
    return (int(seed) + i) & 0xFFFFFFFFFFFFFFFF


def gan_test(
    real_train: LabeledDataset,
    gen,
    synthetic_test_size: int,
    params: dict,
    k: int,
    sample_seed,
) -> ClassifierScore:
    """Train on real data, test on a freshly sampled synthetic set whose
    labels are drawn i.i.d. from the real set's empirical class
    distribution (an approximate precision check)."""
    if synthetic_test_size < 1:
        raise ValueError("synthetic_test_size must be >= 1")
    rng = as_rng(sample_seed)
    empirical = class_histogram(real_train) / real_train.n
    labels = rng.choice(real_train.num_classes, size=synthetic_test_size, p=empirical)
    features = gen.sample_batch(labels, rng)
    synthetic_test = LabeledDataset(
        features, labels, real_train.num_classes, name=f"{real_train.name}:gan-test"
    )
    score, _ = train_and_score(real_train, synthetic_test, params, k)
    return score


@dataclass(frozen=True)
class GapRow:
    """One per-class diagnostic row; flag_zero marks classes the
    synthetic-data classifier gets exactly 0% right (dropped classes)."""

    class_id: int
    model_acc: float
    real_acc: float
    gap: float
    flag_zero: bool


def per_class_gap(model_per_class, real_per_class) -> list[GapRow]:
    """Rank classes by (model - real) accuracy gap, worst first.

    NaN entries (classes absent from the test set) sort last. Ties are
    broken toward the lower class index.
    """
    model_acc = np.asarray(model_per_class, dtype=np.float64)
    real_acc = np.asarray(real_per_class, dtype=np.float64)
    if model_acc.shape != real_acc.shape or model_acc.ndim != 1:
        raise ValueError("per-class vectors must be 1-D of equal length")
    gaps = model_acc - real_acc
    order = np.argsort(gaps, kind="stable")
    return [
        GapRow(
            class_id=int(c),
            model_acc=float(model_acc[c]),
            real_acc=float(real_acc[c]),
            gap=float(gaps[c]),
            flag_zero=bool(model_acc[c] == 0.0),
        )
        for c in order
    ]
