"""genmetric: evaluate class-conditional generative models by the
accuracy of classifiers trained on their samples, alongside classical
sample-statistics metrics."""

from .classifier import (
    SoftmaxClassifier,
    TrainingDivergedError,
    evaluate_topk,
    learning_rate_at,
    load_model,
    loss_and_gradient,
    save_model,
)
from .data import (
    DatasetFormatError,
    LabeledDataset,
    build_augmented_set,
    build_replacement_set,
    class_histogram,
    load_dataset,
    save_dataset,
    stratified_split,
)
from .embedding import IdentityEmbedder, PenultimateEmbedder, RandomProjectionEmbedder
from .generators import (
    ConditionalGenerator,
    GaussianClassConditional,
    LikelihoodUnavailableError,
    MemorizingGenerator,
    NoiseMixtureGenerator,
    TruncatedLatentGenerator,
    bayes_classify,
    bayes_posterior,
    posterior_from_log_likelihood,
    truncated_normal_sample,
)
from .metrics import (
    MomentStats,
    brier_score,
    fid,
    inception_score,
    kid,
    moment_stats,
    pearson,
    sqrtm_psd,
)
from .scores import (
    CASResult,
    ClassifierScore,
    GapRow,
    cas,
    gan_test,
    nas,
    per_class_gap,
    real_baseline,
)
from .seeds import derive_seed

__version__ = "0.1.0"

__all__ = [
    "CASResult",
    "ClassifierScore",
    "ConditionalGenerator",
    "DatasetFormatError",
    "GapRow",
    "GaussianClassConditional",
    "IdentityEmbedder",
    "LabeledDataset",
    "LikelihoodUnavailableError",
    "MemorizingGenerator",
    "MomentStats",
    "NoiseMixtureGenerator",
    "PenultimateEmbedder",
    "RandomProjectionEmbedder",
    "SoftmaxClassifier",
    "TrainingDivergedError",
    "TruncatedLatentGenerator",
    "bayes_classify",
    "bayes_posterior",
    "brier_score",
    "build_augmented_set",
    "build_replacement_set",
    "cas",
    "class_histogram",
    "derive_seed",
    "evaluate_topk",
    "fid",
    "gan_test",
    "inception_score",
    "kid",
    "learning_rate_at",
    "load_dataset",
    "load_model",
    "loss_and_gradient",
    "moment_stats",
    "nas",
    "pearson",
    "per_class_gap",
    "posterior_from_log_likelihood",
    "real_baseline",
    "save_dataset",
    "save_model",
    "sqrtm_psd",
    "stratified_split",
    "truncated_normal_sample",
]
