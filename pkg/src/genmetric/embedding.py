"""Feature embeddings for the sample-statistics metrics.

Full-scale pipelines embed images in a pretrained classifier's feature
space; at desk scale the stand-ins are the identity map, a seeded
random linear projection, and the penultimate activations of a trained
SoftmaxClassifier. All three are sklearn transformers.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .classifier import SoftmaxClassifier
from .validation import check_feature_matrix


class IdentityEmbedder(BaseEstimator, TransformerMixin):
    """Returns features unchanged."""

    def fit(self, X, y=None):
        self.n_features_in_ = check_feature_matrix(X).shape[1]
        return self

    def transform(self, X):
        return check_feature_matrix(X)


class RandomProjectionEmbedder(BaseEstimator, TransformerMixin):
    """Linear projection to `output_dim` by a seeded i.i.d. N(0, 1/D) map.

    The projection matrix is a pure function of (seed, input dim), so the
    embedding is reproducible across runs. output_dim must not exceed the
    input dimension.
    """

    def __init__(self, output_dim: int = 2, seed: int = 0):
        self.output_dim = output_dim
        self.seed = seed

    def fit(self, X, y=None):
        d = check_feature_matrix(X).shape[1]
        if self.output_dim > d:
            raise ValueError(f"output_dim {self.output_dim} exceeds input dimension {d}")
        if self.seed is None:
            raise ValueError("projection requires a seed")
        rng = np.random.default_rng(self.seed)
        self.n_features_in_ = d
        self.projection_ = rng.standard_normal((self.output_dim, d)) / np.sqrt(d)
        return self

    def transform(self, X):
        X = check_feature_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return X @ self.projection_.T


class PenultimateEmbedder(BaseEstimator, TransformerMixin):
    """Last-hidden-layer activations of a fitted SoftmaxClassifier (the
    standardized input when the classifier is linear)."""

    def __init__(self, classifier: SoftmaxClassifier = None):
        self.classifier = classifier

    def fit(self, X=None, y=None):
        if self.classifier is None or not hasattr(self.classifier, "coefs_"):
            raise ValueError("requires an already fitted SoftmaxClassifier")
        return self

    def transform(self, X):
        return self.classifier.hidden_activations(X)
