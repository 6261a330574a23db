"""Class-conditional reference generators with known ground truth.

These are the oracles the scores are checked against: samplers with
(where it exists) exact conditional log-density, which makes exact
posterior inference available via Bayes rule. Four families:

* GaussianClassConditional -- one Gaussian per class, exact likelihood.
* NoiseMixtureGenerator    -- base draw with probability p, else uniform
                              noise from a box disjoint from the base
                              support; exact likelihood when the base has
                              one.
* MemorizingGenerator      -- replays a source dataset (uniform with
                              replacement, or an in-order identity copy).
* TruncatedLatentGenerator -- per-class affine map of a truncated
                              standard normal latent; no likelihood.

All sampling is driven by an explicitly passed numpy Generator (or int
seed), so identical seeds give identical samples.
"""

from __future__ import annotations

import abc

import numpy as np

from .data import LabeledDataset
from .validation import as_rng, check_feature_matrix

_LOG_2PI = float(np.log(2.0 * np.pi))


class LikelihoodUnavailableError(TypeError):
    """Raised when a generator without exact density is asked for one."""


class ConditionalGenerator(abc.ABC):
    """Sampler of feature vectors conditioned on a class label."""

    num_classes: int
    feature_dim: int

    @abc.abstractmethod
    def sample(self, label: int, rng) -> np.ndarray:
        """Draw one feature vector for `label`. Deterministic given rng state."""

    def sample_batch(self, labels, rng) -> np.ndarray:
        """Draw one feature per label. Default: sequential `sample` calls."""
        rng = as_rng(rng)
        labels = np.asarray(labels, dtype=np.int64)
        return np.stack([self.sample(int(c), rng) for c in labels])

    @property
    def has_exact_likelihood(self) -> bool:
        return False

    def log_likelihood(self, x, label: int) -> float:
        raise LikelihoodUnavailableError(
            f"{type(self).__name__} does not expose an exact conditional density"
        )

    def log_likelihood_matrix(self, X) -> np.ndarray:
        """N x K matrix of conditional log-densities."""
        X = check_feature_matrix(X)
        out = np.empty((X.shape[0], self.num_classes))
        for c in range(self.num_classes):
            out[:, c] = [self.log_likelihood(row, c) for row in X]
        return out

    def _check_label(self, label: int) -> int:
        label = int(label)
        if not 0 <= label < self.num_classes:
            raise ValueError(f"label {label} out of range [0, {self.num_classes})")
        return label


class GaussianClassConditional(ConditionalGenerator):
    """K multivariate normals, one per class, with class priors.

    `covariances` accepts a scalar variance (shared isotropic), a single
    D x D matrix (shared), or a K x D x D stack. Covariances must be
    symmetric positive definite: minimum eigenvalue >= 1e-9 is enforced
    at construction.
    """

    MIN_EIGENVALUE = 1e-9

    def __init__(self, means, covariances, priors=None):
        means = np.asarray(means, dtype=np.float64)
        if means.ndim != 2:
            raise ValueError(f"means must be K x D, got shape {means.shape}")
        k, d = means.shape
        if k < 2:
            raise ValueError("need at least 2 classes")
        covs = np.asarray(covariances, dtype=np.float64)
        if covs.ndim == 0:
            covs = np.broadcast_to(float(covs) * np.eye(d), (k, d, d)).copy()
        elif covs.ndim == 2:
            covs = np.broadcast_to(covs, (k, d, d)).copy()
        elif covs.shape != (k, d, d):
            raise ValueError(f"covariances must be scalar, DxD, or KxDxD, got {covs.shape}")
        if priors is None:
            priors = np.full(k, 1.0 / k)
        priors = np.asarray(priors, dtype=np.float64)
        if priors.shape != (k,) or np.any(priors < 0):
            raise ValueError("priors must be a nonnegative length-K vector")
        if abs(priors.sum() - 1.0) > 1e-12:
            raise ValueError(f"priors must sum to 1 within 1e-12, got {priors.sum()!r}")

        self.num_classes = k
        self.feature_dim = d
        self.means = means
        self.covariances = covs
        self.priors = priors
        self._chol = np.empty_like(covs)
        self._logdet = np.empty(k)
        for c in range(k):
            cov = covs[c]
            if np.max(np.abs(cov - cov.T)) > 1e-9:
                raise ValueError(f"covariance of class {c} is not symmetric")
            eigvals = np.linalg.eigvalsh(cov)
            if eigvals.min() < self.MIN_EIGENVALUE:
                raise ValueError(
                    f"covariance of class {c} is not positive definite "
                    f"(min eigenvalue {eigvals.min():.3e} < {self.MIN_EIGENVALUE})"
                )
            self._chol[c] = np.linalg.cholesky(cov)
            self._logdet[c] = 2.0 * np.sum(np.log(np.diag(self._chol[c])))

    def sample(self, label, rng) -> np.ndarray:
        label = self._check_label(label)
        rng = as_rng(rng)
        z = rng.standard_normal(self.feature_dim)
        return self.means[label] + self._chol[label] @ z

    def sample_batch(self, labels, rng) -> np.ndarray:
        rng = as_rng(rng)
        labels = np.asarray(labels, dtype=np.int64)
        for c in np.unique(labels):
            self._check_label(c)
        z = rng.standard_normal((labels.size, self.feature_dim))
        out = np.empty_like(z)
        for c in range(self.num_classes):
            mask = labels == c
            if mask.any():
                out[mask] = self.means[c] + z[mask] @ self._chol[c].T
        return out

    @property
    def has_exact_likelihood(self) -> bool:
        return True

    def log_likelihood(self, x, label) -> float:
        label = self._check_label(label)
        x = np.asarray(x, dtype=np.float64)
        diff = x - self.means[label]
        w = np.linalg.solve(self._chol[label], diff)
        return float(-0.5 * (self.feature_dim * _LOG_2PI + self._logdet[label] + w @ w))

    def log_likelihood_matrix(self, X) -> np.ndarray:
        X = check_feature_matrix(X)
        out = np.empty((X.shape[0], self.num_classes))
        for c in range(self.num_classes):
            diff = X - self.means[c]
            w = np.linalg.solve(self._chol[c], diff.T)
            maha = np.sum(w * w, axis=0)
            out[:, c] = -0.5 * (self.feature_dim * _LOG_2PI + self._logdet[c] + maha)
        return out


class NoiseMixtureGenerator(ConditionalGenerator):
    """With probability `mix_prob` a base draw, else uniform noise from an
    axis-aligned box whose support is disjoint from the base's.

    The disjointness is checked at construction when the base has exact
    likelihood: 64 probe points sampled uniformly from the box must all
    have per-point base density below 1e-12 for every class.
    """

    DENSITY_CEILING = 1e-12
    _PROBE_POINTS = 64

    def __init__(self, base: ConditionalGenerator, mix_prob: float, noise_low, noise_high):
        if not 0.0 < mix_prob <= 1.0:
            raise ValueError(f"mix_prob must be in (0, 1], got {mix_prob}")
        low = np.asarray(noise_low, dtype=np.float64)
        high = np.asarray(noise_high, dtype=np.float64)
        if low.shape != (base.feature_dim,) or high.shape != (base.feature_dim,):
            raise ValueError("noise box corners must be D-dimensional vectors")
        if not np.all(high > low):
            raise ValueError("noise box is degenerate: need high > low componentwise")
        self.base = base
        self.mix_prob = float(mix_prob)
        self.noise_low = low
        self.noise_high = high
        self.num_classes = base.num_classes
        self.feature_dim = base.feature_dim
        self._log_box_density = -float(np.sum(np.log(high - low)))
        if base.has_exact_likelihood:
            probe_rng = np.random.default_rng(0)
            probes = probe_rng.uniform(low, high, size=(self._PROBE_POINTS, base.feature_dim))
            densities = np.exp(base.log_likelihood_matrix(probes))
            if densities.max() >= self.DENSITY_CEILING:
                raise ValueError(
                    "noise box overlaps base support: base density "
                    f"{densities.max():.3e} >= {self.DENSITY_CEILING} at a probe point"
                )

    def sample(self, label, rng) -> np.ndarray:
        label = self._check_label(label)
        rng = as_rng(rng)
        if rng.random() < self.mix_prob:
            return self.base.sample(label, rng)
        return rng.uniform(self.noise_low, self.noise_high)

    def sample_batch(self, labels, rng) -> np.ndarray:
        rng = as_rng(rng)
        labels = np.asarray(labels, dtype=np.int64)
        take_base = rng.random(labels.size) < self.mix_prob
        out = np.empty((labels.size, self.feature_dim))
        if take_base.any():
            out[take_base] = self.base.sample_batch(labels[take_base], rng)
        n_noise = int((~take_base).sum())
        if n_noise:
            out[~take_base] = rng.uniform(
                self.noise_low, self.noise_high, size=(n_noise, self.feature_dim)
            )
        return out

    @property
    def has_exact_likelihood(self) -> bool:
        return self.base.has_exact_likelihood

    def _in_box(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.noise_low) and np.all(x <= self.noise_high))

    def log_likelihood(self, x, label) -> float:
        label = self._check_label(label)
        if not self.base.has_exact_likelihood:
            raise LikelihoodUnavailableError("base generator has no exact density")
        x = np.asarray(x, dtype=np.float64)
        base_part = np.log(self.mix_prob) + self.base.log_likelihood(x, label)
        if self.mix_prob == 1.0 or not self._in_box(x):
            return float(base_part)
        noise_part = np.log1p(-self.mix_prob) + self._log_box_density
        return float(np.logaddexp(base_part, noise_part))

    def log_likelihood_matrix(self, X) -> np.ndarray:
        if not self.base.has_exact_likelihood:
            raise LikelihoodUnavailableError("base generator has no exact density")
        X = check_feature_matrix(X)
        ll = np.log(self.mix_prob) + self.base.log_likelihood_matrix(X)
        if self.mix_prob < 1.0:
            in_box = np.all((X >= self.noise_low) & (X <= self.noise_high), axis=1)
            if in_box.any():
                noise_part = np.log1p(-self.mix_prob) + self._log_box_density
                ll[in_box] = np.logaddexp(ll[in_box], noise_part)
        return ll


class MemorizingGenerator(ConditionalGenerator):
    """Replays examples of a source dataset for the requested class.

    mode="resample" (default) draws uniformly with replacement and is
    stateless. mode="identity" cycles through each class's rows in their
    original order via a per-class cursor -- the one stateful mode, there
    so that replacing a dataset with its own memorizer reproduces it
    bit-exactly; call reset_cursors() before reuse.
    """

    def __init__(self, source: LabeledDataset, mode: str = "resample"):
        if mode not in ("resample", "identity"):
            raise ValueError(f"mode must be 'resample' or 'identity', got {mode!r}")
        self.source = source
        self.mode = mode
        self.num_classes = source.num_classes
        self.feature_dim = source.dim
        self._rows_by_class = [
            np.flatnonzero(source.labels == c) for c in range(source.num_classes)
        ]
        empty = [c for c, rows in enumerate(self._rows_by_class) if rows.size == 0]
        if empty:
            raise ValueError(f"source dataset has no examples for classes {empty}")
        self._cursors = np.zeros(source.num_classes, dtype=np.int64)

    def reset_cursors(self) -> None:
        self._cursors[:] = 0

    def sample(self, label, rng) -> np.ndarray:
        label = self._check_label(label)
        rows = self._rows_by_class[label]
        if self.mode == "identity":
            row = rows[self._cursors[label] % rows.size]
            self._cursors[label] += 1
        else:
            row = rows[as_rng(rng).integers(rows.size)]
        return self.source.features[row].astype(np.float64)

    def sample_batch(self, labels, rng) -> np.ndarray:
        rng = as_rng(rng)
        labels = np.asarray(labels, dtype=np.int64)
        out = np.empty((labels.size, self.feature_dim))
        for i, c in enumerate(labels):
            out[i] = self.sample(int(c), rng)
        return out


def truncated_normal_sample(truncation: float, dim: int, rng) -> np.ndarray:
    """i.i.d. standard normals conditioned on [-2*truncation, 2*truncation],
    by per-dimension rejection: out-of-range components are redrawn."""
    if not truncation > 0:
        raise ValueError(f"truncation must be > 0, got {truncation}")
    rng = as_rng(rng)
    bound = 2.0 * truncation
    z = rng.standard_normal(dim)
    bad = np.abs(z) > bound
    while bad.any():
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > bound
    return z


class TruncatedLatentGenerator(ConditionalGenerator):
    """x = f(W_c z + b_c) with z a truncated standard normal latent.

    Per-class weights (K x D x L) and biases (K x D); `nonlinearity` is
    "identity" or "tanh". Lower truncation concentrates samples near the
    class biases (less diverse datasets); no exact likelihood.
    """

    def __init__(self, weights, biases, truncation: float, nonlinearity: str = "identity"):
        weights = np.asarray(weights, dtype=np.float64)
        biases = np.asarray(biases, dtype=np.float64)
        if weights.ndim != 3:
            raise ValueError(f"weights must be K x D x L, got shape {weights.shape}")
        k, d, latent = weights.shape
        if biases.shape != (k, d):
            raise ValueError(f"biases must be K x D = ({k}, {d}), got {biases.shape}")
        if not (np.all(np.isfinite(weights)) and np.all(np.isfinite(biases))):
            raise ValueError("weights and biases must be finite")
        if not truncation > 0:
            raise ValueError(f"truncation must be > 0, got {truncation}")
        if nonlinearity not in ("identity", "tanh"):
            raise ValueError(f"nonlinearity must be 'identity' or 'tanh', got {nonlinearity!r}")
        self.weights = weights
        self.biases = biases
        self.truncation = float(truncation)
        self.nonlinearity = nonlinearity
        self.num_classes = k
        self.feature_dim = d
        self.latent_dim = latent

    def with_truncation(self, truncation: float) -> "TruncatedLatentGenerator":
        return TruncatedLatentGenerator(self.weights, self.biases, truncation, self.nonlinearity)

    def _activate(self, x: np.ndarray) -> np.ndarray:
        return np.tanh(x) if self.nonlinearity == "tanh" else x

    def sample(self, label, rng) -> np.ndarray:
        label = self._check_label(label)
        rng = as_rng(rng)
        z = truncated_normal_sample(self.truncation, self.latent_dim, rng)
        return self._activate(self.weights[label] @ z + self.biases[label])

    def sample_batch(self, labels, rng) -> np.ndarray:
        rng = as_rng(rng)
        labels = np.asarray(labels, dtype=np.int64)
        for c in np.unique(labels):
            self._check_label(c)
        bound = 2.0 * self.truncation
        z = rng.standard_normal((labels.size, self.latent_dim))
        bad = np.abs(z) > bound
        while bad.any():
            z[bad] = rng.standard_normal(int(bad.sum()))
            bad = np.abs(z) > bound
        out = np.empty((labels.size, self.feature_dim))
        for c in range(self.num_classes):
            mask = labels == c
            if mask.any():
                out[mask] = z[mask] @ self.weights[c].T + self.biases[c]
        return self._activate(out)


def posterior_from_log_likelihood(loglik: np.ndarray, priors) -> tuple[np.ndarray, np.ndarray]:
    """Bayes posterior rows from an N x K conditional log-density matrix.

    Computed in log space with max-subtraction. Rows where every class
    density is zero (all -inf) come back uniform and are flagged in the
    returned boolean mask.
    """
    loglik = np.asarray(loglik, dtype=np.float64)
    priors = np.asarray(priors, dtype=np.float64)
    k = loglik.shape[1]
    with np.errstate(divide="ignore"):
        scores = loglik + np.log(priors)
    degenerate = np.all(np.isneginf(scores), axis=1)
    post = np.empty_like(scores)
    post[degenerate] = 1.0 / k
    ok = ~degenerate
    if ok.any():
        shifted = scores[ok] - scores[ok].max(axis=1, keepdims=True)
        w = np.exp(shifted)
        post[ok] = w / w.sum(axis=1, keepdims=True)
    return post, degenerate


def bayes_posterior(gen: ConditionalGenerator, x, priors) -> tuple[np.ndarray, bool]:
    """Exact class posterior p(y|x) for an exact-likelihood generator.

    Returns (simplex vector, degenerate flag); the flag is True when all
    conditional densities vanish at x, in which case the posterior is
    uniform.
    """
    x = np.asarray(x, dtype=np.float64)
    post, degenerate = posterior_from_log_likelihood(
        gen.log_likelihood_matrix(x.reshape(1, -1)), priors
    )
    return post[0], bool(degenerate[0])


def bayes_classify(gen: ConditionalGenerator, ds: LabeledDataset, priors):
    """Exact-inference accuracy: argmax of the Bayes posterior per example,
    ties toward the lowest class index.

    Returns (top-1 accuracy, per-class accuracy vector with NaN for
    classes absent from `ds`).
    """
    post, _ = posterior_from_log_likelihood(
        gen.log_likelihood_matrix(ds.features.astype(np.float64)), priors
    )
    pred = np.argmax(post, axis=1)
    correct = pred == ds.labels
    per_class = np.full(ds.num_classes, np.nan)
    for c in range(ds.num_classes):
        mask = ds.labels == c
        if mask.any():
            per_class[c] = float(correct[mask].mean())
    return float(correct.mean()), per_class
