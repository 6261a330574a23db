"""Sample-statistics metrics: moment matching (FID), kernel two-sample
(KID), classifier-confidence score (IS), Brier score, and Pearson
correlation.

Conventions, fixed so reports are reproducible:

* covariance is unbiased (divides by N-1) and symmetrized;
* the PSD matrix square root goes through a symmetric eigendecomposition
  with negative eigenvalues clamped to zero (clamp tolerance 1e-10);
* the FID cross term is tr((S_a^1/2 S_b S_a^1/2)^1/2), the numerically
  symmetric form of tr((S_a S_b)^1/2);
* KID uses the polynomial kernel (dot(x,y)/M + 1)^3 with the unbiased
  (diagonal-excluded) MMD^2 estimator;
* the confidence score uses 10 splits by default, epsilon-floors
  (1e-12) inside the KL, and reports mean +/- sample std over splits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import check_feature_matrix, check_simplex_rows, check_symmetric

EIGENVALUE_CLAMP_TOL = 1e-10
_KL_EPS = 1e-12


@dataclass(frozen=True)
class MomentStats:
    """Mean vector and covariance matrix of a feature sample."""

    mean: np.ndarray
    cov: np.ndarray
    n: int

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = check_symmetric(self.cov, tol=1e-9, name="cov")
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"mean/cov shapes inconsistent: {mean.shape} vs {cov.shape}")
        if self.n < 2:
            raise ValueError(f"need n >= 2 samples, got {self.n}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def moment_stats(features) -> MomentStats:
    """Sample mean and unbiased covariance of an N x M feature matrix."""
    X = check_feature_matrix(features, name="features")
    n = X.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    mean = X.mean(axis=0)
    diff = X - mean
    cov = diff.T @ diff / (n - 1)
    cov = 0.5 * (cov + cov.T)
    return MomentStats(mean=mean, cov=cov, n=n)


def sqrtm_psd(A) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues below zero (numerical noise down to -1e-10, and anything
    worse) are clamped to zero; the result R is symmetric and satisfies
    ||R @ R - A||_F <= 1e-6 * (1 + ||A||_F) for PSD input.
    """
    A = check_symmetric(A, tol=1e-8, name="A")
    eigvals, eigvecs = np.linalg.eigh(0.5 * (A + A.T))
    root = eigvecs @ (np.sqrt(np.clip(eigvals, 0.0, None))[:, None] * eigvecs.T)
    return 0.5 * (root + root.T)


def fid(a: MomentStats, b: MomentStats) -> float:
    """Frechet distance between Gaussians with the given moments:
    ||mu_a - mu_b||^2 + tr(S_a + S_b - 2 (S_a S_b)^1/2)."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    root_a = sqrtm_psd(a.cov)
    cross = sqrtm_psd(root_a @ b.cov @ root_a)
    diff = a.mean - b.mean
    value = float(diff @ diff + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    if value < 0.0:
        if value < -1e-6:
            raise ArithmeticError(f"FID came out {value}, below the -1e-6 clamp window")
        value = 0.0
    return value


def inception_score(probs, splits: int = 10) -> tuple[float, float]:
    """exp(mean KL(p(y|x) || p(y))) per split; returns (mean, sample std).

    `probs` is N x K with simplex rows. N is cut into `splits` equal
    chunks (remainder rows dropped); the marginal p(y) is each chunk's
    row mean. Scores land in [1, K] up to the epsilon floor.
    """
    P = check_simplex_rows(probs, tol=1e-6)
    if splits < 1:
        raise ValueError(f"splits must be >= 1, got {splits}")
    per_split = P.shape[0] // splits
    if per_split < 1:
        raise ValueError(f"{P.shape[0]} rows cannot fill {splits} splits")
    scores = []
    for s in range(splits):
        chunk = P[s * per_split : (s + 1) * per_split]
        marginal = chunk.mean(axis=0)
        ratio = np.log(np.maximum(chunk, _KL_EPS)) - np.log(np.maximum(marginal, _KL_EPS))
        kl = np.where(chunk > 0.0, chunk * ratio, 0.0).sum(axis=1)
        scores.append(float(np.exp(kl.mean())))
    scores = np.asarray(scores)
    std = float(scores.std(ddof=1)) if splits > 1 else 0.0
    return float(scores.mean()), std


def kid(a, b, degree: int = 3, coef: float = 1.0, scale: float | None = None) -> float:
    """Unbiased MMD^2 with the polynomial kernel (scale*<x,y> + coef)^degree.

    `scale` defaults to 1/M. Within-set kernel means exclude the
    diagonal, which is what makes the estimator unbiased; the value for
    two samples of the same distribution is zero in expectation.
    """
    X = check_feature_matrix(a, name="a")
    Y = check_feature_matrix(b, name="b")
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if X.shape[0] < 2 or Y.shape[0] < 2:
        raise ValueError("need at least 2 rows per side")
    if scale is None:
        scale = 1.0 / X.shape[1]
    kxx = (scale * (X @ X.T) + coef) ** degree
    kyy = (scale * (Y @ Y.T) + coef) ** degree
    kxy = (scale * (X @ Y.T) + coef) ** degree
    n, m = X.shape[0], Y.shape[0]
    sum_xx = (kxx.sum() - np.trace(kxx)) / (n * (n - 1))
    sum_yy = (kyy.sum() - np.trace(kyy)) / (m * (m - 1))
    return float(sum_xx + sum_yy - 2.0 * kxy.mean())


def brier_score(probs, labels) -> float:
    """Mean squared distance between predictive rows and one-hot labels."""
    P = check_simplex_rows(probs, tol=1e-6)
    y = np.asarray(labels, dtype=np.int64)
    if y.shape != (P.shape[0],):
        raise ValueError(f"labels must be length {P.shape[0]}, got shape {y.shape}")
    onehot = np.zeros_like(P)
    onehot[np.arange(P.shape[0]), y] = 1.0
    return float(((P - onehot) ** 2).sum(axis=1).mean())


def pearson(xs, ys) -> float:
    """Sample Pearson correlation; rejects degenerate inputs."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"need equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least 2 points")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        raise ValueError("zero variance input")
    xc = x - x.mean()
    yc = y - y.mean()
    return float((xc @ yc) / np.sqrt((xc @ xc) * (yc @ yc)))
