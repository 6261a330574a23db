"""Input validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_rng(seed_or_rng) -> np.random.Generator:
    """Coerce an int seed or an existing Generator into a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def check_feature_matrix(X, name: str = "X") -> np.ndarray:
    """Validate a 2-D finite float matrix and return it as float64."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite entries")
    return X


def check_labels(y, n: int, num_classes: int, name: str = "y") -> np.ndarray:
    """Validate an integer label vector against length and class range."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise ValueError(f"{name} must be 1-D of length {n}, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == np.floor(y)):
            raise ValueError(f"{name} must be integer-valued")
    y = y.astype(np.int64)
    if y.size and (y.min() < 0 or y.max() >= num_classes):
        raise ValueError(
            f"{name} values must lie in [0, {num_classes}), "
            f"got range [{y.min()}, {y.max()}]"
        )
    return y


def check_simplex_rows(P, tol: float = 1e-6, name: str = "probs") -> np.ndarray:
    """Validate that every row of P is a probability vector."""
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {P.shape}")
    if np.any(P < -tol):
        raise ValueError(f"{name} has negative entries")
    rowsums = P.sum(axis=1)
    if np.any(np.abs(rowsums - 1.0) > tol):
        worst = float(np.max(np.abs(rowsums - 1.0)))
        raise ValueError(f"{name} rows must sum to 1 within {tol} (worst |err|={worst:g})")
    return P


def check_symmetric(A, tol: float = 1e-8, name: str = "A") -> np.ndarray:
    """Validate a square symmetric matrix (within absolute tolerance)."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.max(np.abs(A - A.T), initial=0.0) > tol:
        raise ValueError(f"{name} is not symmetric within {tol}")
    return A
