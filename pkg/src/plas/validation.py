"""Small input-validation helpers shared across the package."""
from __future__ import annotations

import numbers

import numpy as np

PROB_TOL = 1e-12


def as_generator(random_state=None) -> np.random.Generator:
    """Coerce ``random_state`` (None, int seed, or Generator) to a Generator."""
    if isinstance(random_state, np.random.Generator):
        return random_state
    return np.random.default_rng(random_state)


def check_positive(value, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0.0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_arm(arm, n_arms: int) -> int:
    if not isinstance(arm, (int, np.integer)):
        raise ValueError(f"arm index must be an integer, got {arm!r}")
    arm = int(arm)
    if not 0 <= arm < n_arms:
        raise ValueError(f"arm index {arm} out of range for {n_arms} arms")
    return arm


def check_context(x, dim: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"context must be a 1-d vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"context has dimension {x.shape[0]}, expected {dim}")
    return x


def check_contexts(X, dim: int | None = None) -> np.ndarray:
    """Coerce to a 2-d (n, d) array; a single vector becomes one row."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError(f"contexts must be a 2-d array, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise ValueError(f"contexts have dimension {X.shape[1]}, expected {dim}")
    return X


def check_probability_vector(w, n_arms: int | None = None, tol: float = PROB_TOL) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError(f"probability vector must be 1-d, got shape {w.shape}")
    if n_arms is not None and w.shape[0] != n_arms:
        raise ValueError(f"probability vector has length {w.shape[0]}, expected {n_arms}")
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise ValueError("probability vector entries must be finite and nonnegative")
    if abs(float(w.sum()) - 1.0) > tol:
        raise ValueError(f"probability vector sums to {w.sum()!r}, not 1 within {tol}")
    return w


def check_unit_interval(value, name: str) -> float:
    if not isinstance(value, numbers.Real):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
