"""Input validation helpers shared by the estimators and functional API."""

import math

import numpy as np

#: Inputs with a smaller Euclidean norm are rejected instead of normalized.
MIN_NORM = 1e-9
#: Tolerance on the unit-norm invariant.
UNIT_TOL = 1e-12


class DataError(ValueError):
    """Raised when input data violate a documented precondition."""


def unit_vector(v):
    """Return ``v`` scaled to unit Euclidean norm.

    Raises
    ------
    DataError
        If ``v`` is not a finite 1-D vector of length >= 2 or its norm is
        below :data:`MIN_NORM`.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.shape[0] < 2:
        raise DataError(f"expected a vector of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DataError("vector has non-finite entries")
    norm = np.linalg.norm(v)
    if norm < MIN_NORM:
        raise DataError(f"vector norm {norm:.3g} is below {MIN_NORM:g}")
    return v / norm


def check_sphere(X, normalize=True, name="X"):
    """Validate a sample of points on the unit hypersphere.

    Parameters
    ----------
    X : array-like of shape (n, q)
        Rows are points. A single 1-D vector is promoted to one row.
    normalize : bool
        Rescale rows to unit norm (rows with norm < MIN_NORM are rejected).
        When False, rows must already be unit vectors within UNIT_TOL.

    Returns
    -------
    ndarray of shape (n, q), float64
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {X.shape}")
    n, q = X.shape
    if n < 1:
        raise DataError(f"{name} is empty")
    if q < 2:
        raise DataError(f"{name} must have dimension q >= 2, got {q}")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{name} has non-finite entries")
    norms = np.linalg.norm(X, axis=1)
    if normalize:
        bad = np.flatnonzero(norms < MIN_NORM)
        if bad.size:
            raise DataError(f"{name} rows {bad[:10].tolist()} have norm below {MIN_NORM:g}")
        return X / norms[:, None]
    bad = np.flatnonzero(np.abs(norms - 1.0) > UNIT_TOL)
    if bad.size:
        raise DataError(f"{name} rows {bad[:10].tolist()} are not unit vectors")
    return X


def check_same_dim(*arrays):
    dims = {a.shape[-1] for a in arrays}
    if len(dims) != 1:
        raise DataError(f"dimension mismatch: {sorted(dims)}")


def check_beta(beta):
    beta = float(beta)
    if not (0.0 < beta <= 1.0) or math.isnan(beta):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return beta


def check_index(i, n):
    i = int(i)
    if not 0 <= i < n:
        raise IndexError(f"index {i} out of range for sample of size {n}")
    return i


def check_binary_labels(y, n):
    """Return labels as an int array in {1, 2} with both classes present."""
    y = np.asarray(y)
    if y.shape != (n,):
        raise DataError(f"labels have shape {y.shape}, expected ({n},)")
    classes = np.unique(y)
    if classes.size != 2:
        raise DataError(f"expected exactly two classes, got {classes.tolist()}")
    return classes
