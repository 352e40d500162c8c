"""Geometry of the unit hypersphere with the cosine distance.

Points are plain float arrays: a single point has shape ``(q,)`` and a
sample has shape ``(n, q)``. :func:`unit_vector` and
:func:`~lcdd._validation.check_sphere` are the constructors that enforce the
unit-norm invariant.
"""

import numpy as np
from scipy.stats import ortho_group
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import DataError, check_index, check_same_dim, check_sphere, unit_vector

__all__ = [
    "unit_vector",
    "cosine_distance",
    "same_direction",
    "reflect",
    "reflected_region",
    "sqrt_compositional_embed",
    "random_orthogonal",
    "SqrtCompositionalTransformer",
]

#: Two unit vectors are equal when their cosine distance is at most this.
EQUAL_TOL = 1e-12


def cosine_distance(x, y):
    """Cosine distance ``1 - <x, y>`` between two unit vectors, in [0, 2]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DataError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(1.0 - np.dot(x, y))


def same_direction(x, y):
    return cosine_distance(x, y) <= EQUAL_TOL


def reflect(x_j, x_i):
    """Reflect ``x_j`` through the axis spanned by ``x_i``.

    Computes ``2 x_i <x_i, x_j> - x_j``. The result is renormalized so it
    lies on the sphere to machine precision.
    """
    x_j = np.asarray(x_j, dtype=float)
    x_i = np.asarray(x_i, dtype=float)
    if x_j.shape != x_i.shape:
        raise DataError(f"dimension mismatch: {x_j.shape} vs {x_i.shape}")
    r = 2.0 * x_i * np.dot(x_i, x_j) - x_j
    return r / np.linalg.norm(r)


def reflected_region(X, i):
    """Augment a sample with the reflections of its other points through ``X[i]``.

    Returns an array of ``2n - 1`` rows: the original ``n`` rows followed by
    ``reflect(X[j], X[i])`` for every ``j != i`` in index order.
    """
    X = check_sphere(X)
    n = X.shape[0]
    if n < 2:
        raise DataError("reflected region needs n >= 2")
    i = check_index(i, n)
    xi = X[i]
    others = np.delete(X, i, axis=0)
    R = 2.0 * np.outer(others @ xi, xi) - others
    R /= np.linalg.norm(R, axis=1)[:, None]
    return np.vstack([X, R])


def sqrt_compositional_embed(v):
    """Map a nonnegative composition onto the sphere by the square root.

    ``v`` is closed to sum one, then square-rooted componentwise, so the
    result has unit Euclidean norm.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DataError(f"expected a 1-D vector, got shape {v.shape}")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise DataError("composition has negative or non-finite components")
    total = v.sum()
    if total <= 0:
        raise DataError("composition sums to zero")
    out = np.sqrt(v / total)
    # closure rounding leaves |out| off by a few ulps
    return out / np.linalg.norm(out)


def random_orthogonal(q, rng=None):
    """Haar-distributed ``q x q`` orthogonal matrix."""
    if q < 2:
        raise ValueError("q must be >= 2")
    rng = np.random.default_rng(rng)
    return ortho_group.rvs(q, random_state=rng)


class SqrtCompositionalTransformer(TransformerMixin, BaseEstimator):
    """Square-root embedding of compositional rows onto the hypersphere.

    Parameters
    ----------
    scale : float or None
        Divide raw values by this before anything else (e.g. 100 for
        percentages).
    complement : bool
        Append ``1 - sum(row)`` as an extra part. Complements in
        ``[-complement_tol, 0)`` are clamped to zero; lower values are
        rejected.
    complement_tol : float
    """

    def __init__(self, scale=None, complement=False, complement_tol=1e-9):
        self.scale = scale
        self.complement = complement
        self.complement_tol = complement_tol

    def fit(self, X, y=None):
        X = self._check_raw(X)
        self.n_features_in_ = X.shape[1]
        return self

    def _check_raw(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DataError(f"expected 2-D input, got shape {X.shape}")
        return X

    def _prepare(self, X):
        """Return the closed-form parts matrix and a per-row error list."""
        X = self._check_raw(X)
        if self.scale is not None:
            X = X / float(self.scale)
        errors = []
        neg = np.flatnonzero(np.any(X < 0, axis=1) | ~np.all(np.isfinite(X), axis=1))
        errors += [(int(r), "negative or non-finite value") for r in neg]
        if self.complement:
            comp = 1.0 - X.sum(axis=1)
            low = np.flatnonzero(comp < -self.complement_tol)
            errors += [(int(r), f"complement {comp[r]:.3g} below zero") for r in low]
            comp = np.clip(comp, 0.0, None)
            X = np.column_stack([X, comp])
        zero = np.flatnonzero(X.sum(axis=1) <= 0)
        errors += [(int(r), "row sums to zero") for r in zero]
        return X, sorted(set(errors))

    def transform(self, X):
        parts, errors = self._prepare(X)
        if errors:
            msg = "; ".join(f"row {r}: {m}" for r, m in errors[:20])
            raise DataError(f"{len(errors)} invalid rows: {msg}")
        out = np.sqrt(parts / parts.sum(axis=1, keepdims=True))
        return out / np.linalg.norm(out, axis=1, keepdims=True)
