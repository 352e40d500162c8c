"""Cosine distance depth (CDD) and its local version (LCDD).

Two evaluation modes exist for the local depth:

* member mode -- the point is ``X[i]``; neighbours come from ``X`` without
  row ``i`` and ``k = max(1, floor(beta * (n - 1)))``;
* query mode -- the point is outside the sample; neighbours come from all of
  ``X`` and ``k = max(1, floor(beta * n))``.

Distance ties are broken by ascending sample index.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import DataError, check_beta, check_index, check_same_dim, check_sphere

__all__ = [
    "DepthConfig",
    "CaseKind",
    "ReflectionCase",
    "k_beta",
    "cdd",
    "reflection_case",
    "depth_neighborhood",
    "lcdd",
    "lcdd_profile",
    "query_profile",
    "LocalCosineDepth",
]

DEGENERATE_TOL = 1e-12
# absorbs float error in beta * m when beta = k / m exactly
_FLOOR_EPS = 1e-9
_CHUNK = 512


def k_beta(beta, m):
    """Neighbourhood size ``max(1, floor(beta * m))`` for ``m`` candidates."""
    beta = check_beta(beta)
    if m < 1:
        raise DataError("neighbourhood needs at least one candidate point")
    return max(1, min(m, math.floor(beta * m + _FLOOR_EPS)))


@dataclass(frozen=True)
class DepthConfig:
    """Locality level and tie policy for local depth evaluation."""

    beta: float = 1.0
    tie_break: str = "index"

    def __post_init__(self):
        check_beta(self.beta)
        if self.tie_break != "index":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")

    def k_member(self, n):
        return k_beta(self.beta, n - 1)

    def k_query(self, n):
        return k_beta(self.beta, n)


class CaseKind(enum.Enum):
    DEPTH_MEDIAN = "depth_median"
    ANTIPODAL = "antipodal"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class ReflectionCase:
    """Position of ``X[i]`` within its own reflected region.

    ``c_value`` is ``1 + 2 * sum_{k != i} <X[i], X[k]>``.
    """

    case: CaseKind
    c_value: float


def _distances(x, X):
    return 1.0 - X @ x


def cdd(x, X):
    """Sample cosine distance depth ``2 - mean_w d_cos(x, w)``.

    ``x`` is included in the average when it belongs to ``X``.
    """
    X = check_sphere(X, normalize=False)
    x = np.asarray(x, dtype=float)
    check_same_dim(x, X)
    return float(2.0 - np.mean(_distances(x, X)))


def reflection_case(X, i):
    X = check_sphere(X, normalize=False)
    n = X.shape[0]
    if n < 2:
        raise DataError("reflection case needs n >= 2")
    i = check_index(i, n)
    inner = X @ X[i]
    c = float(1.0 + 2.0 * (inner.sum() - inner[i]))
    if abs(c) <= DEGENERATE_TOL:
        return ReflectionCase(CaseKind.DEGENERATE, c)
    if c > 0:
        return ReflectionCase(CaseKind.DEPTH_MEDIAN, c)
    return ReflectionCase(CaseKind.ANTIPODAL, c)


def _member_order(X, i):
    """Indices of ``X`` without ``i``, nearest first, ties by index."""
    d = _distances(X[i], X)
    others = np.delete(np.arange(X.shape[0]), i)
    return others[np.argsort(d[others], kind="stable")]


def depth_neighborhood(X, i, beta):
    """Indices of the ``k_beta`` nearest points to ``X[i]`` in ``X`` minus row i.

    The returned indices are sorted ascending.
    """
    X = check_sphere(X, normalize=False)
    n = X.shape[0]
    if n < 2:
        raise DataError("depth neighbourhood needs n >= 2")
    i = check_index(i, n)
    k = k_beta(beta, n - 1)
    return np.sort(_member_order(X, i)[:k])


def lcdd(x, X, beta=1.0, index=None):
    """Local cosine distance depth of a point with respect to ``X``.

    Parameters
    ----------
    x : array-like of shape (q,) or None
        Query point. Ignored (may be None) when ``index`` is given.
    X : array-like of shape (n, q)
    beta : float in (0, 1]
    index : int, optional
        Member mode: evaluate the depth of ``X[index]`` using the rest of
        the sample. Without it the query mode is used.

    With ``beta = 1`` in member mode the result is identical to
    ``cdd(X[index], X without row index)``.
    """
    X = check_sphere(X, normalize=False)
    n = X.shape[0]
    if index is not None:
        if n < 2:
            raise DataError("member-mode depth needs n >= 2")
        index = check_index(index, n)
        nbrs = depth_neighborhood(X, index, beta)
        return cdd(X[index], X[nbrs])
    x = np.asarray(x, dtype=float)
    check_same_dim(x, X)
    k = k_beta(beta, n)
    order = np.argsort(_distances(x, X), kind="stable")
    return cdd(x, X[np.sort(order[:k])])


def _profile_from_sorted(sorted_d, ks):
    cs = np.cumsum(sorted_d, axis=1)
    return np.column_stack([2.0 - cs[:, k - 1] / k for k in ks])


def _member_profile(X, rows, ks):
    n = X.shape[0]
    out = np.empty((rows.size, len(ks)))
    for start in range(0, rows.size, _CHUNK):
        sub = rows[start : start + _CHUNK]
        D = 1.0 - X[sub] @ X.T
        D[np.arange(sub.size), sub] = np.inf
        D = np.sort(D, axis=1)[:, : n - 1]
        out[start : start + sub.size] = _profile_from_sorted(D, ks)
    return out


def lcdd_profile(X, betas, rows=None):
    """Member-mode LCDD of sample points at several locality levels.

    One sort of the pairwise distances per point serves all ``betas``.

    Parameters
    ----------
    X : array-like of shape (n, q)
    betas : sequence of float
    rows : array of int, optional
        Restrict to these sample indices (default: all).

    Returns
    -------
    ndarray of shape (len(rows), len(betas))
    """
    X = check_sphere(X, normalize=False)
    n = X.shape[0]
    if n < 2:
        raise DataError("depth profile needs n >= 2")
    ks = [k_beta(b, n - 1) for b in np.atleast_1d(betas)]
    rows = np.arange(n) if rows is None else np.asarray(rows, dtype=int)
    return _member_profile(X, rows, ks)


def query_profile(Q, X, betas):
    """Query-mode LCDD of the rows of ``Q`` w.r.t. ``X`` at several levels."""
    X = check_sphere(X, normalize=False)
    Q = check_sphere(Q, normalize=False, name="Q")
    check_same_dim(Q, X)
    n = X.shape[0]
    ks = [k_beta(b, n) for b in np.atleast_1d(betas)]
    out = np.empty((Q.shape[0], len(ks)))
    for start in range(0, Q.shape[0], _CHUNK):
        stop = min(Q.shape[0], start + _CHUNK)
        D = np.sort(1.0 - Q[start:stop] @ X.T, axis=1)
        out[start:stop] = _profile_from_sorted(D, ks)
    return out


class LocalCosineDepth(TransformerMixin, BaseEstimator):
    """Local cosine distance depth with respect to a reference sample.

    ``fit(X)`` stores the reference sample; ``transform(Q)`` returns the
    query-mode depth of each row of ``Q`` as a single column. Like
    ``LocalOutlierFactor.fit_predict``, ``fit_transform(X)`` is not
    ``fit(X).transform(X)``: it returns the member-mode (leave-one-out)
    depths of the reference points themselves.

    Parameters
    ----------
    beta : float in (0, 1]
        Locality level; ``beta = 1`` gives the global cosine distance depth.
    """

    def __init__(self, beta=1.0):
        self.beta = beta

    def fit(self, X, y=None):
        check_beta(self.beta)
        X = check_sphere(X)
        if X.shape[0] < 2:
            raise DataError("reference sample needs n >= 2")
        self.reference_ = X
        self.n_features_in_ = X.shape[1]
        self.depth_ = lcdd_profile(X, [self.beta])[:, 0]
        return self

    def score_samples(self, Q):
        check_is_fitted(self, "reference_")
        return query_profile(check_sphere(Q, name="Q"), self.reference_, [self.beta])[:, 0]

    def transform(self, Q):
        return self.score_samples(Q)[:, None]

    def fit_transform(self, X, y=None):
        return self.fit(X).depth_[:, None]
