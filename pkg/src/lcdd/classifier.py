"""DD-plot classification with a polynomial separator through the origin.

Each point is mapped to its depth pair ``(d1, d2)`` with respect to the two
training classes. A separator ``s(u) = a_1 u + ... + a_k u^k`` is fitted in
that plane by minimizing the prior-weighted misclassification rate.

Two orientations are searched:

* ``CLASS2_ABOVE`` -- class 2 iff ``d2 >= s(d1)``;
* ``CLASS1_ABOVE`` -- the mirror image, class 1 iff ``d1 >= s(d2)``.

With ``s`` the identity either orientation is the maximum-depth rule.
"""

import copy
import enum
import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.model_selection import StratifiedKFold
from sklearn.utils.validation import check_is_fitted

from ._validation import DataError, check_beta, check_binary_labels, check_same_dim, check_sphere
from .depth import k_beta, lcdd_profile, query_profile

__all__ = [
    "Orientation",
    "PolynomialSeparator",
    "dd_plot",
    "dd_profile",
    "empirical_risk",
    "misclassification_rate",
    "fit_separator",
    "select_degree",
    "DDClassifier",
    "train",
    "fit_predict_betas",
    "select_beta",
]

#: Points within this distance of the curve count as on it (the ">=" side).
BOUNDARY_TOL = 1e-12
_SMOOTHING_STAGES = (0.2, 0.05, 0.01)


class Orientation(enum.Enum):
    CLASS2_ABOVE = "class2_above"
    CLASS1_ABOVE = "class1_above"


@dataclass(frozen=True)
class PolynomialSeparator:
    """Separator ``s(u) = sum_i coeffs[i-1] * u**i`` (no constant term)."""

    coeffs: tuple
    orientation: Orientation = Orientation.CLASS2_ABOVE

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coeffs)
        if not coeffs:
            raise ValueError("separator needs degree >= 1")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @classmethod
    def identity(cls, degree=1, orientation=Orientation.CLASS2_ABOVE):
        return cls((1.0,) + (0.0,) * (degree - 1), orientation)

    @property
    def degree(self):
        return len(self.coeffs)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = _powers(u.ravel(), self.degree) @ np.array(self.coeffs)
        return float(out[0]) if u.ndim == 0 else out.reshape(u.shape)

    def axes(self, D):
        """Return ``(u, v, above_label)`` for DD points ``D`` of shape (m, 2)."""
        if self.orientation is Orientation.CLASS2_ABOVE:
            return D[:, 0], D[:, 1], 2
        return D[:, 1], D[:, 0], 1

    def predict(self, D):
        u, v, above = self.axes(np.atleast_2d(D))
        is_above = v - self(u) >= -BOUNDARY_TOL
        return np.where(is_above, above, 3 - above)


def _powers(u, degree):
    return np.column_stack([u**i for i in range(1, degree + 1)])


# -- depth-space coordinates -------------------------------------------------


def _row_index(X):
    """Map each distinct row (by bytes) to its first index in ``X``."""
    index = {}
    for i, row in enumerate(np.ascontiguousarray(X)):
        index.setdefault(row.tobytes(), i)
    return index


def _depths_vs(Q, T, betas, member_detection):
    out = query_profile(Q, T, betas)
    if member_detection and T.shape[0] >= 2:
        index = _row_index(T)
        hits = [(qi, index[row.tobytes()]) for qi, row in enumerate(np.ascontiguousarray(Q)) if row.tobytes() in index]
        if hits:
            qi, ti = map(np.array, zip(*hits))
            out[qi] = lcdd_profile(T, betas, rows=ti)
    return out


def dd_profile(queries, train1, train2, betas, member_detection=True):
    """DD coordinates of ``queries`` at several locality levels.

    Queries are scored in query mode, except that a query identical to a
    training row is scored in member mode (leave-one-out) against that
    training class when ``member_detection`` is on.

    Returns
    -------
    ndarray of shape (m, len(betas), 2)
    """
    train1 = check_sphere(train1, normalize=False, name="train1")
    train2 = check_sphere(train2, normalize=False, name="train2")
    queries = check_sphere(queries, normalize=False, name="queries")
    check_same_dim(queries, train1, train2)
    betas = [check_beta(b) for b in np.atleast_1d(betas)]
    d1 = _depths_vs(queries, train1, betas, member_detection)
    d2 = _depths_vs(queries, train2, betas, member_detection)
    return np.stack([d1, d2], axis=-1)


def dd_plot(queries, train1, train2, beta, member_detection=True):
    """DD coordinates ``(d1, d2)`` of each query; shape (m, 2)."""
    return dd_profile(queries, train1, train2, [beta], member_detection)[:, 0, :]


def _training_dd(train1, train2, betas):
    """Member-mode depth for the own class, query mode for the other."""
    m1 = lcdd_profile(train1, betas)
    m2 = lcdd_profile(train2, betas)
    c1 = np.stack([m1, query_profile(train1, train2, betas)], axis=-1)
    c2 = np.stack([query_profile(train2, train1, betas), m2], axis=-1)
    return np.concatenate([c1, c2])


# -- risk --------------------------------------------------------------------


def _check_dd_labels(D, y):
    D = np.asarray(D, dtype=float)
    y = np.asarray(y)
    if D.ndim != 2 or D.shape[1] != 2 or y.shape != (D.shape[0],):
        raise DataError("DD points must have shape (m, 2) with one label each")
    if not np.all(np.isin(y, (1, 2))):
        raise DataError("DD labels must be 1 or 2")
    if not (np.any(y == 1) and np.any(y == 2)):
        raise DataError("both classes must be present")
    return D, y


def _default_priors(y, priors):
    if priors is None:
        p1 = float(np.mean(y == 1))
        return p1, 1.0 - p1
    p1, p2 = map(float, priors)
    if not (0 < p1 < 1 and abs(p1 + p2 - 1.0) <= 1e-12):
        raise ValueError(f"priors must be in (0,1) and sum to one, got {priors}")
    return p1, p2


def empirical_risk(D, y, separator, priors=None):
    """Prior-weighted fraction of misclassified DD points.

    ``pi_1 * (class-1 error rate) + pi_2 * (class-2 error rate)``; priors
    default to the class proportions, giving the plain error rate.
    """
    D, y = _check_dd_labels(D, y)
    p1, p2 = _default_priors(y, priors)
    wrong = separator.predict(D) != y
    return p1 * wrong[y == 1].mean() + p2 * wrong[y == 2].mean()


def misclassification_rate(y_true, y_pred, priors=None):
    """Prior-weighted misclassification rate for labels in any two classes."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    classes = np.unique(y_true)
    if priors is None:
        return float(np.mean(y_true != y_pred))
    return float(sum(p * np.mean(y_pred[y_true == c] != c) for p, c in zip(priors, classes)))


# -- separator fitting -------------------------------------------------------


def _candidate_subsets(n, degree, max_candidates, rng):
    total = math.comb(n, degree)
    if total <= max_candidates:
        return np.array(list(itertools.combinations(range(n), degree)), dtype=int).reshape(-1, degree)
    draws = rng.integers(0, n, size=(2 * max_candidates, degree))
    draws.sort(axis=1)
    distinct = np.all(np.diff(draws, axis=1) > 0, axis=1) if degree > 1 else np.ones(len(draws), bool)
    return draws[distinct][:max_candidates]


def _interpolants(u, v, subsets):
    """Coefficients of the polynomials through the origin and each subset."""
    degree = subsets.shape[1]
    U = u[subsets]
    V = v[subsets]
    A = np.stack([U**i for i in range(1, degree + 1)], axis=-1)
    with np.errstate(all="ignore"):
        ok = np.abs(np.linalg.det(A)) > 1e-12
        coeffs = np.linalg.solve(A[ok], V[ok][..., None])[..., 0] if ok.any() else np.empty((0, degree))
    return coeffs[np.all(np.isfinite(coeffs), axis=1)]


class _Objective:
    """Exact and smoothed risk for one orientation."""

    def __init__(self, u, v, is_above_class, p_above, p_below, degree):
        self.P = _powers(u, degree)
        self.v = v
        self.above_cls = is_above_class
        self.w = np.where(is_above_class, p_above / is_above_class.sum(), p_below / (~is_above_class).sum())

    def risks(self, coeffs):
        """Exact risk of each row of ``coeffs``."""
        out = np.empty(len(coeffs))
        for start in range(0, len(coeffs), 512):
            C = coeffs[start : start + 512]
            above = (self.v[None, :] - C @ self.P.T) >= -BOUNDARY_TOL
            wrong = above != self.above_cls[None, :]
            out[start : start + 512] = wrong @ self.w
        return out

    def smooth(self, coeffs, tau):
        margin = self.v - self.P @ coeffs
        sign = np.where(self.above_cls, -1.0, 1.0)
        return float(self.w @ expit(sign * margin / tau))


def fit_separator(D, y, degree, priors=None, max_candidates=2000, refine=True, random_state=None):
    """Fit a degree-``degree`` polynomial separator by empirical risk minimization.

    Candidates interpolate every ``degree``-subset of DD points (a seeded
    random subset of them when there are more than ``max_candidates``),
    plus the identity, in both orientations. The best candidate is then
    polished by Nelder-Mead on a logistic-smoothed risk at decreasing
    temperatures; a polished solution is kept only when its exact risk is
    not larger.
    """
    D, y = _check_dd_labels(D, y)
    degree = int(degree)
    if degree < 1:
        raise ValueError("degree must be >= 1")
    p1, p2 = _default_priors(y, priors)
    # canonical order makes the fit independent of storage order
    order = np.lexsort((y, D[:, 1], D[:, 0]))
    D, y = D[order], y[order]
    if min(np.sum(y == 1), np.sum(y == 2)) < degree:
        raise DataError(f"need at least {degree} points per class")
    if any(np.unique(D[y == c], axis=0).shape[0] < 2 for c in (1, 2)):
        warnings.warn("degenerate DD-plot; using the identity separator", RuntimeWarning)
        return PolynomialSeparator.identity(degree)
    rng = np.random.default_rng(random_state)
    subsets = _candidate_subsets(D.shape[0], degree, max_candidates, rng)
    identity = np.zeros((1, degree))
    identity[0, 0] = 1.0

    best = None
    for orientation in Orientation:
        u, v, above = PolynomialSeparator.identity(degree, orientation).axes(D)
        is_above = y == above
        p_above, p_below = (p2, p1) if above == 2 else (p1, p2)
        obj = _Objective(u, v, is_above, p_above, p_below, degree)
        cands = np.vstack([identity, _interpolants(u, v, subsets)])
        risks = obj.risks(cands)
        j = int(np.argmin(risks))
        if best is None or risks[j] < best[0]:
            best = (risks[j], orientation, cands[j], obj)

    risk, orientation, coeffs, obj = best
    if refine and risk > 0:
        coeffs, risk = _refine(obj, coeffs, risk)
    return PolynomialSeparator(tuple(coeffs), orientation)


def _refine(obj, coeffs, risk):
    spread = float(np.std(obj.v)) or 1.0
    x = coeffs.copy()
    for stage in _SMOOTHING_STAGES:
        tau = stage * spread
        res = minimize(
            obj.smooth,
            x,
            args=(tau,),
            method="Nelder-Mead",
            options={"maxiter": 100 * x.size, "xatol": 1e-8, "fatol": 1e-10},
        )
        x = res.x
        r = obj.risks(x[None, :])[0]
        if r <= risk:
            coeffs, risk = x.copy(), r
    return coeffs, risk


def select_degree(D, y, degrees=(1, 2, 3), folds=5, priors=None, max_candidates=2000, refine=True, random_state=None):
    """Choose the separator degree by stratified k-fold CV in the DD plane.

    Returns ``(degree, cv_risks)`` where ``cv_risks`` maps degree to mean
    held-out risk. Ties go to the lowest degree.
    """
    D, y = _check_dd_labels(D, y)
    degrees = sorted(set(int(k) for k in degrees))
    if not degrees or not set(degrees) <= {1, 2, 3}:
        raise ValueError(f"degrees must be a non-empty subset of {{1, 2, 3}}, got {degrees}")
    if min(np.sum(y == 1), np.sum(y == 2)) < folds:
        raise DataError(f"each class needs at least {folds} points for {folds}-fold CV")
    if len(degrees) == 1:
        return degrees[0], {degrees[0]: float("nan")}
    order = np.lexsort((y, D[:, 1], D[:, 0]))
    D, y = D[order], y[order]
    seed = np.random.default_rng(random_state).integers(2**31)
    splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=int(seed))
    splits = list(splitter.split(D, y))
    cv = {}
    for k in degrees:
        fold_risks = []
        for f, (tr, te) in enumerate(splits):
            sep = fit_separator(D[tr], y[tr], k, priors, max_candidates, refine, random_state=(int(seed), k, f))
            fold_risks.append(empirical_risk(D[te], y[te], sep, priors))
        cv[k] = float(np.mean(fold_risks))
    best = min(degrees, key=lambda k: (cv[k], k))
    return best, cv


def _fit_dd_model(D, y, degrees, folds, priors, max_candidates, refine, random_state):
    degree, cv = select_degree(D, y, degrees, folds, priors, max_candidates, refine, random_state)
    sep = fit_separator(D, y, degree, priors, max_candidates, refine, random_state=random_state)
    return sep, degree, cv


# -- estimator ---------------------------------------------------------------


class DDClassifier(ClassifierMixin, BaseEstimator):
    """Two-class DD-classifier on the hypersphere using local cosine depth.

    Parameters
    ----------
    beta : float in (0, 1]
        Locality level of the depth; 1 gives the global cosine distance depth.
    degrees : tuple of int
        Candidate separator degrees, chosen by CV in the DD plane.
    cv_folds : int
        Folds for the degree selection.
    priors : pair of float or None
        Class priors in the empirical risk; default are the training
        proportions.
    max_candidates : int
        Cap on interpolating subsets per degree and orientation.
    refine : bool
        Polish the best interpolating separator with smoothed local search.
    member_detection : bool
        Score queries identical to a training row in leave-one-out mode.
    random_state : int or None

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
        Original labels; ``classes_[0]`` is class 1 internally.
    train1_, train2_ : ndarray
        Training samples of the two classes.
    separator_ : PolynomialSeparator
    degree_ : int
    cv_risk_ : dict
    priors_ : tuple of float
    dd_ : ndarray of shape (n, 2)
        Training DD points, aligned with the rows passed to ``fit``.
    """

    def __init__(
        self,
        beta=1.0,
        degrees=(1, 2, 3),
        cv_folds=5,
        priors=None,
        max_candidates=2000,
        refine=True,
        member_detection=True,
        random_state=0,
    ):
        self.beta = beta
        self.degrees = degrees
        self.cv_folds = cv_folds
        self.priors = priors
        self.max_candidates = max_candidates
        self.refine = refine
        self.member_detection = member_detection
        self.random_state = random_state

    def fit(self, X, y):
        check_beta(self.beta)
        X = check_sphere(X)
        self.classes_ = check_binary_labels(y, X.shape[0])
        y = np.asarray(y)
        self.train1_ = X[y == self.classes_[0]]
        self.train2_ = X[y == self.classes_[1]]
        for T in (self.train1_, self.train2_):
            if T.shape[0] < 2:
                raise DataError("each class needs at least two training points")
        self._fit_from_dd(self._training_dd(X, y), np.where(y == self.classes_[0], 1, 2))
        self.n_features_in_ = X.shape[1]
        return self

    def _training_dd(self, X, y, betas=None):
        squeeze = betas is None
        betas = [self.beta] if squeeze else betas
        stacked = _training_dd(self.train1_, self.train2_, betas)
        n1 = self.train1_.shape[0]
        out = np.empty_like(stacked)
        out[np.flatnonzero(y == self.classes_[0])] = stacked[:n1]
        out[np.flatnonzero(y == self.classes_[1])] = stacked[n1:]
        return out[:, 0, :] if squeeze else out

    def _fit_from_dd(self, D, y12):
        self.dd_ = D
        self.priors_ = _default_priors(y12, self.priors)
        self.separator_, self.degree_, self.cv_risk_ = _fit_dd_model(
            D, y12, self.degrees, self.cv_folds, self.priors_, self.max_candidates, self.refine, self.random_state
        )
        self.training_risk_ = empirical_risk(D, y12, self.separator_, self.priors_)
        return self

    def transform(self, X):
        """DD coordinates ``(d1, d2)`` of the rows of ``X``."""
        check_is_fitted(self, "separator_")
        X = check_sphere(X)
        if X.shape[1] != self.n_features_in_:
            raise DataError(f"expected dimension {self.n_features_in_}, got {X.shape[1]}")
        return dd_plot(X, self.train1_, self.train2_, self.beta, self.member_detection)

    def decision_function(self, X):
        """Signed distance ``v - s(u)`` to the curve; positive favours ``classes_[1]``."""
        D = self.transform(X)
        u, v, above = self.separator_.axes(D)
        margin = v - self.separator_(u)
        return margin if above == 2 else -margin

    def predict(self, X):
        labels = self.separator_.predict(self.transform(X))
        return self.classes_[labels - 1]

    def _more_tags(self):
        return {"binary_only": True}


def train(train1, train2, beta=1.0, degrees=(1, 2, 3), priors=None, cv_folds=5, random_state=0, **kwargs):
    """Fit a :class:`DDClassifier` from two class samples (labels 1 and 2)."""
    train1 = check_sphere(train1, name="train1")
    train2 = check_sphere(train2, name="train2")
    X = np.vstack([train1, train2])
    y = np.r_[np.ones(len(train1), int), np.full(len(train2), 2)]
    clf = DDClassifier(beta=beta, degrees=degrees, priors=priors, cv_folds=cv_folds, random_state=random_state, **kwargs)
    return clf.fit(X, y)


def fit_predict_betas(X_train, y_train, X_test, betas, random_state=0, **kwargs):
    """Fit one DD-classifier per beta and predict ``X_test`` with each.

    Depth coordinates for all ``betas`` come from one shared sort of the
    distances. Test rows are always scored in query mode.

    Returns
    -------
    ndarray of shape (len(betas), len(X_test))
        Predicted labels (in the label space of ``y_train``).
    list of DDClassifier
    """
    X_train = check_sphere(X_train)
    X_test = check_sphere(X_test, name="X_test")
    classes = check_binary_labels(y_train, X_train.shape[0])
    y_train = np.asarray(y_train)
    betas = [check_beta(b) for b in betas]
    base = DDClassifier(random_state=random_state, **kwargs)
    base.classes_ = classes
    base.train1_ = X_train[y_train == classes[0]]
    base.train2_ = X_train[y_train == classes[1]]
    base.n_features_in_ = X_train.shape[1]
    dd_tr = base._training_dd(X_train, y_train, betas)
    dd_te = dd_profile(X_test, base.train1_, base.train2_, betas, member_detection=False)
    y12 = np.where(y_train == classes[0], 1, 2)
    preds, models = [], []
    for b, beta in enumerate(betas):
        clf = copy.copy(base)
        clf.beta = beta
        clf._fit_from_dd(dd_tr[:, b, :], y12)
        preds.append(classes[clf.separator_.predict(dd_te[:, b, :]) - 1])
        models.append(clf)
    return np.array(preds), models


def select_beta(
    X,
    y,
    betas=(0.01, 0.05, 0.1, 0.25, 0.5, 1.0),
    repeats=10,
    folds=10,
    degrees=(1, 2, 3),
    random_state=0,
    **kwargs,
):
    """Pick the locality level by repeated stratified k-fold CV.

    For each repeat the folds are reshuffled; within a fold the depth
    coordinates for every beta come from one shared sort of distances.

    Returns
    -------
    best_beta : float
        Smallest beta attaining the lowest mean misclassification rate.
    curve : ndarray of shape (len(betas),)
        Mean test misclassification rate per beta.
    rates : ndarray of shape (repeats * folds, len(betas))
        Per-fold rates.
    """
    X = check_sphere(X)
    classes = check_binary_labels(y, X.shape[0])
    y = np.asarray(y)
    betas = [check_beta(b) for b in betas]
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if min(np.sum(y == c) for c in classes) < folds:
        raise DataError(f"each class needs at least {folds} members")
    seeds = np.random.SeedSequence(random_state).generate_state(repeats)
    rates = []
    for r in range(repeats):
        splitter = StratifiedKFold(n_splits=folds, shuffle=True, random_state=int(seeds[r]))
        for tr, te in splitter.split(X, y):
            preds, _ = fit_predict_betas(X[tr], y[tr], X[te], betas, degrees=degrees, random_state=int(seeds[r]), **kwargs)
            rates.append([misclassification_rate(y[te], p) for p in preds])
    rates = np.array(rates)
    curve = rates.mean(axis=0)
    best = min(range(len(betas)), key=lambda b: (curve[b], betas[b]))
    return betas[best], curve, rates
