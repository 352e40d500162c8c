"""Samplers and densities for the von Mises-Fisher and Watson families.

All samplers draw the cosine ``t = <mu, x>`` from its exact marginal by
rejection, a uniform direction in the tangent space of ``e_1``, and then
move ``e_1`` onto ``mu`` with a Householder reflection.

Randomness comes from :class:`numpy.random.Generator` backed by PCG64;
:func:`derive_rng` builds independent, reproducible streams from a master
seed and a tuple of keys.
"""

import logging
import math
import zlib
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import betaln

from ._validation import DataError, unit_vector
from .special import log_bessel_iv, log_kummer_m, log_sphere_area

__all__ = [
    "VmfParams",
    "WatsonParams",
    "MixtureSpec",
    "derive_rng",
    "uniform_sphere",
    "sample_vmf",
    "sample_watson",
    "sample_mixture",
    "log_density_vmf",
    "log_density_watson",
    "Interval",
    "CenterRule",
    "constrained_centers",
    "CenterConstraintError",
]

log = logging.getLogger(__name__)

MAX_VMF_KAPPA = 500.0
_BATCH_MIN = 64


def _key_to_int(key):
    if isinstance(key, (int, np.integer)) and key >= 0:
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def derive_rng(master_seed, *keys):
    """PCG64 generator for the stream ``(master_seed, *keys)``.

    Keys may be non-negative ints or anything else with a stable ``str``
    (hashed with CRC-32), e.g.
    ``derive_rng(7, "scenario1", 12, "centers")``.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(_key_to_int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class VmfParams:
    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", unit_vector(self.mu))
        if not self.kappa >= 0:
            raise ValueError(f"vMF concentration must be >= 0, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def q(self):
        return self.mu.shape[0]


@dataclass(frozen=True)
class WatsonParams:
    """Watson axis and concentration: bipolar for kappa > 0, girdle for kappa < 0."""

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        object.__setattr__(self, "mu", unit_vector(self.mu))
        object.__setattr__(self, "kappa", float(self.kappa))

    @property
    def q(self):
        return self.mu.shape[0]


Params = Union[VmfParams, WatsonParams]


@dataclass(frozen=True)
class MixtureSpec:
    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), p) for w, p in self.components)
        if not comps:
            raise ValueError("mixture needs at least one component")
        weights = np.array([w for w, _ in comps])
        if np.any(weights < 0) or np.any(weights > 1) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError(f"mixture weights must lie in [0,1] and sum to 1, got {weights}")
        if len({p.q for _, p in comps}) != 1:
            raise ValueError("mixture components have different dimensions")
        object.__setattr__(self, "components", comps)

    @property
    def q(self):
        return self.components[0][1].q


def uniform_sphere(n, q, rng):
    """``n`` uniform points on S^{q-1} (normalized Gaussian vectors)."""
    g = rng.standard_normal((n, q))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _rotate_from_e1(Y, mu):
    """Apply the Householder map sending e_1 to ``mu`` to the rows of Y."""
    w = -mu.copy()
    w[0] += 1.0
    ww = w @ w
    if ww < 1e-30:
        return Y
    return Y - np.outer(Y @ w, w) * (2.0 / ww)


def _compose(t, q, rng, mu):
    n = t.shape[0]
    tangent = uniform_sphere(n, q - 1, rng) if q > 2 else rng.choice([-1.0, 1.0], size=(n, 1))
    Y = np.empty((n, q))
    Y[:, 0] = t
    Y[:, 1:] = np.sqrt(np.clip(1.0 - t * t, 0.0, None))[:, None] * tangent
    Y = _rotate_from_e1(Y, mu)
    return Y / np.linalg.norm(Y, axis=1, keepdims=True)


def _rejection(n, propose, log_accept, rng, label):
    """Collect ``n`` accepted proposals; logs the empirical acceptance rate."""
    out = []
    have = 0
    tries = 0
    batch = max(_BATCH_MIN, n)
    while have < n:
        s = propose(batch)
        ok = np.log(rng.random(batch)) <= log_accept(s)
        tries += batch
        out.append(s[ok])
        have += int(ok.sum())
        rate = have / tries
        batch = max(_BATCH_MIN, int(1.2 * (n - have) / max(rate, 1e-3)))
    log.debug("%s rejection sampler: acceptance %.3f over %d proposals", label, n / tries, tries)
    return np.concatenate(out)[:n]


def _vmf_cosines(n, q, kappa, rng):
    """Wood's rejection sampler for the vMF cosine marginal.

    Target density on [-1, 1] is proportional to
    ``(1 - t^2)^((q-3)/2) exp(kappa t)``.
    """
    m = q - 1.0
    b = m / (2.0 * kappa + math.sqrt(4.0 * kappa * kappa + m * m))
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(1.0 - x0 * x0)

    def propose(size):
        z = rng.beta(0.5 * m, 0.5 * m, size)
        return (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)

    def log_accept(w):
        return kappa * w + m * np.log(1.0 - x0 * w) - c

    return _rejection(n, propose, log_accept, rng, "vMF")


def sample_vmf(params, n, rng):
    """``n`` independent draws from vMF(mu, kappa); returns shape (n, q)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q = params.q
    if params.kappa == 0.0:
        return uniform_sphere(n, q, rng)
    t = _vmf_cosines(n, q, params.kappa, rng)
    return _compose(t, q, rng, params.mu)


def _tilted_beta(n, a, b, kappa, rng):
    """Draw s on [0,1] with density proportional to s^(a-1) (1-s)^(b-1) e^(kappa s).

    kappa <= 0: Beta(a, b) proposals accepted with probability e^(kappa s).
    kappa > 0: Beta(a, b') proposals with b' <= b picked to maximise the
    closed-form acceptance rate; the envelope ratio (1-s)^(b-b') e^(kappa s)
    is log-concave so its maximum is available analytically.
    """
    if kappa <= 0.0:
        return _rejection(n, lambda size: rng.beta(a, b, size), lambda s: kappa * s, rng, "Watson")

    def log_env_max(bp):
        d = b - bp
        if d >= kappa:
            return 0.0
        if d <= 0.0:
            return kappa
        return d * math.log(d / kappa) + kappa - d

    log_target_mass = betaln(a, b) + log_kummer_m(a, a + b, kappa)

    def neg_log_accept(bp):
        return -(log_target_mass - betaln(a, bp) - log_env_max(bp))

    res = minimize_scalar(neg_log_accept, bounds=(1e-3 * b, b), method="bounded", options={"xatol": 1e-6})
    bp = float(res.x) if res.fun < neg_log_accept(b) else b
    d = b - bp
    lmax = log_env_max(bp)

    def log_accept(s):
        with np.errstate(divide="ignore"):
            return d * np.log1p(-s) + kappa * s - lmax

    return _rejection(n, lambda size: rng.beta(a, bp, size), log_accept, rng, "Watson")


def sample_watson(params, n, rng):
    """``n`` independent draws from Watson(mu, kappa); returns shape (n, q)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    q = params.q
    if params.kappa == 0.0:
        return uniform_sphere(n, q, rng)
    s = _tilted_beta(n, 0.5, 0.5 * (q - 1), params.kappa, rng)
    t = np.sqrt(s) * rng.choice([-1.0, 1.0], size=n)
    return _compose(t, q, rng, params.mu)


def sample_params(params, n, rng):
    if isinstance(params, VmfParams):
        return sample_vmf(params, n, rng)
    if isinstance(params, WatsonParams):
        return sample_watson(params, n, rng)
    raise TypeError(f"unknown distribution parameters {type(params).__name__}")


def sample_mixture(spec, n, rng, return_components=False):
    """Draw ``n`` points from a finite mixture.

    The component of each draw is chosen by weight, then all draws of one
    component are generated together. Row order follows the draw order.
    """
    weights = np.array([w for w, _ in spec.components])
    comp = rng.choice(len(weights), size=n, p=weights)
    X = np.empty((n, spec.q))
    for j, (_, params) in enumerate(spec.components):
        idx = np.flatnonzero(comp == j)
        if idx.size:
            X[idx] = sample_params(params, idx.size, rng)
    if return_components:
        return X, comp
    return X


def log_vmf_normalizer(q, kappa):
    """``log C_q(kappa)`` with respect to surface measure on S^{q-1}."""
    if kappa > MAX_VMF_KAPPA:
        raise ValueError(f"kappa={kappa} exceeds the series range ({MAX_VMF_KAPPA})")
    if kappa == 0.0:
        return -log_sphere_area(q)
    nu = 0.5 * q - 1.0
    return nu * math.log(kappa) - 0.5 * q * math.log(2.0 * math.pi) - log_bessel_iv(nu, kappa)


def log_density_vmf(x, params):
    """vMF log-density at ``x`` (one point or rows of a sample)."""
    x = np.asarray(x, dtype=float)
    return log_vmf_normalizer(params.q, params.kappa) + params.kappa * (x @ params.mu)


def log_watson_normalizer(q, kappa):
    return -log_kummer_m(0.5, 0.5 * q, kappa) - log_sphere_area(q)


def log_density_watson(x, params):
    """Watson log-density at ``x`` (one point or rows of a sample)."""
    x = np.asarray(x, dtype=float)
    return log_watson_normalizer(params.q, params.kappa) + params.kappa * (x @ params.mu) ** 2


# -- constrained centre generation -------------------------------------------


@dataclass(frozen=True)
class Interval:
    """Cosine distance to the already generated centre ``ref`` lies in [lo, hi]."""

    ref: int
    lo: float
    hi: float

    def holds(self, d):
        ok = d >= self.lo
        if self.hi < 2.0:
            ok &= d <= self.hi
        return ok


@dataclass(frozen=True)
class CenterRule:
    """How one new centre is generated.

    ``intervals`` is a sequence of :class:`Interval`, or a callable mapping
    the centres generated so far to such a sequence (for data-dependent
    bounds). ``equidistant=(a, b)`` restricts proposals to the great
    subsphere of points equally distant from centres ``a`` and ``b``.
    """

    intervals: Union[Sequence[Interval], Callable] = ()
    equidistant: Optional[tuple] = None


class CenterConstraintError(RuntimeError):
    pass


def constrained_centers(rules, q, rng, max_tries=200_000):
    """Generate centres ``e_1, c_1, ..., c_m`` satisfying the rules in order.

    Each new centre is drawn uniformly (on the sphere, or on the bisecting
    subsphere for equidistance rules) and accepted when every interval
    holds. Returns an array of shape (len(rules) + 1, q).
    """
    e1 = np.zeros(q)
    e1[0] = 1.0
    centers = [e1]
    for r, rule in enumerate(rules):
        intervals = list(rule.intervals(np.array(centers)) if callable(rule.intervals) else rule.intervals)
        for iv in intervals:
            if not 0 <= iv.ref < len(centers):
                raise ValueError(f"rule {r} references centre {iv.ref} before it exists")
        normal = None
        if rule.equidistant is not None:
            a, b = rule.equidistant
            normal = centers[a] - centers[b]
            normal = normal / np.linalg.norm(normal)
        passes = np.zeros(len(intervals), dtype=int)
        tried = 0
        found = None
        while tried < max_tries and found is None:
            size = min(4096, max_tries - tried)
            cand = rng.standard_normal((size, q))
            if normal is not None:
                cand -= np.outer(cand @ normal, normal)
            cand /= np.linalg.norm(cand, axis=1, keepdims=True)
            ok = np.ones(size, dtype=bool)
            for j, iv in enumerate(intervals):
                hold = iv.holds(1.0 - cand @ centers[iv.ref])
                passes[j] += int(hold.sum())
                ok &= hold
            tried += size
            hits = np.flatnonzero(ok)
            if hits.size:
                found = cand[hits[0]]
        if found is None:
            zero = [iv for iv, p in zip(intervals, passes) if p == 0]
            what = zero[0] if zero else intervals
            raise CenterConstraintError(f"centre {r + 1}: no draw in {max_tries} tries satisfied {what}")
        centers.append(found)
    return np.array(centers)
