"""Log-space power series for the Bessel and Kummer normalizing constants."""

import math

import numpy as np

__all__ = ["log_bessel_iv", "log_kummer_m", "log_sphere_area", "SeriesError"]

_RTOL = 1e-16
_MAX_TERMS = 100_000


class SeriesError(ArithmeticError):
    """A power series failed to converge within the term budget."""


def log_sphere_area(q):
    """Log surface area of the unit sphere S^{q-1} in R^q."""
    return math.log(2.0) + 0.5 * q * math.log(math.pi) - math.lgamma(0.5 * q)


def _log_positive_series(log_t0, ratio):
    """Sum a series of positive terms in log space.

    ``ratio(k)`` gives term_{k+1} / term_k. Summation stops once the ratio
    has dropped below one and the next term is below ``_RTOL`` relative to
    the running sum.
    """
    log_t = log_t0
    log_s = log_t0
    for k in range(_MAX_TERMS):
        r = ratio(k)
        if r <= 0.0:
            return log_s
        log_t += math.log(r)
        log_s = np.logaddexp(log_s, log_t)
        if r < 1.0 and log_t - log_s < math.log(_RTOL):
            return float(log_s)
    raise SeriesError("power series did not converge")


def log_bessel_iv(nu, x):
    """``log I_nu(x)`` for ``nu >= 0``, ``x >= 0`` by the ascending series.

    ``I_nu(x) = sum_k (x/2)^(2k+nu) / (k! Gamma(k+nu+1))``.
    """
    if nu < 0:
        raise ValueError("order must be nonnegative")
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if x == 0:
        return 0.0 if nu == 0 else -math.inf
    h = 0.5 * x
    h2 = h * h
    log_t0 = nu * math.log(h) - math.lgamma(nu + 1.0)
    return _log_positive_series(log_t0, lambda k: h2 / ((k + 1.0) * (k + nu + 1.0)))


def log_kummer_m(a, b, z):
    """``log M(a, b, z)`` for ``a > 0``, ``b > 0`` via its power series.

    For negative ``z`` Kummer's transformation ``M(a,b,z) = e^z M(b-a,b,-z)``
    keeps every term positive.
    """
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if z == 0:
        return 0.0
    if z < 0:
        if b - a <= 0:
            raise ValueError("Kummer transformation needs b > a for z < 0")
        return z + log_kummer_m(b - a, b, -z)
    return _log_positive_series(0.0, lambda k: (a + k) * z / ((b + k) * (k + 1.0)))
