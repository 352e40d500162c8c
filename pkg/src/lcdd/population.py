"""Population local cosine distance depth by numerical quadrature.

Used as a reference when checking that the sample depth converges. For a
query ``x`` the sphere is parametrized around ``x`` itself,

    y = cos(theta) x + sin(theta) B v,   v in S^{q-2},

so the cosine distance is ``1 - cos(theta)`` and the ball
``{d_cos(x, y) <= rho}`` is the cap ``theta <= arccos(1 - rho)``. The
surface element is ``sin(theta)^(q-2) dtheta dsigma(v)``. Theta is
integrated with Gauss-Legendre nodes on the cap; ``v`` with equispaced
angles for q = 3, the two points +-1 for q = 2, and a fixed Monte Carlo
design otherwise.
"""

import math

import numpy as np
from scipy.linalg import null_space

from ._validation import check_beta, unit_vector
from .special import log_sphere_area

__all__ = ["PopulationDepthOracle", "QuadratureError", "population_lcdd", "population_cdd"]


class QuadratureError(ArithmeticError):
    pass


class PopulationDepthOracle:
    """Quadrature for integrals of a spherical density over caps.

    Parameters
    ----------
    density : callable
        Maps an array of shape (m, q) of unit vectors to density values
        with respect to surface measure.
    q : int
    n_theta : int
        Gauss-Legendre nodes on the polar angle.
    n_tangent : int
        Nodes on the tangent sphere S^{q-2}.
    rho_tol : float
        Bisection tolerance on the cap radius.
    mass_tol : float
        Allowed deviation of the total mass from one.
    seed : int
        Seeds the tangent design when q > 3.
    """

    def __init__(self, density, q, n_theta=256, n_tangent=256, rho_tol=1e-6, mass_tol=1e-3, seed=0):
        if q < 2:
            raise ValueError("q must be >= 2")
        self.density = density
        self.q = int(q)
        self.n_theta = int(n_theta)
        self.rho_tol = rho_tol
        self.mass_tol = mass_tol
        self._gl_nodes, self._gl_weights = np.polynomial.legendre.leggauss(self.n_theta)
        if q == 2:
            self._v = np.array([[1.0], [-1.0]])
            self._vw = np.ones(2)
        elif q == 3:
            phi = 2.0 * np.pi * np.arange(n_tangent) / n_tangent
            self._v = np.column_stack([np.cos(phi), np.sin(phi)])
            self._vw = np.full(n_tangent, 2.0 * np.pi / n_tangent)
        else:
            g = np.random.default_rng(seed).standard_normal((n_tangent, q - 1))
            self._v = g / np.linalg.norm(g, axis=1, keepdims=True)
            self._vw = np.full(n_tangent, math.exp(log_sphere_area(q - 1)) / n_tangent)

    def _ring_integrals(self, x, theta):
        """Integral of the density over each ring ``{angle(x, y) = theta}``."""
        B = null_space(x[None, :])
        tangent = self._v @ B.T
        c = np.cos(theta)[:, None, None]
        s = np.sin(theta)[:, None, None]
        Y = c * x[None, None, :] + s * tangent[None, :, :]
        f = np.asarray(self.density(Y.reshape(-1, self.q)), dtype=float).reshape(theta.size, -1)
        return (f @ self._vw) * np.sin(theta) ** (self.q - 2)

    def cap_moments(self, x, rho):
        """Return ``(F(cap), E[d_cos 1{cap}])`` for the cap of radius ``rho``."""
        theta_max = math.acos(max(-1.0, 1.0 - rho))
        theta = 0.5 * theta_max * (self._gl_nodes + 1.0)
        w = 0.5 * theta_max * self._gl_weights * self._ring_integrals(x, theta)
        return float(w.sum()), float(w @ (1.0 - np.cos(theta)))

    def total_mass(self, x):
        return self.cap_moments(x, 2.0)[0]

    def radius(self, x, beta):
        """Cap radius with probability ``beta`` around ``x``, by bisection."""
        mass = self.total_mass(x)
        if abs(mass - 1.0) > self.mass_tol:
            raise QuadratureError(f"density integrates to {mass:.6f} under the quadrature")
        lo, hi = 0.0, 2.0
        if self.cap_moments(x, lo)[0] > beta or mass < beta - self.mass_tol:
            raise QuadratureError(f"cannot bracket beta={beta}")
        while hi - lo > self.rho_tol:
            mid = 0.5 * (lo + hi)
            if self.cap_moments(x, mid)[0] < beta:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def population_lcdd(x, oracle, beta):
    """``2 - E[d_cos(x, Y) 1{d_cos(x, Y) <= rho}] / beta`` where ``F(cap) = beta``."""
    beta = check_beta(beta)
    x = unit_vector(x)
    rho = 2.0 if beta == 1.0 else oracle.radius(x, beta)
    mass, first = oracle.cap_moments(x, rho)
    if beta == 1.0 and abs(mass - 1.0) > oracle.mass_tol:
        raise QuadratureError(f"density integrates to {mass:.6f} under the quadrature")
    return 2.0 - first / beta


def population_cdd(x, oracle):
    return population_lcdd(x, oracle, 1.0)
