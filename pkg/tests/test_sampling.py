import math

import numpy as np
import pytest
from scipy import integrate, special
from hypothesis import given
from hypothesis import strategies as st

from lcdd.population import PopulationDepthOracle
from lcdd.sampling import (
    CenterConstraintError,
    CenterRule,
    Interval,
    MixtureSpec,
    VmfParams,
    WatsonParams,
    constrained_centers,
    derive_rng,
    log_density_vmf,
    log_density_watson,
    log_vmf_normalizer,
    sample_mixture,
    sample_vmf,
    sample_watson,
)
from lcdd.special import SeriesError, log_bessel_iv, log_kummer_m, log_sphere_area


def e1(q):
    v = np.zeros(q)
    v[0] = 1.0
    return v


# -- 1-D quadrature oracles on the cosine marginal -------------------------------


def marginal_moment(q, log_kernel, g):
    """E[g(t)] under the density proportional to (1-t^2)^((q-3)/2) exp(log_kernel(t))."""
    shift = max(log_kernel(1.0), log_kernel(0.0), log_kernel(-1.0))

    def w(t):
        return (1.0 - t * t) ** ((q - 3) / 2.0) * math.exp(log_kernel(t) - shift)

    opts = dict(limit=200, epsabs=0, epsrel=1e-12)
    z = integrate.quad(w, -1, 1, **opts)[0]
    m1 = integrate.quad(lambda t: g(t) * w(t), -1, 1, **opts)[0] / z
    m2 = integrate.quad(lambda t: g(t) ** 2 * w(t), -1, 1, **opts)[0] / z
    return m1, math.sqrt(max(m2 - m1 * m1, 0.0))


class TestSpecialFunctions:
    @pytest.mark.parametrize("nu", [0.0, 0.5, 1.5, 4.0, 11.5])
    @pytest.mark.parametrize("x", [1e-3, 0.5, 5.0, 17.0, 50.0, 400.0])
    def test_bessel_against_scipy(self, nu, x):
        ref = math.log(special.ive(nu, x)) + x
        assert log_bessel_iv(nu, x) == pytest.approx(ref, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("b", [1.0, 1.5, 5.0, 12.5])
    @pytest.mark.parametrize("z", [-50.0, -17.0, -1.0, 0.0, 2.0, 17.0, 50.0])
    def test_kummer_against_scipy(self, b, z):
        ref = math.log(special.hyp1f1(0.5, b, z))
        assert log_kummer_m(0.5, b, z) == pytest.approx(ref, rel=1e-10, abs=1e-12)

    def test_sphere_area(self):
        assert math.exp(log_sphere_area(3)) == pytest.approx(4 * math.pi, rel=1e-15)
        assert math.exp(log_sphere_area(2)) == pytest.approx(2 * math.pi, rel=1e-15)

    def test_series_budget(self):
        with pytest.raises(SeriesError):
            log_kummer_m(0.5, 1.5, 1e7)


class TestDensities:
    def test_vmf_uniform(self):
        x = np.array([0.0, 0.6, 0.8])
        assert log_density_vmf(x, VmfParams(e1(3), 0.0)) == pytest.approx(-math.log(4 * math.pi), abs=1e-15)

    def test_vmf_s2_closed_form(self):
        k = 10.0
        ref = math.log(k / (4 * math.pi * math.sinh(k)))
        assert log_vmf_normalizer(3, k) == pytest.approx(ref, abs=1e-13)

    @pytest.mark.parametrize("kappa", [0.5, 5.0, 17.0])
    def test_vmf_mode_beats_antimode(self, kappa):
        p = VmfParams(e1(4), kappa)
        assert log_density_vmf(e1(4), p) > log_density_vmf(-e1(4), p)

    def test_vmf_kappa_limit(self):
        with pytest.raises(ValueError):
            log_vmf_normalizer(3, 501.0)

    def test_watson_uniform(self):
        x = np.array([0.0, 0.6, 0.8])
        assert log_density_watson(x, WatsonParams(e1(3), 0.0)) == pytest.approx(-math.log(4 * math.pi), abs=1e-15)

    @given(st.floats(-20, 20), st.integers(0, 1000))
    def test_watson_axial(self, kappa, seed):
        x = derive_rng(seed).standard_normal(5)
        x /= np.linalg.norm(x)
        p = WatsonParams(e1(5), kappa)
        assert log_density_watson(x, p) == log_density_watson(-x, p)

    @pytest.mark.parametrize(
        "density",
        [
            lambda Y: np.exp(log_density_vmf(Y, VmfParams(e1(3), 10.0))),
            lambda Y: np.exp(log_density_watson(Y, WatsonParams(e1(3), 10.0))),
            lambda Y: np.exp(log_density_watson(Y, WatsonParams(e1(3), -10.0))),
        ],
        ids=["vmf10", "watson+10", "watson-10"],
    )
    def test_integrates_to_one_on_s2(self, density):
        oracle = PopulationDepthOracle(density, 3)
        # quadrature centred away from the mode exercises the tangent design
        x = np.array([0.3, 0.4, np.sqrt(0.75)])
        assert oracle.total_mass(x) == pytest.approx(1.0, abs=1e-3)


class TestParams:
    def test_negative_kappa_rejected(self):
        with pytest.raises(ValueError):
            VmfParams(e1(3), -1.0)

    def test_mixture_weights(self):
        with pytest.raises(ValueError):
            MixtureSpec([(0.6, VmfParams(e1(3), 1.0)), (0.6, VmfParams(e1(3), 1.0))])

    def test_mixture_dimensions(self):
        with pytest.raises(ValueError):
            MixtureSpec([(0.5, VmfParams(e1(3), 1.0)), (0.5, VmfParams(e1(4), 1.0))])


class TestVmfSampler:
    def test_uniform_resultant(self):
        n = 2000
        X = sample_vmf(VmfParams(e1(3), 0.0), n, derive_rng(1))
        assert np.linalg.norm(X.mean(axis=0)) <= 3 / math.sqrt(n)

    def test_mean_direction(self):
        mu = np.array([0.0, 0.6, 0.8])
        X = sample_vmf(VmfParams(mu, 15.0), 10_000, derive_rng(2))
        m = X.mean(axis=0)
        angle = math.degrees(math.acos(min(1.0, m @ mu / np.linalg.norm(m))))
        assert angle < 2.0

    @pytest.mark.parametrize("kappa", [5.0, 10.0, 15.0])
    @pytest.mark.parametrize("q", [3, 10, 25])
    def test_mean_cosine(self, kappa, q):
        n = 20_000
        mu = derive_rng(q).standard_normal(q)
        mu /= np.linalg.norm(mu)
        X = sample_vmf(VmfParams(mu, kappa), n, derive_rng(q, kappa))
        mean, sd = marginal_moment(q, lambda t: kappa * t, lambda t: t)
        assert abs((X @ mu).mean() - mean) <= 3 * sd / math.sqrt(n)

    def test_unit_rows(self):
        X = sample_vmf(VmfParams(e1(10), 7.0), 500, derive_rng(3))
        np.testing.assert_allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-12)

    def test_reproducible(self):
        p = VmfParams(e1(5), 11.0)
        np.testing.assert_array_equal(sample_vmf(p, 50, derive_rng(9, "a")), sample_vmf(p, 50, derive_rng(9, "a")))
        assert not np.array_equal(sample_vmf(p, 50, derive_rng(9, "a")), sample_vmf(p, 50, derive_rng(9, "b")))


class TestWatsonSampler:
    def test_bipolar(self):
        X = sample_watson(WatsonParams(e1(3), 50.0), 5000, derive_rng(4))
        assert (X[:, 0] ** 2).mean() > 0.95

    def test_girdle(self):
        X = sample_watson(WatsonParams(e1(3), -50.0), 5000, derive_rng(5))
        assert (X[:, 0] ** 2).mean() < 0.05

    @pytest.mark.parametrize("q", [3, 10])
    def test_uniform_moment(self, q):
        n = 20_000
        X = sample_watson(WatsonParams(e1(q), 0.0), n, derive_rng(6))
        sd = math.sqrt(2.0 * (q - 1) / (q * q * (q + 2)))
        assert abs((X[:, 0] ** 2).mean() - 1.0 / q) <= 3 * sd / math.sqrt(n)

    @pytest.mark.parametrize("kappa", [-17.0, -11.0, -6.0, 6.0, 11.0, 17.0])
    @pytest.mark.parametrize("q", [3, 10, 25])
    def test_squared_cosine(self, kappa, q):
        n = 20_000
        mu = derive_rng(q, 1).standard_normal(q)
        mu /= np.linalg.norm(mu)
        X = sample_watson(WatsonParams(mu, kappa), n, derive_rng(q, int(kappa), "w"))
        mean, sd = marginal_moment(q, lambda t: kappa * t * t, lambda t: t * t)
        assert abs(((X @ mu) ** 2).mean() - mean) <= 3 * sd / math.sqrt(n)

    def test_axial_sign_symmetry(self):
        X = sample_watson(WatsonParams(e1(3), 10.0), 20_000, derive_rng(7))
        assert abs((X[:, 0] > 0).mean() - 0.5) < 3 * 0.5 / math.sqrt(20_000)


class TestMixture:
    def test_zero_weight_component_unused(self):
        spec = MixtureSpec([(1.0, VmfParams(e1(3), 10.0)), (0.0, VmfParams(-e1(3), 10.0))])
        X, comp = sample_mixture(spec, 1000, derive_rng(8), return_components=True)
        assert np.all(comp == 0)

    def test_equal_weights(self):
        n = 10_000
        spec = MixtureSpec([(0.5, VmfParams(e1(3), 10.0)), (0.5, VmfParams(-e1(3), 10.0))])
        _, comp = sample_mixture(spec, n, derive_rng(10), return_components=True)
        assert abs((comp == 0).sum() - n / 2) <= 3 * math.sqrt(n / 4)

    def test_single_component_matches_law(self):
        spec = MixtureSpec([(1.0, VmfParams(e1(3), 10.0))])
        X = sample_mixture(spec, 20_000, derive_rng(11))
        mean, sd = marginal_moment(3, lambda t: 10.0 * t, lambda t: t)
        assert abs(X[:, 0].mean() - mean) <= 3 * sd / math.sqrt(20_000)


class TestCenters:
    def test_setup1_interval(self):
        for seed in range(20):
            C = constrained_centers([CenterRule([Interval(0, 0.3, 0.5)])], 3, derive_rng(seed))
            np.testing.assert_array_equal(C[0], e1(3))
            assert 0.3 <= 1 - C[0] @ C[1] <= 0.5

    def test_no_constraints(self):
        C = constrained_centers([CenterRule()], 4, derive_rng(0))
        assert C.shape == (2, 4)
        assert abs(np.linalg.norm(C[1]) - 1) <= 1e-12

    def test_lower_bound_only(self):
        C = constrained_centers([CenterRule([Interval(0, 1.9, 2.0)])], 3, derive_rng(0))
        assert 1 - C[0] @ C[1] >= 1.9

    def test_equidistant(self):
        rules = [CenterRule([Interval(0, 0.6, 0.8)]), CenterRule([Interval(0, 0.25, 0.45)], equidistant=(0, 1))]
        C = constrained_centers(rules, 5, derive_rng(3))
        assert abs(C[2] @ C[0] - C[2] @ C[1]) <= 1e-12

    def test_exhaustion_names_constraint(self):
        with pytest.raises(CenterConstraintError, match="Interval"):
            constrained_centers([CenterRule([Interval(0, 0.0, 1e-12)])], 25, derive_rng(0), max_tries=5000)

    def test_forward_reference(self):
        with pytest.raises(ValueError):
            constrained_centers([CenterRule([Interval(3, 0.1, 0.2)])], 3, derive_rng(0))
