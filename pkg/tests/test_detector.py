import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom, poisson

from oracles import argmax_on_grid, fock_by_enumeration, fock_exact_by_dp
from pnrarray import (
    ClickPMF,
    ConfigError,
    DetectorConfig,
    click_moments,
    click_pmf_fock,
    click_pmf_poisson,
    variance_maximizing_mu,
)
from pnrarray.montecarlo import Source, run_experiment, uniform_detector

configs = st.builds(
    DetectorConfig,
    n=st.integers(1, 64),
    eta=st.floats(0.0, 1.0),
    p_d=st.floats(0.0, 0.5),
)


class TestDetectorConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(n=0), dict(n=2.5), dict(eta=-0.1), dict(eta=1.01), dict(p_d=1.0), dict(p_d=-1e-9)],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ConfigError):
            DetectorConfig(**kwargs)

    def test_defaults_match_reference_setup(self):
        cfg = DetectorConfig()
        assert (cfg.n, cfg.eta, cfg.p_d) == (16, 0.49, 0.0)


class TestClickPMFType:
    def test_rejects_unnormalised(self):
        with pytest.raises(ValueError):
            ClickPMF([0.5, 0.4])

    def test_tv_distance(self):
        a = ClickPMF([1.0, 0.0])
        assert a.tv_distance([0.0, 1.0]) == 1.0
        assert a.tv_distance(a) == 0.0


class TestPoissonPMF:
    def test_no_light_no_dark_is_point_mass(self, ref_cfg):
        pmf = click_pmf_poisson(ref_cfg, 0.0)
        assert pmf[0] == 1.0
        assert np.all(pmf.probs[1:] == 0.0)

    @pytest.mark.parametrize("eta", [0.0, 0.49, 1.0])
    def test_dark_only_is_binomial(self, eta):
        cfg = DetectorConfig(16, eta, 1e-3)
        expected = binom.pmf(np.arange(17), 16, 1e-3)
        np.testing.assert_allclose(click_pmf_poisson(cfg, 0.0).probs, expected, rtol=1e-12, atol=1e-300)

    def test_negative_mu_rejected(self, ref_cfg):
        with pytest.raises(ConfigError):
            click_pmf_poisson(ref_cfg, -1.0)

    def test_product_form_where_it_is_finite(self):
        # direct product of the closed form, safe for moderate mu
        n, eta, p_d, mu = 16, 0.49, 1e-3, 10.0
        x = np.arange(n + 1)
        direct = np.array(
            [math.comb(n, k) for k in x], dtype=float
        ) * math.exp(-mu * eta) * (1 - p_d) ** n * (math.exp(mu * eta / n) / (1 - p_d) - 1) ** x
        np.testing.assert_allclose(click_pmf_poisson(DetectorConfig(n, eta, p_d), mu).probs, direct, rtol=1e-12)

    def test_large_mu_stays_finite(self):
        pmf = click_pmf_poisson(DetectorConfig(16, 1.0, 0.0), 5000.0)
        assert np.all(np.isfinite(pmf.probs))
        assert pmf[16] == pytest.approx(1.0)

    @settings(max_examples=200, deadline=None)
    @given(cfg=configs, mu=st.floats(0.0, 1e3))
    def test_normalised(self, cfg, mu):
        assert abs(math.fsum(click_pmf_poisson(cfg, mu).probs) - 1.0) <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(cfg=configs, mu=st.floats(0.0, 1e3))
    def test_binomial_reduction(self, cfg, mu):
        q = 1 - (1 - cfg.p_d) * math.exp(-mu * cfg.eta / cfg.n)
        expected = binom.pmf(np.arange(cfg.n + 1), cfg.n, q)
        np.testing.assert_allclose(click_pmf_poisson(cfg, mu).probs, expected, rtol=0, atol=1e-12)

    @pytest.mark.slow
    def test_matches_monte_carlo(self, ref_cfg):
        sim = run_experiment(uniform_detector(ref_cfg), Source.poisson(10.0), 10**6, seed=101)
        assert click_pmf_poisson(ref_cfg, 10.0).tv_distance(sim.pmf()) < 0.005


class TestFockPMF:
    @pytest.mark.parametrize("n", [1, 2, 16])
    def test_vacuum(self, n):
        assert click_pmf_fock(DetectorConfig(n, 0.7, 0.0), 0)[0] == 1.0

    def test_single_lossless_photon(self):
        pmf = click_pmf_fock(DetectorConfig(16, 1.0, 0.0), 1)
        assert pmf[1] == 1.0

    def test_two_photons_two_bins(self):
        # 4 equally likely placements, 2 of them share a bin
        pmf = click_pmf_fock(DetectorConfig(2, 1.0, 0.0), 2)
        np.testing.assert_allclose(pmf.probs, [0.0, 0.5, 0.5], atol=1e-15)

    @pytest.mark.parametrize("p_d", [0.0, 0.01])
    @pytest.mark.parametrize("eta", [0.3, 0.7, 1.0])
    @pytest.mark.parametrize("n", range(1, 7))
    def test_matches_enumeration(self, n, eta, p_d):
        cfg = DetectorConfig(n, eta, p_d)
        for m in range(7):
            expected = fock_by_enumeration(n, eta, p_d, m)
            np.testing.assert_allclose(click_pmf_fock(cfg, m).probs, expected, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("eta,p_d", [(0.49, 0.0), (0.86, 1e-3), (1.0, 0.0)])
    def test_large_photon_numbers_exact(self, eta, p_d):
        cfg = DetectorConfig(16, eta, p_d)
        for m in (10, 25, 50):
            pmf = click_pmf_fock(cfg, m)
            assert abs(math.fsum(pmf.probs) - 1.0) <= 1e-12
            np.testing.assert_allclose(pmf.probs, fock_exact_by_dp(16, eta, p_d, m), rtol=0, atol=1e-14)

    @pytest.mark.parametrize("cfg", [DetectorConfig(16, 0.49, 0.0), DetectorConfig(8, 0.8, 1e-2)])
    @pytest.mark.parametrize("mu", [0.5, 5.0, 11.1])
    def test_poisson_mixture_of_fock(self, cfg, mu):
        m_top = int(poisson.isf(1e-12, mu)) + 1
        mix = sum(poisson.pmf(m, mu) * click_pmf_fock(cfg, m).probs for m in range(m_top + 1))
        np.testing.assert_allclose(mix, click_pmf_poisson(cfg, mu).probs, rtol=0, atol=1e-8)


class TestMoments:
    def test_no_light(self, ref_cfg):
        assert click_moments(ref_cfg, 0.0) == (0.0, 0.0)

    def test_half_clicking(self):
        mean, var = click_moments(DetectorConfig(16, 1.0, 0.0), 16 * math.log(2))
        assert mean == pytest.approx(8.0, abs=1e-12)
        assert var == pytest.approx(4.0, abs=1e-12)

    @pytest.mark.parametrize("p_d", [0.0, 1e-3])
    def test_match_pmf_summation(self, p_d):
        cfg = DetectorConfig(16, 0.49, p_d)
        pmf = click_pmf_poisson(cfg, 10.0)
        mean, var = click_moments(cfg, 10.0)
        assert mean == pytest.approx(pmf.mean(), abs=1e-10)
        assert var == pytest.approx(pmf.variance(), abs=1e-10)

    @settings(max_examples=100, deadline=None)
    @given(
        cfg=st.builds(DetectorConfig, n=st.integers(1, 64), eta=st.floats(0.01, 1.0), p_d=st.floats(0, 0.5)),
        mu=st.floats(0.0, 200.0),
        step=st.floats(1e-3, 10.0),
    )
    def test_mean_increases_with_mu(self, cfg, mu, step):
        assert click_moments(cfg, mu + step)[0] > click_moments(cfg, mu)[0]


class TestVariancePeak:
    def test_reference_lossless(self):
        assert variance_maximizing_mu(DetectorConfig(16, 1.0, 0.0)) == pytest.approx(11.09, abs=0.005)

    def test_single_element(self):
        assert variance_maximizing_mu(DetectorConfig(1, 1.0, 0.0)) == pytest.approx(math.log(2))

    def test_grid_search(self, ref_cfg):
        peak = variance_maximizing_mu(ref_cfg)
        # frozen from argmax_on_grid over [0, 50] with step 1e-3
        assert peak == pytest.approx(22.633, abs=1e-3)
        found = argmax_on_grid(lambda mu: click_moments(ref_cfg, mu)[1], 0.0, 50.0, 1e-3)
        assert abs(found - peak) <= 1e-3

    @pytest.mark.parametrize("n,eta", [(1, 0.3), (4, 0.8), (16, 0.86), (32, 0.49)])
    def test_argmax_property(self, n, eta):
        cfg = DetectorConfig(n, eta, 0.0)
        peak = variance_maximizing_mu(cfg)
        found = argmax_on_grid(lambda mu: click_moments(cfg, mu)[1], 0.0, 2 * peak, 1e-3)
        assert abs(found - peak) <= 1e-3

    def test_rejects_zero_efficiency(self):
        with pytest.raises(ConfigError):
            variance_maximizing_mu(DetectorConfig(16, 0.0, 0.0))

    def test_rejects_dark_counts(self):
        with pytest.raises(ConfigError):
            variance_maximizing_mu(DetectorConfig(16, 0.49, 1e-3))
