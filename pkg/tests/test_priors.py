import numpy as np
import pytest
from scipy import integrate, stats

from tensorvar.diagnostics import ess
from tensorvar.priors import (A_LAMBDA, B_LAMBDA, MdgdpState, NormalGammaState, alpha_grid, mdgdp_draw_margins,
                              mdgdp_draw_prior, mdgdp_update, ng_update)


class TestNormalGamma:
    def test_zero_coefficients(self, rng):
        s = NormalGammaState.default(6, c0=2.0, d0=3.0)
        lam = []
        for _ in range(4000):
            s.a = 1.0
            ng_update(s, np.zeros(6), rng)
            assert np.all(np.isfinite(s.psi)) and np.all(s.psi > 0)
            lam.append(s.lambda2)
        # psi is irrelevant to the lambda2 rate once every c is zero
        assert stats.kstest(lam, stats.gamma(2.0 + 3.0, scale=1 / 3.0).cdf).statistic < 0.03

    def test_size_mismatch(self, rng):
        with pytest.raises(ValueError):
            ng_update(NormalGammaState.default(3), np.zeros(2), rng)

    def test_empty_is_noop(self, rng):
        s = NormalGammaState.default(0)
        assert ng_update(s, np.zeros(0), rng) is s

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            NormalGammaState(lambda2=0.0, psi=np.ones(2), a=1.0)

    def test_single_coefficient_matches_quadrature(self):
        rng = np.random.default_rng(11)
        c, a, c0, d0 = 0.8, 1.5, 2.0, 1.0
        s = NormalGammaState(lambda2=1.0, psi=np.ones(1), a=a, c0=c0, d0=d0, mh_step=0.0)
        n = 60_000
        lam = np.empty(n)
        for k in range(n):
            ng_update(s, [c], rng)
            lam[k] = s.lambda2

        def dens(psi, l2):
            v = 2 * psi / l2
            return (np.exp(-c * c / (2 * v)) / np.sqrt(v) * stats.gamma.pdf(psi, a, scale=1 / a)
                    * stats.gamma.pdf(l2, c0, scale=1 / d0))
        z = integrate.dblquad(dens, 0, 40, 1e-8, 60)[0]
        m = integrate.dblquad(lambda psi, l2: l2 * dens(psi, l2), 0, 40, 1e-8, 60)[0] / z
        lam = lam[1000:]
        assert abs(lam.mean() - m) / m < 0.02
        assert abs(lam.mean() - m) < 4 * lam.std() / np.sqrt(ess(lam))

    def test_geweke(self):
        rng = np.random.default_rng(12)
        c0, d0, n = 2.0, 2.0, 10_000
        lam, aa = np.empty(n), np.empty(n)
        for k in range(n):
            a = rng.exponential()
            l2 = rng.gamma(c0, 1 / d0)
            psi = rng.gamma(a, 1 / a, size=3)
            c = rng.normal(0, np.sqrt(2 * psi / l2))
            s = NormalGammaState(l2, np.maximum(psi, 1e-300), a, c0=c0, d0=d0)
            ng_update(s, c, rng)
            lam[k], aa[k] = s.lambda2, s.a
        assert stats.kstest(lam, stats.gamma(c0, scale=1 / d0).cdf).statistic < 0.02
        assert stats.kstest(aa, stats.expon.cdf).statistic < 0.02


class TestMdgdp:
    def test_grid(self):
        g = alpha_grid(4)
        assert g.size == 10 and g[0] == pytest.approx(4.0 ** -3) and g[-1] == pytest.approx(4.0 ** -0.01)
        assert alpha_grid(4, size=1).tolist() == [4.0 ** -3]

    def test_update_stays_on_simplex(self, rng):
        s = mdgdp_draw_prior(3, 2, 4, rng)
        for _ in range(50):
            mdgdp_update(s, rng.standard_normal(s.W.shape), rng)
            assert s.phi_mix.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(s.phi_mix >= 0)
            assert s.alpha in s.grid

    def test_one_point_grid(self, rng):
        s = mdgdp_draw_prior(2, 1, 3, rng, grid=[0.3])
        for _ in range(10):
            mdgdp_update(s, mdgdp_draw_margins(s, rng), rng)
            assert s.alpha == 0.3

    def test_zero_margins_stay_positive(self, rng):
        s = mdgdp_draw_prior(3, 2, 3, rng)
        for _ in range(20):
            mdgdp_update(s, np.zeros(s.W.shape), rng)
            for v in (s.W, s.lambda_rate, s.phi_mix, np.array([s.tau_g])):
                assert np.all(np.isfinite(v)) and np.all(v > 0)

    def test_shape_validation(self, rng):
        s = mdgdp_draw_prior(2, 1, 2, rng)
        with pytest.raises(ValueError):
            mdgdp_update(s, np.zeros((4, 2)), rng)
        with pytest.raises(ValueError):
            MdgdpState(np.array([0.6, 0.6]), 1.0, s.W, s.lambda_rate, 0.5, 2, 1)

    def test_geweke(self):
        rng = np.random.default_rng(13)
        n = 10_000
        lam, alpha = np.empty(n), np.empty(n)
        grid = alpha_grid(3)
        for k in range(n):
            s = mdgdp_draw_prior(2, 2, 3, rng, grid)
            mdgdp_update(s, mdgdp_draw_margins(s, rng), rng)
            lam[k], alpha[k] = s.lambda_rate[0, 1], s.alpha
        assert stats.kstest(lam, stats.gamma(A_LAMBDA, scale=1 / B_LAMBDA).cdf).statistic < 0.02
        counts = np.array([(alpha == g).sum() for g in grid])
        assert stats.chisquare(counts).pvalue > 1e-3
