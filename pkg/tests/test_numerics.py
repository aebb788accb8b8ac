import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from fiducial.numerics import (
    DomainError,
    RandomStream,
    digamma,
    draw,
    gamma_cdf,
    gamma_inv_cdf,
    get_threads,
    ks_critical,
    ks_statistic,
    ln_gamma,
    log_gamma_quantile,
    run_chunks,
    set_threads,
    trigamma,
    weighted_ks_statistic,
)


class TestDigamma:
    def test_at_one(self):
        assert_allclose(digamma(1.0), -0.5772156649, atol=1e-10)

    def test_recurrence(self):
        assert abs(digamma(2.0) - (digamma(1.0) + 1.0)) < 1e-12

    def test_at_ten(self):
        assert_allclose(digamma(10.0), 2.2517525891, atol=1e-10)

    def test_against_mpmath(self):
        x = np.geomspace(1e-3, 1e6, 200)
        ref = np.array([float(mpmath.digamma(v)) for v in x])
        assert_allclose(digamma(x), ref, rtol=1e-12, atol=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            digamma(0.0)
        with pytest.raises(DomainError):
            digamma(np.array([1.0, -2.0]))

    def test_trigamma_is_derivative(self):
        h = 1e-5
        for x in (0.7, 3.0, 25.0):
            fd = (digamma(x + h) - digamma(x - h)) / (2 * h)
            assert_allclose(trigamma(x), fd, rtol=1e-6)


class TestLnGamma:
    @pytest.mark.parametrize("x, expected", [(1.0, 0.0), (5.0, 3.1780538303), (0.5, 0.5723649429)])
    def test_values(self, x, expected):
        assert_allclose(ln_gamma(x), expected, atol=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            ln_gamma(-1.0)


class TestGammaQuantile:
    def test_exponential_median(self):
        assert_allclose(gamma_inv_cdf(0.5, 1.0, 1.0), math.log(2), rtol=1e-12)

    def test_exponential_closed_form(self):
        p = np.linspace(0.01, 0.99, 50)
        assert_allclose(gamma_inv_cdf(p, 1.0, 3.5), -3.5 * np.log1p(-p), rtol=1e-12)

    def test_roundtrip(self):
        g = np.random.default_rng(3)
        p = g.uniform(1e-6, 1 - 1e-6, 500)
        k = np.exp(g.uniform(np.log(0.05), np.log(200), 500))
        s = np.exp(g.normal(size=500))
        assert_allclose(gamma_cdf(gamma_inv_cdf(p, k, s), k, s), p, atol=1e-9)

    def test_cdf_against_mpmath(self):
        for k, x in [(0.3, 0.01), (0.3, 2.0), (2.0, 1.5), (5.0, 9.0), (50.0, 45.0)]:
            ref = float(mpmath.gammainc(k, 0, x, regularized=True))
            assert_allclose(gamma_cdf(x, k), ref, rtol=1e-12)

    def test_quantile_against_mpmath(self):
        for k, p in [(0.3, 0.2), (2.0, 0.5), (5.0, 0.99), (50.0, 0.01)]:
            ref = float(mpmath.findroot(lambda x: mpmath.gammainc(k, 0, x, regularized=True) - p,
                                        float(gamma_inv_cdf(p, k)) * 1.001))
            assert_allclose(gamma_inv_cdf(p, k), ref, rtol=1e-10)

    def test_monotone_in_p(self):
        p = np.linspace(1e-4, 1 - 1e-4, 2001)
        for k in (0.1, 1.0, 40.0):
            assert np.all(np.diff(gamma_inv_cdf(p, k)) > 0)

    def test_bad_probability(self):
        with pytest.raises(DomainError):
            gamma_inv_cdf(1.0, 2.0)
        with pytest.raises(DomainError):
            gamma_inv_cdf(0.5, -2.0)

    def test_log_quantile_small_shape(self):
        u = np.array([1e-300, 1e-10, 0.3])
        lx = log_gamma_quantile(u, 0.05)
        assert np.all(np.isfinite(lx))
        assert np.all(np.diff(lx) > 0)
        assert_allclose(lx[2], math.log(stats.gamma.ppf(0.3, 0.05)), rtol=1e-10)


class TestRandomStream:
    def test_reproducible(self):
        a = RandomStream(11, 3).generator.random(1000)
        b = RandomStream(11, 3).generator.random(1000)
        assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RandomStream(11, 3).generator.random(1000)
        b = RandomStream(11, 4).generator.random(1000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(1000)

    def test_substream_is_pure(self):
        s = RandomStream(5)
        s.generator.random(17)
        assert_array_equal(s.substream(2).generator.random(5), RandomStream(5).substream(2).generator.random(5))

    def test_counter_and_copy(self):
        s = RandomStream(1)
        assert s.counter == 0
        s.generator.random(10)
        assert s.counter == 10
        c = s.copy()
        assert_array_equal(c.generator.random(4), s.generator.random(4))

    def test_seed_required(self):
        with pytest.raises(DomainError):
            RandomStream(None)


class TestDraw:
    def test_uniform_range(self):
        u = draw(RandomStream(0), "uniform01", 100_000)
        assert u.min() >= 0 and u.max() < 1

    def test_normal_mean(self):
        z = draw(RandomStream(1), "std_normal", 1_000_000)
        assert abs(z.mean()) < 4 / math.sqrt(1e6)

    def test_gamma_mean(self):
        x = draw(RandomStream(2), "gamma", 1_000_000, shape=3.0)
        assert abs(x.mean() - 3.0) < 4 * math.sqrt(3.0 / 1e6)

    def test_chi_and_t(self):
        c = draw(RandomStream(3), "chi", 200_000, df=4)
        assert abs(np.mean(c ** 2) - 4) < 4 * math.sqrt(8 / 2e5)
        t = draw(RandomStream(4), "student_t", 100_000, df=5)
        assert stats.kstest(t, stats.t(5).cdf).pvalue > 1e-3

    def test_scalar_and_errors(self):
        assert isinstance(draw(RandomStream(0), "uniform01"), float)
        with pytest.raises(DomainError):
            draw(RandomStream(0), "cauchy", 3)
        with pytest.raises(DomainError):
            draw(RandomStream(0), "gamma", 3, shape=0.0)


class TestKS:
    def test_single_point(self):
        assert ks_statistic([0.5]) == 0.5

    def test_equally_spaced(self):
        n = 50
        assert ks_statistic(np.arange(1, n + 1) / (n + 1)) <= 1 / (n + 1) + 1e-15

    def test_uniform_sample(self):
        u = draw(RandomStream(8), "uniform01", 100_000)
        assert ks_statistic(u) < 0.006

    def test_matches_scipy(self):
        u = np.random.default_rng(0).random(300) ** 1.2
        assert_allclose(ks_statistic(u), stats.kstest(u, "uniform").statistic, rtol=1e-12)
        assert_allclose(ks_critical(300, 0.05), stats.kstwo.isf(0.05, 300))

    def test_weighted_equals_unweighted(self):
        x = np.random.default_rng(1).random(200)
        assert_allclose(weighted_ks_statistic(x, np.ones(200), lambda v: v), ks_statistic(x), rtol=1e-12)


class TestRunChunks:
    def test_thread_independent(self):
        def fn(s, k):
            return s.generator.standard_normal(k)

        a = run_chunks(fn, 10_000, RandomStream(4), chunk_size=999, threads=1)
        b = run_chunks(fn, 10_000, RandomStream(4), chunk_size=999, threads=4)
        assert a.shape == (10_000,)
        assert_array_equal(a, b)

    def test_global_threads(self):
        set_threads(3)
        try:
            assert get_threads() == 3
        finally:
            set_threads(1)
        with pytest.raises(DomainError):
            set_threads(0)
