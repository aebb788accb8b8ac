import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from fiducial import algebra
from fiducial.fidcore import (
    FiducialDraws,
    FiducialError,
    FiducialModel,
    SimpleSolver,
    fiducial_cdf_at,
    fiducial_quantile,
    fiducial_sample,
    fiducial_sample_group,
    fiducial_sample_simple,
    forward_simulate,
)
from fiducial.models import ExponentialScaleModel, LocationModel, OctonionModel, UniformIntervalModel
from fiducial.numerics import DomainError, RandomStream, draw


def shift_model(solve=None):
    return FiducialModel(
        name="shift",
        param_dim=1,
        data_shape=(),
        mc_sampler=lambda s, k: draw(s, "std_normal", k),
        relation=lambda u, th: u + (th[0] if np.ndim(th) == 1 else th[:, 0]),
        inversion=SimpleSolver(solve or (lambda z, u: (z - u)[:, None])),
    )


class TestForwardSimulate:
    def test_exponential_mean(self):
        x = forward_simulate(ExponentialScaleModel(5).model, [1.0], RandomStream(1), 100_000)
        assert abs(x.mean() - 1.0) < 4 * np.sqrt(1 / 5 / 1e5)

    def test_exponential_law(self):
        x = forward_simulate(ExponentialScaleModel(5).model, [2.0], RandomStream(2), 100_000)
        assert stats.kstest(x, stats.gamma(5, scale=2 / 5).cdf).statistic < 0.01

    def test_uniform_support(self):
        z = forward_simulate(UniformIntervalModel(4).model, [0.0], RandomStream(3), 100_000)
        assert np.all((z > 0) & (z < 1))
        assert np.all(z[:, 0] <= z[:, 1])
        # margins are Beta(1, n) and Beta(n, 1)
        assert stats.kstest(z[:, 0], stats.beta(1, 4).cdf).statistic < 0.01
        assert stats.kstest(z[:, 1], stats.beta(4, 1).cdf).statistic < 0.01

    def test_octonion_point_law(self):
        theta = np.arange(1.0, 9.0)
        z = forward_simulate(OctonionModel(u_law="point").model, theta, RandomStream(4), 50)
        assert_array_equal(z, np.tile(theta, (50, 1)))

    def test_bad_param(self):
        with pytest.raises(DomainError):
            forward_simulate(ExponentialScaleModel(5).model, [-1.0], RandomStream(0), 10)
        with pytest.raises(DomainError):
            forward_simulate(ExponentialScaleModel(5).model, [1.0, 2.0], RandomStream(0), 10)


class TestSimpleSampler:
    def test_exponential_inverse_gamma(self):
        d = fiducial_sample_simple(ExponentialScaleModel(5).model, 2.0, RandomStream(7), 100_000)
        assert stats.kstest(d.column(0), stats.invgamma(5, scale=10).cdf).statistic < 0.01

    def test_octonion_draws_are_right_quotients(self):
        model = OctonionModel().model
        x = np.array([1.0, 2.0, -1.0, 0.5, 0.0, 0.3, -0.7, 1.1])
        d = fiducial_sample_simple(model, x, RandomStream(9), 100)
        u = model.mc_sampler(RandomStream(9).substream(0), 100)
        assert_allclose(d.draws, algebra.cd_mul(x, algebra.cd_inv(u)), rtol=1e-14)

    def test_shift_solve(self):
        d = fiducial_sample_simple(shift_model(), 0.0, RandomStream(1), 10)
        u = draw(RandomStream(1).substream(0), "std_normal", 10)
        assert_array_equal(d.column(0), -u)

    def test_residual_check_catches_bad_solver(self):
        bad = shift_model(lambda z, u: (z - 1.01 * u)[:, None])
        with pytest.raises(FiducialError, match="residual"):
            fiducial_sample_simple(bad, 0.5, RandomStream(1), 10)

    def test_nonfinite_solution(self):
        bad = shift_model(lambda z, u: np.full((u.size, 1), np.nan))
        with pytest.raises(FiducialError, match="solver failed"):
            fiducial_sample_simple(bad, 0.5, RandomStream(1), 10)

    def test_provenance_and_determinism(self):
        a = fiducial_sample(ExponentialScaleModel(5).model, 2.0, RandomStream(3, 2), 500)
        b = fiducial_sample(ExponentialScaleModel(5).model, 2.0, RandomStream(3, 2), 500)
        assert_array_equal(a.draws, b.draws)
        assert a.provenance["seed"] == 3 and a.provenance["stream_id"] == 2
        assert a.provenance["sampler"] == "simple"

    def test_rejects_group_model(self):
        with pytest.raises(FiducialError):
            fiducial_sample_simple(LocationModel().model, np.zeros((3, 1)), RandomStream(0), 5)


class TestGroupSampler:
    def test_uniform_interval(self):
        d = fiducial_sample_group(UniformIntervalModel(4).model, np.array([0.3, 0.9]), RandomStream(5), 100_000)
        assert d.column(0).min() > -0.1 and d.column(0).max() < 0.3
        assert stats.kstest(d.column(0), stats.uniform(-0.1, 0.4).cdf).statistic < 0.01

    def test_uniform_degenerate(self):
        d = fiducial_sample_group(UniformIntervalModel(4).model, np.array([0.2, 1.2]), RandomStream(5), 10)
        assert_array_equal(d.column(0), 0.2)
        assert d.provenance["degenerate"]

    def test_location_mean(self):
        z = np.array([[0.2, -1.0], [1.5, 0.3], [0.7, 0.9], [-0.4, 0.1]])
        d = fiducial_sample_group(LocationModel(d=2, n=4).model, z, RandomStream(6), 100_000)
        se = 1 / np.sqrt(4) / np.sqrt(1e5)
        assert np.all(np.abs(d.mean() - z.mean(axis=0)) < 4 * se)
        assert_allclose(d.draws.std(axis=0), 0.5, rtol=0.01)

    def test_dispatch(self):
        d = fiducial_sample(UniformIntervalModel(4).model, np.array([0.3, 0.9]), RandomStream(5), 10)
        assert d.provenance["sampler"] == "group"

    def test_rejects_simple_model(self):
        with pytest.raises(FiducialError):
            fiducial_sample_group(ExponentialScaleModel().model, 2.0, RandomStream(0), 5)

    def test_bad_data(self):
        with pytest.raises(DomainError):
            fiducial_sample(UniformIntervalModel(4).model, np.array([0.9, 0.3]), RandomStream(0), 5)
        with pytest.raises(DomainError):
            fiducial_sample(UniformIntervalModel(4).model, np.array([0.1, np.nan]), RandomStream(0), 5)


class TestSummaries:
    def test_single_draw(self):
        d = FiducialDraws(np.array([3.5]), None)
        for p in (0.01, 0.5, 0.99):
            assert fiducial_quantile(d, 0, p) == 3.5

    def test_median_of_range(self):
        d = FiducialDraws(np.arange(1.0, 101.0), None)
        assert 50 <= fiducial_quantile(d, 0, 0.5) <= 51

    def test_weighted_quantile(self):
        d = FiducialDraws(np.array([1.0, 2.0, 3.0]), np.array([0.1, 0.1, 0.8]))
        assert d.quantile(0.5) == 3.0
        assert d.quantile(0.15) == 2.0

    def test_cdf_extremes(self):
        d = FiducialDraws(np.array([1.0, 2.0, 3.0]), None)
        assert fiducial_cdf_at(d, 0, 0.0) == 0.0
        assert fiducial_cdf_at(d, 0, 10.0) == 1.0

    def test_inverse_gamma_median(self):
        d = fiducial_sample(ExponentialScaleModel(5).model, 2.0, RandomStream(8), 100_000)
        med = stats.invgamma(5, scale=10).median()
        assert abs(d.quantile(0.5) / med - 1) < 0.01
        assert abs(d.cdf_at(med) - 0.5) < 0.005

    def test_bad_level_and_weights(self):
        d = FiducialDraws(np.array([1.0, 2.0]), None)
        with pytest.raises(DomainError):
            d.quantile(1.0)
        with pytest.raises(DomainError):
            FiducialDraws(np.array([1.0, 2.0]), np.array([-1.0, 2.0]))
