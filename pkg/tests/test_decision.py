import math

import mpmath
import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate

from fiducial import algebra
from fiducial.decision import (
    DecisionRule,
    bernoulli_arc_distance,
    bernoulli_arc_sq,
    equivariance_check,
    exp_optimal_estimator,
    gamma_log_estimator,
    get_loss,
    hellinger_distance,
    hellinger_sq,
    log_squared,
    loss_eval,
    octonion_left,
    octonion_optimal_action,
    octonion_relative,
    optimal_action,
    paired_risk_difference,
    risk_direct,
    risk_fiducial,
    scaling,
    squared_error,
    translation,
    uniform_optimal_estimator,
)
from fiducial.fidcore import FiducialDraws, fiducial_sample
from fiducial.models import ExponentialScaleModel, LocationModel, OctonionModel, UniformIntervalModel
from fiducial.numerics import EULER_GAMMA, DomainError, RandomStream, trigamma


class TestLosses:
    def test_zero_on_diagonal(self):
        assert loss_eval(squared_error, 1.3, 1.3) == 0
        assert loss_eval(log_squared, 2.0, 2.0) == 0
        assert loss_eval(bernoulli_arc_sq, 0.3, 0.3) == 0
        assert loss_eval(hellinger_sq, 4.0, 4.0) == 0
        x = np.arange(1.0, 9.0)
        assert loss_eval(octonion_relative, x, x) == 0

    def test_values(self):
        assert loss_eval(log_squared, 1.0, math.e) == pytest.approx(1.0)
        assert loss_eval(octonion_relative, algebra.unit(3), np.zeros(8)) == 1.0
        assert abs(loss_eval(bernoulli_arc_sq, 0.0, 1.0) - (math.pi / 2) ** 2) < 1e-12

    def test_arc_is_fisher_length(self):
        # length of ds = dp / (2 sqrt(p (1-p))) from 0 to 1
        length, _ = integrate.quad(lambda p: 0.5 / math.sqrt(p * (1 - p)), 0, 1)
        assert_allclose(bernoulli_arc_distance(0.0, 1.0), length, rtol=1e-9)
        assert bernoulli_arc_distance(0.2, 0.2) == 0
        assert_allclose(bernoulli_arc_distance(0.2, 0.7), bernoulli_arc_distance(0.8, 0.3), rtol=1e-14)

    def test_hellinger(self):
        assert hellinger_distance(1.0) == 0
        assert hellinger_distance(0.0) == pytest.approx(math.pi / 2)
        aff, _ = integrate.quad(lambda x: math.sqrt(math.exp(-x) * 0.5 * math.exp(-x / 2)), 0, np.inf)
        assert_allclose(aff, 2 * math.sqrt(2) / 3, rtol=1e-9)
        assert_allclose(hellinger_distance(aff), 0.33984, atol=1e-5)
        assert_allclose(loss_eval(hellinger_sq, 1.0, 2.0), hellinger_distance(aff) ** 2, rtol=1e-8)
        with pytest.raises(DomainError):
            hellinger_distance(1.5)

    def test_invariance(self):
        g = np.random.default_rng(0)
        th, a = g.normal(size=(2, 100, 1))
        c = g.normal()
        assert_allclose(squared_error(th + c, a + c), squared_error(th, a), atol=1e-12)
        th, a = np.exp(th), np.exp(a)
        s = math.exp(g.normal())
        assert_allclose(log_squared(s * th, s * a), log_squared(th, a), rtol=1e-9)
        assert_allclose(hellinger_sq(s * th, s * a), hellinger_sq(th, a), rtol=1e-9, atol=1e-14)
        p, q = g.random((2, 100, 1))
        assert_allclose(bernoulli_arc_sq(1 - p, 1 - q), bernoulli_arc_sq(p, q), rtol=1e-9, atol=1e-15)
        x, b = g.normal(size=(2, 100, 8))
        u = g.normal(size=8)
        u /= np.linalg.norm(u)
        assert_allclose(octonion_relative(algebra.cd_mul(u, x), algebra.cd_mul(u, b)), octonion_relative(x, b),
                        rtol=1e-9)

    def test_domain_checks(self):
        with pytest.raises(DomainError):
            loss_eval(log_squared, -1.0, 1.0)
        with pytest.raises(DomainError):
            loss_eval(bernoulli_arc_sq, 1.2, 0.5)
        with pytest.raises(DomainError):
            get_loss("absolute")


class TestOptimalAction:
    def test_single_draw(self):
        d = FiducialDraws(np.array([[2.5]]), None)
        for loss in (squared_error, log_squared, hellinger_sq):
            assert_allclose(optimal_action(loss, d), [2.5])

    def test_squared_mean(self):
        assert_allclose(optimal_action(squared_error, FiducialDraws(np.array([1.0, 3.0]), None)), [2.0])

    def test_log_geometric_mean(self):
        d = FiducialDraws(np.array([1.0, math.e ** 2]), None)
        assert_allclose(optimal_action(log_squared, d), [math.e], rtol=1e-14)

    def test_numeric_minimizer_hellinger(self):
        x = np.exp(np.random.default_rng(1).normal(size=4000))
        d = FiducialDraws(x, None)
        a = optimal_action(hellinger_sq, d)[0]
        f = lambda t: np.mean(hellinger_sq(x[:, None], np.array([t])))
        assert f(a) <= min(f(a * 1.001), f(a / 1.001))

    def test_arc_minimizer_bracketed(self):
        d = FiducialDraws(np.array([0.1, 0.2, 0.6]), None)
        a = optimal_action(bernoulli_arc_sq, d)[0]
        ref = math.sin(np.mean(np.arcsin(np.sqrt([0.1, 0.2, 0.6])))) ** 2
        assert_allclose(a, ref, atol=1e-7)


class TestEstimators:
    @pytest.mark.parametrize("n, factor", [(1, math.exp(EULER_GAMMA)), (2, math.exp(math.log(2) - 1 + EULER_GAMMA))])
    def test_exp_factor_closed(self, n, factor):
        assert_allclose(exp_optimal_estimator(1.0, n), factor, rtol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 5, 20, 100, 1000])
    def test_exp_factor_mpmath(self, n):
        ref = float(mpmath.exp(mpmath.log(n) - mpmath.digamma(n)))
        assert_allclose(exp_optimal_estimator(3.0, n), 3.0 * ref, rtol=1e-12)

    def test_exp_matches_inverse_gamma_draws(self):
        d = fiducial_sample(ExponentialScaleModel(5).model, 2.0, RandomStream(1), 1_000_000)
        assert_allclose(optimal_action(log_squared, d)[0], exp_optimal_estimator(2.0, 5), rtol=1e-3)

    def test_uniform(self):
        assert_allclose(uniform_optimal_estimator(0.3, 0.9), 0.1, atol=1e-15)
        assert uniform_optimal_estimator(0.4, 0.4) == pytest.approx(-0.1)
        d = fiducial_sample(UniformIntervalModel(4).model, np.array([0.3, 0.9]), RandomStream(2), 100_000)
        se = d.column(0).std() / math.sqrt(d.m)
        assert abs(optimal_action(squared_error, d)[0] - 0.1) < 4 * se

    def test_gamma_log_estimator(self):
        pm = FiducialDraws(np.tile([2.0, 3.0], (10, 1)), None)
        assert_allclose(gamma_log_estimator(pm, lambda t: t), [2.0, 3.0])
        g = np.random.default_rng(3)
        d = FiducialDraws(np.exp(g.normal(size=(100, 2))), None)
        d2 = FiducialDraws(d.draws * np.array([1.0, 7.0]), None)
        e1, e2 = gamma_log_estimator(d, lambda t: t), gamma_log_estimator(d2, lambda t: t)
        assert_allclose(e2, e1 * np.array([1.0, 7.0]), rtol=1e-13)

    def test_gamma_log_estimator_exponential_case(self):
        # alpha fixed at 1: beta draws are the inverse-gamma exponential fiducial
        beta = fiducial_sample(ExponentialScaleModel(5).model, 2.0, RandomStream(4), 1_000_000).column(0)
        d = FiducialDraws(np.column_stack([np.ones_like(beta), beta]), None)
        assert_allclose(gamma_log_estimator(d, lambda t: t[:, 1]), [exp_optimal_estimator(2.0, 5)], rtol=1e-3)

    def test_gamma_log_estimator_rejects_nonpositive(self):
        d = FiducialDraws(np.array([[1.0, -1.0]]), None)
        with pytest.raises(DomainError):
            gamma_log_estimator(d, lambda t: t)


class TestOctonionAction:
    def test_point_mass(self):
        d = FiducialDraws(np.tile(algebra.unit(3), (5, 1)), None)
        assert_allclose(octonion_optimal_action(d), algebra.unit(3))

    def test_real_multiples(self):
        r = np.array([0.5, 1.0, 2.0, 4.0])
        d = FiducialDraws(r[:, None] * algebra.unit(3), None)
        c = np.mean(1 / r) / np.mean(1 / r ** 2)
        assert_allclose(octonion_optimal_action(d), c * algebra.unit(3), rtol=1e-12)

    def test_rule_is_equivariant(self):
        model = OctonionModel().model
        at_unit = fiducial_sample(model, algebra.unit(3), RandomStream(5), 10_000)
        c = octonion_optimal_action(at_unit)
        rule = DecisionRule(lambda z: algebra.cd_mul(z, c), "opt")
        v = equivariance_check(rule, octonion_left(unit_norm=False), lambda s: s.generator.normal(size=8), 200,
                               RandomStream(6))
        assert v < 1e-10

    def test_matches_general_minimizer(self):
        # over all of O the minimizer is sum(w t/|t|^2) / sum(w/|t|^2); its real part is c*
        d = fiducial_sample(OctonionModel().model, algebra.unit(3), RandomStream(7), 5000)
        inv = 1.0 / np.sum(d.draws ** 2, axis=1)
        full = (d.weights * inv) @ d.draws / (d.weights @ inv)
        assert_allclose(optimal_action(octonion_relative, d), full, atol=1e-6)
        assert_allclose(full[0], octonion_optimal_action(d)[0], rtol=1e-12)


class TestRisk:
    def test_oracle_rule_zero(self):
        model = ExponentialScaleModel(5).model
        rule = DecisionRule(lambda z: np.full(z.shape[0], 1.7), "oracle")
        assert risk_direct(model, [1.7], rule, log_squared, 1000, RandomStream(0)) == (0.0, 0.0)

    def test_location_mean(self):
        rule = DecisionRule(lambda z: z.mean(axis=1), "mean")
        r, se = risk_direct(LocationModel(n=3).model, [0.0], rule, squared_error, 100_000, RandomStream(1))
        assert abs(r - 1 / 3) < 4 * se

    def test_exponential_dominance(self):
        model = ExponentialScaleModel(5).model
        opt = DecisionRule(lambda z: exp_optimal_estimator(z, 5), "opt")
        mle = DecisionRule(lambda z: z, "mle")
        diff, se = paired_risk_difference(model, [1.0], opt, mle, log_squared, 1_000_000, RandomStream(2))
        assert diff > 4 * se

    def test_exponential_risk_equals_trigamma(self):
        model = ExponentialScaleModel(5).model
        opt = DecisionRule(lambda z: exp_optimal_estimator(z, 5), "opt")
        rd, sd = risk_direct(model, [2.0], opt, log_squared, 200_000, RandomStream(3))
        rf, sf = risk_fiducial(model, [2.0], opt, log_squared, 20_000, 100, RandomStream(4))
        assert abs(rd - trigamma(5)) < 4 * sd
        assert abs(rf - trigamma(5)) < 4 * sf

    def test_point_mass_u(self):
        model = OctonionModel(u_law="point").model
        theta = np.arange(1.0, 9.0)
        rule = DecisionRule(lambda z: z, "identity")
        assert risk_direct(model, theta, rule, octonion_relative, 100, RandomStream(0))[0] == 0
        assert risk_fiducial(model, theta, rule, octonion_relative, 100, 10, RandomStream(0))[0] == 0

    def test_uniform_fiducial_loss_is_uniform_variance(self):
        model = UniformIntervalModel(4).model
        z = np.array([0.25, 0.85])
        d = fiducial_sample(model, z, RandomStream(8), 400_000)
        a = uniform_optimal_estimator(*z)
        expected = (1 - (z[1] - z[0])) ** 2 / 12
        assert_allclose(squared_error(d.draws, np.array([a])).mean(), expected, rtol=0.01)


class TestEquivariance:
    def test_uniform_translation(self):
        rule = DecisionRule(lambda z: uniform_optimal_estimator(z[:, 0], z[:, 1]), "mid")
        sampler = lambda s: np.sort(s.generator.random(2))
        assert equivariance_check(rule, translation(), sampler, 100, RandomStream(0)) < 1e-12

    def test_exponential_scaling(self):
        rule = DecisionRule(lambda z: exp_optimal_estimator(z, 5), "opt")
        sampler = lambda s: np.float64(s.generator.exponential())
        assert equivariance_check(rule, scaling(), sampler, 100, RandomStream(1)) < 1e-12

    def test_broken_rule_negative_control(self):
        rule = DecisionRule(lambda z: z + 0.1 * np.abs(z), "broken")
        sampler = lambda s: np.float64(s.generator.exponential())
        assert equivariance_check(rule, scaling(), sampler, 100, RandomStream(2)) < 1e-12
        assert equivariance_check(rule, translation(), sampler, 100, RandomStream(3)) > 1e-3
