"""Concrete fiducial models.

* :class:`LocationModel` -- ``x_i = theta + u_i`` in R^d, Gaussian noise by default.
* :class:`UniformIntervalModel` -- (min, max) of a uniform sample on (theta, theta + 1).
* :class:`ExponentialScaleModel` -- sample mean of exponentials, ``x = beta * U``.
* :class:`NormalLocationScaleModel` -- ``x_i = mu + sigma * u_i``.
* :class:`GammaTwoParamModel` -- shape and scale through the Bartlett statistic.
* :class:`OctonionModel` -- ``x = theta * u`` in the octonion loop.
* Behrens-Fisher composition of two normal location-scale fiducials.

Each model class exposes ``.model`` (a :class:`~fiducial.fidcore.FiducialModel`).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import special, stats

from . import algebra
from .fidcore import (
    FiducialDraws,
    FiducialError,
    FiducialModel,
    GroupConditional,
    SimpleSolver,
    fiducial_sample_group,
    fiducial_sample_simple,
    sample_once,
)
from .numerics import DomainError, RandomStream, draw, gamma_inv_cdf, log_gamma_quantile, run_chunks

__all__ = [
    "LocationModel",
    "UniformIntervalModel",
    "ExponentialScaleModel",
    "NormalLocationScaleModel",
    "GammaTwoParamModel",
    "OctonionModel",
    "BehrensFisherData",
    "BartlettCdf",
    "SolverError",
    "NonMonotoneError",
    "uniform_fiducial_interval",
    "exp_fiducial_params",
    "exp_fiducial_law",
    "exp_ray_conditional_weights",
    "exp_ray_fiducial",
    "bartlett_statistic",
    "gamma_alpha_solve",
    "gamma_fiducial_sample",
    "behrens_fisher_draws",
    "behrens_fisher_cdf",
    "normal_sample_with_stats",
    "read_data",
    "get_model",
]


class SolverError(FiducialError):
    """Root search failed (no sign change in the bracket)."""


class NonMonotoneError(SolverError):
    """The Monte Carlo CDF of the Bartlett statistic is not monotone in the shape."""


def _positive_param(name):
    def check(theta):
        if np.any(~(theta > 0)):
            raise DomainError(f"{name}: parameter must be positive")

    return check


# ---------------------------------------------------------------------------
# Location model in R^d
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocationModel:
    """``x_i = theta + u_i`` for ``i = 1..n`` with ``theta`` in R^d.

    With ``noise="gaussian"`` the ``u_i`` are iid standard normal and the
    conditional law given the differences ``y = (x_2 - x_1, ..., x_n - x_1)``
    is available in closed form: ``u_1 = ubar - mean(0, y)`` with
    ``ubar ~ N(0, I/n)``.  Other noise laws need both ``noise_sampler`` and
    ``conditional_sampler`` supplied by the caller.
    """

    d: int = 1
    n: int = 3
    noise: str = "gaussian"
    noise_sampler: Optional[object] = None
    conditional_sampler: Optional[object] = None

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise DomainError("LocationModel needs d >= 1 and n >= 1")
        if self.noise != "gaussian" and (self.noise_sampler is None or self.conditional_sampler is None):
            raise DomainError("non-Gaussian noise requires noise_sampler and conditional_sampler")

    def _mc(self, stream, size):
        if self.noise_sampler is not None:
            return np.asarray(self.noise_sampler(stream, size), dtype=float)
        return draw(stream, "std_normal", (size, self.n, self.d))

    def _conditional(self, y, stream, size):
        if self.conditional_sampler is not None:
            return np.asarray(self.conditional_sampler(y, stream, size), dtype=float)
        offsets = np.concatenate([np.zeros((1, self.d)), y], axis=0)
        ubar = draw(stream, "std_normal", (size, self.d)) / math.sqrt(self.n)
        u1 = ubar - offsets.mean(axis=0)
        return u1[:, None, :] + offsets[None, :, :]

    @staticmethod
    def invariant(z):
        return z[1:] - z[0]

    @staticmethod
    def _relation(u, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            return u + theta
        return u + theta[:, None, :]

    @staticmethod
    def _selection(z, u):
        return z[0] - u[:, 0, :]

    @cached_property
    def model(self) -> FiducialModel:
        return FiducialModel(
            name="location",
            param_dim=self.d,
            data_shape=(self.n, self.d),
            mc_sampler=self._mc,
            relation=self._relation,
            inversion=GroupConditional(self.invariant, self._conditional, self._selection),
            params={"d": self.d, "n": self.n, "noise": self.noise},
        )


# ---------------------------------------------------------------------------
# Uniform on (theta, theta + 1)
# ---------------------------------------------------------------------------


def uniform_fiducial_interval(x_min: float, x_max: float) -> tuple[float, float]:
    """Support ``(x_max - 1, x_min)`` of the uniform fiducial law."""
    r = x_max - x_min
    if not 0 <= r <= 1:
        raise DomainError(f"sample range {r!r} is inconsistent with a unit-width support")
    return x_max - 1.0, x_min


@dataclass(frozen=True)
class UniformIntervalModel:
    """Sufficient statistic ``(min, max)`` of ``n`` uniforms on ``(theta, theta + 1)``.

    ``U = (U_1, U_2)`` has density ``n (n-1) (u_2 - u_1)^(n-2)`` on
    ``0 < u_1 < u_2 < 1``.  Conditionally on ``U_2 - U_1 = y`` the minimum
    is uniform on ``(0, 1 - y)``.
    """

    n: int = 4

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("UniformIntervalModel needs n >= 2")

    def _mc(self, stream, size):
        # max = V^(1/n); the other n-1 points are uniform below it.
        g = stream.generator
        mx = g.random(size) ** (1.0 / self.n)
        mn = mx * (1.0 - g.random(size) ** (1.0 / (self.n - 1)))
        return np.stack([mn, mx], axis=1)

    @staticmethod
    def _conditional(y, stream, size):
        u1 = stream.generator.random(size) * (1.0 - y)
        return np.stack([u1, u1 + y], axis=1)

    @staticmethod
    def _relation(u, theta):
        theta = np.asarray(theta, dtype=float)
        return u + (theta if theta.ndim == 1 else theta[:, :1])

    @staticmethod
    def _check_data(z):
        uniform_fiducial_interval(z[0], z[1])

    @staticmethod
    def _degenerate(z):
        return np.array([z[0]]) if z[1] - z[0] >= 1.0 else None

    @cached_property
    def model(self) -> FiducialModel:
        return FiducialModel(
            name="uniform-interval",
            param_dim=1,
            data_shape=(2,),
            mc_sampler=self._mc,
            relation=self._relation,
            inversion=GroupConditional(
                invariant=lambda z: z[1] - z[0],
                conditional_sampler=self._conditional,
                selection=lambda z, u: z[0] - u[:, :1],
                degenerate=self._degenerate,
            ),
            check_data=self._check_data,
            params={"n": self.n},
        )


# ---------------------------------------------------------------------------
# Exponential scale
# ---------------------------------------------------------------------------


def exp_fiducial_params(xbar: float, n: int) -> tuple[float, float]:
    """(scale, shape) of the inverse-gamma fiducial law of an exponential scale."""
    if not xbar > 0:
        raise DomainError("sample mean must be positive")
    if n < 1:
        raise DomainError("n must be >= 1")
    return xbar * n, float(n)


def exp_fiducial_law(xbar: float, n: int):
    """Frozen scipy inverse-gamma distribution of the exponential-scale fiducial."""
    scale, shape = exp_fiducial_params(xbar, n)
    return stats.invgamma(a=shape, scale=scale)


@dataclass(frozen=True)
class ExponentialScaleModel:
    """``x = beta * U`` with ``x`` the mean of ``n`` exponentials and ``U ~ Gamma(n, 1/n)``."""

    n: int = 5

    def __post_init__(self):
        if self.n < 1:
            raise DomainError("ExponentialScaleModel needs n >= 1")

    def _mc(self, stream, size):
        return draw(stream, "gamma", size, shape=float(self.n)) / self.n

    @staticmethod
    def _relation(u, theta):
        theta = np.asarray(theta, dtype=float)
        return u * (theta[0] if theta.ndim == 1 else theta[:, 0])

    @staticmethod
    def _check_data(z):
        if not z > 0:
            raise DomainError("sample mean must be positive")

    @cached_property
    def model(self) -> FiducialModel:
        return FiducialModel(
            name="exponential",
            param_dim=1,
            data_shape=(),
            mc_sampler=self._mc,
            relation=self._relation,
            inversion=SimpleSolver(lambda z, u: (z / u)[:, None]),
            check_param=_positive_param("exponential"),
            check_data=self._check_data,
            params={"n": self.n},
        )


def exp_ray_conditional_weights(y, alpha_grid) -> np.ndarray:
    """Normalized weights of the ray position ``alpha`` given ``phi(y) = y/|y|``.

    The conditional density is proportional to ``f_V(alpha * phi(y)) * alpha^(n-1)``
    with ``f_V`` the standard-exponential sample density.  Weights are the
    density times the grid cell width (uniform grids give weights exactly
    proportional to the density).
    """
    y = np.asarray(y, dtype=float).ravel()
    a = np.asarray(alpha_grid, dtype=float).ravel()
    if y.size == 0 or np.any(~(y > 0)):
        raise DomainError("observations must be positive")
    if np.any(~(a > 0)):
        raise DomainError("alpha grid must be positive")
    n = y.size
    s = np.sum(y / np.linalg.norm(y))
    logdens = n * math.log(s) - special.gammaln(n) + (n - 1) * np.log(a) - a * s
    width = np.abs(np.gradient(a)) if a.size > 1 else np.ones(1)
    raw = np.exp(logdens) * width
    total = raw.sum()
    if not total > 0:
        raise DomainError("all ray weights vanish: the alpha grid misses the conditional mass")
    return raw / total


def exp_ray_fiducial(y, alpha_grid=None, points: int = 100_000) -> FiducialDraws:
    """Weighted fiducial for the scale from ray conditioning, ``beta = |y| / alpha``."""
    y = np.asarray(y, dtype=float).ravel()
    if alpha_grid is None:
        n = y.size
        s = np.sum(y / np.linalg.norm(y))
        lo, hi = stats.gamma.ppf([1e-10, 1 - 1e-10], n, scale=1.0 / s)
        alpha_grid = np.linspace(lo, hi, points)
    w = exp_ray_conditional_weights(y, alpha_grid)
    beta = np.linalg.norm(y) / np.asarray(alpha_grid, dtype=float)
    return FiducialDraws(beta, w, {"model": "exponential-ray", "data": y.tolist(), "m": int(beta.size)})


# ---------------------------------------------------------------------------
# Normal location-scale
# ---------------------------------------------------------------------------


def normal_sample_with_stats(mean: float, sd: float, n: int) -> np.ndarray:
    """A sample of size ``n`` with exactly the given mean and standard deviation (ddof=1)."""
    if n < 2:
        raise DomainError("n must be >= 2")
    if sd < 0:
        raise DomainError("standard deviation must be nonnegative")
    c = np.linspace(-1.0, 1.0, n)
    c = (c - c.mean()) / c.std(ddof=1)
    return mean + sd * c


@dataclass(frozen=True)
class NormalLocationScaleModel:
    """``x_i = mu + sigma * u_i`` with iid standard normal ``u_i``; ``theta = (mu, sigma)``.

    The maximal invariant is the standardized sample ``(x - xbar) / s``.
    Given it, ``u = ubar + s_u * phi(x)`` with ``ubar ~ N(0, 1/n)`` and
    ``(n - 1) s_u^2 ~ chi^2_(n-1)`` independent.
    """

    n: int = 5

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("NormalLocationScaleModel needs n >= 2")

    def _mc(self, stream, size):
        return draw(stream, "std_normal", (size, self.n))

    @staticmethod
    def _relation(u, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            return theta[0] + theta[1] * u
        return theta[:, :1] + theta[:, 1:2] * u

    @staticmethod
    def invariant(z):
        s = z.std(ddof=1)
        return (z - z.mean()) / s

    def _conditional(self, y, stream, size):
        ubar = draw(stream, "std_normal", size) / math.sqrt(self.n)
        su = draw(stream, "chi", size, df=self.n - 1) / math.sqrt(self.n - 1)
        return ubar[:, None] + su[:, None] * y[None, :]

    @staticmethod
    def _selection(z, u):
        sigma = z.std(ddof=1) / u.std(axis=1, ddof=1)
        mu = z.mean() - sigma * u.mean(axis=1)
        return np.stack([mu, sigma], axis=1)

    @staticmethod
    def _degenerate(z):
        return np.array([z.mean(), 0.0]) if z.std(ddof=1) == 0 else None

    @staticmethod
    def _check_param(theta):
        if np.any(~(theta[..., 1] > 0)):
            raise DomainError("normal: sigma must be positive")

    @cached_property
    def model(self) -> FiducialModel:
        return FiducialModel(
            name="normal",
            param_dim=2,
            data_shape=(self.n,),
            mc_sampler=self._mc,
            relation=self._relation,
            inversion=GroupConditional(self.invariant, self._conditional, self._selection, self._degenerate),
            check_param=self._check_param,
            params={"n": self.n},
        )


# ---------------------------------------------------------------------------
# Behrens-Fisher
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BehrensFisherData:
    mean1: float
    sd1: float
    n1: int
    mean2: float
    sd2: float
    n2: int

    def __post_init__(self):
        if self.n1 < 2 or self.n2 < 2:
            raise DomainError("Behrens-Fisher needs n_i >= 2")
        if not (self.sd1 >= 0 and self.sd2 >= 0):
            raise DomainError("standard deviations must be nonnegative")
        if not all(math.isfinite(v) for v in (self.mean1, self.mean2, self.sd1, self.sd2)):
            raise DomainError("statistics must be finite")

    @classmethod
    def from_samples(cls, x1, x2) -> "BehrensFisherData":
        x1, x2 = np.asarray(x1, dtype=float), np.asarray(x2, dtype=float)
        return cls(x1.mean(), x1.std(ddof=1), x1.size, x2.mean(), x2.std(ddof=1), x2.size)


def behrens_fisher_draws(d: BehrensFisherData, m: int, stream: RandomStream) -> FiducialDraws:
    """Fiducial draws of ``mu_1 - mu_2`` from two independent normal location-scale fiducials."""
    mus = []
    for i, (mean, sd, n) in enumerate(((d.mean1, d.sd1, d.n1), (d.mean2, d.sd2, d.n2))):
        model = NormalLocationScaleModel(n).model
        fd = fiducial_sample_group(model, normal_sample_with_stats(mean, sd, n), stream.substream(i), m)
        mus.append(fd.column(0))
    prov = {"model": "behrens-fisher", "data": [d.mean1, d.sd1, d.n1, d.mean2, d.sd2, d.n2],
            "seed": stream.seed, "stream_id": stream.stream_id, "m": int(m)}
    return FiducialDraws(mus[0] - mus[1], None, prov)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(400)
_GL_U = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


def behrens_fisher_cdf(t, mean_diff, a, b, df1, df2):
    """Fiducial CDF ``P(mean_diff + a T_1 - b T_2 <= t)`` with independent t variables.

    Vectorized over the leading dimension of the array arguments.  The
    expectation is taken over the t variable with the larger scale, by
    Gauss-Legendre quadrature on its probability scale, so the inner CDF is
    never steeper than a unit-scale t CDF.
    """
    t, mean_diff, a, b = (np.asarray(v, dtype=float) for v in (t, mean_diff, a, b))
    t, mean_diff, a, b = np.broadcast_arrays(t, mean_diff, a, b)
    c = (t - mean_diff)[..., None]
    a_, b_ = a[..., None], b[..., None]
    q1 = stats.t.ppf(_GL_U, df1)
    q2 = stats.t.ppf(_GL_U, df2)
    with np.errstate(divide="ignore", invalid="ignore"):
        # a >= b: P = E_T2 F1((c + b T2) / a); else P = E_T1 F2((c - a T1) / b)
        over2 = stats.t.cdf((c + b_ * q2) / a_, df1) @ _GL_W
        over1 = stats.t.cdf((c - a_ * q1) / b_, df2) @ _GL_W
    out = np.where(a >= b, over2, over1)
    both_zero = (a == 0) & (b == 0)
    out = np.where(both_zero, (c[..., 0] >= 0).astype(float), out)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Two-parameter gamma
# ---------------------------------------------------------------------------


def bartlett_statistic(y) -> float:
    """Geometric mean over arithmetic mean of a positive sample, in (0, 1]."""
    y = np.asarray(y, dtype=float)
    if y.size == 0 or np.any(~(y > 0)):
        raise DomainError("Bartlett statistic needs positive observations")
    # normalizing first makes W(c y) == W(y) bit for bit when c is a power of two
    r = y / y.mean(axis=-1, keepdims=True)
    out = np.exp(np.log(r).mean(axis=-1))
    return float(np.minimum(out, 1.0)) if out.ndim == 0 else np.minimum(out, 1.0)


def _log_bartlett(log_y):
    # log W = mean(log y) - log(mean(y)), via log-sum-exp
    mx = log_y.max(axis=-1, keepdims=True)
    log_am = np.log(np.mean(np.exp(log_y - mx), axis=-1)) + mx[..., 0]
    return log_y.mean(axis=-1) - log_am


class BartlettCdf:
    """Monte Carlo CDF of the Bartlett statistic with common random numbers.

    ``inner_mc`` uniform vectors of length ``n`` are drawn once; the W draw
    at shape ``alpha`` is the Bartlett statistic of their gamma quantiles,
    so every evaluation of ``cdf(w, alpha)`` uses the same randomness.
    """

    MAX_WIDEN = 8

    def __init__(self, n: int, inner_mc: int, stream: RandomStream):
        if n < 2:
            raise DomainError("Bartlett statistic needs n >= 2")
        if inner_mc < 1:
            raise DomainError("inner_mc must be >= 1")
        self.n = n
        self.inner_mc = inner_mc
        self.u = draw(stream, "uniform01", (inner_mc, n))
        # exact zeros have no gamma quantile; nudge them to the smallest double
        self.u = np.maximum(self.u, np.finfo(float).tiny)
        self._roots_cache: dict = {}
        self._monotone_checked: set = set()

    def log_w(self, alpha, rows=None) -> np.ndarray:
        """log W_k(alpha) for the inner samples ``rows`` (all by default).

        ``alpha`` is a scalar or one value per selected sample.
        """
        alpha = np.asarray(alpha, dtype=float)
        u = self.u if rows is None else self.u[rows]
        shape = alpha[:, None] if alpha.ndim == 1 else alpha
        return _log_bartlett(log_gamma_quantile(u, shape))

    def w_samples(self, alpha: float) -> np.ndarray:
        return np.exp(self.log_w(alpha))

    def cdf(self, w: float, alpha: float) -> float:
        """F_hat_W(w; alpha), the fraction of inner draws with W_k(alpha) <= w."""
        return float(np.mean(self.log_w(alpha) <= math.log(w)))

    def quantile(self, p, alpha: float):
        return np.quantile(self.w_samples(alpha), p)

    def tolerance(self, v2: float) -> float:
        return max(2.0 * math.sqrt(v2 * (1.0 - v2) / self.inner_mc), 1e-3)

    # -- direct route: bisection on the step function F_hat_W(w; .) ---------

    def _widen(self, w, v2, lo, hi):
        f_lo, f_hi = self.cdf(w, lo), self.cdf(w, hi)
        for _ in range(self.MAX_WIDEN):
            if f_lo > v2 and f_hi <= v2:
                break
            if not f_lo > v2:
                lo /= 4.0
                f_lo = self.cdf(w, lo)
            if not f_hi <= v2:
                hi *= 4.0
                f_hi = self.cdf(w, hi)
        if not (f_lo > v2 and f_hi <= v2):
            raise SolverError(
                f"no sign change of F_hat_W(w={w:.6g}; alpha) - {v2:.6g} on [{lo:.3g}, {hi:.3g}]"
                f" (values {f_lo:.4g}, {f_hi:.4g})"
            )
        return lo, hi

    def check_monotone(self, w: float, lo: float, hi: float, points: int = 9) -> None:
        grid = np.geomspace(lo, hi, points)
        vals = np.array([self.cdf(w, a) for a in grid])
        if np.any(np.diff(vals) > 0):
            raise NonMonotoneError(
                f"F_hat_W(w={w:.6g}; alpha) increases across [{lo:.3g}, {hi:.3g}]: {vals.tolist()}"
            )

    def solve(self, w: float, v2: float, bracket=(0.05, 50.0), xtol: float = 1e-10) -> float:
        """Shape ``alpha`` at which F_hat_W(w; alpha) drops to ``v2``.

        Bisection in log(alpha) on the decreasing step function, keeping
        ``F(lo) > v2 >= F(hi)``.  Returns the upper end of the final bracket.
        """
        if not 0 < w < 1:
            raise DomainError("w must lie in (0, 1)")
        if not 0 < v2 < 1:
            raise DomainError("v2 must lie in (0, 1)")
        lo, hi = self._widen(w, v2, *bracket)
        self.check_monotone(w, lo, hi)
        tlo, thi = math.log(lo), math.log(hi)
        while thi - tlo > xtol:
            mid = 0.5 * (tlo + thi)
            if self.cdf(w, math.exp(mid)) > v2:
                tlo = mid
            else:
                thi = mid
        return math.exp(thi)

    # -- batched route: per-sample roots W_k(alpha_k) = w --------------------

    def roots(self, w: float, bracket=(0.05, 50.0), tol: float = 1e-12, max_iter: int = 200) -> np.ndarray:
        """``alpha_k`` with ``W_k(alpha_k) = w`` for every inner sample.

        Because every ``W_k`` increases with ``alpha``,
        ``F_hat_W(w; alpha) = #{k : alpha_k >= alpha} / inner_mc`` and the
        fiducial equation for many ``v2`` reduces to order statistics of
        these roots.  Solved by vectorized Illinois regula falsi in
        log(alpha).
        """
        key = (float(w), tuple(bracket))
        if key in self._roots_cache:
            return self._roots_cache[key]
        if not 0 < w < 1:
            raise DomainError("w must lie in (0, 1)")
        target = math.log(w)
        K = self.inner_mc
        tlo = np.full(K, math.log(bracket[0]))
        thi = np.full(K, math.log(bracket[1]))
        flo = self.log_w(np.exp(tlo)) - target
        fhi = self.log_w(np.exp(thi)) - target
        for _ in range(self.MAX_WIDEN):
            need_lo, need_hi = flo > 0, fhi < 0
            if not (need_lo.any() or need_hi.any()):
                break
            if need_lo.any():
                tlo = np.where(need_lo, tlo - math.log(4.0), tlo)
                flo = np.where(need_lo, self.log_w(np.exp(tlo)) - target, flo)
            if need_hi.any():
                thi = np.where(need_hi, thi + math.log(4.0), thi)
                fhi = np.where(need_hi, self.log_w(np.exp(thi)) - target, fhi)
        if np.any(flo > 0) or np.any(fhi < 0):
            raise SolverError(
                f"Bartlett roots not bracketed for w={w:.6g}: {int(np.sum(flo > 0))} below, "
                f"{int(np.sum(fhi < 0))} above [{math.exp(tlo.min()):.3g}, {math.exp(thi.max()):.3g}]"
            )
        if np.any(fhi - flo < 0):
            raise NonMonotoneError("W_k(alpha) decreases across the bracket for some inner sample")
        side = np.zeros(K)
        active = np.ones(K, dtype=bool)
        t = 0.5 * (tlo + thi)
        for _ in range(max_iter):
            denom = fhi - flo
            t_new = np.where(denom > 0, (tlo * fhi - thi * flo) / np.where(denom > 0, denom, 1.0),
                             0.5 * (tlo + thi))
            t_new = np.clip(t_new, tlo, thi)
            t = np.where(active, t_new, t)
            idx = np.flatnonzero(active)
            f = np.zeros(K)
            f[idx] = self.log_w(np.exp(t[idx]), idx) - target
            pos = active & (f > 0)
            neg = active & (f <= 0)
            thi = np.where(pos, t, thi)
            fhi = np.where(pos, f, fhi)
            tlo = np.where(neg, t, tlo)
            flo = np.where(neg, f, flo)
            # Illinois: halve the stale endpoint value when the same side moves twice
            flo = np.where(pos & (side > 0), flo * 0.5, flo)
            fhi = np.where(neg & (side < 0), fhi * 0.5, fhi)
            side = np.where(pos, 1.0, np.where(neg, -1.0, side))
            active &= (np.abs(f) > tol) & (thi - tlo > tol)
            if not active.any():
                break
        alphas = np.exp(t)
        self._roots_cache[key] = alphas
        return alphas

    def solve_many(self, w: float, v2, bracket=(0.05, 50.0)) -> np.ndarray:
        """Vector version of :meth:`solve` from the per-sample roots.

        The bisection solution is the infimum of ``{alpha : #(alpha_k >= alpha) <= v2 K}``,
        which is the order statistic of rank ``floor(v2 K)`` in decreasing order.
        """
        v2 = np.asarray(v2, dtype=float)
        if np.any(~((v2 > 0) & (v2 < 1))):
            raise DomainError("v2 must lie in (0, 1)")
        desc = np.sort(self.roots(w, bracket))[::-1]
        if bracket not in self._monotone_checked:
            lo, hi = bracket
            self.check_monotone(w, lo, hi, points=5)
            self._monotone_checked.add(bracket)
        j = np.floor(v2 * self.inner_mc).astype(int)
        return desc[np.minimum(j, self.inner_mc - 1)]


def gamma_alpha_solve(w: float, v2: float, n: int, inner_mc: int, stream: RandomStream,
                      bracket=(0.05, 50.0)) -> float:
    """Shape ``alpha`` solving ``F_hat_W(w; alpha) = v2``.

    ``F_hat_W`` is the Monte Carlo CDF of the Bartlett statistic built from
    ``inner_mc`` forward draws of ``stream`` shared across all ``alpha``.
    The bracket is widened geometrically when it does not straddle the
    root; a CDF that increases anywhere in the bracket raises
    :class:`NonMonotoneError`.
    """
    return BartlettCdf(n, inner_mc, stream).solve(w, v2, bracket)


@dataclass(frozen=True)
class GammaTwoParamModel:
    """Gamma sample with shape ``alpha`` and scale ``beta``; ``theta = (alpha, beta)``.

    ``.model`` is the data-level model ``y_i = beta * F^{-1}(u_i; alpha)``
    used for forward simulation.  Fiducial draws use the alternative model on
    ``x = (ybar, w)`` with ``V`` uniform on the unit square:
    ``ybar = beta * F^{-1}(v1; n alpha, 1/n)`` and ``F_W(w; alpha) = v2``.
    """

    n: int = 10
    inner_mc: int = 4000
    alpha_bracket: tuple = (0.05, 50.0)

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("GammaTwoParamModel needs n >= 2")

    def _mc(self, stream, size):
        return np.maximum(draw(stream, "uniform01", (size, self.n)), np.finfo(float).tiny)

    @staticmethod
    def _relation(u, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.ndim == 1:
            return theta[1] * np.exp(log_gamma_quantile(u, theta[0]))
        return theta[:, 1:2] * np.exp(log_gamma_quantile(u, theta[:, :1]))

    @staticmethod
    def _check_data(z):
        if np.any(~(z > 0)):
            raise DomainError("gamma data must be positive")

    @cached_property
    def model(self) -> FiducialModel:
        return FiducialModel(
            name="gamma",
            param_dim=2,
            data_shape=(self.n,),
            mc_sampler=self._mc,
            relation=self._relation,
            inversion=None,
            check_param=_positive_param("gamma"),
            check_data=self._check_data,
            params={"n": self.n, "inner_mc": self.inner_mc, "alpha_bracket": list(self.alpha_bracket)},
        )

    def statistic(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.array([y.mean(), bartlett_statistic(y)])

    def reduced_model(self, cdf: BartlettCdf) -> FiducialModel:
        """Simple fiducial model on ``x = (ybar, w)`` driven by ``V`` uniform on (0,1)^2."""
        n, bracket = self.n, tuple(self.alpha_bracket)

        def mc(stream, size):
            return np.maximum(draw(stream, "uniform01", (size, 2)), np.finfo(float).tiny)

        def relation(v, theta):
            theta = np.broadcast_to(np.asarray(theta, dtype=float), (v.shape[0], 2))
            ybar = theta[:, 1] * gamma_inv_cdf(v[:, 0], n * theta[:, 0], 1.0 / n)
            w = np.array([np.quantile(cdf.w_samples(a), p) for a, p in zip(theta[:, 0], v[:, 1])])
            return np.stack([ybar, w], axis=1)

        def solve(x, v):
            alpha = cdf.solve_many(x[1], v[:, 1], bracket)
            beta = x[0] / gamma_inv_cdf(v[:, 0], n * alpha, 1.0 / n)
            return np.stack([alpha, beta], axis=1)

        def residual(x, v, theta):
            r1 = np.abs(theta[:, 1] * gamma_inv_cdf(v[:, 0], n * theta[:, 0], 1.0 / n) - x[0]) / x[0]
            # F_hat_W is a step function: the w-equation holds within one step
            f = np.array([cdf.cdf(x[1], a) for a in np.unique(theta[:, 0])])
            lookup = dict(zip(np.unique(theta[:, 0]).tolist(), f))
            fw = np.array([lookup[a] for a in theta[:, 0].tolist()])
            r2 = np.maximum(np.abs(fw - v[:, 1]) - 1.0 / cdf.inner_mc, 0.0)
            return np.maximum(r1, r2)

        def check_data(x):
            if not (x[0] > 0 and 0 < x[1] < 1):
                raise DomainError("gamma statistic needs ybar > 0 and 0 < w < 1")

        return FiducialModel(
            name="gamma-reduced",
            param_dim=2,
            data_shape=(2,),
            mc_sampler=mc,
            relation=relation,
            inversion=SimpleSolver(solve),
            check_param=_positive_param("gamma"),
            check_data=check_data,
            residual=residual,
            residual_tol=1e-9,
            params={"n": n, "inner_mc": cdf.inner_mc, "alpha_bracket": list(bracket)},
        )


def gamma_fiducial_sample(data, m: int, stream: RandomStream, config: Optional[GammaTwoParamModel] = None,
                          check: bool = False) -> FiducialDraws:
    """Joint fiducial draws of ``(alpha, beta)`` for a positive gamma sample.

    For each ``(v1, v2)`` uniform on the unit square, ``alpha`` solves
    ``F_hat_W(w; alpha) = v2`` and ``beta = ybar / F^{-1}(v1; n alpha, 1/n)``.
    ``check=True`` also evaluates the fiducial-equation residual of every
    draw (one extra CDF evaluation per distinct alpha).
    """
    y = np.asarray(data, dtype=float).ravel()
    cfg = config or GammaTwoParamModel(n=y.size)
    if cfg.n != y.size:
        cfg = GammaTwoParamModel(n=y.size, inner_mc=cfg.inner_mc, alpha_bracket=cfg.alpha_bracket)
    if np.any(~(y > 0)) or not np.all(np.isfinite(y)):
        raise DomainError("gamma data must be positive and finite")
    cdf = BartlettCdf(cfg.n, cfg.inner_mc, stream.substream(0))
    reduced = cfg.reduced_model(cdf)
    x = cfg.statistic(y)
    if not x[1] < 1:
        raise DomainError("all observations are equal; the Bartlett statistic is 1")
    if check:
        out = fiducial_sample_simple(reduced, x, stream.substream(1), m)
    else:
        reduced.validate_data(x)
        draws = run_chunks(lambda s, k: sample_once(reduced, x, s, k, check=False), m, stream.substream(1))
        out = FiducialDraws(draws, None, {})
    out.provenance = {"model": "gamma", "data": y.tolist(), "statistic": x.tolist(), "seed": stream.seed,
                      "stream_id": stream.stream_id, "m": int(m), "inner_mc": cfg.inner_mc}
    return out


# ---------------------------------------------------------------------------
# Octonions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OctonionModel:
    """``x = theta * u`` in the loop of nonzero octonions.

    ``u_law="unit-gaussian"`` (default) draws ``u = 1 + spread * Z`` with Z
    standard normal in R^8, a law invariant under rotations of the
    imaginary part.  ``u_law="spherical"`` draws ``u = R * direction`` with a
    uniform direction and ``log R ~ N(0, spread^2)``.  ``u_law="point"`` is
    the degenerate law ``U = 1``.
    """

    u_law: str = "unit-gaussian"
    spread: float = 0.5

    def __post_init__(self):
        if self.u_law not in ("unit-gaussian", "spherical", "point"):
            raise DomainError(f"unknown octonion u_law {self.u_law!r}")

    def _mc(self, stream, size):
        if self.u_law == "point":
            return np.repeat(algebra.unit(3)[None, :], size, axis=0)
        z = draw(stream, "std_normal", (size, 8))
        if self.u_law == "unit-gaussian":
            u = algebra.unit(3) + self.spread * z
        else:
            r = np.exp(self.spread * draw(stream, "std_normal", size))
            u = r[:, None] * z / np.linalg.norm(z, axis=1, keepdims=True)
        return u

    @staticmethod
    def _relation(u, theta):
        return algebra.cd_mul(theta, u)

    @staticmethod
    def _check_param(theta):
        if np.any(algebra.cd_norm_sq(theta) <= 0):
            raise DomainError("octonion parameter must be nonzero")

    @staticmethod
    def _check_data(z):
        if algebra.cd_norm_sq(z) <= 0:
            raise DomainError("octonion data must be nonzero")

    @cached_property
    def model(self) -> FiducialModel:
        return FiducialModel(
            name="octonion",
            param_dim=8,
            data_shape=(8,),
            mc_sampler=self._mc,
            relation=self._relation,
            inversion=SimpleSolver(lambda x, u: algebra.right_divide(x, u)),
            check_param=self._check_param,
            check_data=self._check_data,
            params={"u_law": self.u_law, "spread": self.spread},
        )


# ---------------------------------------------------------------------------
# Data ingestion and registry
# ---------------------------------------------------------------------------


def read_data(path) -> np.ndarray | dict:
    """Read observations from plain text or CSV.

    Plain text holds one value per line.  CSV files start with a header of
    either ``value`` (one sample, returned as an array) or ``group,value``
    (returned as a dict from group label to array, in first-seen order).
    """
    text = Path(path).read_text()
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DomainError(f"{path}: no observations")
    header = [h.strip().lower() for h in lines[0].split(",")]
    if header == ["value"]:
        values = [_finite(v, path, i + 2) for i, v in enumerate(lines[1:])]
        return np.array(values)
    if header == ["group", "value"]:
        groups: dict = {}
        for i, row in enumerate(csv.reader(io.StringIO("\n".join(lines[1:])))):
            if len(row) != 2:
                raise DomainError(f"{path}:{i + 2}: expected 'group,value'")
            groups.setdefault(row[0].strip(), []).append(_finite(row[1], path, i + 2))
        return {k: np.array(v) for k, v in groups.items()}
    return np.array([_finite(v, path, i + 1) for i, v in enumerate(lines)])


def _finite(text, path, line) -> float:
    try:
        v = float(text)
    except ValueError:
        raise DomainError(f"{path}:{line}: not a number: {text.strip()!r}") from None
    if not math.isfinite(v):
        raise DomainError(f"{path}:{line}: value must be finite")
    return v


MODEL_IDS = ("exponential", "uniform-interval", "location", "normal", "gamma", "octonion")


def get_model(model_id: str, **params):
    """Model object by identifier (``exponential``, ``uniform-interval``, ``location``,
    ``normal``, ``gamma``, ``octonion``)."""
    table = {
        "exponential": ExponentialScaleModel,
        "uniform-interval": UniformIntervalModel,
        "location": LocationModel,
        "normal": NormalLocationScaleModel,
        "gamma": GammaTwoParamModel,
        "octonion": OctonionModel,
    }
    if model_id not in table:
        raise DomainError(f"unknown model {model_id!r}; choose from {', '.join(MODEL_IDS)}")
    return table[model_id](**params)
