"""Invariant losses, fiducial-optimal actions and Monte Carlo risk.

The risk of an equivariant rule in a group model equals the average over
data of the fiducial expected loss.  :func:`risk_direct` and
:func:`risk_fiducial` estimate the two sides independently so the equality
can be checked numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import algebra
from .fidcore import FiducialDraws, FiducialModel, forward_simulate, sample_once
from .numerics import DomainError, RandomStream, digamma, run_chunks

__all__ = [
    "InvariantLoss",
    "DecisionRule",
    "GroupAction",
    "squared_error",
    "log_squared",
    "octonion_relative",
    "bernoulli_arc_sq",
    "hellinger_sq",
    "get_loss",
    "loss_eval",
    "bernoulli_arc_distance",
    "hellinger_distance",
    "optimal_action",
    "exp_optimal_estimator",
    "uniform_optimal_estimator",
    "gamma_log_estimator",
    "octonion_optimal_action",
    "risk_direct",
    "risk_fiducial",
    "paired_risk_difference",
    "equivariance_check",
    "translation",
    "scaling",
    "octonion_left",
]


# ---------------------------------------------------------------------------
# Losses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvariantLoss:
    """Loss ``gamma(theta, a)`` together with the group it is invariant under.

    ``fn`` takes ``theta`` of shape ``(m, p)`` and an action of shape ``(p,)``
    or ``(m, p)`` and returns ``m`` losses.
    """

    kind: str
    group: str
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    check: Optional[Callable[[np.ndarray, np.ndarray], None]] = None

    def __call__(self, theta, a) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        a = np.asarray(a, dtype=float)
        if self.check is not None:
            self.check(theta, a)
        return self.fn(theta, a)


def _sq(theta, a):
    return np.sum((theta - a) ** 2, axis=-1)


def _check_positive(theta, a):
    if np.any(~(theta > 0)) or np.any(~(a > 0)):
        raise DomainError("log_squared needs positive parameter and action")


def _log_sq(theta, a):
    return np.sum((np.log(theta) - np.log(a)) ** 2, axis=-1)


def _check_octonion(theta, a):
    if np.any(np.sum(theta * theta, axis=-1) <= 0):
        raise DomainError("octonion_relative needs a nonzero parameter")


def _oct_rel(theta, a):
    return np.sum((theta - a) ** 2, axis=-1) / np.sum(theta * theta, axis=-1)


def _check_prob(theta, a):
    if np.any((theta < 0) | (theta > 1)) or np.any((a < 0) | (a > 1)):
        raise DomainError("bernoulli_arc_sq needs probabilities in [0, 1]")


def _arc_sq(theta, a):
    return np.sum((np.arcsin(np.sqrt(theta)) - np.arcsin(np.sqrt(a))) ** 2, axis=-1)


def _hellinger_sq(theta, a):
    # exponential scale family: affinity of Exp(theta) and Exp(a)
    aff = 2.0 * np.sqrt(theta * a) / (theta + a)
    return np.sum(np.arccos(np.clip(aff, -1.0, 1.0)) ** 2, axis=-1)


squared_error = InvariantLoss("squared_error", "translation", _sq)
log_squared = InvariantLoss("log_squared", "scaling", _log_sq, _check_positive)
octonion_relative = InvariantLoss("octonion_relative", "octonion-left-unit", _oct_rel, _check_octonion)
bernoulli_arc_sq = InvariantLoss("bernoulli_arc_sq", "swap", _arc_sq, _check_prob)
hellinger_sq = InvariantLoss("hellinger_sq", "scaling", _hellinger_sq, _check_positive)

_LOSSES = {l.kind: l for l in (squared_error, log_squared, octonion_relative, bernoulli_arc_sq, hellinger_sq)}


def get_loss(kind: str) -> InvariantLoss:
    try:
        return _LOSSES[kind]
    except KeyError:
        raise DomainError(f"unknown loss {kind!r}; choose from {', '.join(_LOSSES)}") from None


def loss_eval(loss: InvariantLoss, theta, a) -> float:
    """Loss of action ``a`` at parameter ``theta`` (single point)."""
    return float(loss(np.atleast_1d(theta), np.atleast_1d(a))[0])


def bernoulli_arc_distance(p: float, a: float) -> float:
    """Distance along the arc ``(sqrt p, sqrt(1-p))`` of the unit circle."""
    if not (0 <= p <= 1 and 0 <= a <= 1):
        raise DomainError("probabilities must lie in [0, 1]")
    return abs(math.asin(math.sqrt(p)) - math.asin(math.sqrt(a)))


def hellinger_distance(affinity: float, eps: float = 1e-12) -> float:
    """``arccos`` of the affinity ``int sqrt(f g) dmu``; lies in [0, pi/2]."""
    if not -eps <= affinity <= 1 + eps:
        raise DomainError(f"affinity {affinity!r} outside [0, 1]")
    return math.acos(min(max(affinity, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Optimal actions
# ---------------------------------------------------------------------------

_ARG_TOL = 1e-8


def _golden(f, lo, hi, tol=_ARG_TOL):
    if hi - lo <= tol:
        return 0.5 * (lo + hi)
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                   options={"xatol": tol * 0.1, "maxiter": 500})
    return float(res.x)


def _minimize_weighted(loss: InvariantLoss, d: FiducialDraws) -> np.ndarray:
    x, w = d.draws, d.weights
    lo, hi = x.min(axis=0), x.max(axis=0)
    a = w @ x
    a = np.clip(a, lo, hi)

    def risk(v):
        return float(w @ loss(x, v))

    # coordinate cycles of bounded scalar minimization
    for _ in range(50 if x.shape[1] > 1 else 1):
        prev = a.copy()
        for i in range(x.shape[1]):
            def f(t, i=i):
                b = a.copy()
                b[i] = t
                return risk(b)

            a[i] = _golden(f, lo[i], hi[i])
        if np.max(np.abs(a - prev)) <= _ARG_TOL:
            break
    span = hi - lo
    edge = ((a - lo) <= _ARG_TOL * (1 + span)) | ((hi - a) <= _ARG_TOL * (1 + span))
    for i in np.flatnonzero(edge & (span > 0)):
        step = np.zeros_like(a)
        step[i] = 1e-6 * (1 + span[i]) * (1 if hi[i] - a[i] <= a[i] - lo[i] else -1)
        if risk(a + step) < risk(a):
            raise DomainError(f"minimizer not bracketed by the draw range in coordinate {i}")
    return a


def optimal_action(loss: InvariantLoss, d: FiducialDraws) -> np.ndarray:
    """Minimizer of the fiducial expected loss ``sum_j w_j loss(theta_j, a)``.

    Closed forms for squared error (weighted mean) and log-squared
    (exponential of the weighted mean log); bounded derivative-free
    minimization over the range of the draws otherwise.
    """
    if d.m == 0:
        raise DomainError("empty fiducial draws")
    if loss.kind == "squared_error":
        return d.weights @ d.draws
    if loss.kind == "log_squared":
        if np.any(~(d.draws > 0)):
            raise DomainError("log_squared needs positive draws")
        return np.exp(d.weights @ np.log(d.draws))
    if np.all(d.draws == d.draws[0]):
        return d.draws[0].copy()
    return _minimize_weighted(loss, d)


def exp_optimal_estimator(xbar, n: int):
    """Log-squared optimal scale estimate ``xbar * exp(ln n - psi(n))``."""
    xbar = np.asarray(xbar, dtype=float)
    if np.any(~(xbar > 0)):
        raise DomainError("sample mean must be positive")
    if n < 1:
        raise DomainError("n must be >= 1")
    out = xbar * math.exp(math.log(n) - digamma(float(n)))
    return float(out) if out.ndim == 0 else out


def uniform_optimal_estimator(x_min, x_max):
    """Squared-error optimal location ``(x_min + x_max)/2 - 1/2``."""
    x_min, x_max = np.asarray(x_min, dtype=float), np.asarray(x_max, dtype=float)
    r = x_max - x_min
    if np.any(~((r >= 0) & (r <= 1))):
        raise DomainError("sample range must lie in [0, 1]")
    out = 0.5 * (x_min + x_max) - 0.5
    return float(out) if out.ndim == 0 else out


def gamma_log_estimator(d: FiducialDraws, h: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``exp(E log h(Theta))`` under the fiducial draws, componentwise."""
    vals = np.asarray(h(d.draws), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if np.any(~(vals > 0)):
        j = int(np.flatnonzero(~np.all(vals > 0, axis=1))[0])
        raise DomainError(f"h is not positive at draw {j}")
    return np.exp(d.weights @ np.log(vals))


def octonion_optimal_action(draws_at_unit: FiducialDraws, verify: bool = True) -> np.ndarray:
    """Best real multiple ``c * 1`` of the unit for the relative octonion loss.

    The average of ``|T - c|^2 / |T|^2`` over draws ``T`` of the fiducial at
    ``x = 1`` is a quadratic in ``c`` minimized at
    ``c* = mean(Re T / |T|^2) / mean(1 / |T|^2)``.
    """
    d = draws_at_unit
    if d.m == 0:
        raise DomainError("empty fiducial draws")
    x, w = d.draws, d.weights
    inv_n2 = 1.0 / np.sum(x * x, axis=1)
    c = float((w @ (x[:, 0] * inv_n2)) / (w @ inv_n2))
    if verify:
        def f(t):
            a = t * algebra.unit(3)
            return float(w @ _oct_rel(x, a))

        lo, hi = min(c, 0.0) - 1.0, max(c, 0.0) + 1.0
        c_num = _golden(f, lo, hi, tol=1e-10)
        if abs(c_num - c) > 1e-8 * (1 + abs(c)):
            raise ArithmeticError(f"closed form {c} disagrees with numerical minimizer {c_num}")
    return c * algebra.unit(3)


# ---------------------------------------------------------------------------
# Rules and risk
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecisionRule:
    """Map from data to an action.

    ``estimate`` receives a batch of data sets (leading axis) and returns a
    batch of actions when ``batched``; otherwise it is called once per data
    set.
    """

    estimate: Callable[[np.ndarray], np.ndarray]
    label: str
    batched: bool = True

    def __call__(self, z_batch) -> np.ndarray:
        z_batch = np.asarray(z_batch, dtype=float)
        if self.batched:
            out = np.asarray(self.estimate(z_batch), dtype=float)
        else:
            out = np.array([np.asarray(self.estimate(z), dtype=float) for z in z_batch])
        return out.reshape(z_batch.shape[0], -1)

    def single(self, z) -> np.ndarray:
        return self(np.asarray(z, dtype=float)[None])[0]


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    n = values.size
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))


def direct_losses(model: FiducialModel, theta, rule: DecisionRule, loss: InvariantLoss,
                  reps: int, stream: RandomStream) -> np.ndarray:
    theta = model.validate_param(theta)
    z = forward_simulate(model, theta, stream, reps)
    a = rule(z)
    return loss(np.broadcast_to(theta, (reps, theta.size)), a)


def risk_direct(model: FiducialModel, theta, rule: DecisionRule, loss: InvariantLoss,
                reps: int, stream: RandomStream) -> tuple[float, float]:
    """Monte Carlo risk ``E_theta loss(theta, rule(X))`` and its standard error."""
    if reps < 2:
        raise DomainError("reps must be >= 2")
    return _mean_se(direct_losses(model, theta, rule, loss, reps, stream))


def paired_risk_difference(model: FiducialModel, theta, rule_a: DecisionRule, rule_b: DecisionRule,
                           loss: InvariantLoss, reps: int, stream: RandomStream) -> tuple[float, float]:
    """``risk(rule_b) - risk(rule_a)`` from common simulated data, with paired SE."""
    theta = model.validate_param(theta)
    z = forward_simulate(model, theta, stream, reps)
    th = np.broadcast_to(theta, (reps, theta.size))
    diff = loss(th, rule_b(z)) - loss(th, rule_a(z))
    return _mean_se(diff)


def fiducial_losses(model: FiducialModel, theta, rule: DecisionRule, loss: InvariantLoss,
                    reps: int, m: int, stream: RandomStream) -> np.ndarray:
    theta = model.validate_param(theta)

    def chunk(s: RandomStream, k: int) -> np.ndarray:
        z = model.relation(model.mc_sampler(s, k), theta)
        a = rule(z)
        out = np.empty(k)
        for r in range(k):
            draws = sample_once(model, z[r], s, m, check=False)
            out[r] = loss(draws, a[r]).mean()
        return out

    return run_chunks(chunk, reps, stream, chunk_size=4096)


def risk_fiducial(model: FiducialModel, theta, rule: DecisionRule, loss: InvariantLoss,
                  reps: int, m: int, stream: RandomStream) -> tuple[float, float]:
    """Average over simulated data of the fiducial expected loss of the rule's action.

    For an equivariant rule and invariant loss this matches
    :func:`risk_direct` up to Monte Carlo error.
    """
    if reps < 2:
        raise DomainError("reps must be >= 2")
    if m < 1:
        raise DomainError("m must be >= 1")
    return _mean_se(fiducial_losses(model, theta, rule, loss, reps, m, stream))


# ---------------------------------------------------------------------------
# Equivariance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GroupAction:
    """Random group elements and their action on data and on actions."""

    name: str
    sample: Callable[[RandomStream], object]
    on_data: Callable[[object, np.ndarray], np.ndarray]
    on_action: Callable[[object, np.ndarray], np.ndarray]


def translation(scale: float = 10.0) -> GroupAction:
    return GroupAction(
        "translation",
        lambda s: scale * s.generator.standard_normal(),
        lambda g, z: np.asarray(z) + g,
        lambda g, a: np.asarray(a) + g,
    )


def scaling(log_scale: float = 2.0) -> GroupAction:
    return GroupAction(
        "scaling",
        lambda s: math.exp(log_scale * s.generator.standard_normal()),
        lambda g, z: g * np.asarray(z),
        lambda g, a: g * np.asarray(a),
    )


def octonion_left(unit_norm: bool = True) -> GroupAction:
    def sample(s):
        g = s.generator.standard_normal(8)
        return g / np.linalg.norm(g) if unit_norm else g

    return GroupAction("octonion-left", sample,
                       lambda g, z: algebra.cd_mul(g, z), lambda g, a: algebra.cd_mul(g, a))


def equivariance_check(rule: DecisionRule, action: GroupAction,
                       data_sampler: Callable[[RandomStream], np.ndarray],
                       trials: int, stream: RandomStream) -> float:
    """Largest relative violation of ``rule(g z) = g rule(z)`` over random ``g`` and ``z``."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    worst = 0.0
    for _ in range(trials):
        z = np.asarray(data_sampler(stream), dtype=float)
        g = action.sample(stream)
        lhs = rule.single(action.on_data(g, z))
        rhs = np.asarray(action.on_action(g, rule.single(z)), dtype=float).reshape(lhs.shape)
        worst = max(worst, float(np.max(np.abs(lhs - rhs)) / (1.0 + np.max(np.abs(rhs)))))
    return worst
