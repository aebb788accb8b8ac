"""Fiducial models and the two fiducial samplers.

A :class:`FiducialModel` couples a Monte Carlo variable ``U`` (``mc_sampler``)
with a relation ``z = relation(u, theta)`` that reproduces the statistical
model.  Fiducial draws are obtained either by solving the relation for
``theta`` directly (:class:`SimpleSolver`) or, when the data carry more
coordinates than the parameter, by drawing ``u`` conditionally on the
maximal invariant of the observed data and selecting the solution on the
shared orbit (:class:`GroupConditional`).

All samplers are batched: ``mc_sampler(stream, size)`` returns an array
with a leading axis of length ``size``, and ``relation``/``solve``/
``selection`` act row-wise on such batches.  Parameters are handled as
arrays of shape ``(param_dim,)`` or ``(size, param_dim)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .numerics import DomainError, RandomStream, run_chunks

__all__ = [
    "FiducialError",
    "SimpleSolver",
    "GroupConditional",
    "FiducialModel",
    "FiducialDraws",
    "forward_simulate",
    "fiducial_sample",
    "fiducial_sample_simple",
    "fiducial_sample_group",
    "sample_once",
    "fiducial_quantile",
    "fiducial_cdf_at",
    "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-9


class FiducialError(RuntimeError):
    """Solver, selection or conditional-sampler failure."""


@dataclass(frozen=True)
class SimpleSolver:
    """``solve(z, u_batch) -> theta_batch``: the unique root of ``z = relation(u, theta)``."""

    solve: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GroupConditional:
    """Conditioning on a maximal invariant followed by a selection.

    ``degenerate(z)`` may return a parameter point when the conditional law
    collapses (zero sample range and the like); the sampler then returns a
    point mass instead of failing.
    """

    invariant: Callable[[np.ndarray], np.ndarray]
    conditional_sampler: Callable[[np.ndarray, RandomStream, int], np.ndarray]
    selection: Callable[[np.ndarray, np.ndarray], np.ndarray]
    degenerate: Optional[Callable[[np.ndarray], Optional[np.ndarray]]] = None


@dataclass(frozen=True)
class FiducialModel:
    name: str
    param_dim: int
    data_shape: tuple
    mc_sampler: Callable[[RandomStream, int], np.ndarray]
    relation: Callable[[np.ndarray, np.ndarray], np.ndarray]
    inversion: Union[SimpleSolver, GroupConditional, None]
    check_param: Optional[Callable[[np.ndarray], None]] = None
    check_data: Optional[Callable[[np.ndarray], None]] = None
    # Residual of the fiducial equation per draw; defaults to the max-norm of
    # relation(u, theta) - z.  Models whose relation involves Monte Carlo
    # approximations supply their own residual and tolerance.
    residual: Optional[Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]] = None
    residual_tol: float = RESIDUAL_TOL
    params: dict = field(default_factory=dict)

    def validate_param(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape[-1] != self.param_dim:
            raise DomainError(f"{self.name}: expected {self.param_dim} parameter coordinates")
        if self.check_param is not None:
            self.check_param(theta)
        return theta

    def validate_data(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != tuple(self.data_shape):
            raise DomainError(f"{self.name}: data shape {z.shape} != {tuple(self.data_shape)}")
        if not np.all(np.isfinite(z)):
            raise DomainError(f"{self.name}: data must be finite")
        if self.check_data is not None:
            self.check_data(z)
        return z

    def equation_residual(self, z, u, theta) -> np.ndarray:
        if self.residual is not None:
            return self.residual(z, u, theta)
        diff = self.relation(u, theta) - z
        diff = diff.reshape(diff.shape[0], -1)
        scale = 1.0 + np.max(np.abs(z))
        return np.max(np.abs(diff), axis=1) / scale


@dataclass
class FiducialDraws:
    """Weighted sample ``theta^(j)`` from a fiducial distribution."""

    draws: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.draws = np.asarray(self.draws, dtype=float)
        if self.draws.ndim == 1:
            self.draws = self.draws[:, None]
        if self.weights is None:
            self.weights = np.full(self.draws.shape[0], 1.0 / self.draws.shape[0])
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (self.draws.shape[0],) or np.any(w < 0) or not w.sum() > 0:
            raise DomainError("weights must be nonnegative, one per draw, with positive sum")
        self.weights = w / w.sum()

    @property
    def m(self) -> int:
        return self.draws.shape[0]

    def column(self, coordinate: int = 0) -> np.ndarray:
        return self.draws[:, coordinate]

    def mean(self) -> np.ndarray:
        return self.weights @ self.draws

    def quantile(self, p: float, coordinate: int = 0) -> float:
        return fiducial_quantile(self, coordinate, p)

    def cdf_at(self, t: float, coordinate: int = 0) -> float:
        return fiducial_cdf_at(self, coordinate, t)

    @classmethod
    def point_mass(cls, theta, m: int = 1, provenance: Optional[dict] = None) -> "FiducialDraws":
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        return cls(np.repeat(theta[None, :], m, axis=0), None, dict(provenance or {}))


# ---------------------------------------------------------------------------
# Forward simulation
# ---------------------------------------------------------------------------


def forward_simulate(model: FiducialModel, theta, stream: RandomStream, m: int) -> np.ndarray:
    """``m`` independent data sets drawn at ``theta`` through the model relation."""
    theta = model.validate_param(theta)
    if m < 1:
        raise DomainError("m must be >= 1")
    return run_chunks(lambda s, k: model.relation(model.mc_sampler(s, k), theta), m, stream)


# ---------------------------------------------------------------------------
# Fiducial sampling
# ---------------------------------------------------------------------------


def _check_residual(model: FiducialModel, z, u, theta):
    res = model.equation_residual(z, u, theta)
    bad = np.flatnonzero(~(res <= model.residual_tol))
    if bad.size:
        j = int(bad[0])
        raise FiducialError(
            f"{model.name}: fiducial equation residual {res[j]:.3g} exceeds "
            f"{model.residual_tol:g} at draw {j} (u={np.asarray(u)[j].tolist()})"
        )


def _simple_batch(model: FiducialModel, z, stream: RandomStream, size: int, check: bool):
    u = model.mc_sampler(stream, size)
    theta = np.asarray(model.inversion.solve(z, u), dtype=float).reshape(size, model.param_dim)
    if not np.all(np.isfinite(theta)):
        j = int(np.flatnonzero(~np.all(np.isfinite(theta), axis=1))[0])
        raise FiducialError(f"{model.name}: solver failed at draw {j} (u={np.asarray(u)[j].tolist()})")
    if check:
        _check_residual(model, z, u, theta)
    return theta


def _group_batch(model: FiducialModel, z, y, stream: RandomStream, size: int, check: bool):
    inv: GroupConditional = model.inversion
    u = inv.conditional_sampler(y, stream, size)
    if not np.all(np.isfinite(u)):
        raise FiducialError(f"{model.name}: conditional sampler returned non-finite values")
    theta = np.asarray(inv.selection(z, u), dtype=float).reshape(size, model.param_dim)
    if check:
        _check_residual(model, z, u, theta)
    return theta


def sample_once(model: FiducialModel, z, stream: RandomStream, m: int, check: bool = True) -> np.ndarray:
    """Raw ``(m, param_dim)`` fiducial draws from a single stream, without chunking.

    Used inside replication loops where each replication already owns a
    stream.  Data validation is left to the caller.
    """
    inv = model.inversion
    if isinstance(inv, SimpleSolver):
        return _simple_batch(model, z, stream, m, check)
    if isinstance(inv, GroupConditional):
        if inv.degenerate is not None:
            point = inv.degenerate(z)
            if point is not None:
                return np.repeat(np.atleast_1d(np.asarray(point, dtype=float))[None, :], m, axis=0)
        return _group_batch(model, z, inv.invariant(z), stream, m, check)
    raise FiducialError(f"{model.name}: model has no fiducial inversion")


def _provenance(model, z, stream, m, kind):
    return {
        "model": model.name,
        "params": dict(model.params),
        "data": np.asarray(z).tolist(),
        "seed": stream.seed,
        "stream_id": stream.stream_id,
        "m": int(m),
        "sampler": kind,
    }


def fiducial_sample_simple(model: FiducialModel, z, stream: RandomStream, m: int) -> FiducialDraws:
    """Draws ``theta^(j) = solve(z, u^(j))`` with ``u^(j)`` from the Monte Carlo law."""
    if not isinstance(model.inversion, SimpleSolver):
        raise FiducialError(f"{model.name}: inversion is not a simple solver")
    z = model.validate_data(z)
    if m < 1:
        raise DomainError("m must be >= 1")
    draws = run_chunks(lambda s, k: _simple_batch(model, z, s, k, True), m, stream)
    return FiducialDraws(draws, None, _provenance(model, z, stream, m, "simple"))


def fiducial_sample_group(model: FiducialModel, z, stream: RandomStream, m: int) -> FiducialDraws:
    """Draws from the law of ``u`` given ``phi(u) = phi(z)``, then ``theta = selection(z, u)``."""
    inv = model.inversion
    if not isinstance(inv, GroupConditional):
        raise FiducialError(f"{model.name}: inversion is not group-conditional")
    z = model.validate_data(z)
    if m < 1:
        raise DomainError("m must be >= 1")
    prov = _provenance(model, z, stream, m, "group")
    if inv.degenerate is not None:
        point = inv.degenerate(z)
        if point is not None:
            prov["degenerate"] = True
            return FiducialDraws.point_mass(point, m, prov)
    y = inv.invariant(z)
    draws = run_chunks(lambda s, k: _group_batch(model, z, y, s, k, True), m, stream)
    return FiducialDraws(draws, None, prov)


def fiducial_sample(model: FiducialModel, z, stream: RandomStream, m: int) -> FiducialDraws:
    """Dispatch on the model's inversion strategy."""
    if isinstance(model.inversion, GroupConditional):
        return fiducial_sample_group(model, z, stream, m)
    return fiducial_sample_simple(model, z, stream, m)


# ---------------------------------------------------------------------------
# Summaries
# ---------------------------------------------------------------------------


def fiducial_quantile(d: FiducialDraws, coordinate: int, p: float) -> float:
    """Weighted empirical quantile: smallest draw whose cumulative weight reaches ``p``."""
    if d.m == 0:
        raise DomainError("empty fiducial draws")
    if not 0 < p < 1:
        raise DomainError("quantile level must lie in (0, 1)")
    x = d.draws[:, coordinate]
    order = np.argsort(x, kind="stable")
    cw = np.cumsum(d.weights[order])
    i = int(np.searchsorted(cw, p * cw[-1] - 1e-12 * cw[-1], side="left"))
    return float(x[order][min(i, x.size - 1)])


def fiducial_cdf_at(d: FiducialDraws, coordinate: int, t: float) -> float:
    """Weighted fraction of draws with coordinate value ``<= t``."""
    if d.m == 0:
        raise DomainError("empty fiducial draws")
    x = d.draws[:, coordinate]
    return float(min(1.0, np.sum(d.weights[x <= t])))
