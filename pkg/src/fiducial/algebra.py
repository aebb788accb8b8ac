"""Cayley-Dickson algebras R, C, H and O and their loop structure.

Elements are numpy arrays whose last axis holds the ``2**k`` real
coordinates, so every routine here works on a single element or on a
batch of them.  :class:`CDElement` is a thin operator-overloading wrapper
for interactive use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

__all__ = [
    "AlgebraError",
    "CDElement",
    "LoopOps",
    "cd_mul",
    "cd_conj",
    "cd_norm_sq",
    "cd_inv",
    "right_divide",
    "unit",
    "basis",
    "loop",
    "associator",
    "level_of",
]

MAX_LEVEL = 3


class AlgebraError(ValueError):
    """Level mismatch, unsupported level or division by zero."""


def level_of(a) -> int:
    dim = np.shape(a)[-1]
    k = int(dim).bit_length() - 1
    if dim < 1 or 1 << k != dim or k > MAX_LEVEL:
        raise AlgebraError(f"coordinate count {dim} is not 1, 2, 4 or 8")
    return k


def unit(level: int) -> np.ndarray:
    if not 0 <= level <= MAX_LEVEL:
        raise AlgebraError(f"level must be in 0..{MAX_LEVEL}")
    e = np.zeros(1 << level)
    e[0] = 1.0
    return e


def basis(level: int, i: int) -> np.ndarray:
    e = np.zeros(1 << level)
    e[i] = 1.0
    return e


def cd_conj(a):
    """Involution ``(a, b)* = (a*, -b)``: keeps the real part, negates the rest."""
    a = np.asarray(a, dtype=float)
    level_of(a)
    out = -a
    out[..., 0] = a[..., 0]
    return out


def _mul(x, y):
    if x.shape[-1] == 1:
        return x * y
    h = x.shape[-1] // 2
    a, b = x[..., :h], x[..., h:]
    c, d = y[..., :h], y[..., h:]
    return np.concatenate(
        [_mul(a, c) - _mul(_conj(d), b), _mul(d, a) + _mul(b, _conj(c))], axis=-1
    )


def _conj(a):
    out = -a
    out[..., 0] = a[..., 0]
    return out


def cd_mul(a, b):
    """Cayley-Dickson product ``(a, b)(c, d) = (ac - d*b, da + bc*)``.

    Batched over leading axes with numpy broadcasting.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if level_of(a) != level_of(b):
        raise AlgebraError(f"level mismatch: {a.shape[-1]} vs {b.shape[-1]} coordinates")
    a, b = np.broadcast_arrays(a, b)
    return _mul(a, b)


def cd_norm_sq(a):
    a = np.asarray(a, dtype=float)
    level_of(a)
    out = np.sum(a * a, axis=-1)
    return float(out) if out.ndim == 0 else out


def cd_inv(a):
    """Two-sided inverse ``a* / |a|^2``."""
    a = np.asarray(a, dtype=float)
    n2 = np.asarray(cd_norm_sq(a))
    if np.any(n2 <= 0):
        raise AlgebraError("zero element has no inverse")
    return cd_conj(a) / n2[..., None]


def right_divide(x, u):
    """Solve ``theta * u = x`` for theta.

    Computed as ``x * u^{-1}``; the right inverse property of the Moufang
    loop of nonzero octonions (and of the associative lower levels) makes
    this the unique solution.
    """
    u = np.asarray(u, dtype=float)
    if np.any(np.asarray(cd_norm_sq(u)) <= 0):
        raise AlgebraError("division by the zero element")
    return cd_mul(x, cd_inv(u))


def associator(a, b, c):
    """``(ab)c - a(bc)``; identically zero at levels 0..2."""
    return cd_mul(cd_mul(a, b), c) - cd_mul(a, cd_mul(b, c))


class LoopOps(NamedTuple):
    """Quasigroup-with-unit interface used by the fiducial relation ``x = theta u``."""

    mul: Callable
    unit: np.ndarray
    right_divide: Callable


def loop(level: int = MAX_LEVEL) -> LoopOps:
    return LoopOps(cd_mul, unit(level), right_divide)


@dataclass(frozen=True, eq=False)
class CDElement:
    """A single element of the level-``k`` Cayley-Dickson algebra."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        level_of(c)
        object.__setattr__(self, "coords", c)

    @classmethod
    def one(cls, level: int = MAX_LEVEL) -> "CDElement":
        return cls(unit(level))

    @property
    def level(self) -> int:
        return level_of(self.coords)

    def __mul__(self, other):
        if isinstance(other, CDElement):
            return CDElement(cd_mul(self.coords, other.coords))
        return CDElement(self.coords * float(other))

    def __rmul__(self, other):
        return CDElement(self.coords * float(other))

    def __add__(self, other: "CDElement"):
        return CDElement(self.coords + other.coords)

    def __sub__(self, other: "CDElement"):
        return CDElement(self.coords - other.coords)

    def __neg__(self):
        return CDElement(-self.coords)

    def __truediv__(self, other: "CDElement"):
        return CDElement(right_divide(self.coords, other.coords))

    def conj(self) -> "CDElement":
        return CDElement(cd_conj(self.coords))

    def inv(self) -> "CDElement":
        return CDElement(cd_inv(self.coords))

    def norm_sq(self) -> float:
        return cd_norm_sq(self.coords)

    def __eq__(self, other):
        return isinstance(other, CDElement) and np.array_equal(self.coords, other.coords)

    def __repr__(self):
        return f"CDElement({self.coords.tolist()})"
