"""Special functions, seeded random streams and small statistical helpers.

Every stochastic routine in the package takes a :class:`RandomStream`.  A
stream is a Philox4x64 counter-based generator keyed by ``(seed, stream_id)``,
so two streams with the same key replay the same numbers on any host, and
sub-streams can be handed to worker threads without shared state.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

__all__ = [
    "DomainError",
    "RandomStream",
    "digamma",
    "trigamma",
    "ln_gamma",
    "gamma_cdf",
    "gamma_inv_cdf",
    "log_gamma_quantile",
    "draw",
    "ks_statistic",
    "ks_critical",
    "ks_pvalue",
    "weighted_ks_statistic",
    "set_threads",
    "get_threads",
    "run_chunks",
    "CHUNK_SIZE",
]

_MASK64 = (1 << 64) - 1
EULER_GAMMA = 0.57721566490153286061


class DomainError(ValueError):
    """Argument outside the domain of a numerical routine."""


# ---------------------------------------------------------------------------
# Random streams
# ---------------------------------------------------------------------------


def _mix(stream_id: int, index: int) -> int:
    # SeedSequence hashing is specified bit-for-bit by numpy, hence portable.
    ss = np.random.SeedSequence([stream_id & _MASK64, index & _MASK64, 0x5EED])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


class RandomStream:
    """Deterministic random stream keyed by ``(seed, stream_id)``.

    Parameters
    ----------
    seed : int
        64-bit unsigned seed.
    stream_id : int
        64-bit unsigned stream identifier.  Distinct ids select disjoint
        Philox keys and hence independent sequences.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if seed is None:
            raise DomainError("a seed is required")
        self.seed = int(seed) & _MASK64
        self.stream_id = int(stream_id) & _MASK64
        self._bitgen = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        self.generator = np.random.Generator(self._bitgen)

    @property
    def counter(self) -> int:
        """Number of 64-bit words consumed so far."""
        st = self._bitgen.state
        block = int(st["state"]["counter"][0])
        return (block - 1) * 4 + int(st["buffer_pos"]) if block else 0

    def substream(self, index: int) -> "RandomStream":
        """Independent child stream; a pure function of (seed, stream_id, index)."""
        return RandomStream(self.seed, _mix(self.stream_id, index))

    def copy(self) -> "RandomStream":
        """Clone including the current position (for common random numbers)."""
        other = RandomStream(self.seed, self.stream_id)
        other._bitgen.state = self._bitgen.state
        return other

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"


def draw(stream: RandomStream, dist: str, size=None, **params):
    """Draw from one of the supported laws.

    ``dist`` is one of ``uniform01``, ``std_normal``, ``gamma`` (``shape``),
    ``student_t`` (``df``) or ``chi`` (``df``).  Returns a float when
    ``size`` is None, else an array.
    """
    g = stream.generator
    if dist == "uniform01":
        out = g.random(size)
    elif dist == "std_normal":
        out = g.standard_normal(size)
    elif dist == "gamma":
        shape = params.get("shape")
        if shape is None or not shape > 0:
            raise DomainError(f"gamma shape must be positive, got {shape!r}")
        out = g.standard_gamma(shape, size)
    elif dist == "student_t":
        df = params.get("df")
        if df is None or not df > 0:
            raise DomainError(f"student_t df must be positive, got {df!r}")
        out = g.standard_t(df, size)
    elif dist == "chi":
        df = params.get("df")
        if df is None or not df > 0:
            raise DomainError(f"chi df must be positive, got {df!r}")
        out = np.sqrt(g.chisquare(df, size))
    else:
        raise DomainError(f"unknown distribution {dist!r}")
    return float(out) if size is None else out


# ---------------------------------------------------------------------------
# Deterministic chunked parallelism
# ---------------------------------------------------------------------------

CHUNK_SIZE = 1 << 15
_threads = 1


def set_threads(k: int) -> None:
    """Cap the number of worker threads used by :func:`run_chunks`."""
    global _threads
    if k < 1:
        raise DomainError("threads must be >= 1")
    _threads = int(k)


def get_threads() -> int:
    return _threads


def run_chunks(fn: Callable[[RandomStream, int], np.ndarray], m: int, stream: RandomStream,
               chunk_size: int = CHUNK_SIZE, threads: int | None = None) -> np.ndarray:
    """Evaluate ``fn(substream_i, size_i)`` over fixed-size chunks of ``m``.

    Chunk ``i`` always gets ``stream.substream(i)`` and results are
    concatenated in chunk order, so the output does not depend on the
    number of threads.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    sizes = [chunk_size] * (m // chunk_size)
    if m % chunk_size:
        sizes.append(m % chunk_size)
    jobs = [(stream.substream(i), s) for i, s in enumerate(sizes)]
    threads = _threads if threads is None else threads
    if threads <= 1 or len(jobs) == 1:
        parts = [fn(s, k) for s, k in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(lambda job: fn(*job), jobs))
    return np.concatenate([np.asarray(p) for p in parts], axis=0)


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series.
_PSI_ASYMPTOTIC = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


def digamma(x):
    """Digamma function for positive arguments.

    Uses the asymptotic expansion for ``x >= 6`` and the recurrence
    ``psi(x) = psi(x + 1) - 1/x`` below that.  Absolute error is below
    1e-10 on [1e-3, 1e6].
    """
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("digamma requires x > 0")
    z = arr.copy()
    shift = np.zeros_like(z)
    while True:
        small = z < 6.0
        if not small.any():
            break
        shift = shift + np.where(small, 1.0 / np.where(small, z, 1.0), 0.0)
        z = np.where(small, z + 1.0, z)
    inv2 = 1.0 / (z * z)
    series = np.zeros_like(z)
    for c in reversed(_PSI_ASYMPTOTIC):
        series = (series + c) * inv2
    out = np.log(z) - 0.5 / z - series - shift
    return float(out) if np.ndim(x) == 0 else out


def trigamma(x):
    """Trigamma function (derivative of digamma); exact risk of the log-scale rule."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("trigamma requires x > 0")
    out = special.polygamma(1, arr)
    return float(out) if np.ndim(x) == 0 else out


def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("ln_gamma requires x > 0")
    out = special.gammaln(arr)
    return float(out) if np.ndim(x) == 0 else out


def _check_gamma_params(shape, scale):
    if np.any(~(np.asarray(shape) > 0)) or np.any(~(np.asarray(scale) > 0)):
        raise DomainError("gamma shape and scale must be positive")


def gamma_cdf(x, shape, scale=1.0):
    """Gamma CDF, i.e. the regularized lower incomplete gamma P(shape, x/scale)."""
    _check_gamma_params(shape, scale)
    out = special.gammainc(shape, np.maximum(np.asarray(x, dtype=float), 0.0) / scale)
    return float(out) if np.ndim(out) == 0 else out


def gamma_inv_cdf(p, shape, scale=1.0):
    """Gamma quantile function.

    Newton steps on the regularized incomplete gamma polish the initial
    inversion so that ``gamma_cdf(result) == p`` to about 1e-12.
    """
    _check_gamma_params(shape, scale)
    p = np.asarray(p, dtype=float)
    if np.any(~((p > 0) & (p < 1))):
        raise DomainError("gamma_inv_cdf requires 0 < p < 1")
    shape_b, p_b = np.broadcast_arrays(np.asarray(shape, dtype=float), p)
    x = special.gammaincinv(shape_b, p_b)
    for _ in range(2):
        with np.errstate(all="ignore"):
            logpdf = (shape_b - 1.0) * np.log(x) - x - special.gammaln(shape_b)
            step = (special.gammainc(shape_b, x) - p_b) / np.exp(logpdf)
            cand = x - step
        ok = np.isfinite(cand) & (cand > 0) & (np.abs(step) < 0.5 * x)
        x = np.where(ok, cand, x)
    out = x * scale
    return float(out) if out.ndim == 0 else out


def log_gamma_quantile(u, shape):
    """``log(gamma_inv_cdf(u, shape))`` without underflow for tiny shapes.

    For small quantiles the gamma law behaves like ``x**shape / Gamma(shape+1)``,
    so ``log x ~ (log u + lgamma(shape + 1)) / shape`` where the direct
    inversion underflows to zero.
    """
    u = np.asarray(u, dtype=float)
    x = special.gammaincinv(shape, u)
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    tiny = ~(x > 1e-280)
    if np.any(tiny):
        approx = (np.log(u) + special.gammaln(shape + 1.0)) / shape
        lx = np.where(tiny, approx, lx)
    return lx


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov helpers
# ---------------------------------------------------------------------------


def ks_statistic(samples: Sequence[float]) -> float:
    """One-sample KS distance of values in [0, 1] to the uniform law."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise DomainError("ks_statistic of an empty sample")
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def ks_critical(n: int, alpha: float) -> float:
    """Critical value of the one-sample KS statistic at level ``alpha``."""
    return float(stats.kstwo.isf(alpha, n))


def ks_pvalue(d: float, n: int) -> float:
    return float(stats.kstwo.sf(d, n))


def weighted_ks_statistic(values, weights, cdf: Callable) -> float:
    """Sup distance between a weighted empirical CDF and a continuous ``cdf``."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.size == 0:
        raise DomainError("weighted_ks_statistic of an empty sample")
    order = np.argsort(v, kind="stable")
    v, w = v[order], w[order] / w.sum()
    upper = np.cumsum(w)
    lower = upper - w
    f = cdf(v)
    return float(max(np.max(upper - f), np.max(f - lower)))

