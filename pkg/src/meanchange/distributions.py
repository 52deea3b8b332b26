"""Distributions supported on [0, 1] and their cumulant generating functions.

Three concrete laws are provided:

* :class:`BetaDistribution`: the continuous family used in the numerical
  examples. Expectations are Gauss-Jacobi quadratures with the beta weight
  absorbed into the rule, so ``E[exp(lam * X)]`` is integrated spectrally
  even when a shape parameter is below one.
* :class:`EmpiricalDistribution`: (weighted) atoms, typically a pre-change
  sample. Expectations are exact finite sums.
* :class:`DiscretizedDistribution`: a piecewise-constant density on a
  uniform grid. Expectations are exact: each cell contributes
  ``exp(lam * midpoint) * sinh(lam*h/2) / (lam*h/2)``.

All three are immutable after construction and safe to share between
threads. Random draws go through :class:`RngStream`, which derives an
independent numpy generator from a ``(seed, stream_id)`` pair.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import betaln, roots_jacobi, xlog1py, xlogy

from .exceptions import (
    DataError,
    InsufficientDataError,
    NumericError,
    ParameterError,
)
from .validation import check_count, check_series

__all__ = [
    "BoundedDistribution",
    "BetaDistribution",
    "EmpiricalDistribution",
    "DiscretizedDistribution",
    "RngStream",
    "beta_moments",
    "sample",
    "cgf",
    "cgf_prime",
    "empirical_moments",
]

QUADRATURE_NODES = 256
_MASK64 = (1 << 64) - 1


class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Streams with different ids are statistically independent (numpy's
    ``SeedSequence`` spawn keys), so every Monte Carlo trial can own one.
    An instance is stateful: draw from it in one execution context only.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if int(value) != value or not 0 <= value <= _MASK64:
                raise ParameterError(f"{name} must be an unsigned 64-bit integer, got {value!r}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _log_sinhc(y):
    """``log(sinh(y) / y)``, stable for all real ``y``."""
    y = abs(y)
    if y < 1e-3:
        y2 = y * y
        return y2 / 6.0 - y2 * y2 / 180.0
    return y - math.log(2.0) - math.log(y) + math.log1p(-math.exp(-2.0 * y))


def _dlog_sinhc(y):
    """Derivative of ``log(sinh(y)/y)`` with respect to ``y``."""
    if abs(y) < 1e-3:
        return y / 3.0 - y ** 3 / 45.0
    return 1.0 / math.tanh(y) - 1.0 / y


class BoundedDistribution:
    """Base class for laws on [0, 1].

    Subclasses provide quadrature atoms ``(nodes, weights)`` such that
    ``E[f(X)]`` is ``sum(weights * f(nodes))`` up to a per-cell smoothing
    correction (non-zero only for :class:`DiscretizedDistribution`).
    """

    kind: str = "abstract"
    _half_width: float = 0.0

    mean: float
    var: float
    _nodes: np.ndarray
    _logw: np.ndarray

    # -- expectations --------------------------------------------------
    def log_mgf(self, lam: float, *, center: float = 0.0) -> float:
        """``log E[exp(lam * (X - center))]``.

        Evaluated as a log-sum-exp, which subtracts the largest exponent and
        therefore never overflows.
        """
        lam = float(lam)
        if not math.isfinite(lam):
            raise ParameterError(f"lambda must be finite, got {lam!r}")
        if lam == 0.0:
            return 0.0
        z = lam * (self._nodes - center) + self._logw
        zmax = z.max()
        out = zmax + math.log(np.exp(z - zmax).sum())
        if self._half_width:
            out += _log_sinhc(lam * self._half_width)
        return float(out)

    def tilted_mean(self, lam: float) -> float:
        """Mean of the exponential tilt ``p(x) exp(lam x) / E[exp(lam X)]``."""
        lam = float(lam)
        if not math.isfinite(lam):
            raise ParameterError(f"lambda must be finite, got {lam!r}")
        if lam == 0.0:
            return self.mean
        z = lam * self._nodes + self._logw
        p = np.exp(z - z.max())
        out = float(p @ self._nodes / p.sum())
        if self._half_width:
            out += self._half_width * _dlog_sinhc(lam * self._half_width)
        return min(max(out, self.support[0]), self.support[1])

    def expect(self, func) -> float:
        """``E[func(X)]`` by the distribution's quadrature rule (no cell correction)."""
        return float(np.exp(self._logw) @ func(self._nodes))

    # -- to be provided by subclasses ------------------------------------
    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def logpdf(self, x):
        raise NotImplementedError(f"{self.kind} distribution has no density")

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        raise NotImplementedError

    def tilt(self, lam: float, *, cells: int = 4096) -> "BoundedDistribution":
        raise NotImplementedError


class BetaDistribution(BoundedDistribution):
    """Beta(a, b) law."""

    kind = "beta"

    def __init__(self, a: float, b: float, *, nodes: int = QUADRATURE_NODES):
        self.a, self.b = float(a), float(b)
        self.mean, self.var = beta_moments(self.a, self.b)
        self._nodes, self._logw = _jacobi_rule(nodes, self.a, self.b)

    def __repr__(self) -> str:
        return f"BetaDistribution(a={self.a:g}, b={self.b:g})"

    @property
    def support(self) -> tuple[float, float]:
        return (0.0, 1.0)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        out = xlogy(self.a - 1.0, x) + xlog1py(self.b - 1.0, -x) - betaln(self.a, self.b)
        out = np.where((x < 0) | (x > 1), -np.inf, out)
        return out if out.ndim else float(out)

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        check_count(n, name="n", minimum=0)
        return rng.generator.beta(self.a, self.b, size=n)

    def tilt(self, lam: float, *, cells: int = 4096) -> "DiscretizedDistribution":
        """Piecewise-constant approximation of the exponential tilt on ``cells`` cells."""
        mids = (np.arange(cells) + 0.5) / cells
        logd = self.logpdf(mids) + lam * mids
        return DiscretizedDistribution(np.exp(logd - logd.max()))


class EmpiricalDistribution(BoundedDistribution):
    """Atoms in [0, 1], equally weighted unless ``weights`` is given."""

    kind = "empirical"

    def __init__(self, atoms, weights=None):
        atoms = check_series(atoms, name="atoms", allow_empty=False)
        if weights is None:
            w = np.full(atoms.size, 1.0 / atoms.size)
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != atoms.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ParameterError("weights must be finite, nonnegative and match atoms")
            if w.sum() <= 0:
                raise ParameterError("weights sum to zero")
            w = w / w.sum()
        keep = w > 0
        self.atoms = atoms[keep]
        self.weights = w[keep]
        self.atoms.setflags(write=False)
        self.weights.setflags(write=False)
        self._nodes = self.atoms
        with np.errstate(divide="ignore"):
            self._logw = np.log(self.weights)
        self.mean = float(self.weights @ self.atoms)
        self.var = float(max(self.weights @ (self.atoms - self.mean) ** 2, 0.0))

    def __repr__(self) -> str:
        return f"EmpiricalDistribution(n_atoms={self.atoms.size}, mean={self.mean:.6g})"

    @property
    def support(self) -> tuple[float, float]:
        return (float(self.atoms.min()), float(self.atoms.max()))

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        check_count(n, name="n", minimum=0)
        if self.atoms.size == 1:
            return np.full(n, self.atoms[0])
        return rng.generator.choice(self.atoms, size=n, p=self.weights)

    def tilt(self, lam: float, *, cells: int = 4096) -> "EmpiricalDistribution":
        z = lam * self.atoms + np.log(self.weights)
        return EmpiricalDistribution(self.atoms, np.exp(z - z.max()))


class DiscretizedDistribution(BoundedDistribution):
    """Piecewise-constant density given by its values on ``len(density)`` equal cells.

    The table is normalised on construction; negative entries are rejected.
    """

    kind = "discretized"

    def __init__(self, density):
        d = np.asarray(density, dtype=float)
        if d.ndim != 1 or d.size == 0:
            raise ParameterError("density must be a non-empty 1-D table")
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise ParameterError("density values must be finite and nonnegative")
        total = d.sum()
        if total <= 0:
            raise ParameterError("density table integrates to zero")
        m = d.size
        self.cells = m
        self.probs = d / total
        self.probs.setflags(write=False)
        self.density = self.probs * m
        self.density.setflags(write=False)
        h = 1.0 / m
        self._half_width = h / 2.0
        self._mids = (np.arange(m) + 0.5) * h
        nz = np.nonzero(self.probs)[0]
        self._lo, self._hi = nz[0] * h, (nz[-1] + 1) * h
        self._nodes = self._mids[nz]
        self._logw = np.log(self.probs[nz])
        self.mean = float(self.probs @ self._mids)
        self.var = float(self.probs @ (self._mids - self.mean) ** 2 + h * h / 12.0)

    def __repr__(self) -> str:
        return f"DiscretizedDistribution(cells={self.cells}, mean={self.mean:.6g})"

    @property
    def support(self) -> tuple[float, float]:
        return (self._lo, self._hi)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip((x * self.cells).astype(int), 0, self.cells - 1)
        with np.errstate(divide="ignore"):
            out = np.log(self.density[idx])
        out = np.where((x < 0) | (x > 1), -np.inf, out)
        return out if out.ndim else float(out)

    def sample(self, rng: RngStream, n: int) -> np.ndarray:
        check_count(n, name="n", minimum=0)
        g = rng.generator
        cell = g.choice(self.cells, size=n, p=self.probs)
        return (cell + g.random(n)) / self.cells

    def tilt(self, lam: float, *, cells: int = 4096) -> "DiscretizedDistribution":
        # Cell masses are exact; within-cell shape is flattened again.
        z = lam * self._mids
        with np.errstate(divide="ignore"):
            logm = np.log(self.probs) + z
        return DiscretizedDistribution(np.exp(logm - logm.max()))


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0, 1] and log-weights for the Beta(a, b) weight function."""
    t, w = roots_jacobi(n, b - 1.0, a - 1.0)
    expected = math.exp(betaln(a, b) + (a + b - 1.0) * math.log(2.0))
    if not np.isfinite(w.sum()) or abs(w.sum() / expected - 1.0) > 1e-10:
        raise NumericError(
            f"Gauss-Jacobi rule for Beta({a}, {b}) lost accuracy: weight sum "
            f"{w.sum():.16g} vs exact {expected:.16g} (n={n})"
        )
    nodes = (1.0 + t) / 2.0
    logw = np.log(w / w.sum())
    nodes.setflags(write=False)
    logw.setflags(write=False)
    return nodes, logw


def beta_moments(a: float, b: float) -> tuple[float, float]:
    """Mean and variance of Beta(a, b)."""
    a, b = float(a), float(b)
    if not (math.isfinite(a) and math.isfinite(b) and a > 0 and b > 0):
        raise ParameterError(f"beta shape parameters must be finite and positive, got ({a!r}, {b!r})")
    s = a + b
    return a / s, a * b / (s * s * (s + 1.0))


def sample(dist: BoundedDistribution, rng: RngStream, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. observations from ``dist``."""
    return dist.sample(rng, n)


def cgf(dist: BoundedDistribution, lam: float) -> float:
    """Cumulant generating function ``log E[exp(lam X)]``."""
    return dist.log_mgf(lam)


def cgf_prime(dist: BoundedDistribution, lam: float) -> float:
    """Derivative of :func:`cgf`, i.e. the mean of the tilted law."""
    return dist.tilted_mean(lam)


def empirical_moments(xs) -> tuple[float, float]:
    """Sample mean and unbiased sample variance of observations in [0, 1]."""
    arr = check_series(xs, name="xs")
    if arr.size < 2:
        raise InsufficientDataError(f"need at least 2 observations, got {arr.size}")
    return float(arr.mean()), float(arr.var(ddof=1))


def _as_distribution(obj) -> BoundedDistribution:
    if isinstance(obj, BoundedDistribution):
        return obj
    try:
        return EmpiricalDistribution(obj)
    except (TypeError, ValueError) as exc:
        raise DataError(f"cannot interpret {type(obj).__name__} as a distribution") from exc
