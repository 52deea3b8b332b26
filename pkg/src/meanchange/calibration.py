"""Thresholds that meet a false-alarm target.

* ``cusum_threshold``: ``|ln alpha|`` for a CUSUM driven by a true
  log-likelihood ratio (exact or tilted).
* ``mct_threshold``: the first-order threshold of the mean-change statistic,
  ``|ln alpha| var0 / (2 delta)``.
* ``refined_threshold``: the threshold that makes a Bernstein-type bound on
  the false-alarm probability equal ``alpha``. ``r0`` is the Bernstein
  correction factor that shrinks the effective exponent.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from ._roots import bisect, expand_upper
from .exceptions import AlphaTooLargeError, DomainError, NumericError, ParameterError
from .lfd import MeanChangeParams
from .validation import check_alpha

__all__ = [
    "Calibration",
    "calibrate",
    "cusum_threshold",
    "mct_threshold",
    "r0",
    "bessel_k1",
    "bessel_k1e",
    "fa_bound",
    "refined_threshold",
]


def cusum_threshold(alpha: float) -> float:
    return -math.log(check_alpha(alpha))


def _require_gap(params: MeanChangeParams) -> float:
    if params.delta <= 0:
        raise ParameterError(f"mean gap must be positive (eta={params.eta:g}, mu0={params.mu0:g})")
    return params.delta


def mct_threshold(alpha: float, params: MeanChangeParams) -> float:
    """``|ln alpha| * var0 / (2 delta)``."""
    delta = _require_gap(params)
    return cusum_threshold(alpha) * params.var0 / (2.0 * delta)


def r0(params: MeanChangeParams) -> float:
    """``var0 / (var0 + delta * max(mu0, 1 - mu0) / 3)``; equals 1 at zero gap."""
    m = max(params.mu0, 1.0 - params.mu0) / 3.0
    return params.var0 / (params.var0 + params.delta * m)


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind, order one.
#
#   K1(z) = int_0^inf exp(-z cosh t) cosh t dt
#
# integrated with composite Gauss-Legendre on [0, T], [T, 2T], [2T, 4T], ...
# until a piece adds nothing at double precision.

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _k1e_integrand(t, z):
    # exp(-z (cosh t - 1)) cosh t, with cosh t - 1 = 2 sinh^2(t/2)
    return np.exp(-2.0 * z * np.sinh(0.5 * t) ** 2) * np.cosh(t)


def _composite_gl(z, a, b, width):
    panels = max(1, math.ceil((b - a) / width))
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    t = mid + half * _GL_NODES
    return float((half * _GL_WEIGHTS * _k1e_integrand(t, z)).sum())


@lru_cache(maxsize=1024)
def bessel_k1e(z: float) -> float:
    """Exponentially scaled ``exp(z) * K1(z)`` for ``z > 0``."""
    z = float(z)
    if not (z > 0 and math.isfinite(z)):
        raise DomainError(f"K1 requires a finite z > 0, got {z!r}")
    width = 0.5 / math.sqrt(max(z, 1.0))
    upper = min(1.0, 4.0 * width)
    total = _composite_gl(z, 0.0, upper, width)
    while True:
        if upper > 700.0:
            raise NumericError(f"K1({z:g}) quadrature did not converge before t=700")
        piece = _composite_gl(z, upper, 2.0 * upper, max(width, 0.5))
        total += piece
        upper *= 2.0
        if piece <= 1e-17 * total:
            return total


def bessel_k1(z: float) -> float:
    """Modified Bessel function of the second kind of order one."""
    return bessel_k1e(z) * math.exp(-float(z))


# ---------------------------------------------------------------------------


def fa_bound(b: float, params: MeanChangeParams, form: str = "exact") -> float:
    """Upper bound on the probability that the mean-change random walk reaches ``b``.

    ``form="exact"`` gives ``(2 b r0 / delta) K1(z) exp(-z)`` with
    ``z = r0**2 b delta / var0``; ``form="asymptotic"`` replaces ``K1`` by its
    large-argument form, giving ``sqrt(2 pi var0 b / delta**3) exp(-2 z)``.
    """
    b = float(b)
    if not b > 1:
        raise ParameterError(f"threshold must exceed 1, got {b!r}")
    delta = _require_gap(params)
    r = r0(params)
    z = r * r * b * delta / params.var0
    if form == "exact":
        return 2.0 * b * r / delta * bessel_k1e(z) * math.exp(-2.0 * z)
    if form == "asymptotic":
        return math.sqrt(2.0 * math.pi * params.var0 * b / delta ** 3) * math.exp(-2.0 * z)
    raise ParameterError(f"form must be 'exact' or 'asymptotic', got {form!r}")


def _log_asymptotic_bound(b, params, r):
    delta = params.delta
    return 0.5 * math.log(2.0 * math.pi * params.var0 * b / delta ** 3) - 2.0 * r * r * delta * b / params.var0


def refined_threshold(alpha: float, params: MeanChangeParams, method: str = "solve") -> float:
    """Threshold whose asymptotic false-alarm bound equals ``alpha``.

    ``method="approx"`` returns ``mct_threshold / r0**2``. ``method="solve"``
    finds the largest root of ``sqrt(2 pi var0 b / delta**3) exp(-2 r0**2 delta b / var0) = alpha``
    by bisection, starting from ``[max(1, b_mct), 10 b_mct / r0**2]``.
    """
    alpha = check_alpha(alpha)
    b_mct = mct_threshold(alpha, params)
    r = r0(params)
    if method == "approx":
        return b_mct / (r * r)
    if method != "solve":
        raise ParameterError(f"method must be 'solve' or 'approx', got {method!r}")

    log_alpha = math.log(alpha)

    def g(b):
        return _log_asymptotic_bound(b, params, r) - log_alpha

    lo = max(1.0, b_mct)
    if g(lo) < 0:
        # Left side peaks at b = var0 / (4 r0^2 delta); the wanted root lies past the peak.
        lo = max(1.0, params.var0 / (4.0 * r * r * params.delta))
        if g(lo) < 0:
            raise AlphaTooLargeError(
                f"no threshold above 1 solves the bound equation at alpha={alpha:g}; "
                "use method='approx'"
            )
    hi = max(10.0 * b_mct / (r * r), 2.0 * lo)
    lo, hi = expand_upper(g, lo, hi, limit=1e300)
    return bisect(g, lo, hi, xtol=0.0)


@dataclass(frozen=True)
class Calibration:
    alpha: float
    params: MeanChangeParams
    b_alpha: float
    b_mct: float
    r0: float
    b_refined: float | None
    b_refined_approx: float

    def as_dict(self) -> dict:
        d = asdict(self)
        p = d.pop("params")
        return {"alpha": d.pop("alpha"), "mu0": p["mu0"], "var0": p["var0"], "eta": p["eta"],
                "delta": self.params.delta, **d}


def calibrate(alpha: float, params: MeanChangeParams) -> Calibration:
    """All thresholds for one ``(alpha, params)`` pair.

    ``b_refined`` is ``None`` when ``alpha`` is too large for the bound
    equation to have a root above 1.
    """
    try:
        refined = refined_threshold(alpha, params, "solve")
    except AlphaTooLargeError:
        refined = None
    return Calibration(
        alpha=check_alpha(alpha),
        params=params,
        b_alpha=cusum_threshold(alpha),
        b_mct=mct_threshold(alpha, params),
        r0=r0(params),
        b_refined=refined,
        b_refined_approx=refined_threshold(alpha, params, "approx"),
    )
