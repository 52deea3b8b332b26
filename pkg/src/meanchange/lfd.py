"""Least-favourable post-change law: the exponential tilt of P0 with mean eta.

Among all laws on [0, 1] with mean at least ``eta``, the one closest to the
pre-change law ``P0`` in KL divergence is ``p0(x) exp(lam x - kappa0(lam))``
where ``kappa0`` is the cumulant generating function of ``P0`` and ``lam``
makes the tilted mean equal ``eta``. The CUSUM built on its log-likelihood
ratio ``lam x - kappa0(lam)`` is asymptotically minimax for a mean increase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._roots import bisect, expand_upper
from .distributions import BoundedDistribution
from .exceptions import (
    DegenerateDistributionError,
    InfeasibleError,
    NoTiltNeededError,
    NumericError,
    ParameterError,
)
from .validation import check_unit

__all__ = [
    "MeanChangeParams",
    "TiltedLfd",
    "solve_lambda_star",
    "tilted_llr",
    "kl_lfd",
    "lambda_star_small_delta",
    "kl_small_delta",
]

LAMBDA_CAP = 1e6


@dataclass(frozen=True)
class MeanChangeParams:
    """Pre-change mean and variance together with the mean threshold ``eta``.

    ``delta`` is half the gap ``eta - mu0``.
    """

    mu0: float
    var0: float
    eta: float

    def __post_init__(self):
        mu0, var0, eta = float(self.mu0), float(self.var0), float(self.eta)
        object.__setattr__(self, "mu0", check_unit(mu0, name="mu0"))
        object.__setattr__(self, "eta", check_unit(eta, name="eta"))
        if not math.isfinite(var0) or var0 < 0:
            raise ParameterError(f"var0 must be finite and >= 0, got {var0!r}")
        if var0 == 0:
            raise DegenerateDistributionError("pre-change variance is zero")
        cap = mu0 * (1.0 - mu0)
        if var0 > cap * (1.0 + 1e-12):
            raise ParameterError(
                f"var0={var0:g} exceeds mu0*(1-mu0)={cap:g}, impossible on [0, 1]"
            )
        if eta < mu0:
            raise NoTiltNeededError(f"eta={eta:g} is below the pre-change mean {mu0:g}")
        object.__setattr__(self, "var0", var0)

    @property
    def delta(self) -> float:
        return (self.eta - self.mu0) / 2.0

    @property
    def center(self) -> float:
        """Drift centre ``(mu0 + eta) / 2`` of the mean-change statistic."""
        return (self.mu0 + self.eta) / 2.0

    @classmethod
    def from_distribution(cls, dist: BoundedDistribution, eta: float) -> "MeanChangeParams":
        return cls(dist.mean, dist.var, eta)


@dataclass(frozen=True)
class TiltedLfd:
    """Solved least-favourable law.

    Attributes
    ----------
    lam : tilt parameter ``lambda*``
    kappa : ``kappa0(lambda*)``
    eta : mean of the tilted law
    kl : ``KL(P1* || P0) = lambda* eta - kappa0(lambda*)``
    reference : the pre-change law being tilted
    """

    lam: float
    kappa: float
    eta: float
    kl: float
    reference: BoundedDistribution | None = field(default=None, repr=False, compare=False)

    def llr(self, x):
        return self.lam * np.asarray(x, dtype=float) - self.kappa

    def logpdf(self, x):
        """Log-density of the tilted law (requires a reference with a density)."""
        return self.reference.logpdf(x) + self.llr(x)

    def distribution(self, *, cells: int = 4096) -> BoundedDistribution:
        """A samplable version of the tilted law."""
        if self.reference is None:
            raise ParameterError("TiltedLfd has no reference distribution to tilt")
        return self.reference.tilt(self.lam, cells=cells)


def solve_lambda_star(p0: BoundedDistribution, eta: float, *, xtol: float = 1e-12) -> TiltedLfd:
    """Find ``lambda* > 0`` with ``cgf_prime(p0, lambda*) == eta``.

    The bracket starts at ``[0, 1]`` and the upper end doubles until the
    tilted mean passes ``eta``; bisection then narrows it to ``xtol``.
    """
    eta = float(eta)
    mu0 = p0.mean
    if eta <= mu0:
        raise NoTiltNeededError(f"eta={eta:g} does not exceed the pre-change mean {mu0:g}")
    sup = p0.support[1]
    if eta >= sup:
        raise InfeasibleError(f"eta={eta:g} is not below the upper end of the support ({sup:g})")

    def excess(lam):
        return p0.tilted_mean(lam) - eta

    try:
        lo, hi = expand_upper(excess, 0.0, 1.0, limit=LAMBDA_CAP)
    except NumericError as exc:
        raise NumericError(
            f"tilted mean at lambda={LAMBDA_CAP:g} is {p0.tilted_mean(LAMBDA_CAP):.12g} < eta={eta:g}; "
            "eta is too close to the top of the support for the quadrature rule"
        ) from exc
    lam = bisect(excess, lo, hi, xtol=xtol)
    return _make_lfd(p0, lam, eta)


def _make_lfd(p0: BoundedDistribution, lam: float, eta: float) -> TiltedLfd:
    kappa = p0.log_mgf(lam)
    # Centering at mu0 avoids cancelling two O(lam) terms when the gap is small.
    kl = lam * (eta - p0.mean) - p0.log_mgf(lam, center=p0.mean)
    return TiltedLfd(lam=lam, kappa=kappa, eta=eta, kl=max(kl, 0.0), reference=p0)


def tilted_llr(lfd: TiltedLfd, x: float) -> float:
    """Log-likelihood ratio ``lambda* x - kappa0(lambda*)`` of one observation."""
    return lfd.lam * check_unit(x) - lfd.kappa


def kl_lfd(lfd: TiltedLfd) -> float:
    return lfd.kl


def lambda_star_small_delta(params: MeanChangeParams) -> float:
    """Small-gap approximation ``2 delta / var0`` of ``lambda*``."""
    return 2.0 * params.delta / params.var0


def kl_small_delta(params: MeanChangeParams) -> float:
    """Small-gap approximation ``2 delta**2 / var0`` of the minimum KL divergence."""
    return 2.0 * params.delta ** 2 / params.var0
