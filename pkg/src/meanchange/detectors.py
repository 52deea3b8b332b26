"""Streaming CUSUM-type detectors.

Every detector here is the recursion

    stat(0) = 0,  stat(t) = max(0, stat(t-1) + increment(x_t))

which equals ``max_{k<=t} sum_{i=k}^t increment(x_i)`` (clamped at 0). Only
the increment differs:

* :class:`ExactLlr`: ``log p1(x) - log p0(x)`` (classical CUSUM),
* :class:`TiltedLlr`: ``lambda* x - kappa0(lambda*)`` (robust test),
* :class:`MctLlr`: ``x - (mu0 + eta) / 2`` (mean-change test).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np

from .distributions import BoundedDistribution
from .exceptions import ParameterError, SupportError
from .lfd import MeanChangeParams, TiltedLfd
from .validation import check_positive, check_series, check_unit

__all__ = [
    "Llr",
    "ExactLlr",
    "TiltedLlr",
    "MctLlr",
    "DetectorState",
    "increment",
    "update",
    "run_until_alarm",
    "max_form_oracle",
    "trajectory",
]


class Llr:
    """Per-observation increment of a CUSUM statistic."""

    kind: str = "abstract"

    def increments(self, xs: np.ndarray) -> np.ndarray:
        """Vectorised increments; ``xs`` must already be validated."""
        raise NotImplementedError

    def increment(self, x: float) -> float:
        return float(self.increments(np.array([check_unit(x)]))[0])

    @property
    def max_increment(self) -> float:
        """Supremum of the increment over [0, 1]."""
        raise NotImplementedError


class ExactLlr(Llr):
    """Log-likelihood ratio between two known laws.

    ``post`` and ``pre`` are distributions with a ``logpdf`` or plain callables
    returning log-densities for arrays of observations.
    """

    kind = "cusum-exact"

    def __init__(self, post, pre):
        self.post = post
        self.pre = pre
        self._log_p1: Callable = post.logpdf if isinstance(post, BoundedDistribution) else post
        self._log_p0: Callable = pre.logpdf if isinstance(pre, BoundedDistribution) else pre

    def __repr__(self) -> str:
        return f"ExactLlr(post={self.post!r}, pre={self.pre!r})"

    def increments(self, xs):
        xs = np.asarray(xs, dtype=float)
        l0 = np.asarray(self._log_p0(xs), dtype=float)
        if np.any(np.isneginf(l0)):
            bad = xs[np.isneginf(l0)][0]
            raise SupportError(f"pre-change density is zero at x={bad!r}")
        return np.asarray(self._log_p1(xs), dtype=float) - l0

    @property
    def max_increment(self) -> float:
        grid = np.linspace(0.0, 1.0, 20001)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(self._log_p1(grid), dtype=float) - np.asarray(self._log_p0(grid), dtype=float)
        return float(np.nanmax(vals))


class TiltedLlr(Llr):
    """Increment ``lam * x - kappa`` of the exponentially tilted test."""

    kind = "robust-tilted"

    def __init__(self, lfd: TiltedLfd):
        self.lfd = lfd

    def __repr__(self) -> str:
        return f"TiltedLlr(lam={self.lfd.lam:.6g}, kappa={self.lfd.kappa:.6g})"

    def increments(self, xs):
        return self.lfd.lam * np.asarray(xs, dtype=float) - self.lfd.kappa

    @property
    def max_increment(self) -> float:
        return max(self.lfd.lam, 0.0) - self.lfd.kappa


class MctLlr(Llr):
    """Increment ``x - (mu0 + eta) / 2`` of the mean-change test."""

    kind = "mct"

    def __init__(self, mu0: float, eta: float):
        self.mu0 = check_unit(mu0, name="mu0")
        self.eta = check_unit(eta, name="eta")
        self.center = (self.mu0 + self.eta) / 2.0

    @classmethod
    def from_params(cls, params: MeanChangeParams) -> "MctLlr":
        return cls(params.mu0, params.eta)

    def __repr__(self) -> str:
        return f"MctLlr(mu0={self.mu0:.6g}, eta={self.eta:.6g})"

    def increments(self, xs):
        return np.asarray(xs, dtype=float) - self.center

    @property
    def max_increment(self) -> float:
        return 1.0 - self.center


@dataclass(frozen=True)
class DetectorState:
    """Value of a detector after ``t`` observations.

    ``alarm_time`` is the first ``t`` at which ``statistic >= threshold``;
    it stays frozen if updates continue after the alarm.
    """

    threshold: float
    statistic: float = 0.0
    t: int = 0
    alarm_time: int | None = None

    def __post_init__(self):
        check_positive(self.threshold, name="threshold")

    @property
    def alarmed(self) -> bool:
        return self.alarm_time is not None


def increment(spec: Llr, x: float) -> float:
    return spec.increment(x)


def update(state: DetectorState, spec: Llr, x: float) -> DetectorState:
    stat = max(0.0, state.statistic + spec.increment(x))
    t = state.t + 1
    alarm = state.alarm_time
    if alarm is None and stat >= state.threshold:
        alarm = t
    return replace(state, statistic=stat, t=t, alarm_time=alarm)


def run_until_alarm(spec: Llr, b: float, stream: Iterable[float], cap: int) -> tuple[int | None, DetectorState]:
    """Feed ``stream`` until the statistic reaches ``b`` or ``cap`` observations are used.

    Returns ``(alarm_time, state)``; ``alarm_time`` is ``None`` for a censored run.
    """
    if cap < 1:
        raise ParameterError(f"cap must be >= 1, got {cap!r}")
    state = DetectorState(threshold=b)
    for x in stream:
        state = update(state, spec, x)
        if state.alarmed or state.t >= cap:
            break
    return state.alarm_time, state


def trajectory(spec: Llr, xs, *, start: float = 0.0) -> np.ndarray:
    """Statistic after each observation of ``xs`` (continues past any alarm)."""
    incs = spec.increments(check_series(xs))
    out = np.empty(incs.size)
    stat = float(start)
    for i, z in enumerate(incs):
        stat = max(0.0, stat + z)
        out[i] = stat
    return out


def max_form_oracle(spec: Llr, xs) -> float:
    """``max(0, max_k sum_{i>=k} increment(x_i))`` by direct enumeration.

    Quadratic time with exactly rounded sums; used only to check the
    recursion.
    """
    incs = spec.increments(check_series(xs)).tolist()
    best = 0.0
    for k in range(len(incs)):
        best = max(best, math.fsum(incs[k:]))
    return best
