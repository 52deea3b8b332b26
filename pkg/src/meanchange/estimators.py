"""scikit-learn style wrappers around the detectors.

``fit`` learns whatever the detector needs from pre-change data,
``decision_function`` returns the statistic after every observation,
``predict`` returns the latched alarm indicator, and ``transform`` returns
the statistic as a single column so the detectors drop into a ``Pipeline``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .calibration import cusum_threshold, mct_threshold, refined_threshold
from .detectors import ExactLlr, Llr, MctLlr, TiltedLlr, trajectory
from .distributions import BoundedDistribution, EmpiricalDistribution, empirical_moments
from .exceptions import ParameterError
from .lfd import MeanChangeParams, TiltedLfd, solve_lambda_star
from .validation import check_alpha, check_series

__all__ = ["MeanChangeDetector", "TiltedCusumDetector", "CusumDetector"]


class _CusumEstimator(TransformerMixin, BaseEstimator):
    spec_: Llr
    threshold_: float

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "spec_")
        return trajectory(self.spec_, check_series(X))

    def transform(self, X) -> np.ndarray:
        return self.decision_function(X)[:, None]

    def predict(self, X) -> np.ndarray:
        stat = self.decision_function(X)
        return np.maximum.accumulate(stat >= self.threshold_).astype(int)

    def first_alarm(self, X) -> int | None:
        """0-based position of the first alarm in ``X``, or ``None``."""
        hit = np.nonzero(self.decision_function(X) >= self.threshold_)[0]
        return int(hit[0]) if hit.size else None


class MeanChangeDetector(_CusumEstimator):
    """Mean-change test: CUSUM of ``x - (mu0 + eta) / 2``.

    Parameters
    ----------
    eta : float, optional
        Mean threshold. Mutually exclusive with ``eta_multiple``.
    eta_multiple : float, optional
        Mean threshold as a multiple (> 1) of the pre-change mean.
    alpha : float
        False-alarm target.
    threshold : {"first-order", "refined", "refined-approx"}
        Which calibration rule sets ``threshold_``.
    mu0, var0 : float, optional
        Known pre-change moments; estimated from ``X`` in ``fit`` otherwise.
    """

    def __init__(self, eta=None, eta_multiple=None, alpha=0.01, threshold="first-order", mu0=None, var0=None):
        self.eta = eta
        self.eta_multiple = eta_multiple
        self.alpha = alpha
        self.threshold = threshold
        self.mu0 = mu0
        self.var0 = var0

    def fit(self, X=None, y=None):
        if self.mu0 is not None and self.var0 is not None:
            mu0, var0 = float(self.mu0), float(self.var0)
        else:
            if X is None:
                raise ParameterError("fit needs pre-change data unless mu0 and var0 are given")
            mu0, var0 = empirical_moments(X)
            mu0 = mu0 if self.mu0 is None else float(self.mu0)
            var0 = var0 if self.var0 is None else float(self.var0)
        if (self.eta is None) == (self.eta_multiple is None):
            raise ParameterError("set exactly one of eta and eta_multiple")
        eta = self.eta if self.eta is not None else self.eta_multiple * mu0
        self.params_ = MeanChangeParams(mu0, var0, eta)
        alpha = check_alpha(self.alpha)
        if self.threshold == "first-order":
            self.threshold_ = mct_threshold(alpha, self.params_)
        elif self.threshold == "refined":
            self.threshold_ = refined_threshold(alpha, self.params_, "solve")
        elif self.threshold == "refined-approx":
            self.threshold_ = refined_threshold(alpha, self.params_, "approx")
        else:
            raise ParameterError(f"unknown threshold rule {self.threshold!r}")
        self.spec_ = MctLlr.from_params(self.params_)
        return self


class TiltedCusumDetector(_CusumEstimator):
    """Robust test built on the exponential tilt of the pre-change law.

    ``reference`` fixes the pre-change law; when it is ``None`` the
    empirical distribution of the data passed to ``fit`` is used.
    """

    def __init__(self, eta=None, alpha=0.01, reference=None):
        self.eta = eta
        self.alpha = alpha
        self.reference = reference

    def fit(self, X=None, y=None):
        if self.eta is None:
            raise ParameterError("eta is required")
        if isinstance(self.reference, BoundedDistribution):
            p0 = self.reference
        elif X is not None:
            p0 = EmpiricalDistribution(check_series(X, allow_empty=False))
        else:
            raise ParameterError("fit needs pre-change data or a reference distribution")
        self.lfd_: TiltedLfd = solve_lambda_star(p0, self.eta)
        self.threshold_ = cusum_threshold(self.alpha)
        self.spec_ = TiltedLlr(self.lfd_)
        return self


class CusumDetector(_CusumEstimator):
    """Page's CUSUM with a fully known pre- and post-change pair."""

    def __init__(self, pre=None, post=None, alpha=0.01):
        self.pre = pre
        self.post = post
        self.alpha = alpha

    def fit(self, X=None, y=None):
        if self.pre is None or self.post is None:
            raise ParameterError("both pre and post distributions are required")
        self.threshold_ = cusum_threshold(self.alpha)
        self.spec_ = ExactLlr(self.post, self.pre)
        return self
