"""Monte Carlo estimation of detection delay and mean time to false alarm.

Trials are independent: trial ``i`` draws from ``RngStream(seed, offset + i)``,
so results do not depend on how trials are grouped or distributed over
workers. Within a group the trials advance in lockstep over chunks of
observations, and each chunk is reduced with the reflected-walk identity

    stat(t) = W(t) - min(0, min_{s<=t} W(s)),   W(t) = stat(t0) + sum of increments

which is the CUSUM recursion written without a Python-level loop.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .calibration import cusum_threshold, refined_threshold
from .distributions import BoundedDistribution, RngStream
from .detectors import ExactLlr, Llr, MctLlr, TiltedLlr
from .exceptions import EstimationError, MeanChangeError, ParameterError
from .lfd import MeanChangeParams, solve_lambda_star
from .validation import check_alpha, check_count, check_positive

__all__ = [
    "TrialResult",
    "WaddEstimate",
    "MtfaEstimate",
    "OcRow",
    "OcTable",
    "DETECTOR_KINDS",
    "OC_HEADER",
    "simulate_stopping_times",
    "estimate_wadd",
    "estimate_mtfa",
    "estimate_crossing_probability",
    "oc_sweep",
]

DETECTOR_KINDS = ("cusum-exact", "robust-tilted", "mct")
OC_HEADER = ("alpha", "detector", "threshold", "wadd", "wadd_se", "mtfa", "mtfa_se", "trials", "censored_frac")

# Streams for pre-change (false alarm) runs live in a separate id range.
MTFA_STREAM_OFFSET = 1 << 40

_GROUP = 256
_CHUNKS = (256, 1024, 4096, 16384)


@dataclass(frozen=True)
class TrialResult:
    stopping_time: int
    censored: bool


def _chunk_size(step: int) -> int:
    return _CHUNKS[min(step, len(_CHUNKS) - 1)]


def _draw(law, streams, active, size):
    return np.stack([law.sample(streams[i], size) for i in active])


def _stopping_group(law, spec, b, ids, seed, cap):
    streams = [RngStream(seed, int(i)) for i in ids]
    n = len(ids)
    stat = np.zeros(n)
    tau = np.full(n, cap, dtype=np.int64)
    censored = np.ones(n, dtype=bool)
    active = np.arange(n)
    t, step = 0, 0
    while active.size and t < cap:
        size = min(_chunk_size(step), cap - t)
        w = stat[active, None] + np.cumsum(spec.increments(_draw(law, streams, active, size)), axis=1)
        path = w - np.minimum(0.0, np.minimum.accumulate(w, axis=1))
        hit = path >= b
        crossed = hit.any(axis=1)
        first = hit.argmax(axis=1)
        done = active[crossed]
        tau[done] = t + first[crossed] + 1
        censored[done] = False
        stat[active] = path[:, -1]
        active = active[~crossed]
        t += size
        step += 1
    return tau, censored


def _run_groups(kernel, args, ids, n_jobs):
    groups = [ids[i:i + _GROUP] for i in range(0, len(ids), _GROUP)]
    if n_jobs == 1 or len(groups) == 1:
        parts = [kernel(*args[:3], g, *args[3:]) for g in groups]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            futures = [pool.submit(kernel, *args[:3], g, *args[3:]) for g in groups]
            parts = [f.result() for f in futures]
    # Groups are contiguous in trial index, so concatenation keeps trial order.
    return tuple(np.concatenate(col) for col in zip(*parts))


def simulate_stopping_times(law: BoundedDistribution, spec: Llr, b: float, trials: int, cap: int,
                            seed: int, *, stream_offset: int = 0, n_jobs: int = 1):
    """Stopping times of ``trials`` independent runs started at zero.

    Returns ``(tau, censored)`` arrays ordered by trial index; censored runs
    report ``tau == cap``.
    """
    check_positive(b, name="threshold")
    trials = check_count(trials, name="trials")
    cap = check_count(cap, name="cap")
    ids = np.arange(stream_offset, stream_offset + trials, dtype=np.uint64)
    return _run_groups(_stopping_group, (law, spec, b, seed, cap), ids, n_jobs)


def trial_results(tau, censored) -> list[TrialResult]:
    return [TrialResult(int(t), bool(c)) for t, c in zip(tau, censored)]


@dataclass(frozen=True)
class WaddEstimate:
    mean: float
    se: float
    censored_frac: float
    n: int


@dataclass(frozen=True)
class MtfaEstimate:
    mean: float
    se: float
    censored_frac: float
    lower_bound: bool
    n: int


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    se = float(x.std(ddof=1) / math.sqrt(x.size)) if x.size > 1 else float("nan")
    return float(x.mean()), se


def estimate_wadd(p1: BoundedDistribution, spec: Llr, b: float, trials: int = 2000, cap: int = 10 ** 5,
                  seed: int = 0, *, n_jobs: int = 1) -> WaddEstimate:
    """Worst-case average detection delay, simulated with the change at time zero.

    The recursive statistics are smallest (zero) at a change point that
    coincides with the start, so a run on post-change data from ``t = 1``
    realises the worst case. Censored runs are excluded from the mean and
    reported through ``censored_frac``.
    """
    tau, cens = simulate_stopping_times(p1, spec, b, trials, cap, seed, n_jobs=n_jobs)
    if cens.all():
        raise EstimationError(f"all {trials} delay trials censored at cap={cap}; increase the cap")
    frac = float(cens.mean())
    if frac > 0.01:
        warnings.warn(f"{frac:.1%} of delay trials censored at cap={cap}; the delay estimate is biased low",
                      RuntimeWarning, stacklevel=2)
    mean, se = _mean_se(tau[~cens])
    return WaddEstimate(mean, se, frac, int((~cens).sum()))


def estimate_mtfa(p0: BoundedDistribution, spec: Llr, b: float, trials: int = 2000, cap: int = 10 ** 6,
                  seed: int = 0, *, n_jobs: int = 1) -> MtfaEstimate:
    """Mean time to false alarm under the pre-change law.

    Censored runs count as ``cap``, which makes the estimate a lower bound
    (flagged by ``lower_bound``) whenever any run was censored.
    """
    tau, cens = simulate_stopping_times(p0, spec, b, trials, cap, seed,
                                        stream_offset=MTFA_STREAM_OFFSET, n_jobs=n_jobs)
    mean, se = _mean_se(tau)
    return MtfaEstimate(mean, se, float(cens.mean()), bool(cens.any()), trials)


def _crossing_group(law, spec, b, ids, seed, cap):
    # Walk S_t (unreflected) and the CUSUM stat = S_t - min(0, min S) side by side.
    # Since stat < b + max_increment at the stopping time, S_tau >= b is
    # impossible once min S <= -max_increment, which ends the trial early.
    floor = -spec.max_increment
    streams = [RngStream(seed, int(i)) for i in ids]
    n = len(ids)
    s_last = np.zeros(n)
    s_min = np.zeros(n)
    success = np.zeros(n, dtype=bool)
    censored = np.ones(n, dtype=bool)
    active = np.arange(n)
    t, step = 0, 0
    while active.size and t < cap:
        size = min(_chunk_size(step), cap - t)
        s = s_last[active, None] + np.cumsum(spec.increments(_draw(law, streams, active, size)), axis=1)
        run_min = np.minimum(s_min[active, None], np.minimum.accumulate(s, axis=1))
        stat = s - np.minimum(0.0, run_min)
        stop = (stat >= b) | (run_min <= floor)
        decided = stop.any(axis=1)
        first = stop.argmax(axis=1)
        rows = np.nonzero(decided)[0]
        idx = active[rows]
        success[idx] = s[rows, first[rows]] >= b
        censored[idx] = False
        s_last[active] = s[:, -1]
        s_min[active] = run_min[:, -1]
        active = active[~decided]
        t += size
        step += 1
    return success, censored


def estimate_crossing_probability(p0: BoundedDistribution, params: MeanChangeParams, b: float,
                                  trials: int = 10 ** 4, cap: int = 10 ** 6, seed: int = 0,
                                  *, n_jobs: int = 1) -> tuple[float, float, float]:
    """Monte Carlo estimate of ``P0{S_tau >= b}`` for the mean-change test.

    ``S`` is the unreflected sum of ``x - (mu0 + eta) / 2`` and ``tau`` the
    stopping time of the mean-change statistic at threshold ``b``. Returns
    ``(estimate, standard_error, censored_fraction)``; censored runs count as
    failures.
    """
    check_positive(b, name="threshold")
    trials = check_count(trials, name="trials")
    cap = check_count(cap, name="cap")
    spec = MctLlr.from_params(params)
    ids = np.arange(trials, dtype=np.uint64)
    success, cens = _run_groups(_crossing_group, (p0, spec, b, seed, cap), ids, n_jobs)
    p = float(success.mean())
    return p, math.sqrt(p * (1.0 - p) / trials), float(cens.mean())


@dataclass
class OcRow:
    alpha: float
    detector: str
    threshold: float
    wadd: float
    wadd_se: float
    mtfa: float
    mtfa_se: float
    trials: int
    censored_frac: float
    mtfa_lower_bound: bool = False
    wadd_censored_frac: float = 0.0
    error: str | None = None

    def values(self) -> tuple:
        return tuple(getattr(self, k) for k in OC_HEADER)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".6g")


@dataclass
class OcTable:
    """Operating-characteristic rows ``(alpha, detector) -> (delay, time to false alarm)``."""

    rows: list[OcRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def to_records(self) -> list[dict]:
        return [{k: (_fmt(v) if not isinstance(v, str) else v) for k, v in zip(OC_HEADER, r.values())}
                for r in self.rows]

    def to_csv(self) -> str:
        lines = [",".join(OC_HEADER)]
        lines += [",".join(_fmt(v) for v in r.values()) for r in self.rows]
        return "\n".join(lines) + "\n"

    def select(self, detector: str) -> list[OcRow]:
        return [r for r in self.rows if r.detector == detector]


def build_detector(kind: str, p0: BoundedDistribution, p1: BoundedDistribution | None, eta: float,
                   alpha: float) -> tuple[Llr, float]:
    """Detector increment and its calibrated threshold for one sweep row."""
    if kind == "cusum-exact":
        if p1 is None:
            raise ParameterError("cusum-exact needs the post-change distribution")
        return ExactLlr(p1, p0), cusum_threshold(alpha)
    if kind == "robust-tilted":
        return TiltedLlr(solve_lambda_star(p0, eta)), cusum_threshold(alpha)
    if kind == "mct":
        params = MeanChangeParams.from_distribution(p0, eta)
        return MctLlr.from_params(params), refined_threshold(alpha, params, "solve")
    raise ParameterError(f"unknown detector kind {kind!r}; expected one of {DETECTOR_KINDS}")


def oc_sweep(p0: BoundedDistribution, p1: BoundedDistribution, alphas, kinds=DETECTOR_KINDS, *,
             eta: float, trials: int = 2000, wadd_cap: int = 10 ** 5, mtfa_cap: int = 10 ** 6,
             seed: int = 0, n_jobs: int = 1, estimate_far: bool = True) -> OcTable:
    """Delay and false-alarm estimates for every ``(alpha, kind)`` pair.

    Thresholds: ``|ln alpha|`` for cusum-exact and robust-tilted, the solved
    refined threshold for mct. All rows share random streams (common random
    numbers), so differences between detectors are estimated with less noise.
    A failing row is kept with NaNs and its error message; the sweep goes on.
    """
    alphas = sorted({check_alpha(a) for a in alphas}, reverse=True)
    if not alphas:
        raise ParameterError("alpha list is empty")
    table = OcTable()
    nan = float("nan")
    for alpha in alphas:
        for kind in kinds:
            row = OcRow(alpha, kind, nan, nan, nan, nan, nan, trials, nan)
            try:
                spec, b = build_detector(kind, p0, p1, eta, alpha)
                row.threshold = b
                w = estimate_wadd(p1, spec, b, trials, wadd_cap, seed, n_jobs=n_jobs)
                row.wadd, row.wadd_se, row.wadd_censored_frac = w.mean, w.se, w.censored_frac
                if estimate_far:
                    m = estimate_mtfa(p0, spec, b, trials, mtfa_cap, seed, n_jobs=n_jobs)
                    row.mtfa, row.mtfa_se = m.mean, m.se
                    row.censored_frac, row.mtfa_lower_bound = m.censored_frac, m.lower_bound
            except MeanChangeError as exc:
                row.error = str(exc)
            table.rows.append(row)
    return table
