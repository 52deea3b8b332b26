"""Time-series ingestion and the mean-change monitoring pipeline.

Preprocessing always runs in this order:

1. divide raw values by the population divisor (if any),
2. clip to [0, 1] when requested, otherwise reject out-of-range values,
3. trailing moving average of width ``smooth``,
4. estimate the pre-change mean and variance on ``window``,
5. run the mean-change statistic over everything after the window.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import mct_threshold, refined_threshold
from .detectors import MctLlr, trajectory
from .distributions import empirical_moments
from .exceptions import (
    ConfigurationError,
    DataError,
    InsufficientDataError,
    NoTiltNeededError,
    ParameterError,
)
from .lfd import MeanChangeParams
from .validation import check_alpha, check_count, check_series

__all__ = [
    "SeriesRecord",
    "MonitorConfig",
    "MonitorReport",
    "ingest_csv",
    "moving_average",
    "fit_prechange",
    "preprocess",
    "monitor",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SeriesRecord:
    t: int | str
    value: float


def _column_index(header: list[str], spec: str | int, what: str) -> int:
    if isinstance(spec, int) or (isinstance(spec, str) and spec.isdigit() and spec not in header):
        idx = int(spec)
        if not 0 <= idx < len(header):
            raise DataError(f"{what} column index {idx} out of range (header has {len(header)} columns)")
        return idx
    try:
        return header.index(spec)
    except ValueError:
        raise DataError(f"{what} column {spec!r} not in header {header}") from None


def ingest_csv(path, value_col: str | int = 1, *, date_col: str | int | None = None,
               population: float | None = None) -> tuple[list[SeriesRecord], int]:
    """Read a headed CSV into records.

    Rows whose value is missing or unparsable are dropped; the number dropped
    is returned alongside the records and logged. Non-finite values and
    non-increasing dates are errors. Without ``date_col`` each record is
    labelled by its 0-based data-row ordinal.
    """
    if population is not None and not (population > 0 and math.isfinite(population)):
        raise ParameterError(f"population divisor must be positive, got {population!r}")
    records: list[SeriesRecord] = []
    dropped = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader, None)
            if header is None:
                raise DataError(f"{path}: empty series (no header row)")
            vi = _column_index(header, value_col, "value")
            di = None if date_col is None else _column_index(header, date_col, "date")
            for ordinal, row in enumerate(reader):
                if not row or all(not c.strip() for c in row):
                    continue
                try:
                    raw = row[vi].strip()
                    value = float(raw)
                    label = ordinal if di is None else row[di].strip()
                except (IndexError, ValueError):
                    dropped += 1
                    continue
                if not math.isfinite(value):
                    raise DataError(f"{path}, line {reader.line_num}: non-finite value {raw!r}")
                if di is not None and (not label or (records and label <= records[-1].t)):
                    raise DataError(f"{path}, line {reader.line_num}: dates must be strictly increasing")
                if population is not None:
                    value /= population
                records.append(SeriesRecord(label, value))
        except csv.Error as exc:
            raise DataError(f"{path}, line {reader.line_num}: {exc}") from exc
    if not records:
        raise DataError(f"{path}: empty series")
    if dropped:
        log.warning("%s: dropped %d malformed row(s)", path, dropped)
    return records, dropped


def moving_average(xs, k: int) -> np.ndarray:
    """Trailing means of width ``k``: element ``i`` averages ``xs[i:i+k]``."""
    k = check_count(k, name="k")
    arr = np.asarray(xs, dtype=float)
    if arr.size < k:
        raise InsufficientDataError(f"series of length {arr.size} is shorter than the window k={k}")
    c = np.concatenate(([0.0], np.cumsum(arr)))
    return (c[k:] - c[:-k]) / k if k > 1 else arr.copy()


def fit_prechange(xs, window: tuple[int, int]) -> tuple[float, float]:
    """Mean and unbiased variance of ``xs[start:end]``."""
    start, end = window
    arr = np.asarray(xs, dtype=float)
    if not (0 <= start < end <= arr.size):
        raise ParameterError(f"window {window} outside series of length {arr.size}")
    return empirical_moments(arr[start:end])


@dataclass(frozen=True)
class MonitorConfig:
    """Settings of the monitoring pipeline.

    Exactly one of ``eta`` (absolute mean threshold) and ``eta_multiple``
    (threshold as a multiple of the estimated pre-change mean) is set.
    ``window`` is a half-open ``[start, end)`` range of positions in the
    smoothed series.
    """

    window: tuple[int, int]
    alpha: float = 0.01
    eta: float | None = None
    eta_multiple: float | None = None
    smooth: int = 1
    population: float | None = None
    clip: bool = False
    refined: bool = False

    def __post_init__(self):
        start, end = self.window
        if end - start < 2:
            raise ParameterError(f"pre-change window needs at least 2 points, got {self.window}")
        check_alpha(self.alpha)
        check_count(self.smooth, name="smooth")
        if (self.eta is None) == (self.eta_multiple is None):
            raise ParameterError("set exactly one of eta and eta_multiple")
        if self.eta_multiple is not None and not self.eta_multiple > 1:
            raise ParameterError(f"eta_multiple must exceed 1, got {self.eta_multiple!r}")

    def resolve_eta(self, mu0: float) -> float:
        return self.eta if self.eta is not None else self.eta_multiple * mu0


@dataclass
class MonitorReport:
    labels: list
    x: np.ndarray
    statistic: np.ndarray
    threshold: float
    eta: float
    mu0: float
    var0: float
    alarm_times: list = field(default_factory=list)

    @property
    def first_alarm(self):
        return self.alarm_times[0] if self.alarm_times else None

    @property
    def alarmed(self) -> np.ndarray:
        """Latched alarm flag per monitored step."""
        return np.maximum.accumulate(self.statistic >= self.threshold)


def preprocess(values, config: MonitorConfig) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DataError("series contains non-finite values")
    if config.population is not None:
        arr = arr / config.population
    if config.clip:
        arr = np.clip(arr, 0.0, 1.0)
    else:
        arr = check_series(arr, name="series (after population divisor)")
    return moving_average(arr, config.smooth)


def monitor(values, config: MonitorConfig, labels=None) -> MonitorReport:
    """Run the full pipeline on raw ``values``.

    ``labels`` name the raw observations (defaults to their positions); a
    smoothed point carries the label of the last observation it averages.
    The statistic trajectory covers every step after the pre-change window
    and keeps evolving past the first alarm.
    """
    xs = preprocess(values, config)
    if labels is None:
        labels = list(range(len(values)))
    labels = list(labels)[config.smooth - 1:]
    mu0, var0 = fit_prechange(xs, config.window)
    eta = config.resolve_eta(mu0)
    if eta <= mu0:
        raise ConfigurationError(f"mean-threshold must exceed pre-change mean (eta={eta:g}, mu0={mu0:g})")
    try:
        params = MeanChangeParams(mu0, var0, eta)
    except NoTiltNeededError as exc:
        raise ConfigurationError(str(exc)) from exc
    b = refined_threshold(config.alpha, params) if config.refined else mct_threshold(config.alpha, params)
    end = config.window[1]
    post = xs[end:]
    stat = trajectory(MctLlr.from_params(params), post)
    above = stat >= b
    ups = np.nonzero(above & ~np.concatenate(([False], above[:-1])))[0]
    return MonitorReport(
        labels=labels[end:],
        x=post,
        statistic=stat,
        threshold=b,
        eta=eta,
        mu0=mu0,
        var0=var0,
        alarm_times=[labels[end + i] for i in ups],
    )
