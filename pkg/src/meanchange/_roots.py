"""Bracketed scalar root finding."""

from __future__ import annotations

from typing import Callable

from .exceptions import NumericError


def bisect(f: Callable[[float], float], lo: float, hi: float, *, xtol: float = 1e-12,
           maxiter: int = 400) -> float:
    """Root of ``f`` in ``[lo, hi]`` by bisection.

    ``f(lo)`` and ``f(hi)`` must have opposite signs (zero counts as either).
    Stops once the bracket is narrower than ``xtol`` or cannot be split
    further in floating point.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NumericError(f"root not bracketed: f({lo:g})={flo:g}, f({hi:g})={fhi:g}")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid in (lo, hi):
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    raise NumericError(f"bisection did not converge in {maxiter} iterations (bracket [{lo!r}, {hi!r}])")


def expand_upper(f: Callable[[float], float], lo: float, hi: float, *, limit: float,
                 factor: float = 2.0) -> tuple[float, float]:
    """Grow ``hi`` geometrically until ``f(hi)`` changes sign relative to ``f(lo)``.

    Returns the tightened bracket ``(lo, hi)``; raises :class:`NumericError`
    once ``hi`` would exceed ``limit``.
    """
    positive = f(lo) > 0
    while (f(hi) > 0) == positive:
        if hi >= limit:
            raise NumericError(f"no sign change of f on [{lo:g}, {limit:g}]")
        lo, hi = hi, min(hi * factor, limit)
    return lo, hi
