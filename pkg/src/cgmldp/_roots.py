"""Root finding for monotone functions whose endpoint values may be infinite."""

from __future__ import annotations

import math
from typing import Callable

from scipy.optimize import brentq

XTOL = 1e-15
RTOL = 4.0 * 2.220446049250313e-16


def increasing_root(f: Callable[[float], float], lo: float, hi: float,
                    f_lo: float | None = None, f_hi: float | None = None,
                    xtol: float = XTOL) -> float:
    """Zero of a nondecreasing ``f`` on ``[lo, hi]`` with ``f(lo) < 0 < f(hi)``.

    Infinite endpoint values are allowed. Bisection on the sign runs until both
    bracket values are finite, then Brent's method finishes the job.
    """
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    while not (math.isfinite(f_lo) and math.isfinite(f_hi)):
        if hi - lo <= xtol * max(1.0, abs(lo)):
            return 0.5 * (lo + hi)
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if f_mid < 0.0:
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    return brentq(f, lo, hi, xtol=xtol, rtol=RTOL, maxiter=200)


def predicate_threshold(pred: Callable[[float], bool], lo: float, hi: float,
                        xtol: float = 1e-13) -> float:
    """Smallest ``x`` in ``[lo, hi]`` with ``pred(x)`` true, for monotone ``pred``.

    Returns ``hi`` when the predicate fails on the whole open interval and
    ``lo`` when it already holds there.
    """
    if pred(lo):
        return lo
    if not pred(hi):
        return hi
    while hi - lo > xtol * max(1.0, abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi
