"""Bracketed scalar root finding: Newton (or secant) steps safeguarded by bisection."""

from __future__ import annotations

import math
from typing import Callable, Optional

from .errors import NoSignChange


def newton_bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    fprime: Optional[Callable[[float], float]] = None,
    *,
    xtol: float = 0.0,
    ftol: float = 0.0,
    maxiter: int = 200,
    f_lo: Optional[float] = None,
    f_hi: Optional[float] = None,
) -> tuple[float, float, float]:
    """Find a root of ``f`` inside the sign-changing bracket ``[lo, hi]``.

    Newton steps are used when ``fprime`` is given, secant steps otherwise; any
    step that leaves the current bracket, or fails to halve it every two
    iterations, is replaced by bisection. Iteration stops once ``|f| <= ftol``
    or the bracket is narrower than ``xtol`` (or collapses to adjacent floats).

    Returns ``(x, a, b)``: the best estimate and the final bracket, which still
    contains a sign change of ``f``.
    """
    if lo > hi:
        lo, hi, f_lo, f_hi = hi, lo, f_hi, f_lo
    a, b = lo, hi
    fa = f(a) if f_lo is None else f_lo
    fb = f(b) if f_hi is None else f_hi
    if fa == 0.0:
        return a, a, a
    if fb == 0.0:
        return b, b, b
    if (fa > 0) == (fb > 0):
        raise NoSignChange(f"f({a!r})={fa!r} and f({b!r})={fb!r} have the same sign")

    # start from the endpoint with the smaller residual
    x, fx = (a, fa) if abs(fa) < abs(fb) else (b, fb)
    x_prev, f_prev = (b, fb) if x == a else (a, fa)
    width_before = b - a
    for it in range(maxiter):
        if abs(fx) <= ftol:
            return x, a, b
        if b - a <= xtol or b - a <= 4.0 * math.ulp(max(abs(a), abs(b))):
            break

        step_ok = False
        if fprime is not None:
            d = fprime(x)
            if d != 0.0 and math.isfinite(d):
                cand = x - fx / d
                step_ok = True
        elif fx != f_prev:
            cand = x - fx * (x - x_prev) / (fx - f_prev)
            step_ok = True
        if not step_ok or not (a < cand < b) or not math.isfinite(cand):
            cand = 0.5 * (a + b)
        if it % 2 == 1:
            if b - a > 0.5 * width_before:
                cand = 0.5 * (a + b)
            width_before = b - a

        x_prev, f_prev = x, fx
        x, fx = cand, f(cand)
        if fx == 0.0:
            return x, x, x
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
    # bracket exhausted: report the endpoint with the smaller residual
    if abs(fa) <= abs(fb):
        return a, a, b
    return b, a, b
