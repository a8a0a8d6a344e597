"""Scalar root bracketing by plain bisection."""

from __future__ import annotations

from typing import Callable


def bisect(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of f on [lo, hi] by bisection, to absolute width xtol.

    f(lo) and f(hi) must have opposite signs (zero endpoints are returned
    directly). Deterministic and derivative-free; 200 halvings are far
    more than double precision can use.
    """
    if hi <= lo:
        raise ValueError("need lo < hi")
    f_lo = f(lo)
    if f_lo == 0.0:
        return lo
    f_hi = f(hi)
    if f_hi == 0.0:
        return hi
    if (f_lo < 0.0) == (f_hi < 0.0):
        raise ValueError(f"no sign change on [{lo}, {hi}]: f={f_lo:.3e} .. {f_hi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo <= xtol or mid == lo or mid == hi:
            return mid
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    return 0.5 * (lo + hi)
