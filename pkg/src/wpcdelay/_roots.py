"""Scalar bracketing and Illinois root finding for monotone maps."""

import math

from .errors import BracketError, RootNotFoundError


def bracket_decreasing_log(f, x0=1.0, max_steps=60):
    """Find lo < hi (x > 0) with f(lo) > 0 > f(hi) for a decreasing f.

    Starts at ``x0`` and doubles or halves. Returns (lo, hi, f_lo, f_hi); if
    f hits zero exactly the same point is returned for both ends.
    """
    x = float(x0)
    fx = f(x)
    if fx == 0.0:
        return x, x, fx, fx
    step = 2.0 if fx > 0 else 0.5
    for _ in range(max_steps):
        xn = x * step
        fn = f(xn)
        if fn == 0.0:
            return xn, xn, fn, fn
        if (fn > 0) != (fx > 0):
            if step > 1:
                return x, xn, fx, fn
            return xn, x, fn, fx
        x, fx = xn, fn
    raise BracketError(f"no sign change within {max_steps} doublings from {x0!r}")


def illinois_log(f, lo, hi, flo, fhi, ftol, xtol=1e-13, maxiter=200):
    """Root of a decreasing f on [lo, hi] (f(lo) > 0 > f(hi)), iterating on log x.

    Stops once |f| <= ftol or the log-bracket is narrower than xtol.
    Returns (x, f(x), iterations).
    """
    if lo == hi:
        return lo, flo, 0
    a, b = math.log(lo), math.log(hi)
    fa, fb = flo, fhi
    side = 0
    x, fx = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    for it in range(1, maxiter + 1):
        v = (a * fb - b * fa) / (fb - fa)
        if not (min(a, b) < v < max(a, b)):
            v = 0.5 * (a + b)
        x = math.exp(v)
        fx = f(x)
        if abs(fx) <= ftol or fx == 0.0:
            return x, fx, it
        if fx > 0:
            a, fa = v, fx
            if side == 1:
                fb *= 0.5
            side = 1
        else:
            b, fb = v, fx
            if side == -1:
                fa *= 0.5
            side = -1
        if abs(b - a) <= xtol:
            return x, fx, it
    raise RootNotFoundError(f"no convergence after {maxiter} iterations, residual {fx:.3g}")
