"""Independent reference computations used only by the tests.

Nothing here imports wpcdelay's kernels; the point is to check the closed
forms and reduced solves against brute force.
"""

import math

import numpy as np
from scipy import integrate, optimize, special

LN2 = math.log(2.0)


def bisect(f, lo, hi, iters=200):
    """Plain bisection for a sign change of f on [lo, hi]."""
    flo = f(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo <= 1e-15 * abs(hi):
            break
    return 0.5 * (lo + hi)


def golden(f, lo, hi, iters=200):
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
        if b - a <= 1e-13 * (abs(a) + abs(b)):
            break
    x = 0.5 * (a + b)
    return x, f(x)


def rate(B, t1, t2, beta, c):
    return B * t2 * math.log2(1.0 + beta * c * t1 / t2)


def ul_time(B, R0, c_eff_t1):
    """t2 with B t2 log2(1 + E/t2) = R0 for E = beta c t1; None if infeasible."""
    if B * c_eff_t1 / LN2 <= R0 * (1 + 1e-12):
        return None
    f = lambda lt2: B * math.exp(lt2) * math.log2(1.0 + c_eff_t1 / math.exp(lt2)) - R0
    lo, hi = -60.0, 60.0
    return math.exp(bisect(f, lo, hi))


def p1_oracle(B, R0, c):
    """Equal slots: t with B t log2(1 + c) = R0, found by bisection on t."""
    f = lambda t: B * t * math.log2(1.0 + c) - R0
    hi = 1.0
    while f(hi) < 0:
        hi *= 2
    return bisect(f, 0.0, hi)


def p3_oracle(B, R0, c):
    """min t1 + t2 over t1 with t2 from the rate equality (golden section)."""
    t1_min = R0 * LN2 / (B * c)

    def obj(lt1):
        t1 = t1_min * (1.0 + math.exp(lt1))
        return t1 + ul_time(B, R0, c * t1)

    x, fx = golden(obj, -25.0, 10.0)
    return fx


def p4_objective(B, R0, c, mu, beta):
    """Per-realisation Lagrangian D(beta c) + mu beta, D the best P3 delay."""
    return p3_closed(B, R0, beta * c) + mu * beta


def p3_closed(B, R0, c):
    s = 1.0 + special.lambertw((c - 1.0) / math.e).real
    t2 = R0 * LN2 / (B * s)
    return t2 + t2 * math.expm1(s) / c


def gamma_pdf(x, m):
    return np.exp(m * np.log(m) - special.gammaln(m) + (m - 1) * np.log(x) - m * x)


def expect_scipy(g, m):
    """E{g(h)} by scipy adaptive quadrature, split at 1."""
    f = lambda x: g(x) * gamma_pdf(x, m)
    a = integrate.quad(f, 0, 1, limit=500, epsabs=1e-13, epsrel=1e-12)[0]
    b = integrate.quad(f, 1, np.inf, limit=500, epsabs=1e-13, epsrel=1e-12)[0]
    return a + b


def p5_oracle(B, R0, cs):
    """Outer bisection on t1 of sum_k t2_k(t1) - t1, inner bisection per node."""
    t1_min = max(R0 * LN2 / (B * c) for c in cs)

    def g(lt):
        t1 = t1_min * (1.0 + math.exp(lt))
        return sum(ul_time(B, R0, c * t1) for c in cs) - t1

    lt = bisect(g, -25.0, 30.0)
    return t1_min * (1.0 + math.exp(lt))


def brent_root(f, lo, hi):
    return optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
