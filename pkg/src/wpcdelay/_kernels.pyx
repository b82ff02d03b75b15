# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scalar kernels; same algorithms and signatures as _kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport (exp, expm1, log, log1p, sqrt, fabs, fmax, fmin,
                        isfinite, isinf, NAN, INFINITY)

cnp.import_array()

cdef double E = 2.718281828459045
cdef double INV_E = 0.36787944117144233
cdef double BRANCH_SLACK = 1e-12
cdef double V_FLOOR = -23.025850929940457  # log(1e-10)

cdef double[20] U_SERIES
cdef int _n
cdef double _fact = 1.0
for _n in range(1, 22):
    _fact *= _n
    if _n >= 2:
        U_SERIES[21 - _n] = (_n - 1) / _fact


cdef double c_w0(double x) noexcept nogil:
    cdef double w, p, l1, l2, ew, f, wp1, dw, scale
    cdef int i
    if x != x or x < -INV_E - BRANCH_SLACK:
        return NAN
    if x <= -INV_E:
        return -1.0
    if x == 0.0:
        return 0.0
    if isinf(x):
        return INFINITY
    if x < -0.25:
        p = sqrt(2.0 * (E * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    elif x < E:
        w = log1p(x)
    else:
        l1 = log(x)
        l2 = log(l1)
        w = l1 - l2 + l2 / l1
    scale = fabs(x)
    for i in range(50):
        ew = exp(w)
        f = w * ew - x
        if fabs(f) <= 1e-14 * scale:
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        if not isfinite(dw):
            break
        w -= dw
        if fabs(dw) <= 1e-16 * fabs(w + dw):
            break
    return w


cdef double c_u(double s) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    if s < 0.5:
        for i in range(20):
            acc = acc * s + U_SERIES[i]
        return acc * s * s
    return 1.0 + (s - 1.0) * exp(s)


cdef double c_log_u(double s) noexcept nogil:
    if s >= 30.0:
        return s + log(s - 1.0) + log1p(exp(-s) / (s - 1.0))
    return log(c_u(s))


cdef double c_log_expm1(double s) noexcept nogil:
    if s >= 30.0:
        return s + log1p(-exp(-s))
    return log(expm1(s))


cdef double c_harvest(double c) noexcept nogil:
    cdef double s, ds
    cdef int i
    if c != c or c < 0.0:
        return NAN
    if c == 0.0:
        return 0.0
    if c >= 0.25:
        return 1.0 + c_w0((c - 1.0) / E)
    s = sqrt(2.0 * c)
    for i in range(100):
        ds = (c_u(s) - c) / (s * exp(s))
        s -= ds
        if fabs(ds) <= 1e-16 * s:
            break
    return s


cdef inline double c_p4_g(double s, double lr) noexcept nogil:
    return log(s) + 2.0 * c_log_u(s) - c_log_expm1(s) - lr


cdef inline double c_p4_dg(double s) noexcept nogil:
    return 1.0 / s + 2.0 * s * exp(s - c_log_u(s)) + 1.0 / expm1(-s)


cdef double c_p4(double rho) noexcept nogil:
    cdef double lr, guess, hi, lo, s, g, cand, new
    cdef int i
    if not (rho > 0.0) or not isfinite(rho):
        return NAN
    lr = log(rho)
    if lr < log(0.5):
        guess = exp(0.25 * (lr + log(4.0)))
    else:
        guess = 1.0 + 0.5 * fmax(lr, 0.0)
    hi = fmax(2.0 * guess, 1.0)
    for i in range(80):
        if c_p4_g(hi, lr) > 0.0:
            break
        hi *= 2.0
    lo = 0.0
    s = fmin(guess, 0.5 * hi)
    for i in range(200):
        g = c_p4_g(s, lr)
        if g == 0.0:
            break
        if g < 0.0:
            lo = s
        else:
            hi = s
        cand = s - g / c_p4_dg(s)
        if cand > lo and cand < hi and isfinite(cand):
            new = cand
        elif lo > 0.0:
            new = 0.5 * (lo + hi)
        else:
            new = 0.25 * hi
        if fabs(new - s) <= 1e-15 * s or hi - lo <= 1e-16 * hi:
            s = new
            break
        s = new
    return s


cdef double c_slot(double r) noexcept nogil:
    cdef double y, h, dh, dy, new
    cdef int i
    if not (r > 0.0 and r < 1.0):
        return NAN
    y = 1.0 / (r * r) - 1.0
    if r > 0.5:
        y = fmin(y, 2.0 * (1.0 - r) / (2.0 * r - 1.0))
    for i in range(200):
        h = log1p(y) - r * y
        dh = 1.0 / (1.0 + y) - r
        if not (h < 0.0 and dh < 0.0):
            break
        dy = h / dh
        new = y - dy
        if not (new > 0.0):
            break
        y = new
        if fabs(dy) <= 1e-15 * y:
            break
    return y


# Per-row multiuser functions of v, omega = om_min * (1 + e^v).

cdef double c_p5_phi(const double[:] c, double om_min, double v) noexcept nogil:
    cdef double om = om_min * (1.0 + exp(v))
    cdef double s = 0.0, y
    cdef Py_ssize_t k
    for k in range(c.shape[0]):
        y = c_slot(1.0 / (c[k] * om))
        s += c[k] / y
    return s - 1.0


cdef double c_p6_d(const double[:] c, double om_min, double v, double theta) noexcept nogil:
    cdef double om = om_min * (1.0 + exp(v))
    cdef double s = 0.0, ds = 0.0, y, r, dy
    cdef Py_ssize_t k
    for k in range(c.shape[0]):
        r = 1.0 / (c[k] * om)
        y = c_slot(r)
        dy = r * y / (om * (r - 1.0 / (1.0 + y)))
        s += c[k] / y
        ds -= c[k] * dy / (y * y)
    return -(2.0 + (2.0 * om - theta / (s * s)) * ds / s)


cdef double c_eval(int which, const double[:] c, double om_min, double v, double theta) noexcept nogil:
    if which == 5:
        return c_p5_phi(c, om_min, v)
    return c_p6_d(c, om_min, v, theta)


cdef double c_solve_row(int which, const double[:] c, double theta) noexcept nogil:
    """Bracket from v = 0 in unit steps then Illinois false position."""
    cdef double om_min = 0.0, lo, hi, flo, fhi, f0, xn, fn, a, b, fa, fb
    cdef Py_ssize_t k
    cdef int i, side = 0
    for k in range(c.shape[0]):
        if not (c[k] > 0.0):
            return NAN
        om_min = fmax(om_min, 1.0 / c[k])
    f0 = c_eval(which, c, om_min, 0.0, theta)
    if f0 == 0.0:
        return om_min * 2.0
    lo = 0.0
    hi = 0.0
    flo = f0
    fhi = f0
    if f0 > 0.0:
        for i in range(200):
            lo = hi
            flo = fhi
            hi = hi + 1.0
            fhi = c_eval(which, c, om_min, hi, theta)
            if not (fhi > 0.0):
                break
    elif f0 < 0.0:
        for i in range(200):
            hi = lo
            fhi = flo
            lo = fmax(lo - 2.0, V_FLOOR)
            flo = c_eval(which, c, om_min, lo, theta)
            if not (flo < 0.0) or lo <= V_FLOOR:
                break
    if not (flo > 0.0 and fhi < 0.0):
        return NAN
    a = lo
    b = hi
    fa = flo
    fb = fhi
    xn = a
    for i in range(300):
        xn = (a * fb - b * fa) / (fb - fa)
        if not isfinite(xn) or xn <= fmin(a, b) or xn >= fmax(a, b):
            xn = 0.5 * (a + b)
        fn = c_eval(which, c, om_min, xn, theta)
        if not isfinite(fn):
            return NAN
        if fn > 0.0:
            a = xn
            fa = fn
            if side == 1:
                fb *= 0.5
            side = 1
        else:
            b = xn
            fb = fn
            if side == -1:
                fa *= 0.5
            side = -1
        if fn == 0.0 or fabs(b - a) <= 1e-14 * (1.0 + fabs(xn)):
            break
    return om_min * (1.0 + exp(xn))


def _as_1d(x):
    return np.ascontiguousarray(np.array(x, dtype=np.float64, ndmin=1).ravel())


cdef object _map(double (*fn)(double) noexcept nogil, x):
    cdef double[:] xv = _as_1d(x)
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[:] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(xv.shape[0]):
            ov[i] = fn(xv[i])
    return out.reshape(np.shape(x) or (1,))


def lambert_w0(x):
    return _map(c_w0, x)


def u_of_s(s):
    return _map(c_u, s)


def log_u_of_s(s):
    return _map(c_log_u, s)


def log_expm1(s):
    return _map(c_log_expm1, s)


def harvest_exponent(c):
    return _map(c_harvest, c)


def p4_exponent(rho):
    return _map(c_p4, rho)


def slot_ratio(r):
    return _map(c_slot, r)


def _rows(int which, c, double theta):
    cdef double[:, :] cv = np.ascontiguousarray(np.atleast_2d(np.asarray(c, dtype=np.float64)))
    out = np.empty(cv.shape[0], dtype=np.float64)
    cdef double[:] ov = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(cv.shape[0]):
            ov[i] = c_solve_row(which, cv[i], theta)
    return out


def p5_omega(c):
    return _rows(5, c, 0.0)


def p6_omega(c, theta):
    return _rows(6, c, theta)
