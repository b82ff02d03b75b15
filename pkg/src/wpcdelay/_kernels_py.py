"""Pure numpy implementation of the scalar kernels.

Every function here mirrors one in ``_kernels.pyx`` with the same signature
and the same algorithm, vectorised over the leading array axis. Entries where
a kernel has no valid answer come back as NaN; the public wrappers turn those
into exceptions.
"""

import numpy as np

E = np.e
INV_E = np.exp(-1.0)
BRANCH_SLACK = 1e-12

# (n - 1) / n! for n = 2..21, highest power first for Horner.
_U_SERIES = np.array([(n - 1) / np.prod(np.arange(1, n + 1, dtype=float))
                      for n in range(21, 1, -1)])


def lambert_w0(x):
    x = np.array(x, dtype=float, ndmin=1)
    w = np.full_like(x, np.nan)
    ok = x >= -INV_E - BRANCH_SLACK
    branch = ok & (x <= -INV_E)
    w[branch] = -1.0
    zero = x == 0.0
    w[zero] = 0.0
    big = ok & np.isinf(x)
    w[big] = np.inf
    work = ok & ~branch & ~zero & ~big
    if not work.any():
        return w
    xv = x[work]
    wv = np.empty_like(xv)
    near = xv < -0.25
    p = np.sqrt(2.0 * (E * xv[near] + 1.0))
    wv[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    mid = ~near & (xv < E)
    wv[mid] = np.log1p(xv[mid])
    far = ~near & ~mid
    l1 = np.log(xv[far])
    l2 = np.log(l1)
    wv[far] = l1 - l2 + l2 / l1
    active = np.ones(xv.shape, dtype=bool)
    scale = np.abs(xv)  # relative: keeps full precision for tiny |x|
    for _ in range(50):
        if not active.any():
            break
        wa = wv[active]
        xa = xv[active]
        ew = np.exp(wa)
        f = wa * ew - xa
        done = np.abs(f) <= 1e-14 * scale[active]
        wp1 = wa + 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            dw = f / (ew * wp1 - (wa + 2.0) * f / (2.0 * wp1))
        dw = np.where(done | (wp1 == 0.0) | ~np.isfinite(dw), 0.0, dw)
        wv[active] = wa - dw
        still = ~done & (np.abs(dw) > 1e-16 * np.abs(wa))
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    w[work] = wv
    return w


def u_of_s(s):
    """1 + (s - 1) e^s, accurate near s = 0 where it behaves like s^2 / 2."""
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    small = s < 0.5
    ss = s[small]
    acc = np.zeros_like(ss)
    for coef in _U_SERIES:
        acc = acc * ss + coef
    out[small] = acc * ss * ss
    sb = s[~small]
    with np.errstate(over="ignore"):
        out[~small] = 1.0 + (sb - 1.0) * np.exp(sb)
    return out


def log_u_of_s(s):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    large = s >= 30.0
    out[~large] = np.log(u_of_s(s[~large]))
    sl = s[large]
    out[large] = sl + np.log(sl - 1.0) + np.log1p(np.exp(-sl) / (sl - 1.0))
    return out


def log_expm1(s):
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    large = s >= 30.0
    out[~large] = np.log(np.expm1(s[~large]))
    out[large] = s[large] + np.log1p(-np.exp(-s[large]))
    return out


def harvest_exponent(c):
    """s = 1 + W0((c - 1)/e) for c > 0, i.e. the root of u(s) = c."""
    c = np.array(c, dtype=float, ndmin=1)
    s = np.full_like(c, np.nan)
    pos = c > 0.0
    small = pos & (c < 0.25)
    large = pos & ~small
    s[large] = 1.0 + lambert_w0((c[large] - 1.0) / E)
    if small.any():
        cs = c[small]
        # u(s) >= s^2/2, so sqrt(2c) sits right of the root; Newton on the
        # convex increasing u then decreases monotonically onto it.
        sv = np.sqrt(2.0 * cs)
        active = np.ones(cs.shape, dtype=bool)
        for _ in range(100):
            if not active.any():
                break
            sa = sv[active]
            ds = (u_of_s(sa) - cs[active]) / (sa * np.exp(sa))
            sv[active] = sa - ds
            still = np.abs(ds) > 1e-16 * sa
            idx = np.flatnonzero(active)
            active[idx[~still]] = False
        s[small] = sv
    s[c == 0.0] = 0.0
    return s


def _p4_g(s, log_rho):
    return np.log(s) + 2.0 * log_u_of_s(s) - log_expm1(s) - log_rho


def _p4_dg(s):
    return 1.0 / s + 2.0 * s * np.exp(s - log_u_of_s(s)) + 1.0 / np.expm1(-s)


def p4_exponent(rho):
    """Root s > 0 of s u(s)^2 / (e^s - 1) = rho (strictly increasing in s)."""
    rho = np.array(rho, dtype=float, ndmin=1)
    out = np.full_like(rho, np.nan)
    ok = (rho > 0.0) & np.isfinite(rho)
    if not ok.any():
        return out
    lr = np.log(rho[ok])
    guess = np.where(lr < np.log(0.5), np.exp(0.25 * (lr + np.log(4.0))),
                     1.0 + 0.5 * np.maximum(lr, 0.0))
    hi = np.maximum(2.0 * guess, 1.0)
    for _ in range(80):
        bad = _p4_g(hi, lr) <= 0.0
        if not bad.any():
            break
        hi = np.where(bad, 2.0 * hi, hi)
    lo = np.zeros_like(hi)
    s = np.minimum(guess, 0.5 * hi)
    active = np.ones(s.shape, dtype=bool)
    for _ in range(200):
        if not active.any():
            break
        sa = s[active]
        g = _p4_g(sa, lr[active])
        neg = g < 0.0
        lo_a = np.where(neg, sa, lo[active])
        hi_a = np.where(neg, hi[active], sa)
        step = g / _p4_dg(sa)
        cand = sa - step
        inside = (cand > lo_a) & (cand < hi_a) & np.isfinite(cand)
        mid = np.where(lo_a > 0.0, 0.5 * (lo_a + hi_a), 0.25 * hi_a)
        new = np.where(inside, cand, mid)
        lo[active] = lo_a
        hi[active] = hi_a
        s[active] = np.where(g == 0.0, sa, new)
        conv = (np.abs(new - sa) <= 1e-15 * sa) | (g == 0.0) | (hi_a - lo_a <= 1e-16 * hi_a)
        idx = np.flatnonzero(active)
        active[idx[conv]] = False
    out[ok] = s
    return out


def slot_ratio(r):
    """Positive root y of log1p(y) = r*y for 0 < r < 1; NaN otherwise."""
    r = np.array(r, dtype=float, ndmin=1)
    y = np.full_like(r, np.nan)
    ok = (r > 0.0) & (r < 1.0)
    if not ok.any():
        return y
    rv = r[ok]
    with np.errstate(divide="ignore", over="ignore"):
        ub = 1.0 / (rv * rv) - 1.0
        ub2 = np.where(rv > 0.5, 2.0 * (1.0 - rv) / (2.0 * rv - 1.0), np.inf)
    yv = np.minimum(ub, ub2)
    active = np.ones(rv.shape, dtype=bool)
    for _ in range(200):
        if not active.any():
            break
        ya = yv[active]
        ra = rv[active]
        h = np.log1p(ya) - ra * ya
        dh = 1.0 / (1.0 + ya) - ra
        dy = h / dh
        new = ya - dy
        good = (new > 0.0) & (h < 0.0) & (dh < 0.0)
        yv[active] = np.where(good, new, ya)
        still = good & (np.abs(dy) > 1e-15 * ya)
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    y[ok] = yv
    return y


def _slot_terms(c, omega):
    """y_k and dy_k/domega for r_k = 1/(c_k omega); c is (n, K), omega (n,)."""
    om = omega[:, None]
    r = 1.0 / (c * om)
    y = slot_ratio(r.ravel()).reshape(r.shape)
    dy = r * y / (om * (r - 1.0 / (1.0 + y)))
    return y, dy


def _illinois(f, lo, hi, flo, fhi, xtol=1e-14, maxiter=300):
    """Vectorised Illinois false position on brackets with flo > 0 > fhi."""
    x = lo.copy()
    side = np.zeros(lo.shape, dtype=int)
    active = np.ones(lo.shape, dtype=bool)
    for _ in range(maxiter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        a, b, fa, fb = lo[idx], hi[idx], flo[idx], fhi[idx]
        xn = (a * fb - b * fa) / (fb - fa)
        bad = ~np.isfinite(xn) | (xn <= np.minimum(a, b)) | (xn >= np.maximum(a, b))
        xn = np.where(bad, 0.5 * (a + b), xn)
        fn = f(xn, idx)
        x[idx] = xn
        pos = fn > 0.0
        sd = side[idx]
        # pos: replace lo; neg: replace hi; halve the stale end's value on repeats
        new_lo = np.where(pos, xn, a)
        new_flo = np.where(pos, fn, np.where(sd == -1, 0.5 * fa, fa))
        new_hi = np.where(pos, b, xn)
        new_fhi = np.where(pos, np.where(sd == 1, 0.5 * fb, fb), fn)
        lo[idx], flo[idx], hi[idx], fhi[idx] = new_lo, new_flo, new_hi, new_fhi
        side[idx] = np.where(pos, 1, -1)
        done = (fn == 0.0) | (np.abs(new_hi - new_lo) <= xtol * (1.0 + np.abs(xn))) | ~np.isfinite(fn)
        active[idx[done]] = False
    return x


def _bracket(f, n, floor=np.log(1e-10), maxsteps=200):
    """Unit-step search in v from 0 for a bracket with f(lo) > 0 > f(hi).

    f must be positive near the floor and negative for large v. Returns
    (lo, hi, flo, fhi, ok).
    """
    idx = np.arange(n)
    f0 = f(np.zeros(n), idx)
    lo = np.zeros(n)
    hi = np.zeros(n)
    flo = f0.copy()
    fhi = f0.copy()
    up = f0 > 0.0
    down = f0 < 0.0
    for _ in range(maxsteps):
        up_idx = np.flatnonzero(up)
        if up_idx.size:
            lo[up_idx], flo[up_idx] = hi[up_idx], fhi[up_idx]
            hi[up_idx] += 1.0
            fhi[up_idx] = f(hi[up_idx], up_idx)
            up[up_idx] = fhi[up_idx] > 0.0
        dn_idx = np.flatnonzero(down)
        if dn_idx.size:
            hi[dn_idx], fhi[dn_idx] = lo[dn_idx], flo[dn_idx]
            lo[dn_idx] = np.maximum(lo[dn_idx] - 2.0, floor)
            flo[dn_idx] = f(lo[dn_idx], dn_idx)
            stuck = lo[dn_idx] <= floor
            down[dn_idx] = (flo[dn_idx] < 0.0) & ~stuck
        if not (up.any() or down.any()):
            break
    ok = (flo > 0.0) & (fhi < 0.0)
    exact = f0 == 0.0
    return lo, hi, flo, fhi, ok, exact


def _solve_v(f, n):
    lo, hi, flo, fhi, ok, exact = _bracket(f, n)
    v = np.zeros(n)
    run = np.flatnonzero(ok)
    if run.size:
        def fsub(x, idx):
            return f(x, run[idx])
        v[run] = _illinois(fsub, lo[run], hi[run], flo[run], fhi[run])
    v[~ok & ~exact] = np.nan
    return v


def p5_omega(c):
    """Equal-power multiuser solve: omega with sum_k c_k / y_k(omega) = 1.

    c has shape (n, K). omega = t1 * B / (R0 ln 2). NaN on failure.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    om_min = np.max(1.0 / c, axis=1)

    def phi(v, idx):
        om = om_min[idx] + np.exp(v) * om_min[idx]
        y, _ = _slot_terms(c[idx], om)
        return np.sum(c[idx] / y, axis=1) - 1.0

    v = _solve_v(phi, c.shape[0])
    return om_min * (1.0 + np.exp(v))


def p6_omega(c, theta):
    """Power-allocated multiuser solve at normalised multiplier theta.

    Minimises 2*omega*S(omega) + theta/S(omega), S = sum_k c_k / y_k(omega),
    by locating the sign change of its derivative. NaN on failure.
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    om_min = np.max(1.0 / c, axis=1)

    def dfun(v, idx):
        om = om_min[idx] + np.exp(v) * om_min[idx]
        cc = c[idx]
        y, dy = _slot_terms(cc, om)
        s = np.sum(cc / y, axis=1)
        ds = -np.sum(cc * dy / (y * y), axis=1)
        # derivative divided by S > 0; sign runs + (far) ... - (near), so negate
        return -(2.0 + (2.0 * om - theta / (s * s)) * ds / s)

    v = _solve_v(dfun, c.shape[0])
    return om_min * (1.0 + np.exp(v))
