"""Expectations of functionals of the channel gain over (0, inf).

The integral is split at x = 1. On (0, 1] the substitution x = t^p absorbs
the x^(m-3) endpoint behaviour of the delay integrands; on (1, inf) the map
x = 1 + t/(1 - t) compactifies the tail. Both pieces share one adaptive
Gauss-Kronrod (7/15) panel heap with a global absolute tolerance.
"""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .channel import FadingModel, gain_pdf_array
from .errors import AccuracyError, ConvergenceGuardError, DomainError

DEFAULT_TOL = 1e-8

_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
# 15 nodes on [-1, 1], Kronrod weights, Gauss weights (zero off the 7-point rule)
_NODES = np.concatenate([-_XK[:-1], [0.0], _XK[-2::-1]])
_KW = np.concatenate([_WK[:-1], [_WK[-1]], _WK[-2::-1]])
_GW = np.zeros(15)
_GW[1:14:2] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[-2::-1]])

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class ExpectationResult:
    value: float
    abs_error_estimate: float
    split_point_contributions: tuple
    evaluations: int = 0


def check_convergence(fading: FadingModel) -> bool:
    """True iff the delay integrals converge, i.e. m > 2."""
    return fading.m > 2.0


def require_convergence(fading: FadingModel, what: str = "average delay"):
    if not check_convergence(fading):
        raise ConvergenceGuardError(
            f"{what} diverges for fading order m = {fading.m:g}; requires m > 2")


def head_power(m: float) -> float:
    """Exponent p of x = t^p on (0, 1]; makes t^(p(m-2)-1) at least linear."""
    if m <= 2.0:
        return 2.0
    return float(min(64.0, max(2.0, 2.0 / (m - 2.0))))


def _panel_rule(values, half):
    """Kronrod estimate and QUADPACK-style error estimate for one panel."""
    k = half * (values @ _KW)
    g = half * (values @ _GW)
    mean = k / (2.0 * half) if half else 0.0
    resabs = half * (np.abs(values) @ _KW)
    resasc = half * (np.abs(values - mean) @ _KW)
    err = abs(k - g)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    if resabs > np.finfo(float).tiny / (50.0 * _EPS):
        err = max(50.0 * _EPS * resabs, err)
    return k, err


class _Piece:
    """One mapped half-line piece; evaluates many panels per integrand call."""

    def __init__(self, g, fading, which):
        self.g = g
        self.fading = fading
        self.which = which
        self.p = head_power(fading.m)
        self.evaluations = 0

    def transformed(self, t):
        if self.which == 0:
            x = t ** self.p
            jac = self.p * t ** (self.p - 1.0)
        else:
            one_minus = 1.0 - t
            x = 1.0 + t / one_minus
            jac = 1.0 / (one_minus * one_minus)
        pdf = gain_pdf_array(x, self.fading)
        live = (pdf > 0.0) & (jac > 0.0) & np.isfinite(x)
        out = np.zeros_like(t)
        if live.any():
            gv = np.asarray(self.g(x[live]), dtype=float)
            val = gv * pdf[live] * jac[live]
            if not np.all(np.isfinite(val)):
                raise AccuracyError("integrand is not finite inside the domain")
            out[live] = val
        self.evaluations += t.size
        return out

    def panels(self, bounds):
        """Rule results for a list of (a, b) panels in one vectorised call."""
        a = np.array([b[0] for b in bounds])
        b = np.array([b[1] for b in bounds])
        half = 0.5 * (b - a)
        centre = 0.5 * (a + b)
        t = (centre[:, None] + half[:, None] * _NODES[None, :]).ravel()
        vals = self.transformed(t).reshape(len(bounds), 15)
        return [(_panel_rule(vals[i], half[i]), bounds[i]) for i in range(len(bounds))]


def expect(g, fading: FadingModel, tol: float = DEFAULT_TOL, singular: bool = False,
           max_panels: int = 4000, initial_panels: int = 8) -> ExpectationResult:
    """E{g(h)} for the unit-mean Nakagami-m gain h.

    ``g`` maps a float array of gains to values. ``singular`` marks the
    delay/power integrands whose head behaves like x^(m-3); those are refused
    for m <= 2 with :class:`ConvergenceGuardError`.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    if singular:
        require_convergence(fading)
    pieces = [_Piece(g, fading, 0), _Piece(g, fading, 1)]
    heap = []
    totals = [0.0, 0.0]
    errs = [0.0, 0.0]
    edges = np.linspace(0.0, 1.0, initial_panels + 1)
    counter = 0
    for idx, piece in enumerate(pieces):
        for (k, err), (a, b) in piece.panels(list(zip(edges[:-1], edges[1:]))):
            totals[idx] += k
            errs[idx] += err
            heapq.heappush(heap, (-err, counter, idx, a, b, k, err))
            counter += 1
    n_panels = 2 * initial_panels
    while errs[0] + errs[1] > tol:
        if n_panels >= max_panels:
            raise AccuracyError(
                f"quadrature error {errs[0] + errs[1]:.3g} above tol {tol:.3g} "
                f"after {n_panels} panels")
        _, _, idx, a, b, k, err = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            raise AccuracyError("panel width reached machine resolution")
        children = pieces[idx].panels([(a, mid), (mid, b)])
        totals[idx] -= k
        errs[idx] -= err
        for (kc, ec), (ac, bc) in children:
            totals[idx] += kc
            errs[idx] += ec
            heapq.heappush(heap, (-ec, counter, idx, ac, bc, kc, ec))
            counter += 1
        n_panels += 1
        if n_panels % 64 == 0:
            # re-sum to shed accumulated cancellation in the running totals
            totals = [0.0, 0.0]
            errs = [0.0, 0.0]
            for item in heap:
                totals[item[2]] += item[5]
                errs[item[2]] += item[6]
    value = totals[0] + totals[1]
    if not math.isfinite(value):
        raise AccuracyError("quadrature produced a non-finite value")
    return ExpectationResult(
        value=float(value),
        abs_error_estimate=float(max(errs[0] + errs[1], 0.0)),
        split_point_contributions=(float(totals[0]), float(totals[1])),
        evaluations=pieces[0].evaluations + pieces[1].evaluations,
    )
