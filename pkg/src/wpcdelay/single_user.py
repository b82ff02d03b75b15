"""Single-node allocations P1-P4 and their averages over Nakagami-m fading.

Throughout, ``c = a0 * h**2`` is the instantaneous SNR-gain product and
``A = R0 * ln 2 / B`` (seconds) is the natural delay scale: every optimal
duration is ``A`` times a function of ``c`` (and of ``mu / A``).

P1  equal slots, fixed power           t1 = t2 = A / ln(1 + c)
P2  equal slots, power coefficient     closed form through W0
P3  free slots, fixed power            s = 1 + W0((c - 1)/e); t2 = A/s
P4  free slots and power coefficient   one monotone scalar equation in s

For P3/P4 the exponent ``s`` of the harvest-then-transmit split satisfies
``u(s) = 1 + (s - 1) e^s = beta * c``. P4's stationarity condition becomes
``s u(s)^2 / (e^s - 1) = c A / mu``, whose left side is strictly increasing,
so each realisation has exactly one optimum.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import quadrature
from ._backend import kernels
from ._roots import bracket_decreasing_log, illinois_log
from .channel import ChannelGain, FadingModel, LinkBudget, db_to_linear
from .errors import DegenerateChannelError, DomainError, RootNotFoundError
from .montecarlo import DEFAULT_SAMPLES, DEFAULT_SEED, DelayStats, estimate

LN2 = math.log(2.0)
P2_TOL = 1e-6
P4_TOL = 1e-4
MODES = ("exact", "approx")


@dataclass(frozen=True)
class SystemParams:
    bandwidth_b: float
    payload_r0: float
    snr_a0: float
    fading: FadingModel = field(default_factory=lambda: FadingModel(4.0))

    def __post_init__(self):
        for name in ("bandwidth_b", "payload_r0", "snr_a0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @classmethod
    def from_db(cls, snr_db: float = 5.0, bandwidth_b: float = 100e3,
                payload_r0: float = 50e3, m: float = 4.0) -> "SystemParams":
        return cls(bandwidth_b, payload_r0, db_to_linear(snr_db), FadingModel(m))

    @property
    def delay_scale(self) -> float:
        """A = R0 ln2 / B, seconds."""
        return self.payload_r0 * LN2 / self.bandwidth_b

    def with_payload(self, r0: float) -> "SystemParams":
        return replace(self, payload_r0=r0)


@dataclass(frozen=True)
class Allocation:
    t1: float
    t2: float
    beta: float
    rate_bits: float
    gain: float = 1.0

    @property
    def td(self) -> float:
        return self.t1 + self.t2

    def harvested_energy(self, link: LinkBudget) -> float:
        """E_n = eta * beta * P_h * d^(-alpha) * h * t1 (joules)."""
        return link.eta * self.beta * link.p_h * link.d ** (-link.alpha) * self.gain * self.t1

    def node_power(self, link: LinkBudget) -> float:
        """P_n = E_n / t2 (watts)."""
        return self.harvested_energy(link) / self.t2


@dataclass(frozen=True)
class MultiplierState:
    """Calibrated average-power multiplier (seconds) and its residual |E{beta} - 1|."""

    mu: float
    calibration_residual: float = 0.0
    mode: str = "exact"
    iterations: int = 0

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise DomainError(f"multiplier mu must be positive and finite, got {self.mu!r}")


# ---------------------------------------------------------------- vectorised cores

def _gain_value(h) -> float:
    h = float(h.h if isinstance(h, ChannelGain) else h)
    if not h > 0:
        raise DegenerateChannelError(f"channel gain must be positive, got {h!r}")
    return h


def _check_mu(mu):
    if not (mu > 0 and math.isfinite(mu)):
        raise DomainError(f"multiplier mu must be positive and finite, got {mu!r}")


def alloc_p1(c, A):
    c = np.asarray(c, dtype=float)
    t0 = A / np.log1p(c)
    return t0, t0, np.ones_like(c)


def alloc_p2(c, A, mu):
    c = np.asarray(c, dtype=float)
    w = kernels().lambert_w0(0.5 * np.sqrt(2.0 * c * A / mu)).reshape(c.shape)
    t0 = A / (2.0 * w)
    return t0, t0, np.expm1(2.0 * w) / c


def alloc_p3(c, A):
    c = np.asarray(c, dtype=float)
    s = kernels().harvest_exponent(c).reshape(c.shape)
    t2 = A / s
    return t2 * np.expm1(s) / c, t2, np.ones_like(c)


def alloc_p4_exact(c, A, mu):
    c = np.asarray(c, dtype=float)
    k = kernels()
    s = k.p4_exponent(c * A / mu).reshape(c.shape)
    beta = k.u_of_s(s).reshape(c.shape) / c
    return beta * mu, A / s, beta


def approx_weight(c):
    """sqrt((e^s - 1) / (c s)) with s the P3 exponent at c."""
    c = np.asarray(c, dtype=float)
    s = kernels().harvest_exponent(c).reshape(c.shape)
    return np.sqrt(np.expm1(s) / (c * s))


def slot_for_t1(cb, t1, A):
    """t2 meeting the rate equality for SNR-gain-power product cb and DL time t1.

    NaN where no finite t2 exists (cb * t1 <= A): the uplink rate saturates
    at cb * t1 / A nats as t2 grows, so short energy transfers are infeasible.
    """
    cb = np.asarray(cb, dtype=float)
    r = A / (cb * t1)
    y = kernels().slot_ratio(r).reshape(np.shape(r))
    return cb * t1 / y


def alloc_p4_approx(c, A, mu):
    c = np.asarray(c, dtype=float)
    beta = math.sqrt(A / mu) * approx_weight(c)
    t1 = beta * mu
    t2 = slot_for_t1(beta * c, t1, A)
    bad = ~np.isfinite(t2)
    if np.any(bad):
        # feasibility patch: best split of the same energy budget beta*c
        t1_p, t2_p, _ = alloc_p3(beta[bad] * c[bad], A)
        t1 = np.array(t1, copy=True)
        t1[bad] = t1_p
        t2 = np.array(t2, copy=True)
        t2[bad] = t2_p
    return t1, t2, beta


def rate_bits(B, t1, t2, beta, c):
    return B * t2 * np.log1p(beta * c * t1 / t2) / LN2


def _allocation(params, h, t1, t2, beta):
    c = params.snr_a0 * h * h
    t1, t2, beta = float(np.ravel(t1)[0]), float(np.ravel(t2)[0]), float(np.ravel(beta)[0])
    if not all(math.isfinite(v) and v > 0 for v in (t1, t2, beta)):
        raise RootNotFoundError(f"non-finite allocation at h = {h!r}")
    return Allocation(t1=t1, t2=t2, beta=beta,
                      rate_bits=float(rate_bits(params.bandwidth_b, t1, t2, beta, c)), gain=h)


# ---------------------------------------------------------------- per-realisation solvers

def solve_p1(params: SystemParams, h) -> Allocation:
    h = _gain_value(h)
    return _allocation(params, h, *alloc_p1(params.snr_a0 * h * h, params.delay_scale))


def p2_beta(params: SystemParams, h, mu: float) -> float:
    _check_mu(mu)
    h = _gain_value(h)
    return float(alloc_p2(np.array([params.snr_a0 * h * h]), params.delay_scale, mu)[2][0])


def solve_p2(params: SystemParams, h, state: MultiplierState) -> Allocation:
    h = _gain_value(h)
    return _allocation(params, h, *alloc_p2(params.snr_a0 * h * h, params.delay_scale, state.mu))


def solve_p3(params: SystemParams, h) -> Allocation:
    h = _gain_value(h)
    return _allocation(params, h, *alloc_p3(params.snr_a0 * h * h, params.delay_scale))


def p4_exact_beta(params: SystemParams, h, mu: float) -> float:
    _check_mu(mu)
    h = _gain_value(h)
    beta = float(alloc_p4_exact(np.array([params.snr_a0 * h * h]), params.delay_scale, mu)[2][0])
    if not (beta > 0 and math.isfinite(beta)):
        raise RootNotFoundError(f"P4 stationarity equation has no root at h = {h!r}, mu = {mu!r}")
    return beta


def p4_residual(params: SystemParams, h, mu: float, beta: float) -> float:
    """Relative residual of the P4 stationarity equation in beta."""
    c = params.snr_a0 * h * h
    s = float(kernels().harvest_exponent(np.array([beta * c]))[0])
    lhs = mu * c / params.delay_scale * beta * beta * s
    rhs = math.expm1(s)
    return abs(lhs - rhs) / rhs


def solve_p4(params: SystemParams, h, state: MultiplierState, mode: str = "exact") -> Allocation:
    if mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    h = _gain_value(h)
    fn = alloc_p4_exact if mode == "exact" else alloc_p4_approx
    return _allocation(params, h, *fn(params.snr_a0 * h * h, params.delay_scale, state.mu))


# ---------------------------------------------------------------- integrands

def delay_function(problem: str, params: SystemParams, state: MultiplierState = None,
                   mode: str = "exact"):
    """Vectorised h -> t1 + t2 for one of p1..p4 (multiplier required for p2/p4)."""
    a0, A = params.snr_a0, params.delay_scale
    if problem in ("p2", "p4") and state is None:
        raise DomainError(f"{problem} needs a calibrated multiplier")
    if problem == "p4" and mode not in MODES:
        raise DomainError(f"mode must be one of {MODES}, got {mode!r}")
    table = {
        "p1": lambda c: alloc_p1(c, A),
        "p2": lambda c: alloc_p2(c, A, state.mu),
        "p3": lambda c: alloc_p3(c, A),
        "p4": (lambda c: alloc_p4_exact(c, A, state.mu)) if mode == "exact"
        else (lambda c: alloc_p4_approx(c, A, state.mu)),
    }
    if problem not in table:
        raise DomainError(f"unknown single-user problem {problem!r}")
    alloc = table[problem]

    def td(h):
        h = np.asarray(h, dtype=float)
        if h.ndim == 2:
            h = h[:, 0]
        t1, t2, _ = alloc(a0 * h * h)
        return t1 + t2

    return td


def beta_function(params: SystemParams, problem: str, mu: float):
    a0, A = params.snr_a0, params.delay_scale
    alloc = alloc_p2 if problem == "p2" else alloc_p4_exact
    return lambda h: alloc(a0 * h * h, A, mu)[2]


# ---------------------------------------------------------------- calibration

def _calibrate(params, problem, tol, quad_tol):
    quadrature.require_convergence(params.fading, f"calibration of {problem}")
    fn_cache = {}

    def excess(mu):
        if mu not in fn_cache:
            res = quadrature.expect(beta_function(params, problem, mu), params.fading,
                                    tol=quad_tol, singular=True)
            fn_cache[mu] = res.value - 1.0
        return fn_cache[mu]

    lo, hi, flo, fhi = bracket_decreasing_log(excess, 1.0, 60)
    mu, resid, its = illinois_log(excess, lo, hi, flo, fhi, ftol=tol)
    return MultiplierState(mu=mu, calibration_residual=abs(resid), mode="exact",
                           iterations=len(fn_cache))


def calibrate_mu_p2(params: SystemParams, tol: float = P2_TOL) -> MultiplierState:
    """mu with E{beta_P2(h; mu)} = 1 to within ``tol``."""
    return _calibrate(params, "p2", tol, tol * 1e-3)


def calibrate_mu_p4_exact(params: SystemParams, tol: float = P4_TOL) -> MultiplierState:
    """mu with E{beta_P4(h; mu)} = 1 to within ``tol``."""
    return _calibrate(params, "p4", tol, min(1e-7, tol * 1e-2))


def p4_approx_mu(params: SystemParams, tol: float = quadrature.DEFAULT_TOL) -> MultiplierState:
    """Closed-form multiplier A * E{approx_weight(c)}^2 of the P4 approximation."""
    quadrature.require_convergence(params.fading, "P4 approximate multiplier")
    a0 = params.snr_a0
    res = quadrature.expect(lambda h: approx_weight(a0 * h * h), params.fading, tol=tol,
                            singular=True)
    return MultiplierState(mu=params.delay_scale * res.value ** 2, calibration_residual=0.0,
                           mode="approx", iterations=1)


def calibrate(params: SystemParams, problem: str, mode: str = "exact"):
    if problem == "p2":
        return calibrate_mu_p2(params)
    if problem == "p4":
        return calibrate_mu_p4_exact(params) if mode == "exact" else p4_approx_mu(params)
    return None


# ---------------------------------------------------------------- averages

def _avg(params, problem, state=None, mode="exact", tol=quadrature.DEFAULT_TOL):
    quadrature.require_convergence(params.fading, f"average delay of {problem}")
    if problem in ("p2", "p4") and state is None:
        state = calibrate(params, problem, mode)
    res = quadrature.expect(delay_function(problem, params, state, mode), params.fading,
                            tol=tol, singular=True)
    return DelayStats(mean=res.value, std_error=res.abs_error_estimate,
                      samples=res.evaluations, method="quadrature")


def avg_td_p1(params: SystemParams, tol: float = quadrature.DEFAULT_TOL) -> DelayStats:
    return _avg(params, "p1", tol=tol)


def avg_td_p2(params: SystemParams, state: MultiplierState = None,
              tol: float = quadrature.DEFAULT_TOL) -> DelayStats:
    return _avg(params, "p2", state, tol=tol)


def avg_td_p3(params: SystemParams, tol: float = quadrature.DEFAULT_TOL) -> DelayStats:
    return _avg(params, "p3", tol=tol)


def avg_td_p4(params: SystemParams, state: MultiplierState = None, mode: str = "exact",
              tol: float = quadrature.DEFAULT_TOL) -> DelayStats:
    return _avg(params, "p4", state, mode, tol=tol)


def mc_td(params: SystemParams, problem: str, state: MultiplierState = None,
          mode: str = "exact", n: int = DEFAULT_SAMPLES, seed: int = DEFAULT_SEED,
          workers: int = 1) -> DelayStats:
    """Monte-Carlo counterpart of the ``avg_td_*`` quadratures."""
    quadrature.require_convergence(params.fading, f"average delay of {problem}")
    if problem in ("p2", "p4") and state is None:
        state = calibrate(params, problem, mode)
    return estimate(delay_function(problem, params, state, mode), params.fading, 1, n, seed,
                    workers=workers)
