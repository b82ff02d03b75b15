"""One HAP serving K nodes: equal-power (P5) and power-allocated (P6) delays.

All nodes share the downlink energy phase t1 and then transmit one after the
other, with sum_k t2_k = t1. With ``A = R0 ln2 / B`` and ``c_k = a_k h_k^2``,
node k's rate equality at power coefficient beta reads

    log(1 + y_k) = r_k y_k,   y_k = beta c_k t1 / t2_k,   r_k = A / (beta c_k t1),

which has a positive root only when r_k < 1. Writing ``omega = beta t1 / A``
gives t2_k = A omega c_k / y_k and S(omega) = sum_k c_k / y_k. P5 (beta = 1)
solves S(omega) = 1. For P6 the per-realisation Lagrangian at the average
power price theta reduces to minimising A (2 omega S + theta/(A S)) over
omega, after which beta = 1/S. The full stationarity system in
(t1, t2_k, beta, lambda_k, mu) is kept for verification and as a Newton
polish of the reduced solution.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .channel import ChannelGain, FadingModel, db_to_linear
from .errors import (BracketError, CalibrationError, DegenerateChannelError, DomainError,
                     InfeasibleSlotError, NewtonDivergenceError)
from .montecarlo import DEFAULT_SAMPLES, DEFAULT_SEED, DelayStats, estimate, gain_panel
from .quadrature import require_convergence

LN2 = math.log(2.0)
MAX_NODES = 64
CALIBRATION_SAMPLES = 10_000
THETA_TOL = 1e-3
ZETA0 = 0.5
MAX_ITER = 500


@dataclass(frozen=True)
class MultiUserParams:
    bandwidth_b: float
    payload_r0: float
    snr_a: tuple
    fading: FadingModel = field(default_factory=lambda: FadingModel(4.0))

    def __post_init__(self):
        object.__setattr__(self, "snr_a", tuple(float(a) for a in self.snr_a))
        if not 1 <= len(self.snr_a) <= MAX_NODES:
            raise DomainError(f"need between 1 and {MAX_NODES} nodes, got {len(self.snr_a)}")
        if not all(a > 0 and math.isfinite(a) for a in self.snr_a):
            raise DomainError("every node SNR must be positive and finite")
        for name in ("bandwidth_b", "payload_r0"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @classmethod
    def from_db(cls, snr_db=(5.0, 5.0), bandwidth_b=100e3, payload_r0=50e3, m=4.0):
        return cls(bandwidth_b, payload_r0, tuple(db_to_linear(x) for x in snr_db),
                   FadingModel(m))

    @property
    def k_nodes(self) -> int:
        return len(self.snr_a)

    @property
    def delay_scale(self) -> float:
        return self.payload_r0 * LN2 / self.bandwidth_b


@dataclass(frozen=True)
class MultiUserAllocation:
    t1: float
    t2: tuple
    beta: float
    rates: tuple = ()

    @property
    def td(self) -> float:
        return self.t1 + sum(self.t2)


@dataclass
class SubgradientState:
    """theta in seconds; zeta_i = zeta0 / sqrt(i) acts on theta / A."""

    theta: float
    zeta0: float = ZETA0
    lambda_list: tuple = ()
    mu: float = 0.0
    iteration: int = 0
    residual: float = float("inf")
    trace: list = field(default_factory=list)

    def zeta(self, i: int) -> float:
        return self.zeta0 / math.sqrt(max(i, 1))


# ---------------------------------------------------------------- helpers

def _products(params: MultiUserParams, gains) -> np.ndarray:
    h = np.array([float(g.h if isinstance(g, ChannelGain) else g) for g in gains])
    if h.size != params.k_nodes:
        raise DomainError(f"expected {params.k_nodes} gains, got {h.size}")
    if not np.all(h > 0):
        raise DegenerateChannelError("every channel gain must be positive")
    return np.asarray(params.snr_a) * h * h


def node_rates(params, t1, t2, beta, c):
    t2 = np.asarray(t2, dtype=float)
    return params.bandwidth_b * t2 * np.log1p(beta * np.asarray(c) * t1 / t2) / LN2


def ul_slot_for_t1(snr_times_gain: float, t1: float, params) -> float:
    """Uplink time for one node that harvested for ``t1`` at full power.

    Raises InfeasibleSlotError when ``snr_times_gain * t1 <= R0 ln2 / B``:
    the deliverable bits then stay below R0 however long the node transmits.
    """
    if not (snr_times_gain > 0 and t1 > 0):
        raise DomainError("snr_times_gain and t1 must be positive")
    A = params.payload_r0 * LN2 / params.bandwidth_b
    r = A / (snr_times_gain * t1)
    if not r < 1.0:
        raise InfeasibleSlotError(
            f"t1 = {t1:.6g} s cannot deliver R0; need t1 > {A / snr_times_gain:.6g} s")
    y = float(kernels().slot_ratio(np.array([r]))[0])
    return snr_times_gain * t1 / y


def _slot_terms(c, omega):
    r = 1.0 / (c * omega)
    y = kernels().slot_ratio(r).reshape(np.shape(r))
    return y


# ---------------------------------------------------------------- P5

def p5_delay(params: MultiUserParams, c) -> np.ndarray:
    """Vectorised 2 t1 for rows of SNR-gain products ``c`` (shape (n, K))."""
    return 2.0 * params.delay_scale * kernels().p5_omega(np.atleast_2d(c))


def solve_p5(params: MultiUserParams, gains) -> MultiUserAllocation:
    c = _products(params, gains)
    A = params.delay_scale
    omega = float(kernels().p5_omega(c[None, :])[0])
    if not math.isfinite(omega):
        raise BracketError("equal-power slot equation has no crossing")
    y = _slot_terms(c, omega)
    t1 = A * omega
    t2 = A * omega * c / y
    return MultiUserAllocation(t1=t1, t2=tuple(t2), beta=1.0,
                               rates=tuple(node_rates(params, t1, t2, 1.0, c)))


# ---------------------------------------------------------------- P6 system

def _scales(params):
    return params.delay_scale, params.bandwidth_b / LN2


def recover_multipliers(params, c, t1, t2, beta):
    """lambda_k and mu satisfying the t1 and t2_k stationarity rows exactly."""
    _, bl = _scales(params)
    y = beta * c * t1 / np.asarray(t2)
    a = bl * c * beta / (1.0 + y)
    b = bl * (np.log1p(y) - y / (1.0 + y))
    ratio = float(np.sum(a / b))
    mu = (1.0 - ratio) / (1.0 + ratio)
    lam = (1.0 + mu) / b
    return lam, mu


def p6_residuals(params: MultiUserParams, c, theta: float, t1, t2, beta, lam, mu) -> np.ndarray:
    """Scaled residuals of the 2K+3 stationarity/feasibility equations.

    Order: t1-stationarity, K t2-stationarities, beta-stationarity,
    K rate equalities, slot-sum constraint. Each entry is dimensionless.
    """
    A, bl = _scales(params)
    c = np.asarray(c, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    lam = np.asarray(lam, dtype=float)
    y = beta * c * t1 / t2
    r_t1 = mu + np.sum(lam * bl * c * beta / (1.0 + y)) - 1.0
    r_t2 = -mu + lam * bl * (np.log1p(y) - y / (1.0 + y)) - 1.0
    r_beta = (np.sum(lam * bl * c * t1 / (1.0 + y)) - theta) / A
    r_rate = node_rates(params, t1, t2, beta, c) / params.payload_r0 - 1.0
    r_sum = (np.sum(t2) - t1) / t1
    return np.concatenate([[r_t1], r_t2, [r_beta], r_rate, [r_sum]])


def damped_newton(fun, x0, tol=1e-8, max_steps=200, floor=2.0 ** -20, fd_step=1e-7):
    """Newton with central-difference Jacobian and step halving.

    A step is accepted once the max-norm residual decreases; if even a step
    scaled by ``floor`` fails, or ``max_steps`` pass, NewtonDivergenceError.
    Returns (x, residual_vector, steps).
    """
    x = np.asarray(x0, dtype=float).copy()
    r = np.asarray(fun(x), dtype=float)
    norm = np.max(np.abs(r)) if np.all(np.isfinite(r)) else np.inf
    if not math.isfinite(norm):
        raise NewtonDivergenceError("residual not finite at the starting point", residual=r)
    for step in range(max_steps):
        if norm <= tol:
            return x, r, step
        jac = np.empty((r.size, x.size))
        for j in range(x.size):
            h = fd_step * max(1.0, abs(x[j]))
            xp = x.copy()
            xm = x.copy()
            xp[j] += h
            xm[j] -= h
            jac[:, j] = (np.asarray(fun(xp)) - np.asarray(fun(xm))) / (2.0 * h)
        dx = np.linalg.lstsq(jac, -r, rcond=None)[0]
        t = 1.0
        while t >= floor:
            xn = x + t * dx
            rn = np.asarray(fun(xn), dtype=float)
            nn = np.max(np.abs(rn)) if np.all(np.isfinite(rn)) else np.inf
            if nn < norm:
                x, r, norm = xn, rn, nn
                break
            t *= 0.5
        else:
            raise NewtonDivergenceError(
                f"no descent step above 2^-20 at residual {norm:.3g}", residual=r)
    if norm <= tol:
        return x, r, max_steps
    raise NewtonDivergenceError(f"residual {norm:.3g} after {max_steps} steps", residual=r)


def _pack(params, t1, t2, beta, lam, mu):
    A, bl = _scales(params)
    return np.concatenate([[math.log(t1 / A)], np.log(np.asarray(t2) / A), [math.log(beta)],
                           np.asarray(lam) * bl, [mu]])


def _unpack(params, x):
    A, bl = _scales(params)
    k = params.k_nodes
    t1 = A * math.exp(x[0])
    t2 = A * np.exp(x[1:1 + k])
    beta = math.exp(x[1 + k])
    lam = x[2 + k:2 + 2 * k] / bl
    mu = x[2 + 2 * k]
    return t1, t2, beta, lam, mu


def _newton(params, c, theta, start, tol=1e-8):
    def fun(x):
        with np.errstate(all="ignore"):
            return p6_residuals(params, c, theta, *_unpack(params, x))

    try:
        x, r, steps = damped_newton(fun, _pack(params, *start), tol=tol)
    except NewtonDivergenceError as exc:
        exc.gains = tuple(c)
        raise
    return _unpack(params, x), r, steps


def p6_reduced(params: MultiUserParams, c, theta: float):
    """Vectorised (t1, beta) of the reduced P6 solve for rows ``c`` (n, K)."""
    A = params.delay_scale
    c = np.atleast_2d(np.asarray(c, dtype=float))
    k = kernels()
    omega = k.p6_omega(c, theta / A)
    y = k.slot_ratio((1.0 / (c * omega[:, None])).ravel()).reshape(c.shape)
    s = np.sum(c / y, axis=1)
    return A * omega * s, 1.0 / s


def solve_p6_inner(params: MultiUserParams, gains, theta: float, polish: bool = True):
    """Per-realisation P6 allocation at average-power price ``theta`` (seconds).

    Solves the reduced one-dimensional problem, recovers the multipliers in
    closed form, then (``polish``) runs damped Newton on the full system so
    the returned point meets every residual to 1e-8.
    """
    if not (theta > 0 and math.isfinite(theta)):
        raise DomainError(f"theta must be positive and finite, got {theta!r}")
    c = _products(params, gains)
    A = params.delay_scale
    omega = float(kernels().p6_omega(c[None, :], theta / A)[0])
    if not math.isfinite(omega):
        raise NewtonDivergenceError("reduced P6 problem has no stationary point",
                                    gains=tuple(c))
    y = _slot_terms(c, omega)
    s = float(np.sum(c / y))
    t1, beta = A * omega * s, 1.0 / s
    t2 = A * omega * c / y
    lam, mu = recover_multipliers(params, c, t1, t2, beta)
    resid = p6_residuals(params, c, theta, t1, t2, beta, lam, mu)
    if polish and np.max(np.abs(resid)) > 1e-10:
        (t1, t2, beta, lam, mu), resid, _ = _newton(params, c, theta, (t1, t2, beta, lam, mu))
    alloc = MultiUserAllocation(t1=float(t1), t2=tuple(float(v) for v in t2), beta=float(beta),
                                rates=tuple(node_rates(params, t1, t2, beta, c)))
    state = SubgradientState(theta=theta, lambda_list=tuple(float(v) for v in lam), mu=float(mu),
                             residual=float(np.max(np.abs(resid))))
    return alloc, state


def solve_p6_newton(params: MultiUserParams, gains, theta: float, tol: float = 1e-8):
    """Damped Newton on the full system started from the P5 allocation.

    Independent of the reduced solve; used to cross-check it. The start has
    beta = 1 and multipliers recovered from the P5 point's stationarity rows.
    """
    c = _products(params, gains)
    p5 = solve_p5(params, gains)
    t2 = np.asarray(p5.t2)
    lam, mu = recover_multipliers(params, c, p5.t1, t2, 1.0)
    (t1, t2, beta, lam, mu), resid, steps = _newton(params, c, theta,
                                                     (p5.t1, t2, 1.0, lam, mu), tol=tol)
    alloc = MultiUserAllocation(t1=float(t1), t2=tuple(float(v) for v in t2), beta=float(beta),
                                rates=tuple(node_rates(params, t1, t2, beta, c)))
    return alloc, SubgradientState(theta=theta, lambda_list=tuple(lam), mu=float(mu),
                                   iteration=steps, residual=float(np.max(np.abs(resid))))


# ---------------------------------------------------------------- calibration

def subgradient_step(theta: float, zeta: float, mean_beta: float) -> float:
    """Projected update [theta + zeta (E{beta} - 1)]^+.

    E{beta} falls as theta rises, so a surplus of average power raises the
    price; the sign is chosen for that direction.
    """
    return max(0.0, theta + zeta * (mean_beta - 1.0))


def mean_beta(params: MultiUserParams, c, theta: float) -> float:
    _, beta = p6_reduced(params, c, theta)
    ok = np.isfinite(beta)
    if ok.sum() < beta.size * (1 - 1e-3):
        raise CalibrationError(f"{beta.size - ok.sum()} reduced P6 solves failed")
    return float(beta[ok].mean())


def p5_theta(params: MultiUserParams, c) -> np.ndarray:
    """Price theta (seconds) at which each row's P5 point is P6-stationary.

    The equal-power allocation with its recovered multipliers satisfies every
    P6 row except the beta-stationarity one; evaluating that row gives the
    theta for which beta = 1 would be optimal for that realisation.
    """
    A, bl = _scales(params)
    c = np.atleast_2d(np.asarray(c, dtype=float))
    k = kernels()
    omega = k.p5_omega(c)
    y = k.slot_ratio((1.0 / (c * omega[:, None])).ravel()).reshape(c.shape)
    a = bl * c / (1.0 + y)
    b = bl * (np.log1p(y) - y / (1.0 + y))
    ratio = np.sum(a / b, axis=1)
    lam = ((2.0 / (1.0 + ratio))[:, None]) / b
    return np.sum(lam * a, axis=1) * A * omega


def calibrate_theta(params: MultiUserParams, mc_samples: int = CALIBRATION_SAMPLES,
                    seed: int = DEFAULT_SEED, theta0: float = None, zeta0: float = ZETA0,
                    tol: float = THETA_TOL, max_iter: int = MAX_ITER) -> SubgradientState:
    """Sub-gradient search for the price theta with E{beta} = 1.

    The Monte-Carlo average uses one fixed panel of gain draws (common
    random numbers). Steps act on theta / theta_ref, where theta_ref is the
    panel mean of :func:`p5_theta` (also the default start), so the
    step size is insensitive to SNR, K and the payload.
    """
    require_convergence(params.fading, "P6 calibration")
    if mc_samples < 1000:
        raise DomainError("calibration needs at least 1000 samples")
    h = gain_panel(params.fading, params.k_nodes, mc_samples, seed)
    c = np.asarray(params.snr_a)[None, :] * h * h
    ref = p5_theta(params, c)
    ref = float(np.mean(ref[np.isfinite(ref)]))
    if not (ref > 0 and math.isfinite(ref)):
        raise CalibrationError("could not form a reference price from the P5 panel")
    state = SubgradientState(theta=ref if theta0 is None else theta0, zeta0=zeta0)
    x = state.theta / ref
    if not x > 0:
        raise DomainError("theta0 must be positive")
    for i in range(1, max_iter + 1):
        eb = mean_beta(params, c, x * ref)
        state.trace.append((x * ref, eb))
        state.iteration = i
        state.residual = abs(eb - 1.0)
        state.theta = x * ref
        if state.residual <= tol:
            return state
        new = subgradient_step(x, state.zeta(i), eb)
        # theta = 0 prices power at nothing and has no finite optimum
        x = new if new > 0.0 else 0.5 * x
    raise CalibrationError(
        f"|E{{beta}} - 1| = {state.residual:.3g} after {max_iter} iterations", trace=state.trace)


# ---------------------------------------------------------------- averages

def avg_td_p5(params: MultiUserParams, mc_samples: int = DEFAULT_SAMPLES,
              seed: int = DEFAULT_SEED, workers: int = 1) -> DelayStats:
    require_convergence(params.fading, "P5 average delay")
    a = np.asarray(params.snr_a)[None, :]
    return estimate(lambda h: p5_delay(params, a * h * h), params.fading, params.k_nodes,
                    mc_samples, seed, workers=workers)


def avg_td_p6(params: MultiUserParams, mc_samples: int = DEFAULT_SAMPLES,
              seed: int = DEFAULT_SEED, state: SubgradientState = None,
              calibration_samples: int = CALIBRATION_SAMPLES, workers: int = 1) -> DelayStats:
    require_convergence(params.fading, "P6 average delay")
    if state is None:
        state = calibrate_theta(params, calibration_samples, seed)
    a = np.asarray(params.snr_a)[None, :]

    def td(h):
        t1, _ = p6_reduced(params, a * h * h, state.theta)
        return 2.0 * t1

    return estimate(td, params.fading, params.k_nodes, mc_samples, seed, workers=workers)
