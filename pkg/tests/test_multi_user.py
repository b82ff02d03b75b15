import math

import numpy as np
import pytest

import oracles as orc
from wpcdelay import multi_user as mu
from wpcdelay import single_user as su
from wpcdelay.errors import (CalibrationError, ConvergenceGuardError, DomainError,
                             InfeasibleSlotError, NewtonDivergenceError)
from wpcdelay.multi_user import MultiUserParams

LN2 = math.log(2)


@pytest.fixture
def two():
    return MultiUserParams.from_db((5.0, 5.0))


def test_params_validation():
    with pytest.raises(DomainError):
        MultiUserParams(1e5, 5e4, ())
    with pytest.raises(DomainError):
        MultiUserParams(1e5, 5e4, (1.0, -1.0))
    with pytest.raises(DomainError):
        MultiUserParams(1e5, 5e4, (1.0,) * 65)


# ------------------------------------------------------------------ uplink slot

def test_slot_constructed_fixed_point():
    p = MultiUserParams(100e3, 50e3, (1.0,))
    t1 = 0.8
    c = 2 ** (p.payload_r0 / (p.bandwidth_b * t1)) - 1
    assert mu.ul_slot_for_t1(c, t1, p) == pytest.approx(t1, rel=1e-12)


def test_slot_monotone_in_payload():
    a = mu.ul_slot_for_t1(2.0, 1.0, MultiUserParams(100e3, 50e3, (1.0,)))
    b = mu.ul_slot_for_t1(2.0, 1.0, MultiUserParams(100e3, 100e3, (1.0,)))
    assert b > a


def test_slot_matches_grid_oracle(rng):
    p = MultiUserParams(100e3, 50e3, (1.0,))
    for _ in range(100):
        c = 10 ** rng.uniform(-1, 2)
        t1 = p.delay_scale / c * (1 + 10 ** rng.uniform(-2, 2))
        t2 = mu.ul_slot_for_t1(c, t1, p)
        # dense log-grid scan followed by bisection between neighbours
        grid = np.geomspace(1e-8, 1e8, 20001)
        vals = 100e3 * grid * np.log2(1 + c * t1 / grid) - 50e3
        i = np.flatnonzero(np.diff(np.sign(vals)))[0]
        ref = orc.bisect(lambda t: 100e3 * t * math.log2(1 + c * t1 / t) - 50e3, grid[i], grid[i + 1])
        assert t2 == pytest.approx(ref, rel=1e-8)


def test_slot_infeasible_when_energy_too_small():
    p = MultiUserParams(100e3, 50e3, (1.0,))
    with pytest.raises(InfeasibleSlotError):
        mu.ul_slot_for_t1(1.0, 0.9 * p.delay_scale, p)


# ------------------------------------------------------------------ P5

def test_p5_single_node_is_p1(rng):
    for _ in range(20):
        a0, h = 10 ** rng.uniform(-0.5, 2), rng.gamma(4, 0.25) + 1e-2
        p = MultiUserParams(100e3, 50e3, (a0,))
        alloc = mu.solve_p5(p, [h])
        ref = su.solve_p1(su.SystemParams(100e3, 50e3, a0), h)
        assert alloc.t1 == pytest.approx(ref.t1, rel=1e-10)
        assert alloc.td == pytest.approx(ref.td, rel=1e-10)


def test_p5_symmetric_pair(two):
    alloc = mu.solve_p5(two, [0.9, 0.9])
    assert alloc.t2[0] == pytest.approx(alloc.t1 / 2, rel=1e-10)
    assert alloc.t2[1] == pytest.approx(alloc.t1 / 2, rel=1e-10)


def test_p5_matches_nested_bisection(rng):
    for _ in range(50):
        a = 10 ** rng.uniform(-0.5, 2, 2)
        h = rng.gamma(4, 0.25, 2) + 1e-2
        p = MultiUserParams(100e3, 50e3, tuple(a))
        ref = orc.p5_oracle(100e3, 50e3, list(a * h * h))
        assert mu.solve_p5(p, h).t1 == pytest.approx(ref, rel=1e-7)


def test_p5_constraints(rng):
    p = MultiUserParams.from_db((5.0, 10.0, 20.0))
    for _ in range(200):
        alloc = mu.solve_p5(p, rng.gamma(4, 0.25, 3) + 1e-3)
        assert abs(sum(alloc.t2) - alloc.t1) <= 1e-8 * alloc.t1
        np.testing.assert_allclose(alloc.rates, p.payload_r0, rtol=1e-8)


def test_p5_outer_map_strictly_decreasing(two):
    c = np.array([1.3, 4.0])
    t1s = np.geomspace(two.delay_scale / c.min() * 1.0001, 100, 200)
    g = [sum(mu.ul_slot_for_t1(ck, t, two) for ck in c) - t for t in t1s]
    assert np.all(np.diff(g) < 0)


# ------------------------------------------------------------------ P6 per realisation

def test_p6_inner_residuals(rng, two):
    for _ in range(100):
        h = rng.gamma(4, 0.25, 2) + 1e-2
        theta = 10 ** rng.uniform(-1.5, 0.5)
        alloc, state = mu.solve_p6_inner(two, h, theta)
        c = np.asarray(two.snr_a) * h * h
        r = mu.p6_residuals(two, c, theta, alloc.t1, alloc.t2, alloc.beta, state.lambda_list, state.mu)
        assert np.max(np.abs(r)) <= 1e-8
        assert abs(sum(alloc.t2) - alloc.t1) <= 1e-8 * alloc.t1
        assert all(lam > 0 for lam in state.lambda_list)


def test_p6_single_node_reproduces_p2(rng):
    p = MultiUserParams.from_db((5.0,))
    sp = su.SystemParams.from_db(5.0)
    for _ in range(20):
        h, theta = rng.gamma(4, 0.25) + 1e-2, 10 ** rng.uniform(-1.5, 0.5)
        alloc, _ = mu.solve_p6_inner(p, [h], theta)
        assert alloc.t2[0] == pytest.approx(alloc.t1, rel=1e-10)
        assert alloc.beta == pytest.approx(su.p2_beta(sp, h, theta), rel=1e-9)


def test_p6_matches_full_newton(rng, two):
    for _ in range(20):
        h = rng.gamma(4, 0.25, 2) + 5e-2
        theta = 10 ** rng.uniform(-1, 0.3)
        a, s = mu.solve_p6_inner(two, h, theta)
        b, t = mu.solve_p6_newton(two, h, theta)
        assert b.t1 == pytest.approx(a.t1, rel=1e-7)
        assert b.beta == pytest.approx(a.beta, rel=1e-7)
        assert t.mu == pytest.approx(s.mu, rel=1e-6, abs=1e-9)


def test_p6_minimises_the_lagrangian(rng, two):
    """Brute force over (t1, beta) with slots from the rate equalities."""
    for _ in range(10):
        h = rng.gamma(4, 0.25, 2) + 5e-2
        theta = 10 ** rng.uniform(-1, 0.3)
        c = np.asarray(two.snr_a) * h * h
        alloc, _ = mu.solve_p6_inner(two, h, theta)
        best = 2 * alloc.t1 + theta * alloc.beta

        def lagrangian(beta):
            # for fixed beta the sum constraint fixes t1 (P5 structure at c * beta)
            t1 = orc.p5_oracle(two.bandwidth_b, two.payload_r0, list(beta * c))
            return 2 * t1 + theta * beta

        _, brute = orc.golden(lagrangian, alloc.beta / 20, alloc.beta * 20)
        assert best <= brute * (1 + 1e-9)


def test_p6_not_worse_than_p5_when_power_boosted(rng, two):
    for _ in range(100):
        h = rng.gamma(4, 0.25, 2) + 1e-2
        alloc, _ = mu.solve_p6_inner(two, h, 0.3)
        if alloc.beta >= 1:
            assert alloc.td <= mu.solve_p5(two, h).td + 1e-9


def test_p6_theta_validation(two):
    with pytest.raises(DomainError):
        mu.solve_p6_inner(two, [1.0, 1.0], 0.0)


# ------------------------------------------------------------------ Newton

def test_damped_newton_solves_and_reports_divergence():
    x, r, steps = mu.damped_newton(lambda v: np.array([v[0] ** 2 - 2, v[0] * v[1] - 1]), [1.0, 1.0])
    assert x[0] == pytest.approx(math.sqrt(2), rel=1e-9) and np.max(np.abs(r)) <= 1e-8
    with pytest.raises(NewtonDivergenceError):
        mu.damped_newton(lambda v: np.array([v[0] ** 2 + 1.0]), [0.5])


# ------------------------------------------------------------------ sub-gradient

def test_subgradient_update_arithmetic():
    assert mu.subgradient_step(0.5, 0.1, 1.2) == pytest.approx(0.52)
    assert mu.subgradient_step(0.5, 0.1, 0.8) == pytest.approx(0.48)
    assert mu.subgradient_step(0.01, 1.0, 0.8) == 0.0
    assert mu.subgradient_step(0.7, 0.3, 1.0) == 0.7


def test_mean_beta_falls_as_theta_rises(two):
    h = np.random.default_rng(0).gamma(4, 0.25, (2000, 2)) + 1e-3
    c = np.asarray(two.snr_a) * h * h
    vals = [mu.mean_beta(two, c, th) for th in np.geomspace(0.05, 5, 12)]
    assert np.all(np.diff(vals) < 0)


def test_calibrate_theta(two):
    state = mu.calibrate_theta(two, 4000, seed=3)
    assert state.residual <= 1e-3
    assert all(th >= 0 for th, _ in state.trace)
    again = mu.calibrate_theta(two, 4000, seed=3)
    assert again.theta == state.theta and again.iteration == state.iteration


def test_single_node_theta_close_to_p2_multiplier():
    p = MultiUserParams.from_db((5.0,))
    theta = mu.calibrate_theta(p, 20_000, seed=1).theta
    mu_p2 = su.calibrate_mu_p2(su.SystemParams.from_db(5.0)).mu
    assert theta == pytest.approx(mu_p2, rel=0.05)


def test_calibration_failures(two):
    with pytest.raises(DomainError):
        mu.calibrate_theta(two, 500)
    with pytest.raises(CalibrationError) as err:
        mu.calibrate_theta(two, 2000, max_iter=2, theta0=1e-3)
    assert len(err.value.trace) == 2
    with pytest.raises(ConvergenceGuardError):
        mu.calibrate_theta(MultiUserParams.from_db((5.0, 5.0), m=2.0))


def test_p5_average_single_node_equals_p1():
    p = MultiUserParams.from_db((5.0,))
    st = mu.avg_td_p5(p, 100_000, seed=42)
    assert abs(st.mean - su.avg_td_p1(su.SystemParams.from_db(5.0)).mean) <= 3 * st.std_error
