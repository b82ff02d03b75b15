import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import bisect
from wpcdelay.errors import DomainError
from wpcdelay.specfun import lambert_w0, lambert_w0_array, log_gamma


@pytest.mark.parametrize("x, w", [(0.0, 0.0), (math.e, 1.0), (-1.0 / math.e, -1.0)])
def test_lambert_fixed_points(x, w):
    assert lambert_w0(x) == pytest.approx(w, abs=1e-14)


def test_lambert_ten_matches_bisection():
    ref = bisect(lambda w: w * math.exp(w) - 10.0, 0.0, 10.0)
    assert lambert_w0(10.0) == pytest.approx(ref, rel=1e-13)


def test_lambert_branch_slack_and_domain():
    assert lambert_w0(-1.0 / math.e - 5e-13) == -1.0
    with pytest.raises(DomainError):
        lambert_w0(-1.0 / math.e - 1e-11)
    with pytest.raises(DomainError):
        lambert_w0_array([0.0, -1.0])
    with pytest.raises(DomainError):
        lambert_w0(float("nan"))


def test_lambert_residual_on_dense_grid(backend):
    x = np.concatenate([-1 / math.e + np.geomspace(1e-15, 0.3, 2000),
                        np.linspace(-0.06, 0.06, 501), np.geomspace(1e-300, 1e6, 3000)])
    w = lambert_w0_array(x)
    resid = np.abs(w * np.exp(w) - x)
    assert np.all(resid <= 1e-12 * np.maximum(1.0, np.abs(x)))
    assert np.all(w >= -1.0)


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=-1 / math.e, max_value=1e6))
def test_lambert_residual_property(x):
    w = lambert_w0(x)
    assert abs(w * math.exp(w) - x) <= 1e-12 * max(1.0, abs(x))


def test_lambert_strictly_increasing():
    x = np.sort(np.concatenate([-1 / math.e + np.geomspace(1e-12, 0.3, 400), np.geomspace(1e-6, 1e6, 400)]))
    assert np.all(np.diff(lambert_w0_array(x)) > 0)


def test_lambert_matches_scipy_principal_branch():
    from scipy.special import lambertw
    x = np.geomspace(1e-8, 1e5, 200)
    np.testing.assert_allclose(lambert_w0_array(x), lambertw(x).real, rtol=1e-13)


@pytest.mark.parametrize("x, ref", [(1.0, 0.0), (5.0, math.log(24.0)), (0.5, math.log(math.sqrt(math.pi)))])
def test_log_gamma_values(x, ref):
    assert log_gamma(x) == pytest.approx(ref, rel=1e-12, abs=1e-15)


def test_log_gamma_recurrence():
    for x in np.linspace(0.5, 50, 200):
        lhs = math.exp(log_gamma(x + 1))
        assert lhs == pytest.approx(x * math.exp(log_gamma(x)), rel=1e-10)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_log_gamma_domain(x):
    with pytest.raises(DomainError):
        log_gamma(x)
