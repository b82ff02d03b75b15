import math

import numpy as np
import pytest
from scipy import integrate

from wpcdelay.channel import (ChannelGain, FadingModel, LinkBudget, average_snr, db_to_linear,
                              gain_pdf, gain_pdf_array, linear_to_db, sample_gain, sample_gains)
from wpcdelay.errors import DomainError
from wpcdelay.quadrature import expect


def test_pdf_exponential_case():
    assert gain_pdf(1.0, FadingModel(1.0)) == pytest.approx(math.exp(-1), rel=1e-14)
    assert gain_pdf(2.0, FadingModel(1.0)) == pytest.approx(math.exp(-2), rel=1e-14)


def test_pdf_m4_value_and_mass():
    assert gain_pdf(1.0, FadingModel(4.0)) == pytest.approx(256 * math.exp(-4) / 6, rel=1e-13)
    mass = integrate.quad(lambda x: gain_pdf(x, FadingModel(4.0)), 0, np.inf)[0]
    assert mass == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("m", [2.5, 4.0, 10.0])
def test_pdf_unit_mass_via_quadrature(m):
    res = expect(lambda x: np.ones_like(x), FadingModel(m))
    assert abs(res.value - 1.0) <= 1e-8


def test_pdf_domain():
    with pytest.raises(DomainError):
        gain_pdf(0.0, FadingModel(4.0))
    with pytest.raises(DomainError):
        gain_pdf(-1.0, FadingModel(4.0))
    assert gain_pdf_array(np.array([0.0, -1.0]), FadingModel(4.0)).tolist() == [0.0, 0.0]


@pytest.mark.parametrize("m", [0.0, -1.0, float("nan")])
def test_fading_model_rejects_non_positive(m):
    with pytest.raises(DomainError):
        FadingModel(m)


def test_sample_moments_m4():
    h = sample_gains(FadingModel(4.0), np.random.default_rng(7), 10**6)
    assert h.mean() == pytest.approx(1.0, abs=0.01)
    assert (h * h).mean() == pytest.approx(1.25, abs=0.02)


@pytest.mark.parametrize("m", [0.3, 1.0, 2.5, 7.5])
def test_sample_mean_within_three_standard_errors(m):
    h = sample_gains(FadingModel(m), np.random.default_rng(11), 200_000)
    se = h.std(ddof=1) / math.sqrt(h.size)
    assert abs(h.mean() - 1.0) <= 3 * se


def test_ks_against_integrated_density():
    fading = FadingModel(4.0)
    n = 10**5
    h = np.sort(sample_gains(fading, np.random.default_rng(3), n))
    # CDF on a fine grid by integrating the density panel by panel
    grid = np.concatenate([[0.0], np.geomspace(1e-6, h[-1] * 1.01, 4000)])
    pieces = [integrate.quad(lambda x: gain_pdf(x, fading) if x > 0 else 0.0, a, b)[0]
              for a, b in zip(grid[:-1], grid[1:])]
    cdf_grid = np.concatenate([[0.0], np.cumsum(pieces)])
    cdf = np.interp(h, grid, cdf_grid)
    ecdf_hi = np.arange(1, n + 1) / n
    ecdf_lo = np.arange(0, n) / n
    d = max(np.max(ecdf_hi - cdf), np.max(cdf - ecdf_lo))
    assert d < 1.628 / math.sqrt(n)


def test_sample_gain_is_positive_and_seeded():
    a = sample_gain(FadingModel(4.0), np.random.default_rng(5))
    b = sample_gain(FadingModel(4.0), np.random.default_rng(5))
    assert isinstance(a, ChannelGain) and a.h > 0 and a == b
    assert float(a) == a.h


def test_floor_redraws():
    h = sample_gains(FadingModel(0.05), np.random.default_rng(1), 10_000, floor=1e-10)
    assert np.all(h > 1e-10)


@pytest.mark.parametrize("budget", [(1, 1, 1, 2, 1), (0.5, 2, 1, 2, 1), (1, 1, 2, 1, 0.25)])
def test_average_snr_unity_examples(budget):
    assert average_snr(LinkBudget(*budget)) == pytest.approx(1.0, rel=1e-15)


def test_average_snr_homogeneous_in_power():
    base = LinkBudget(0.7, 1.3, 3.0, 1.5, 1e-3)
    doubled = LinkBudget(0.7, 2.6, 3.0, 1.5, 1e-3)
    assert average_snr(doubled) == 2 * average_snr(base)


@pytest.mark.parametrize("field, value", [("eta", 0.0), ("eta", 1.5), ("p_h", -1.0), ("d", 0.0),
                                          ("alpha", 0.0), ("sigma2", 0.0)])
def test_link_budget_validation(field, value):
    kw = dict(eta=0.5, p_h=1.0, d=1.0, alpha=2.0, sigma2=1.0)
    kw[field] = value
    with pytest.raises(DomainError):
        LinkBudget(**kw)


def test_db_round_trip():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert linear_to_db(db_to_linear(5.0)) == pytest.approx(5.0)
    with pytest.raises(DomainError):
        ChannelGain(-1.0)
