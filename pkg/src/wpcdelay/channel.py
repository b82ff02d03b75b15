"""Nakagami-m unit-mean power gain: density, sampling and link-budget SNR."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .specfun import log_gamma

#: Draws at or below this gain are redrawn in averaging paths.
MIN_GAIN = 1e-10


@dataclass(frozen=True)
class FadingModel:
    """Nakagami fading order; the power gain is Gamma(m, 1/m)."""

    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise DomainError(f"fading order must be positive, got {self.m!r}")


@dataclass(frozen=True)
class ChannelGain:
    """One realisation of the channel power gain h = |h0|^2."""

    h: float

    def __post_init__(self):
        if not self.h >= 0:
            raise DomainError(f"channel gain must be non-negative, got {self.h!r}")

    def __float__(self):
        return float(self.h)


@dataclass(frozen=True)
class LinkBudget:
    eta: float
    p_h: float
    d: float
    alpha: float
    sigma2: float

    def __post_init__(self):
        for name in ("eta", "p_h", "d", "alpha", "sigma2"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.eta > 1:
            raise DomainError("harvesting efficiency eta must be <= 1")


def gain_pdf(x: float, fading: FadingModel) -> float:
    """Density m^m x^(m-1) e^(-m x) / Gamma(m) of the unit-mean gain."""
    if not x > 0:
        raise DomainError(f"gain_pdf requires x > 0, got {x!r}")
    return float(gain_pdf_array(np.array([x]), fading)[0])


def gain_pdf_array(x, fading: FadingModel):
    """Vectorised density, evaluated in log space; zero where it underflows."""
    m = fading.m
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        logf = m * np.log(m) - log_gamma(m) + (m - 1.0) * np.log(x) - m * x
    return np.where(x > 0, np.exp(logf), 0.0)


def sample_gains(fading: FadingModel, rng: np.random.Generator, size, floor: float = 0.0):
    """Gamma(shape=m, scale=1/m) draws; entries <= floor are redrawn."""
    h = rng.gamma(fading.m, 1.0 / fading.m, size=size)
    bad = h <= floor
    while np.any(bad):
        h[bad] = rng.gamma(fading.m, 1.0 / fading.m, size=int(bad.sum()))
        bad = h <= floor
    return h


def sample_gain(fading: FadingModel, rng: np.random.Generator) -> ChannelGain:
    """One unit-mean Nakagami-m power gain; the measure-zero h = 0 is redrawn."""
    return ChannelGain(float(sample_gains(fading, rng, 1)[0]))


def average_snr(link: LinkBudget) -> float:
    """a0 = eta * P_h * d^(-2 alpha) / sigma^2, linear."""
    return link.eta * link.p_h * link.d ** (-2.0 * link.alpha) / link.sigma2


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * np.log10(x)
