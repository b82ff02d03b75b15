"""Minimum-delay time and power allocation for harvest-then-transmit links."""

__version__ = "0.1.0"

from ._backend import available_backends, backend_name, use_backend
from .channel import ChannelGain, FadingModel, LinkBudget, average_snr, gain_pdf, sample_gain
from .errors import (AccuracyError, CalibrationError, ConvergenceGuardError, DomainError,
                     NewtonDivergenceError, WpcError)
from .montecarlo import DelayStats, estimate
from .multi_user import (MultiUserAllocation, MultiUserParams, SubgradientState, avg_td_p5,
                         avg_td_p6, calibrate_theta, solve_p5, solve_p6_inner)
from .quadrature import ExpectationResult, check_convergence, expect
from .single_user import (Allocation, MultiplierState, SystemParams, avg_td_p1, avg_td_p2,
                          avg_td_p3, avg_td_p4, calibrate_mu_p2, calibrate_mu_p4_exact,
                          p2_beta, p4_approx_mu, p4_exact_beta, solve_p1, solve_p2, solve_p3,
                          solve_p4)
from .specfun import lambert_w0, log_gamma

__all__ = [name for name in dir() if not name.startswith("_")]
