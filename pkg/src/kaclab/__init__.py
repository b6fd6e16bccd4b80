"""Inelastic Kac caricature: trees, Monte Carlo, Fourier solver, stable laws, mixtures and bounds."""

from .model import (Cauchy, ExpPowerTail, Gaussian, InitialLaw, LogPowerTail, ModelParams,
                    ParetoSymmetric, PointMass, SlowLogTail, Tabulated, TailProfile, classify_tail,
                    explosion_schedule, load_table, make_law, r_q, rho)
from .stable import StableLaw, a0_from_c0, kolmogorov_distance, sine_integral_alpha, stable_cdf

__version__ = "0.1.0"
