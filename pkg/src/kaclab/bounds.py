"""Explicit constants and bound terms: admissible rates, the eight-term bound, tightness, upper rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .mixture import MixtureDecomposition, build_mixture
from .model import (DomainError, InitialLaw, ModelParams, RateSchedule, TailProfile, classify_tail,
                    default_epsilon, explosion_schedule, r_q)
from .montecarlo import interval_mass, sample_path
from .parallel import DEFAULT_CHUNK
from .stable import sine_integral_alpha, sine_integral_pi

__all__ = ["r_q", "AdmissibilityError", "InapplicableError", "BoundConstants", "admissible_constants",
           "BoundReport", "step3_terms", "MegaboundRow", "megabound_check", "tightness_constant",
           "tightness_radius", "RateRow", "upper_rate_terms", "xi_case1", "xi_case2"]

BERRY_ESSEEN = 24.0 / math.pi


class AdmissibilityError(ValueError):
    pass


class InapplicableError(ValueError):
    pass


# ---------------------------------------------------------------- constants

@dataclass(frozen=True)
class BoundConstants:
    alpha: float
    q: float
    sigma: float
    tau: float
    tau1: float
    tau2: float
    tau3: float
    tau4: float
    tau5: float
    delta: float = 0.5
    d_star: float = 0.1
    eta_frac: float = 0.5          # eta = eta_frac * a_m

    @property
    def R_q(self) -> float:
        return r_q(self.q)

    @property
    def Lambda(self) -> float:
        return min(self.sigma, 1.0 - 2.0 * self.R_q - self.q * self.sigma * self.alpha / 2.0)

    @property
    def tau_prime(self) -> float:
        return self.tau * self.sigma / 2.0

    @property
    def tau1pp(self) -> float:
        return min(self.tau2 / 2.0, self.tau3 / 4.0, self.alpha * self.tau4, self.tau5 / 2.0)

    @property
    def tau2pp(self) -> float:
        return 2.0 * self.tau1 / self.q

    @property
    def gamma(self) -> float:
        al, q, s = self.alpha, self.q, self.sigma
        Rq = self.R_q
        return min(1.0 - 2.0 * Rq - self.tau2pp * q / 2.0,
                   1.0 - 2.0 * r_q(4.0) - 2.0 * self.tau1pp,
                   self.Lambda - self.tau1pp / al,
                   1.0 - 2.0 * Rq - q * s * al / 2.0 - 2.0 * self.tau1pp)

    @property
    def sigma_exponent(self) -> float:
        # (2 - alpha - 2 tau + alpha tau / 2) sigma
        return (2.0 - self.alpha - 2.0 * self.tau + self.alpha * self.tau / 2.0) * self.sigma

    def intervals(self) -> dict:
        """Open admissibility interval of every free constant, given the others."""
        al, q = self.alpha, self.q
        Rq = self.R_q
        return {
            "sigma": (0.0, 2.0 * (1.0 - 2.0 * Rq) / (q * al)),
            "tau": (0.0, (2.0 - al) / 2.0),
            "tau1": (0.0, 1.0 - 2.0 * Rq),
            "tau2": (0.0, 1.0 - 2.0 * r_q(4.0)),
            "tau3": (0.0, 1.0 - 2.0 * r_q(6.0)),
            "tau4": (0.0, self.Lambda),
            "tau5": (0.0, 1.0 - q * self.sigma * al / 2.0 - 2.0 * Rq),
            "delta": (0.0, 1.0),
            "d_star": (0.0, 1.0),
            "eta_frac": (0.0, 1.0),
        }

    def validate(self) -> None:
        for name, (lo, hi) in self.intervals().items():
            v = getattr(self, name)
            if not lo < v < hi:
                raise AdmissibilityError(f"{name}={v!r} outside ({lo!r}, {hi!r})")
        if not self.Lambda > 0:
            raise AdmissibilityError(f"Lambda={self.Lambda!r} must be positive")
        if not self.gamma > 0:
            raise AdmissibilityError(f"gamma={self.gamma!r} must be positive")

    def schedule(self, epsilon_fn: Callable[[float], float] = default_epsilon) -> RateSchedule:
        return RateSchedule(self.tau_prime, self.tau1pp, self.tau2pp, self.delta, epsilon_fn)

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(R_q=self.R_q, Lambda=self.Lambda, gamma=self.gamma, tau_prime=self.tau_prime,
                 tau1pp=self.tau1pp, tau2pp=self.tau2pp)
        return d


_ORDER = ("sigma", "tau", "tau1", "tau2", "tau3", "tau4", "tau5")


def admissible_constants(params: ModelParams, q: float = 3.0, overrides: Optional[dict] = None,
                         delta: float = 0.5, d_star: float = 0.1) -> BoundConstants:
    """Every unspecified constant at the midpoint of its interval; overrides are validated."""
    if not q > 2:
        raise AdmissibilityError(f"q={q!r} must exceed 2")
    al = params.alpha
    if not al < 2:
        raise AdmissibilityError("the bound needs alpha < 2 (p > 0)")
    over = dict(overrides or {})
    unknown = set(over) - set(_ORDER) - {"delta", "d_star", "eta_frac"}
    if unknown:
        raise AdmissibilityError(f"unknown constant(s): {', '.join(sorted(unknown))}")
    base = {"delta": over.pop("delta", delta), "d_star": over.pop("d_star", d_star),
            "eta_frac": over.pop("eta_frac", 0.5)}
    c = BoundConstants(al, float(q), *([1.0] * len(_ORDER)), **base)
    # fill in dependency order: tau4 and tau5 depend on sigma through Lambda
    for name in _ORDER:
        if name in over:
            c = replace(c, **{name: float(over[name])})
        else:
            lo, hi = c.intervals()[name]
            c = replace(c, **{name: 0.5 * (lo + hi)})
    c.validate()
    return c


# ---------------------------------------------------------------- eight-term bound

@dataclass
class BoundReport:
    t: float
    m: int
    x: float
    terms: dict
    constants: dict = field(default_factory=dict)
    remainders: dict = field(default_factory=dict)
    mc_lhs: float = float("nan")
    mc_sigma: float = float("nan")

    @property
    def total(self) -> float:
        return float(sum(self.terms.values()))


def _exp_sum(*logs: float) -> float:
    s = sum(logs)
    return math.inf if s > 709.0 else math.exp(s)


def step3_terms(mix: MixtureDecomposition, consts: BoundConstants, t: float, x: float,
                eta: Optional[float] = None) -> BoundReport:
    """R_1 .. R_8 with their explicit constants C_i and remainders r_i at (t, m, x)."""
    al = mix.alpha
    if abs(al - consts.alpha) > 1e-15:
        raise DomainError("constants were built for a different alpha")
    a = mix.a_m
    eta = consts.eta_frac * a if eta is None else float(eta)
    if not 0 < eta < a:
        raise DomainError(f"eta={eta!r} must lie in (0, a_m={a!r})")
    ae = a - eta
    T = float(mix.law.tail(mix.x_m))
    c = mix.theta_m / (mix.x_m ** al * T)         # c_m = c(x_m)
    xm = mix.x_m
    q, s, dl, ds = consts.q, consts.sigma, consts.delta, consts.d_star
    Rq = consts.R_q
    S = sine_integral_alpha(al)                  # Gamma(1-alpha) cos(pi alpha / 2)
    Spi = sine_integral_pi(al)
    g1a = math.gamma(1.0 / al)
    pi = math.pi
    ef = math.exp(-consts.sigma_exponent * t)
    e7 = math.exp(-t * (1.0 - q * s * al / 2.0 - 2.0 * Rq))
    lTc = math.log(T * c)
    base = 1.0 + 2.0 ** al * T * (S + Spi)
    ratio = a / ae
    blow = xm ** (3 * al) * math.exp(-ae * xm ** al) / ae

    C, r, R = {}, {}, {}
    C["R1"] = 2.0 * (1.0 + 2.0 * pi) ** (2.0 * (al + 1.0)) / (al + 1.0)
    r["R1"] = eta / a
    R["R1"] = C["R1"] * T ** dl * (1.0 + r["R1"])

    C["R2"] = ((1.0 + 2.0 * pi) ** (q * al) * 2.0 ** ((3.0 - al) * q / 2.0) * al ** (q / 2.0)
               / ((3.0 * ds) ** (q / 2.0) * S ** (q / 2.0)))
    r["R2"] = base ** (q / 2.0) - 1.0
    R["R2"] = _exp_sum(math.log(C["R2"]), -t * (1.0 - 2.0 * Rq), -q * (2.0 - dl) / 2.0 * math.log(T),
                       -q / 2.0 * math.log(c), math.log1p(r["R2"]))

    C["R3_1"] = 2.0 ** (3.0 - al / 2.0) / (pi * al)
    r["R3_1"] = 2.0 ** (3.0 - al / 2.0) * ef / ae
    R["R3_1"] = C["R3_1"] * ef / ae * (1.0 + r["R3_1"])
    C["R3_2"] = 2.0 ** (6.0 - 2.0 * al) / (pi * al)
    r["R3_2"] = 1.0 / (2.0 ** (3.0 - al) * xm ** (2 * al)) + 1.0 / (ae * xm ** al)
    R["R3_2"] = C["R3_2"] * blow * (1.0 + r["R3_2"])
    C["R3_3"] = 2.0 ** (5.0 - al / 2.0) / (pi * al * (2.0 - al))
    r["R3_3"] = 2.0 ** (5.0 - al / 2.0) / (2.0 - al) * ef / ae
    R["R3_3"] = C["R3_3"] * ef / ae * (1.0 + r["R3_3"])
    C["R3_4"] = 2.0 ** 6 * pi ** (3.0 - 2.0 * al) / (al * (2.0 - al) ** 2)
    r["R3_4"] = (2.0 - al) / (8.0 * pi ** (2.0 - al) * xm ** (3 * al)) + 1.0 / (xm ** al * ae)
    R["R3_4"] = C["R3_4"] * blow * (1.0 + r["R3_4"])

    C["R4"] = 2.0 ** (4.0 - 2.0 * al) * 9.0 * al / (5.0 * pi * S ** 2)
    r["R4"] = base ** 2 * ratio ** 2 - 1.0
    R["R4"] = _exp_sum(math.log(C["R4"]), -t * (1.0 - 2.0 * r_q(4.0)), -2.0 * lTc, math.log1p(r["R4"]))

    C["R5"] = 3.0 ** 5 * 2.0 ** (8.0 - 4.0 * al) * al ** 3 / (25.0 * pi * S ** 4)
    r["R5"] = base ** 4 * ratio ** 4 - 1.0
    R["R5"] = _exp_sum(math.log(C["R5"]), -t * (1.0 - 2.0 * r_q(6.0)), -4.0 * lTc, math.log1p(r["R5"]))

    C["R6"] = (2.0 ** (3.0 / al) * BERRY_ESSEEN * g1a * al ** (1.0 / al)
               / (S ** (1.0 / al) * pi * al * ds ** (1.0 / al)))
    r["R6"] = base ** (1.0 / al) - 1.0
    R["R6"] = _exp_sum(math.log(C["R6"]), -consts.Lambda * t, -lTc / al, math.log1p(r["R6"]))

    base7 = 1.0 + 2.0 ** al * T * Spi
    C["R7_1"] = 3.0 * 2.0 ** (2.0 - al) / (pi * S)
    r["R7_1"] = base7 * ratio - 1.0
    R["R7_1"] = _exp_sum(math.log(C["R7_1"]), math.log(e7), -lTc, math.log1p(r["R7_1"]))
    C["R7_2"] = 9.0 * 2.0 ** (3.0 - 2.0 * al) * al / (pi * S ** 2)
    r["R7_2"] = base7 ** 2 * ratio ** 2 - 1.0
    R["R7_2"] = _exp_sum(math.log(C["R7_2"]), math.log(e7), -2.0 * lTc, math.log1p(r["R7_2"]))

    R["R8"] = (2.0 * x * g1a / (pi * al * a ** (1.0 / al))
               + 2.0 / pi * T ** ((1.0 - dl) / al) * g1a / (al * (1.0 + 2.0 * pi) ** 2))
    return BoundReport(float(t), mix.m, float(x), R, C, r)


@dataclass
class MegaboundRow:
    t: float
    m: int
    x: float
    mc_lhs: float
    mc_sigma: float
    central: float
    central_sigma: float
    bound_total: float

    @property
    def slack(self) -> float:
        return self.bound_total - self.mc_lhs

    @property
    def vacuous(self) -> bool:
        return not self.bound_total <= 1.0

    @property
    def holds(self) -> bool:
        return self.vacuous or self.mc_lhs <= self.bound_total + 3.0 * self.mc_sigma


def megabound_check(law: InitialLaw, profile: TailProfile, params: ModelParams,
                    consts: BoundConstants, t_grid: Sequence[float], n_samples: int, seed: int = 0,
                    chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
                    epsilon_fn: Callable[[float], float] = default_epsilon) -> list[MegaboundRow]:
    """Monte Carlo 2 mu([0, x(t)], t) against the eight-term total at m(t), x(t)."""
    sched = consts.schedule(epsilon_fn)
    ts = [float(t) for t in t_grid]
    ems = sample_path(ts, law, params, n_samples, seed, chunk_size, threads)
    rows = []
    mixes = {}
    nan = float("nan")
    for t, em in zip(ts, ems):
        sv = explosion_schedule(profile, law, params, sched, t)
        if not sv.available:
            rows.append(MegaboundRow(t, 0, nan, nan, nan, nan, nan, nan))
            continue
        if sv.m not in mixes:
            mixes[sv.m] = build_mixture(law, profile, sv.m, params)
        rep = step3_terms(mixes[sv.m], consts, t, sv.x)
        half, half_s = interval_mass(em, 0.0, sv.x)
        cen, cen_s = interval_mass(em, -sv.x, sv.x)
        rows.append(MegaboundRow(t, sv.m, sv.x, 2.0 * half, 2.0 * half_s, cen, cen_s, rep.total))
    return rows


# ---------------------------------------------------------------- tightness

def tightness_constant(alpha: float, split: float = 1.0) -> float:
    """A = int_0^s u^(1-alpha)/6 du + int_s^inf (1+u)/u^(alpha+2) du, by quadrature."""
    if not 0 < alpha < 2:
        raise DomainError("alpha must lie in (0, 2)")
    if not split > 0:
        raise DomainError("split must be positive")
    head = integrate.quad(lambda u: u ** (1.0 - alpha) / 6.0, 0.0, split, epsabs=1e-14, epsrel=1e-12)[0]
    tail = integrate.quad(lambda u: (1.0 + u) / u ** (alpha + 2.0), split, np.inf,
                          epsabs=1e-14, epsrel=1e-12)[0]
    return head + tail


def tightness_radius(law: InitialLaw, params: ModelParams, eps: float, split: float = 1.0,
                     probe_grid=None) -> float:
    """C_eps = (13/5 M A (1+2 pi)^2 / eps)^(1/alpha) with M = sup rho."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    al = params.alpha
    if not al < 2:
        raise InapplicableError("the radius needs alpha < 2")
    tc = classify_tail(law, params, probe_grid)
    if tc.kind == "ultra_heavy":
        raise InapplicableError("rho is unbounded (ultra heavy tail): no finite radius")
    M = max(float(np.max(tc.trace)), tc.estimate)
    if M == 0.0:
        return 0.0
    A = tightness_constant(al, split)
    return (2.6 * M * A * (1.0 + 2.0 * math.pi) ** 2 / eps) ** (1.0 / al)


# ---------------------------------------------------------------- upper rates

def xi_case1(params: ModelParams, beta: float, consts: BoundConstants, C_prime: float = 1.0,
             eps1: Callable[[float], float] = default_epsilon) -> Callable[[float], float]:
    """xi(t) = C' eps1(t)^(-1/beta) exp(t [2 R_(2 beta/alpha) - 1 + B (alpha - beta) beta alpha] / beta)."""
    al = params.alpha
    if not 0 < beta < al:
        raise DomainError("case 1 needs 0 < beta < alpha")
    B = min(consts.tau_prime, consts.schedule().tau_pp / beta)
    rate = (2.0 * r_q(2.0 * beta / al) - 1.0 + B * (al - beta) * beta * al) / beta

    def xi(t: float) -> float:
        return C_prime * eps1(t) ** (-1.0 / beta) * math.exp(t * rate)
    return xi


def xi_case2(params: ModelParams, c2: float = 1.0,
             eps1: Callable[[float], float] = default_epsilon) -> Callable[[float], float]:
    """xi(t) = c'' t^(1/alpha) / eps1(t)."""
    al = params.alpha

    def xi(t: float) -> float:
        return c2 * t ** (1.0 / al) / eps1(t)
    return xi


@dataclass
class RateRow:
    t: float
    xi: float
    term1: float
    term2: float


def upper_rate_terms(law: InitialLaw, params: ModelParams, xi_fn: Callable[[float], float],
                     eps: float, tau_small: float, t_grid: Sequence[float]) -> list[RateRow]:
    """The two degenerate-convergence expectations at scale xi(t), from E sum |beta|^g in closed form.

    Pareto laws use the exact power-tail expressions; slow-log laws use the
    logarithmic upper bounds, valid once tau xi >= 1 and eps xi >= x0.
    """
    al = params.alpha
    rows = []
    for t in (float(v) for v in t_grid):
        xi = float(xi_fn(t))
        if law.kind == "pareto_symmetric":
            b = law.beta
            mom = math.exp(t * (2.0 * r_q(2.0 * b / al) - 1.0))
            term1 = 2.0 / (eps * xi) ** b * mom
            term2 = tau_small ** (2.0 - b) * b / ((2.0 - b) * xi ** b) * mom
        elif law.kind == "slow_log_tail":
            if abs(law.a - al) > 1e-12:
                raise InapplicableError("slow-log law must have exponent alpha")
            if tau_small * xi < 1.0 or eps * xi < law.x0:
                raise DomainError(f"need tau xi >= 1 and eps xi >= x0 at t={t!r}")
            ex = eps * xi
            drift = t * (2.0 * r_q(1.0) - 1.0)
            term1 = 2.0 * math.log(ex) / ex ** al + 4.0 * drift / (al * ex ** al)
            term2 = (law.x0 ** 2 * math.exp(t * (2.0 * r_q(4.0 / al) - 1.0)) / xi ** 2
                     + 2.0 * al * tau_small ** (2.0 - al) / ((2.0 - al) * xi ** al)
                     * (math.log(tau_small * xi) + (2.0 / al) * drift))
        else:
            raise InapplicableError(f"no rate terms for law kind {law.kind!r}")
        rows.append(RateRow(t, xi, term1, term2))
    return rows
