"""Split of F0* into an attracted part G1 (pure power tails) and a remainder G2."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .model import DomainError, InitialLaw, ModelParams, Tabulated, TailProfile, _check_u
from .montecarlo import EmpiricalMeasure
from .parallel import DEFAULT_CHUNK, run_chunks
from .stable import (cosine_tail_integral, sine_integral_alpha, sine_integral_partial,
                     sine_integral_pi, sine_integral_quadrature)

COND2_PER_DECADE = 200
COND2_DECADES = 6


class InvalidProfileError(ValueError):
    pass


class UnsupportedLawError(TypeError):
    pass


@dataclass
class MixtureDecomposition:
    m: int
    x_m: float
    theta_m: float
    inv_K1: float
    law: InitialLaw
    params: ModelParams

    @property
    def K1(self) -> float:
        return 1.0 / self.inv_K1

    @property
    def inv_K2(self) -> float:
        return 1.0 - self.inv_K1

    @property
    def K2(self) -> float:
        return math.inf if self.inv_K2 == 0 else 1.0 / self.inv_K2

    @property
    def alpha(self) -> float:
        return self.params.alpha

    @property
    def edge(self) -> float:
        # K1 theta / (alpha x_m^alpha) = G1(-x_m) = 1 - G1(x_m)
        return self.K1 * self._tail_unit(self.x_m)

    def _tail_unit(self, y):
        return self.theta_m / (self.alpha * np.asarray(y, dtype=float) ** self.alpha)

    @property
    def a_m(self) -> float:
        return (2.0 / self.alpha) * self.K1 * self.theta_m * sine_integral_alpha(self.alpha)

    def a_m_quadrature(self) -> float:
        return (2.0 / self.alpha) * self.K1 * self.theta_m * sine_integral_quadrature(self.alpha)

    def k_m(self, delta: float = 0.5) -> float:
        if not 0 < delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        tail = float(self.law.tail(self.x_m))
        return self.a_m ** (1.0 / self.alpha) * tail ** ((1.0 - delta) / self.alpha)

    def A_m(self, delta: float = 0.5) -> float:
        return self.k_m(delta) / (1.0 + 2.0 * math.pi) ** 2

    # ------------------------------------------------------------ CDFs

    def _g1_middle(self, x):
        F = np.asarray(self.law.cdf(x), dtype=float)
        return self.K1 * (F + self._tail_unit(self.x_m) + float(self.law.cdf(self.x_m)) - 1.0)

    def _g2_left(self, x):
        F = np.asarray(self.law.cdf(x), dtype=float)
        return self.K2 * (F - self._tail_unit(-np.asarray(x, dtype=float)))

    def _g2_right(self, x):
        F = np.asarray(self.law.cdf(x), dtype=float)
        xm = self.x_m
        shift = 1.0 - 2.0 * float(self.law.cdf(xm)) - 2.0 * float(self._tail_unit(xm))
        return self.K2 * (F + self._tail_unit(x) + shift)

    def G1(self, x):
        x = np.asarray(x, dtype=float)
        xm = self.x_m
        with np.errstate(divide="ignore", invalid="ignore"):
            left = self.K1 * self._tail_unit(np.where(x < -xm, -x, xm))
            right = 1.0 - self.K1 * self._tail_unit(np.where(x >= xm, x, xm))
        out = np.where(x < -xm, left, np.where(x >= xm, right, self._g1_middle(x)))
        return float(out) if out.ndim == 0 else out

    def G2(self, x):
        if self.inv_K2 == 0:
            raise DomainError("G2 is undefined when 1/K1 = 1")
        x = np.asarray(x, dtype=float)
        xm = self.x_m
        with np.errstate(divide="ignore", invalid="ignore"):
            left = self._g2_left(np.where(x < -xm, x, -xm))
            right = self._g2_right(np.where(x >= xm, x, xm))
        out = np.where(x < -xm, left, np.where(x >= xm, right, 0.5))
        return float(out) if out.ndim == 0 else out

    # ------------------------------------------------------------ quantiles

    def G1_quantile(self, u):
        u = _check_u(u)
        e = self.edge
        kt = self.K1 * self.theta_m / self.alpha
        out = np.empty_like(u)
        lo = u < e
        hi = u >= 1.0 - e
        mid = ~(lo | hi)
        with np.errstate(divide="ignore"):
            out[lo] = -(kt / u[lo]) ** (1.0 / self.alpha)
            out[hi] = (kt / (1.0 - u[hi])) ** (1.0 / self.alpha)
        level = u[mid] / self.K1 - float(self._tail_unit(self.x_m)) - float(self.law.cdf(self.x_m)) + 1.0
        out[mid] = self.law.quantile(np.clip(level, 0.0, 1.0))
        return out

    def G2_quantile(self, u):
        if self.inv_K2 == 0:
            raise DomainError("G2 is undefined when 1/K1 = 1")
        u = _check_u(u)
        out = np.empty_like(u)
        low = u <= 0.5
        out[low] = -self._g2_depth(u[low])
        out[~low] = self._g2_depth(1.0 - u[~low])
        return out

    def _g2_depth(self, u):
        # y >= x_m with K2 [F(-y) - theta/(alpha y^alpha)] = u, by bisection in log y
        xm = self.x_m
        y = np.full(u.shape, xm)
        if u.size == 0:
            return y

        def h(v):
            return self._g2_left(-v)

        at_edge = u >= 0.5
        lo = np.full(u.shape, math.log(xm))
        hi = lo + math.log(2.0)
        for _ in range(2000):
            need = (h(np.exp(hi)) > u) & (u > 0)
            if not np.any(need):
                break
            lo = np.where(need, hi, lo)
            hi = np.where(need, hi + (hi - math.log(xm)) + math.log(2.0), hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            above = h(np.exp(mid)) > u
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
            if np.all(hi - lo <= 1e-14):
                break
        y = np.exp(hi)
        y = np.where(u <= 0, np.inf, y)
        return np.where(at_edge, xm, y)

    # ------------------------------------------------------------ checks

    def check_grid(self) -> np.ndarray:
        xm = self.x_m
        outer = np.geomspace(xm, xm * 10.0 ** COND2_DECADES, COND2_PER_DECADE * COND2_DECADES + 1)
        inner = np.linspace(-xm, xm, 801)
        return np.unique(np.concatenate([-outer, inner, outer, [0.0]]))

    def validate(self, grid=None) -> None:
        """CDF validity, continuity at +-x_m and the mixture identity; raise on failure."""
        g = self.check_grid() if grid is None else np.asarray(grid, dtype=float)
        xm = self.x_m
        mid_edge = self._g1_middle(np.array([-xm, np.nextafter(xm, 0.0)]))
        if float(mid_edge[0]) < -1e-12:
            raise InvalidProfileError(f"G1 middle branch negative at x={-xm!r}")
        gaps = [abs(float(mid_edge[0]) - self.edge),
                abs(float(mid_edge[1]) - (1.0 - self.edge))]
        comps = [("G1", self.G1)]
        if self.inv_K2 > 0:
            comps.append(("G2", self.G2))
            gaps += [abs(float(self._g2_left(np.array(-xm))) - 0.5),
                     abs(float(self._g2_right(np.array(xm))) - 0.5)]
        if max(gaps) > 1e-10:
            raise InvalidProfileError(f"components discontinuous at +-x_m (gap {max(gaps):.3e})")
        for name, G in comps:
            v = np.asarray(G(g))
            if np.any(v < -1e-12) or np.any(v > 1 + 1e-12):
                raise InvalidProfileError(f"{name} leaves [0, 1]")
            drop = np.diff(v)
            if np.any(drop < -1e-12):
                x = g[int(np.flatnonzero(drop < -1e-12)[0]) + 1]
                raise InvalidProfileError(f"{name} decreases at x={x!r}")
        res = mixture_identity_residual(self, g)
        if res >= 1e-12:
            raise InvalidProfileError(f"mixture identity residual {res:.3e}")


# ---------------------------------------------------------------- construction

def check_cond2(law: InitialLaw, theta: float, x_m: float, params: ModelParams) -> Optional[float]:
    """First y on the probe grid where F0*(-y) - theta/(alpha y^alpha) increases, else None."""
    y = np.geomspace(x_m, x_m * 10.0 ** COND2_DECADES, COND2_PER_DECADE * COND2_DECADES + 1)
    h = np.asarray(law.cdf(-y), dtype=float) - theta / (params.alpha * y ** params.alpha)
    bad = np.flatnonzero(np.diff(h) > 1e-15)
    return None if bad.size == 0 else float(-y[bad[0] + 1])


def build_mixture(law: InitialLaw, profile: TailProfile, m: int, params: ModelParams,
                  validate: bool = True) -> MixtureDecomposition:
    xm = profile.x(m)
    theta = profile.theta(m, law, params)
    al = params.alpha
    if not theta > 0:
        raise InvalidProfileError(f"theta_m = {theta!r} must be positive")
    inv_k1 = 2.0 * theta / (al * xm ** al) + 2.0 * float(law.cdf(xm)) - 1.0
    if not 0 < inv_k1 <= 1 + 1e-15:
        raise InvalidProfileError(f"1/K1 = {inv_k1!r} outside (0, 1]; c(x_m) must lie in (0, alpha]")
    inv_k1 = min(inv_k1, 1.0)
    bad = check_cond2(law, theta, xm, params)
    if bad is not None:
        raise InvalidProfileError(f"profile condition fails at x={bad!r}: "
                                  "F0*(x) - theta/(alpha |x|^alpha) decreases there")
    mix = MixtureDecomposition(m, float(xm), float(theta), float(inv_k1), law, params)
    if validate:
        mix.validate()
    return mix


def mixture_identity_residual(mix: MixtureDecomposition, grid) -> float:
    g = np.asarray(grid, dtype=float)
    lhs = mix.inv_K1 * np.asarray(mix.G1(g))
    if mix.inv_K2 > 0:
        lhs = lhs + mix.inv_K2 * np.asarray(mix.G2(g))
    return float(np.max(np.abs(lhs - np.asarray(mix.law.cdf(g)))))


_WHICH = {"U": 0, "Z": 1, "mixed": 2}


def sample_component(mix: MixtureDecomposition, which: str, n_samples: int, seed: int = 0,
                     chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> EmpiricalMeasure:
    """Inverse-CDF draws from G1 ('U'), G2 ('Z') or the Bernoulli(1/K1) mixture ('mixed')."""
    if which not in _WHICH:
        raise ValueError(f"which must be one of {sorted(_WHICH)}")

    def work(gen, size):
        if which == "U":
            return mix.G1_quantile(gen.random(size))
        if which == "Z":
            return mix.G2_quantile(gen.random(size))
        b = gen.random(size) < mix.inv_K1
        u = gen.random(size)
        out = np.empty(size)
        out[b] = mix.G1_quantile(u[b])
        out[~b] = mix.G2_quantile(u[~b])
        return out

    v = np.concatenate(run_chunks(work, n_samples, seed, chunk_size, threads, key=(5, _WHICH[which])))
    meta = {"component": which, "m": mix.m, "x_m": mix.x_m, "chunk_size": chunk_size}
    return EmpiricalMeasure.from_unsorted(v, seed, meta)


# ---------------------------------------------------------------- Fourier side

def _blocked_quad(f, edges, period: float) -> float:
    # quad over consecutive edges, cutting long pieces into blocks of 32 periods
    total = 0.0
    block = 32.0 * period
    for a, b in zip(edges[:-1], edges[1:]):
        n = max(int(math.ceil((b - a) / block)), 1)
        cuts = np.linspace(a, b, n + 1)
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            total += integrate.quad(f, lo, hi, limit=400, epsabs=1e-12, epsrel=1e-10)[0]
    return total


def _core_cf(law: InitialLaw, xi: float, xm: float) -> float:
    # int over (-x_m, x_m) of cos(xi x) dF0*(x)
    if isinstance(law, Tabulated):
        a = np.clip(law.x[:-1], -xm, xm)
        b = np.clip(law.x[1:], -xm, xm)
        total = float(np.sum(law._slopes * (np.sin(xi * b) - np.sin(xi * a)))) / xi
        for x0, w in ((law.x[0], law.F[0]), (law.x[-1], 1.0 - law.F[-1])):
            if -xm < x0 < xm:
                total += w * math.cos(xi * x0)
        return total
    if not law.has_density:
        raise UnsupportedLawError(f"{law.kind} law has no density on the core")
    pts = sorted(b for b in law._breaks if 0 < b < xm)
    edges = [0.0] + pts + [xm]
    core = _blocked_quad(lambda x: math.cos(xi * x) * float(law.density(x)), edges,
                         2.0 * math.pi / xi)
    return 2.0 * core


def g1m_hat(mix: MixtureDecomposition, xi: float) -> float:
    """int cos(xi x) dG1(x): K1 f0* on the core plus the power-law tails."""
    xi = abs(float(xi))
    if xi == 0.0:
        return 1.0
    al = mix.alpha
    core = mix.K1 * _core_cf(mix.law, xi, mix.x_m)
    tail = 2.0 * mix.K1 * mix.theta_m * xi ** al * cosine_tail_integral(al + 1.0, xi * mix.x_m)
    return float(core + tail)


def v_m_eval(mix: MixtureDecomposition, xi: float) -> float:
    """Remainder v_m with 1 - g1m_hat(xi) = (a_m + v_m(xi)) xi^alpha."""
    xi = abs(float(xi))
    if not xi > 0:
        raise DomainError("xi must be positive")
    al = mix.alpha
    K1 = mix.K1
    shift = float(mix.law.cdf(mix.x_m)) - 1.0 + mix.theta_m / (al * mix.x_m ** al)
    top = xi * mix.x_m

    def integrand(u):
        return math.sin(u) * (1.0 - K1 * (float(mix.law.cdf(u / xi)) + shift))

    pts = sorted(xi * b for b in getattr(mix.law, "_breaks", ()) if 0 < b < mix.x_m)
    if isinstance(mix.law, Tabulated):
        pts = sorted(xi * b for b in mix.law.x if 0 < b < mix.x_m)
    edges = [0.0] + pts + [top]
    first = _blocked_quad(integrand, edges, 2.0 * math.pi)
    second = (2.0 / al) * K1 * mix.theta_m * sine_integral_partial(al, top)
    return float(2.0 * first / xi ** al - second)


def v_m_bound(mix: MixtureDecomposition) -> float:
    """2^(1-alpha) x_m^alpha + (2/alpha) K1 theta_m Si_alpha(pi)."""
    al = mix.alpha
    return 2.0 ** (1.0 - al) * mix.x_m ** al + (2.0 / al) * mix.K1 * mix.theta_m * sine_integral_pi(al)


def v_m_sup(mix: MixtureDecomposition, grid=None) -> float:
    g = np.geomspace(1e-3, 10.0, 41) if grid is None else np.asarray(grid, dtype=float)
    return max(abs(v_m_eval(mix, v)) for v in g)


def lemma_residual(mix: MixtureDecomposition, xi: float) -> float:
    """|1 - g1m_hat(xi) - (a_m + v_m(xi)) xi^alpha|."""
    return float(abs(1.0 - g1m_hat(mix, xi) - (mix.a_m + v_m_eval(mix, xi)) * xi ** mix.alpha))
