"""Model parameters, symmetric initial laws, tail functionals and explosion schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .stable import sine_integral_alpha, sine_tail_integral


class InvalidCDFError(ValueError):
    pass


class SamplingError(RuntimeError):
    pass


class InsufficientProbeError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Inelasticity index p >= 0 and the matching stability index alpha = 2/(1+p)."""

    p: float

    def __post_init__(self):
        if not (self.p >= 0 and math.isfinite(self.p)):
            raise ValueError(f"p must be a finite real >= 0, got {self.p}")

    @property
    def alpha(self) -> float:
        return 2.0 / (1.0 + self.p)

    @classmethod
    def from_alpha(cls, alpha: float) -> "ModelParams":
        if not 0 < alpha <= 2:
            raise ValueError("alpha must lie in (0, 2]")
        return cls(2.0 / alpha - 1.0)

    @property
    def p_int(self) -> int:
        # integer exponents get the multiply-only path in the kernels
        return int(self.p) if float(self.p).is_integer() and self.p < 64 else -1


def r_q(q: float) -> float:
    """R_q = Gamma(q/2 + 1/2) / (sqrt(pi) Gamma(q/2 + 1)), the mean of |cos theta|^q."""
    if not q > 0:
        raise DomainError("q must be positive")
    return math.exp(special.gammaln(0.5 * q + 0.5) - special.gammaln(0.5 * q + 1.0)) / math.sqrt(math.pi)


def c_p(theta, p):
    c = np.cos(theta)
    return c * np.abs(c) ** p


def s_p(theta, p):
    s = np.sin(theta)
    return s * np.abs(s) ** p


# ---------------------------------------------------------------- laws

class InitialLaw:
    """Symmetric initial law F0*.  Subclasses fill in cdf/quantile/tail."""

    kind = "abstract"
    has_density = False
    # the c.f. is smooth in s = xi^cf_kappa near the origin
    cf_kappa = 1.0
    # support breakpoints on the positive axis, used by the numeric c.f.
    _breaks: tuple = ()

    def cdf(self, x):
        raise NotImplementedError

    def cdf_left(self, x):
        return self.cdf(x)

    def quantile(self, u):
        raise NotImplementedError

    def tail(self, x):
        return 1.0 - np.asarray(self.cdf(x))

    def density(self, x):
        raise NotImplementedError(f"{self.kind} law has no density")

    def cf(self, xi):
        """Real characteristic function of the symmetric law."""
        return _cf_numeric(self, xi)

    def describe(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self):
        body = ", ".join(f"{k}={v}" for k, v in self.describe().items() if k != "kind")
        return f"{type(self).__name__}({body})"


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any((u < 0) | (u > 1)) or np.any(np.isnan(u)):
        raise DomainError("quantile level outside [0, 1]")
    return u


def _cf_numeric(law: InitialLaw, xi):
    if not law.has_density:
        raise NotImplementedError(f"no characteristic function for {law.kind}")
    xs = np.abs(np.atleast_1d(np.asarray(xi, dtype=float)))
    out = np.empty_like(xs)
    pts = [b for b in law._breaks if b > 0]
    last = pts[-1] if pts else 0.0
    for i, v in enumerate(xs):
        if v == 0.0:
            out[i] = 1.0
            continue

        def f(x):
            return float(law.density(x))

        core = 0.0
        edges = [0.0] + pts
        for a, b in zip(edges[:-1], edges[1:]):
            core += integrate.quad(lambda x: math.cos(v * x) * f(x), a, b, limit=400,
                                   epsabs=1e-13, epsrel=1e-12)[0]
        tail = integrate.quad(f, last, np.inf, weight="cos", wvar=v, limlst=200)[0]
        out[i] = 2.0 * (core + tail)
    return out if np.ndim(xi) else float(out[0])


class ParetoSymmetric(InitialLaw):
    """Density (beta/2)|x|^(-beta-1) on |x| >= 1; flat CDF 1/2 on (-1, 1)."""

    kind = "pareto_symmetric"
    has_density = True

    def __init__(self, beta: float = 0.5):
        if not 0 < beta < 2:
            raise ValueError("pareto beta must lie in (0, 2)")
        self.beta = float(beta)
        self.cf_kappa = self.beta
        self._breaks = (1.0,)
        self._s_beta = sine_integral_alpha(self.beta)
        k = np.arange(40)
        # phi(xi) = cos xi - S xi^beta + xi^2 sum_k (-1)^k xi^(2k) / ((2k+1)! (2k+2-beta))
        self._series = (-1.0) ** k / (np.exp(special.gammaln(2 * k + 2)) * (2 * k + 2 - self.beta))

    def describe(self):
        return {"kind": self.kind, "beta": self.beta}

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.maximum(np.abs(x), 1.0)
        half = 0.5 * ax ** -self.beta
        return np.where(x >= 1.0, 1.0 - half, np.where(x <= -1.0, half, 0.5))

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 1.0, 0.5 * np.maximum(x, 1.0) ** -self.beta, 1.0 - self.cdf(x))

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        return np.where(ax >= 1.0, 0.5 * self.beta * np.maximum(ax, 1.0) ** (-self.beta - 1), 0.0)

    def quantile(self, u):
        u = _check_u(u)
        with np.errstate(divide="ignore"):
            lo = -(2.0 * u) ** (-1.0 / self.beta)
            hi = (2.0 * (1.0 - u)) ** (-1.0 / self.beta)
        return np.where(u <= 0.5, lo, hi)

    def cf(self, xi):
        xs = np.abs(np.asarray(xi, dtype=float))
        flat = xs.ravel()
        out = np.empty_like(flat)
        small = flat <= 4.0
        z = flat[small]
        z2 = z * z
        poly = np.zeros_like(z)
        zmax = float(z.max()) if z.size else 0.0
        # truncate once zmax^(2k) / (2k+1)! drops below 1e-18
        k = np.arange(self._series.size)
        size = int(np.argmax(k * 2 * math.log(max(zmax, 1e-300)) - special.gammaln(2 * k + 2) < -41.5)) + 1
        for coef in self._series[:size][::-1]:
            poly = poly * z2 + coef
        out[small] = np.cos(z) - self._s_beta * z ** self.beta + z2 * poly
        for i in np.flatnonzero(~small):
            v = flat[i]
            rest = sine_tail_integral(self.beta, v)
            out[i] = math.cos(v) - v ** self.beta * rest
        out = out.reshape(xs.shape)
        return float(out) if out.ndim == 0 else out


class ExpPowerTail(InitialLaw):
    """F(x) = exp(-x^-beta) for x >= x0 where it equals 1/2; symmetric, no mass on (-x0, x0)."""

    kind = "exp_power_tail"
    has_density = True

    def __init__(self, beta: float):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.beta = float(beta)
        self.x0 = (1.0 / math.log(2.0)) ** (1.0 / self.beta)
        self.cf_kappa = min(self.beta, 1.0)
        self._breaks = (self.x0,)

    def describe(self):
        return {"kind": self.kind, "beta": self.beta}

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.maximum(x, self.x0)
        right = -np.expm1(-ax ** -self.beta)
        return np.where(x >= self.x0, right, 1.0 - self.cdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.maximum(np.abs(x), self.x0)
        t = -np.expm1(-ax ** -self.beta)
        return np.where(x >= self.x0, 1.0 - t, np.where(x <= -self.x0, t, 0.5))

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        a = np.maximum(ax, self.x0)
        f = self.beta * a ** (-self.beta - 1) * np.exp(-a ** -self.beta)
        return np.where(ax >= self.x0, f, 0.0)

    def quantile(self, u):
        u = _check_u(u)
        with np.errstate(divide="ignore"):
            lo = -(-np.log1p(-u)) ** (-1.0 / self.beta)
            hi = (-np.log(u)) ** (-1.0 / self.beta)
        return np.where(u <= 0.5, lo, hi)


class LogPowerTail(InitialLaw):
    """F(x) = exp(-(log x)^-beta) for x >= x0 where it equals 1/2; symmetric."""

    kind = "log_power_tail"
    has_density = True

    def __init__(self, beta: float):
        if not beta > 0:
            raise ValueError("beta must be positive")
        self.beta = float(beta)
        self.x0 = math.exp((1.0 / math.log(2.0)) ** (1.0 / self.beta))
        self._breaks = (self.x0,)

    def describe(self):
        return {"kind": self.kind, "beta": self.beta}

    def _t(self, ax):
        return -np.expm1(-np.log(ax) ** -self.beta)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= self.x0, self._t(np.maximum(x, self.x0)), 1.0 - self.cdf(x))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        t = self._t(np.maximum(np.abs(x), self.x0))
        return np.where(x >= self.x0, 1.0 - t, np.where(x <= -self.x0, t, 0.5))

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        a = np.maximum(ax, self.x0)
        L = np.log(a)
        f = self.beta * L ** (-self.beta - 1) * np.exp(-L ** -self.beta) / a
        return np.where(ax >= self.x0, f, 0.0)

    def quantile(self, u):
        # may overflow to +-inf for u near 0 or 1: the tail is that heavy
        u = _check_u(u)
        with np.errstate(divide="ignore", over="ignore"):
            lo = -np.exp((-np.log1p(-u)) ** (-1.0 / self.beta))
            hi = np.exp((-np.log(u)) ** (-1.0 / self.beta))
        return np.where(u <= 0.5, lo, hi)


class SlowLogTail(InitialLaw):
    """F(x) = 1 - log x / x^a beyond x0 = e^(1/a), linear in between; needs a > 2/e."""

    kind = "slow_log_tail"
    has_density = True

    def __init__(self, alpha: float = 1.0):
        if not alpha > 2.0 / math.e:
            raise ValueError("slow_log_tail needs alpha > 2/e so that F(x0) >= 1/2")
        self.a = float(alpha)
        self.x0 = math.exp(1.0 / self.a)
        self.t0 = 1.0 / (self.a * math.e)       # tail mass beyond x0
        self._slope = (0.5 - self.t0) / self.x0
        self._breaks = (self.x0,)

    def describe(self):
        return {"kind": self.kind, "alpha": self.a}

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.maximum(np.abs(x), self.x0)
        right = np.log(ax) / ax ** self.a
        core = 0.5 - self._slope * x
        return np.where(x >= self.x0, right, np.where(x <= -self.x0, 1.0 - right, core))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.maximum(np.abs(x), self.x0)
        r = np.log(ax) / ax ** self.a
        return np.where(x >= self.x0, 1.0 - r, np.where(x <= -self.x0, r, 0.5 + self._slope * x))

    def density(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        a = np.maximum(ax, self.x0)
        f = (self.a * np.log(a) - 1.0) / a ** (self.a + 1.0)
        return np.where(ax >= self.x0, f, self._slope)

    def _upper(self, y):
        # solve log x / x^a = y on x >= x0 via the lower Lambert branch
        w = special.lambertw(-self.a * y, k=-1).real
        return np.exp(-w / self.a)

    def quantile(self, u):
        u = _check_u(u)
        out = np.empty_like(u)
        t0 = self.t0
        mid = (u > t0) & (u < 1 - t0)
        out[mid] = (u[mid] - 0.5) / self._slope
        hi = u >= 1 - t0
        lo = u <= t0
        with np.errstate(divide="ignore", invalid="ignore"):
            out[hi] = np.where(u[hi] >= 1.0, np.inf, self._upper(np.clip(1.0 - u[hi], 1e-300, t0)))
            out[lo] = np.where(u[lo] <= 0.0, -np.inf, -self._upper(np.clip(u[lo], 1e-300, t0)))
        return out


class Cauchy(InitialLaw):
    kind = "cauchy"
    has_density = True

    def cdf(self, x):
        return 0.5 + np.arctan(np.asarray(x, dtype=float)) / math.pi

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(x > 0, np.arctan(1.0 / np.where(x > 0, x, 1.0)) / math.pi, 1.0 - self.cdf(x))

    def density(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 / (math.pi * (1.0 + x * x))

    def quantile(self, u):
        u = _check_u(u)
        return np.tan(math.pi * (u - 0.5))

    def cf(self, xi):
        return np.exp(-np.abs(xi))


class Gaussian(InitialLaw):
    kind = "gaussian"
    has_density = True

    def __init__(self, variance: float = 1.0):
        if not variance > 0:
            raise ValueError("variance must be positive")
        self.variance = float(variance)
        self._sd = math.sqrt(self.variance)

    def describe(self):
        return {"kind": self.kind, "variance": self.variance}

    def cdf(self, x):
        return special.ndtr(np.asarray(x, dtype=float) / self._sd)

    def tail(self, x):
        return special.ndtr(-np.asarray(x, dtype=float) / self._sd)

    def density(self, x):
        x = np.asarray(x, dtype=float) / self._sd
        return np.exp(-0.5 * x * x) / (self._sd * math.sqrt(2 * math.pi))

    def quantile(self, u):
        return self._sd * special.ndtri(_check_u(u))

    def cf(self, xi):
        xi = np.asarray(xi, dtype=float)
        return np.exp(-0.5 * self.variance * xi * xi)


class PointMass(InitialLaw):
    """Unit mass at the origin."""

    kind = "point_mass"

    def cdf(self, x):
        return np.where(np.asarray(x, dtype=float) >= 0, 1.0, 0.0)

    def cdf_left(self, x):
        return np.where(np.asarray(x, dtype=float) > 0, 1.0, 0.0)

    def tail(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def quantile(self, u):
        return np.zeros_like(_check_u(u))

    def cf(self, xi):
        return np.ones_like(np.asarray(xi, dtype=float))


class Tabulated(InitialLaw):
    """Piecewise-linear CDF through (x_i, F_i); quantile is its exact inverse.

    Queries left of the grid return 0 and right of it 1.  If F_0 > 0 or
    F_last < 1 the table does not pin down the mass outside it, and sampling
    that mass raises SamplingError.
    """

    kind = "tabulated"

    def __init__(self, x, F, source: Optional[str] = None):
        x = np.asarray(x, dtype=float)
        F = np.asarray(F, dtype=float)
        if x.ndim != 1 or x.shape != F.shape or x.size < 2:
            raise InvalidCDFError("table needs two equal-length columns with at least two rows")
        if np.any(np.diff(x) <= 0):
            raise InvalidCDFError("x column must be strictly increasing")
        if np.any(np.diff(F) < 0):
            bad = int(np.flatnonzero(np.diff(F) < 0)[0]) + 1
            raise InvalidCDFError(f"CDF decreases at x={x[bad]!r}")
        if F[0] < 0 or F[-1] > 1:
            raise InvalidCDFError("CDF values must lie in [0, 1]")
        self.x, self.F, self.source = x, F, source
        self._slopes = np.diff(F) / np.diff(x)
        self.has_density = bool(F[0] == 0.0 and F[-1] == 1.0)

    def describe(self):
        d = {"kind": self.kind, "rows": int(self.x.size)}
        if self.source:
            d["table"] = self.source
        return d

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x, self.F)
        out = np.where(x < self.x[0], 0.0, out)
        return np.where(x > self.x[-1], 1.0, out)

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self.x, self.F)
        out = np.where(x <= self.x[0], 0.0, out)
        return np.where(x > self.x[-1], 1.0, out)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip(np.searchsorted(self.x, x, side="right") - 1, 0, self._slopes.size - 1)
        inside = (x >= self.x[0]) & (x < self.x[-1])
        return np.where(inside, self._slopes[i], 0.0)

    def quantile(self, u):
        u = _check_u(u)
        if np.any(u < self.F[0]) or np.any(u > self.F[-1]):
            raise SamplingError("quantile level outside the tabulated range "
                                f"[{self.F[0]}, {self.F[-1]}]")
        i = np.searchsorted(self.F, u, side="left")
        i = np.clip(i, 0, self.x.size - 1)
        exact = self.F[i] == u
        j = np.maximum(i - 1, 0)
        dF = self.F[i] - self.F[j]
        with np.errstate(divide="ignore", invalid="ignore"):
            interp = self.x[j] + (u - self.F[j]) / dF * (self.x[i] - self.x[j])
        return np.where(exact | (dF == 0), self.x[i], interp)

    def cf(self, xi):
        # exact for a piecewise-uniform density, plus atoms at the table ends
        xs = np.atleast_1d(np.abs(np.asarray(xi, dtype=float)))
        out = np.empty_like(xs)
        a, b = self.x[:-1], self.x[1:]
        for k, v in enumerate(xs):
            if v == 0.0:
                seg = self.F[-1] - self.F[0]
            else:
                seg = np.sum(self._slopes * (np.sin(v * b) - np.sin(v * a))) / v
            out[k] = seg + self.F[0] * math.cos(v * self.x[0]) + (1 - self.F[-1]) * math.cos(v * self.x[-1])
        return out if np.ndim(xi) else float(out[0])


class Symmetrized(InitialLaw):
    """F0*(x) = (F0(x) + 1 - F0(-x^-)) / 2 for an arbitrary CDF callable F0."""

    kind = "symmetrized"

    def __init__(self, F0: Callable, F0_left: Optional[Callable] = None):
        self.F0 = F0
        self.F0_left = F0_left or (lambda x: F0(np.nextafter(np.asarray(x, dtype=float), -np.inf)))

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (np.asarray(self.F0(x)) + 1.0 - np.asarray(self.F0_left(-x)))

    def cdf_left(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * (np.asarray(self.F0_left(x)) + 1.0 - np.asarray(self.F0(-x)))

    def quantile(self, u):
        return generalized_quantile(self.cdf, _check_u(u))


def generalized_quantile(cdf: Callable, u, iters: int = 200):
    """inf{x : cdf(x) >= u}, vectorized bisection."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    L = 1.0
    while np.any(cdf(-L) >= u[u > 0]) or np.any(cdf(L) < u[u < 1]):
        L *= 2.0
        if L > 1e300:
            raise SamplingError("could not bracket the quantile")
    lo = np.full_like(u, -L)
    hi = np.full_like(u, L)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        ok = np.asarray(cdf(mid)) >= u
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(hi))):
            break
    return hi


def symmetrize(F0) -> InitialLaw:
    """Symmetric version of a CDF given as a law, a callable, or an (x, F) table."""
    if isinstance(F0, tuple) and len(F0) == 2:
        x, F = (np.asarray(v, dtype=float) for v in F0)
        tab = Tabulated(x, F)
        if tab.F[0] == 0.0 and tab.F[-1] == 1.0:
            nodes = np.union1d(x, -x)
            vals = 0.5 * (tab.cdf(nodes) + 1.0 - tab.cdf_left(-nodes))
            return Tabulated(nodes, vals)
        return Symmetrized(tab.cdf, tab.cdf_left)
    if isinstance(F0, InitialLaw):
        return Symmetrized(F0.cdf, F0.cdf_left)
    if callable(F0):
        return Symmetrized(F0)
    raise TypeError("symmetrize expects a law, a CDF callable or an (x, F) table")


def load_table(path) -> Tabulated:
    """Two-column text table 'x F(x)'; '#' starts a comment."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise InvalidCDFError(f"{path}:{lineno}: expected two columns")
            rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise InvalidCDFError(f"{path}: empty table")
    arr = np.array(rows)
    return Tabulated(arr[:, 0], arr[:, 1], source=str(path))


LAW_KINDS = {
    "pareto_symmetric": ParetoSymmetric,
    "exp_power_tail": ExpPowerTail,
    "log_power_tail": LogPowerTail,
    "slow_log_tail": SlowLogTail,
    "cauchy": Cauchy,
    "gaussian": Gaussian,
    "point_mass": PointMass,
}


def make_law(kind: str, **kw) -> InitialLaw:
    if kind == "tabulated":
        return load_table(kw["table"])
    try:
        cls = LAW_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown law kind {kind!r}") from None
    return cls(**kw)


# ---------------------------------------------------------------- tail functionals

def rho(law: InitialLaw, x, params: ModelParams):
    """x^alpha (1 - F0*(x))."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("rho needs x > 0")
    out = xa ** params.alpha * np.asarray(law.tail(xa))
    return float(out) if out.ndim == 0 else out


@dataclass
class TailClass:
    kind: str                      # "NDA", "bounded_rho" or "ultra_heavy"
    estimate: float                # c0 for NDA, sup rho for bounded_rho, inf otherwise
    grid: np.ndarray = field(repr=False)
    trace: np.ndarray = field(repr=False)
    span: float = float("nan")
    growth: float = float("nan")


DEFAULT_PROBE = np.geomspace(1.0, 1e8, 801)


def classify_tail(law: InitialLaw, params: ModelParams, probe_grid=None,
                  span_tol: float = 0.05, growth_factor: float = 10.0) -> TailClass:
    """Label the behaviour of rho on a probe grid.

    Stabilized means the relative span of rho over the last probed decade is
    below ``span_tol``, or rho there is below ``span_tol`` times its grid maximum
    (limit 0); ultra heavy means rho grew by ``growth_factor`` across
    the grid without stabilizing.
    """
    grid = DEFAULT_PROBE if probe_grid is None else np.asarray(probe_grid, dtype=float)
    if grid.size < 2 or np.any(np.diff(grid) <= 0) or grid[0] <= 0:
        raise InsufficientProbeError("probe grid must be positive and increasing")
    if grid[-1] / grid[0] < 1e4 * (1 - 1e-12):
        raise InsufficientProbeError("probe grid must span at least four decades")
    r = np.asarray(rho(law, grid, params), dtype=float)
    last = r[grid >= grid[-1] / 10.0]
    top = float(np.max(last))
    span = 0.0 if top <= 1e-300 else float((top - np.min(last)) / top)
    growth = float(r[-1] / r[0]) if r[0] > 0 else (np.inf if r[-1] > 0 else 1.0)
    if span < span_tol:
        return TailClass("NDA", float(r[-1]) if top > 1e-300 else 0.0, grid, r, span, growth)
    # rho collapsing toward 0 has no stable relative span; the limit is c0 = 0
    if top < span_tol * float(np.max(r)):
        return TailClass("NDA", 0.0, grid, r, span, growth)
    if growth >= growth_factor:
        return TailClass("ultra_heavy", float("inf"), grid, r, span, growth)
    return TailClass("bounded_rho", float(np.max(r)), grid, r, span, growth)


def generalized_inverse(H: Callable[[float], float], u: float, lo: float) -> float:
    """inf{x >= lo : H(x) < u} for nonincreasing H, by doubling then bisection."""
    if not u > 0:
        raise DomainError("u must be positive")
    if u >= H(lo):
        return float(lo)
    a = float(lo)
    b = max(2.0 * a, 1.0)
    while not H(b) < u:
        a = b
        b *= 2.0
        if not math.isfinite(b):
            raise DomainError(f"u={u} lies below the range of H")
    while b - a > 1e-10 * max(1.0, abs(b)):
        mid = 0.5 * (a + b)
        if H(mid) < u:
            b = mid
        else:
            a = mid
    return b


def _c_value(c_fn, x):
    return float(c_fn(x)) if callable(c_fn) else float(c_fn)


def h_p(law: InitialLaw, c_fn, pexp: float, x: float) -> float:
    """H_p(x) = c(x) (1 - F0*(x))^p."""
    return _c_value(c_fn, x) * float(law.tail(x)) ** pexp


def h_p_inverse(law: InitialLaw, c_fn, pexp: float, u: float, lo: float = 1e-12) -> float:
    if not pexp > 0:
        raise DomainError("exponent must be positive")
    return generalized_inverse(lambda x: h_p(law, c_fn, pexp, x), u, lo)


@dataclass
class TailProfile:
    """Sequence x_m = x1 * ratio^(m-1) (or an explicit list) and the function c."""

    x1: float = 1.0
    ratio: float = 2.0
    c: object = 0.5
    x_values: Optional[tuple] = None

    def __post_init__(self):
        if self.x_values is not None:
            xv = np.asarray(self.x_values, dtype=float)
            if xv.size == 0 or np.any(np.diff(xv) <= 0) or xv[0] <= 0:
                raise ValueError("x_values must be positive and strictly increasing")
            self.x_values = tuple(float(v) for v in xv)
            self.x1 = self.x_values[0]
        elif not (self.x1 > 0 and self.ratio > 1):
            raise ValueError("need x1 > 0 and ratio > 1")

    def x(self, m: int) -> float:
        if m < 1:
            raise ValueError("indices start at 1")
        if self.x_values is not None:
            if m > len(self.x_values):
                raise IndexError(f"profile lists only {len(self.x_values)} points")
            return self.x_values[m - 1]
        return self.x1 * self.ratio ** (m - 1)

    def c_of(self, x) -> float:
        v = _c_value(self.c, x)
        return v

    def theta(self, m: int, law: InitialLaw, params: ModelParams) -> float:
        xm = self.x(m)
        return self.c_of(xm) * xm ** params.alpha * float(law.tail(xm))

    def index_below(self, cap: float) -> int:
        """sup{n : x_n <= cap}, 0 if none."""
        if self.x_values is not None:
            return int(np.searchsorted(np.asarray(self.x_values), cap, side="right"))
        if cap < self.x1:
            return 0
        n = int(math.floor(math.log(cap / self.x1) / math.log(self.ratio))) + 1
        while self.x(n + 1) <= cap:
            n += 1
        while n > 0 and self.x(n) > cap:
            n -= 1
        return n


def default_epsilon(t: float) -> float:
    return 1.0 / math.log(math.e + t)


@dataclass
class RateSchedule:
    """Rate constants for m(t), u(t), x(t) plus the vanishing modulation eps(t)."""

    tau_prime: float
    tau1pp: float
    tau2pp: float
    delta: float = 0.5
    epsilon_fn: Callable[[float], float] = default_epsilon

    def __post_init__(self):
        if min(self.tau_prime, self.tau1pp, self.tau2pp) <= 0:
            raise ValueError("rate constants must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")

    @property
    def tau_pp(self) -> float:
        return min(self.tau1pp, self.tau2pp / (2.0 - self.delta))


@dataclass(frozen=True)
class ScheduleValue:
    t: float
    m: int
    u: float
    x: float

    @property
    def available(self) -> bool:
        return self.m > 0


def schedule_cap(profile: TailProfile, law: InitialLaw, sched: RateSchedule, t: float) -> float:
    lo = profile.x(1)
    c = profile.c
    u1 = h_p_inverse(law, c, 1.0, math.exp(-sched.tau1pp * t), lo=lo)
    u2 = h_p_inverse(law, c, 2.0 - sched.delta, math.exp(-sched.tau2pp * t), lo=lo)
    return min(math.sqrt(2.0) * math.exp(sched.tau_prime * t), u1, u2)


def explosion_schedule(profile: TailProfile, law: InitialLaw, params: ModelParams,
                       sched: RateSchedule, t: float) -> ScheduleValue:
    """m(t), u(t) and x(t) = rho(x_m(t))^(1/alpha) eps(t); m = 0 flags 'unavailable'."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    cap = schedule_cap(profile, law, sched, t)
    m = profile.index_below(cap)
    if m == 0:
        return ScheduleValue(float(t), 0, float("nan"), float("nan"))
    x = rho(law, profile.x(m), params) ** (1.0 / params.alpha) * sched.epsilon_fn(t)
    return ScheduleValue(float(t), m, cap, float(x))
