"""Symmetric alpha-stable laws and the oscillatory integrals behind them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

_GL_X, _GL_W = np.polynomial.legendre.leggauss(32)
# nodes/weights mapped to [0, pi]
_NODES = 0.5 * math.pi * (_GL_X + 1.0)
_WEIGHTS = 0.5 * math.pi * _GL_W
_SIN_NODES = np.sin(_NODES)


class AccuracyError(RuntimeError):
    pass


def alternating_sum(terms) -> float:
    """Sum of (-1)^k a_k, k = 0..n-1 terms given, by Cohen-Villegas-Zagier acceleration.

    Error decays like 5.8^-n for totally monotone a_k; coefficients stay
    bounded so the rounding error does not grow with n.
    """
    a = np.asarray(terms, dtype=float)
    n = a.size
    d = (3.0 + math.sqrt(8.0)) ** n
    d = 0.5 * (d + 1.0 / d)
    b = -1.0
    c = -d
    s = 0.0
    for k in range(n):
        c = b - c
        s += c * a[k]
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0))
    return s / d


def _half_periods(g, k_start: int, k_stop: int) -> np.ndarray:
    # a_k = int_0^pi sin(v) g(k pi + v) dv for k in [k_start, k_stop)
    k = np.arange(k_start, k_stop, dtype=float)[:, None]
    vals = g(k * math.pi + _NODES[None, :])
    return (vals * (_SIN_NODES * _WEIGHTS)[None, :]).sum(axis=1)


def _sinc(x):
    return np.sinc(x / math.pi)


def sine_integral_alpha(alpha: float) -> float:
    """int_0^inf sin x / x^alpha dx = Gamma(1-alpha) cos(pi alpha / 2), pi/2 at alpha = 1."""
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        return math.pi / 2
    # Gamma(1-a) cos(pi a/2) = pi / (2 Gamma(a) sin(pi a/2)) by reflection; finite near a = 1
    return math.pi / (2.0 * math.gamma(alpha) * math.sin(math.pi * alpha / 2.0))


def sine_integral_pi(alpha: float) -> float:
    """int_0^pi sin x / x^alpha dx."""
    if not alpha < 2.0:
        raise ValueError("alpha must be < 2")
    # sin(x)/x is smooth; the algebraic factor x^(1-alpha) goes to the weight
    val, _ = integrate.quad(_sinc, 0.0, math.pi, weight="alg", wvar=(1.0 - alpha, 0.0),
                            epsabs=1e-14, epsrel=1e-13)
    return val


def sine_integral_quadrature(alpha: float, n_terms: int = 40) -> float:
    """Same integral as sine_integral_alpha, by pi-interval splitting and acceleration."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    head, _ = integrate.quad(_sinc, 0.0, math.pi, weight="alg", wvar=(1.0 - alpha, 0.0),
                             epsabs=1e-14, epsrel=1e-13)
    a = _half_periods(lambda u: u ** -alpha, 1, 1 + n_terms)
    # tail starts at k = 1 with sign -1
    return head - alternating_sum(a)


def oscillatory_tail(g, x: float, phase: float = 0.0, n_terms: int = 40) -> float:
    """int_x^inf sin(u + phase) g(u) du for positive, decreasing, smooth g on [x, inf)."""
    # substitute v = u + phase so the zeros of sin sit at k pi
    v0 = x + phase
    K = max(int(math.ceil(v0 / math.pi)), 1)
    head = 0.0
    if K * math.pi > v0:
        head = integrate.quad(lambda v: math.sin(v) * g(v - phase), v0, K * math.pi,
                              epsabs=1e-14, epsrel=1e-13)[0]
    a = _half_periods(lambda v: g(v - phase), K, K + n_terms)
    return head + (-1.0) ** K * alternating_sum(a)


def sine_tail_integral(alpha: float, x: float) -> float:
    """int_x^inf sin u / u^alpha du for x > 0."""
    if not x > 0:
        raise ValueError("x must be positive")
    return oscillatory_tail(lambda u: u ** -alpha, x)


def cosine_tail_integral(power: float, x: float) -> float:
    """int_x^inf cos u / u^power du for x > 0, power > 0."""
    if not x > 0:
        raise ValueError("x must be positive")
    return oscillatory_tail(lambda u: u ** -power, x, phase=0.5 * math.pi)


def sine_integral_partial(alpha: float, X: float) -> float:
    """int_0^X sin u / u^alpha du."""
    if X <= 0:
        return 0.0
    if X <= math.pi:
        return integrate.quad(_sinc, 0.0, X, weight="alg", wvar=(1.0 - alpha, 0.0),
                              epsabs=1e-14, epsrel=1e-13)[0]
    if X >= 200.0:
        return sine_integral_alpha(alpha) - sine_tail_integral(alpha, X)
    mid, _ = integrate.quad(lambda u: math.sin(u) * u ** -alpha, math.pi, X,
                            limit=2000, epsabs=1e-13, epsrel=1e-12)
    return sine_integral_pi(alpha) + mid


@dataclass(frozen=True)
class StableLaw:
    """Symmetric stable law with characteristic function exp(-a |xi|^alpha)."""

    alpha: float
    a: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError("alpha must lie in (0, 2]")
        if not self.a > 0.0:
            raise ValueError("scale a must be positive")

    def cf(self, xi):
        return np.exp(-self.a * np.abs(xi) ** self.alpha)

    def cdf(self, x):
        return stable_cdf(self, x)


def a0_from_c0(c0: float, alpha: float) -> float:
    if c0 < 0:
        raise ValueError("c0 must be nonnegative")
    if c0 == 0:
        return 0.0
    return 2.0 * c0 * sine_integral_alpha(alpha)


def _levy_integral(alpha: float, a: float, x: float, tol: float) -> float:
    # int_0^inf sin(u) exp(-a (u/x)^alpha) / u du for x > 0
    def g(u):
        return np.exp(-a * (u / x) ** alpha) / u

    # beyond u_d the integrand is below e^-45
    u_d = x * (45.0 / a) ** (1.0 / alpha)
    head, err = integrate.quad(lambda u: math.sin(u) * math.exp(-a * (u / x) ** alpha) / u
                               if u > 0 else 1.0, 0.0, min(math.pi, u_d), epsabs=tol / 10,
                               epsrel=1e-13, limit=200)
    n_direct = int(math.ceil(u_d / math.pi))
    if n_direct <= 20000:
        if n_direct <= 1:
            return head
        a_k = _half_periods(g, 1, n_direct + 1)
        signs = np.where(np.arange(1, n_direct + 1) % 2 == 1, -1.0, 1.0)
        return head + float(np.dot(signs, a_k))
    a_k = _half_periods(g, 1, 61)
    t40 = alternating_sum(a_k[:40])
    t60 = alternating_sum(a_k)
    if abs(t40 - t60) > tol:
        raise AccuracyError(f"alternating tail did not settle: achieved {abs(t40 - t60):.3e}")
    return head - t60


def stable_cdf(law: StableLaw, x, tol: float = 1e-9):
    """S(x) = 1/2 + (1/pi) int_0^inf sin(tx) exp(-a t^alpha) / t dt."""
    xs = np.asarray(x, dtype=float)
    if law.alpha == 1.0:
        out = 0.5 + np.arctan(xs / law.a) / math.pi
    elif law.alpha == 2.0:
        out = special.ndtr(xs / math.sqrt(2.0 * law.a))
    else:
        flat = xs.ravel()
        res = np.empty_like(flat)
        for i, v in enumerate(flat):
            if v == 0.0:
                res[i] = 0.5
            else:
                half = _levy_integral(law.alpha, law.a, abs(v), tol) / math.pi
                res[i] = 0.5 + math.copysign(half, v)
        out = np.clip(res.reshape(xs.shape), 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


def stable_density_sup(law: StableLaw) -> float:
    """Peak density g(0) = Gamma(1/alpha) / (pi alpha a^(1/alpha))."""
    al = law.alpha
    return math.gamma(1.0 / al) / (math.pi * al * law.a ** (1.0 / al))


def _sides(F):
    # (right-continuous value, left limit) accessors
    if hasattr(F, "samples"):
        return F.cdf, F.cdf_left
    return F, F


def kolmogorov_distance(F, G, grid=None) -> float:
    """sup |F - G| over ``grid``; empirical arguments also contribute their jump points.

    F and G are callables or objects with a sorted ``samples`` array.  At an
    empirical jump both one-sided values are compared.
    """
    fF, fF_left = _sides(F)
    fG, fG_left = _sides(G)
    best = 0.0
    if grid is not None:
        g = np.asarray(grid, dtype=float)
        best = float(np.max(np.abs(np.asarray(fF(g)) - np.asarray(fG(g))), initial=0.0))
    for E in (F, G):
        if not hasattr(E, "samples") or E.samples.size == 0:
            continue
        xs = np.unique(E.samples)
        best = max(best, float(np.max(np.abs(np.asarray(fF(xs)) - np.asarray(fG(xs))))),
                   float(np.max(np.abs(np.asarray(fF_left(xs)) - np.asarray(fG_left(xs))))))
    return best
