"""Characteristic-function side: the collision operator, its RK4 flow, and the tree-product estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import sparse

from . import _kernels as K
from .model import InitialLaw, ModelParams
from .parallel import DEFAULT_CHUNK, run_chunks
from .trees import NU_MAX, TreeOverflowError, _log_q

STENCIL = 6


class InstabilityError(RuntimeError):
    pass


@dataclass
class CFGrid:
    """Real c.f. values on a nonnegative grid; kappa is the interpolation coordinate exponent."""

    xi: np.ndarray
    phi: np.ndarray
    kappa: float = 1.0
    sigma: Optional[np.ndarray] = None
    imag: Optional[np.ndarray] = None

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        if self.xi.shape != self.phi.shape:
            raise ValueError("xi and phi must have the same shape")
        if self.xi.size and (self.xi[0] < 0 or np.any(np.diff(self.xi) <= 0)):
            raise ValueError("xi grid must be nonnegative and increasing")

    def replace(self, phi) -> "CFGrid":
        return CFGrid(self.xi, phi, self.kappa)


def cf_grid(law: InitialLaw, xi_max: float = 8.0, n_xi: int = 1025,
            kappa: Optional[float] = None) -> CFGrid:
    xi = np.linspace(0.0, xi_max, n_xi)
    phi = np.asarray(law.cf(xi), dtype=float)
    phi[0] = 1.0
    return CFGrid(xi, phi, law.cf_kappa if kappa is None else kappa)


def _lagrange_matrix(nodes: np.ndarray, query: np.ndarray, order: int = STENCIL):
    n = nodes.size
    order = min(order, n)
    j = np.searchsorted(nodes, query, side="right") - 1
    start = np.clip(j - order // 2 + 1, 0, n - order)
    idx = start[:, None] + np.arange(order)[None, :]
    xs = nodes[idx]
    W = np.ones(idx.shape)
    for a in range(order):
        for b in range(order):
            if a != b:
                W[:, a] *= (query - xs[:, b]) / (xs[:, a] - xs[:, b])
    rows = np.repeat(np.arange(query.size), order)
    return sparse.csr_matrix((W.ravel(), (rows, idx.ravel())), shape=(query.size, n))


@lru_cache(maxsize=8)
def _operator(xi_key: tuple, kappa: float, p: float, n_theta: int):
    xi = np.array(xi_key)
    if n_theta % 2:
        raise ValueError("n_theta must be even")
    half = n_theta // 2
    theta = (np.arange(half) + 0.5) * (0.5 * math.pi / n_theta)
    gc = np.abs(np.cos(theta)) ** (1.0 + p)
    gs = np.abs(np.sin(theta)) ** (1.0 + p)
    s_nodes = xi ** kappa
    qc = np.minimum((xi[:, None] * gc[None, :]).ravel() ** kappa, s_nodes[-1])
    qs = np.minimum((xi[:, None] * gs[None, :]).ravel() ** kappa, s_nodes[-1])
    return _lagrange_matrix(s_nodes, qc), _lagrange_matrix(s_nodes, qs), half


def collision_operator(cf: CFGrid, params: ModelParams, n_theta: int = 512) -> CFGrid:
    """Q(phi, phi)(xi) = (2/pi) int_0^{pi/2} phi(xi |cos|^(1+p)) phi(xi |sin|^(1+p)) dtheta.

    Composite midpoint rule; the integrand is symmetric about pi/4 so only
    the first half of the nodes is evaluated.
    """
    return cf.replace(_apply(cf, params, n_theta))


def _apply(cf: CFGrid, params: ModelParams, n_theta: int) -> np.ndarray:
    Mc, Ms, half = _operator(tuple(cf.xi.tolist()), float(cf.kappa), float(params.p), int(n_theta))
    a = (Mc @ cf.phi).reshape(cf.xi.size, half)
    b = (Ms @ cf.phi).reshape(cf.xi.size, half)
    return (a * b).sum(axis=1) * (2.0 / n_theta)


def evolve_cf(phi0: CFGrid, t: float, params: ModelParams, dt: float = 0.01,
              n_theta: int = 512, times: Optional[Sequence[float]] = None):
    """Classical RK4 for d phi/dt = Q(phi, phi) - phi.

    With ``times`` given, returns the list of grids at those times instead
    of the single grid at t.
    """
    if dt <= 0 or dt > 0.1:
        raise ValueError("dt must lie in (0, 0.1]")
    if t < 0:
        raise ValueError("t must be nonnegative")
    wanted = sorted(float(s) for s in times) if times is not None else [float(t)]
    phi = phi0.phi.copy()

    def rhs(y):
        return _apply(phi0.replace(y), params, n_theta) - y

    now = 0.0
    out = []
    for target in wanted:
        steps = max(int(math.ceil((target - now) / dt - 1e-9)), 0)
        h = (target - now) / steps if steps else 0.0
        for k in range(steps):
            k1 = rhs(phi)
            k2 = rhs(phi + 0.5 * h * k1)
            k3 = rhs(phi + 0.5 * h * k2)
            k4 = rhs(phi + h * k3)
            phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            top = float(np.max(np.abs(phi)))
            if not top <= 1.0 + 1e-6:
                raise InstabilityError(f"|phi| reached {top:.3e} at t={now + (k + 1) * h:.4g}")
        now = target
        out.append(phi0.replace(phi.copy()))
    return out if times is not None else out[0]


def cf_from_trees(xi_grid, t: float, law: InitialLaw, params: ModelParams, n_samples: int,
                  seed: int = 0, chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
                  nu_max: int = NU_MAX) -> CFGrid:
    """Monte Carlo mean over trees of prod_j phi0*(beta_j xi), with standard errors."""
    xi = np.asarray(xi_grid, dtype=float)
    lq = _log_q(t)

    def work(gen, size):
        s1 = np.zeros(xi.size)
        s2 = np.zeros(xi.size)
        left = size
        while left > 0:
            w, _, counts, done = K.tree_leaves(gen, lq, params.p, params.p_int, left,
                                               1 << 20, nu_max, False)
            if counts[-1] < 0:
                raise TreeOverflowError(f"leaf count above nu_max={nu_max}")
            offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
            aw = np.abs(w)
            for i, v in enumerate(xi):
                prod = np.multiply.reduceat(np.asarray(law.cf(aw * v)), offsets)
                s1[i] += prod.sum()
                s2[i] += np.dot(prod, prod)
            left -= done
        return s1, s2

    parts = run_chunks(work, n_samples, seed, chunk_size, threads, key=(4,))
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / n_samples
    var = np.maximum(s2 / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    return CFGrid(xi, mean, law.cf_kappa, sigma=np.sqrt(var / n_samples))


def limit_check(phi_t: CFGrid, target) -> float:
    """sup over the grid of |phi_t - exp(-a |xi|^alpha)|; target is a StableLaw or a0 = 0."""
    if isinstance(target, (int, float)):
        if target != 0:
            raise ValueError("numeric target must be 0 (the unit mass at the origin)")
        ref = np.ones_like(phi_t.xi)
    else:
        ref = target.cf(phi_t.xi)
    return float(np.max(np.abs(phi_t.phi - ref)))
