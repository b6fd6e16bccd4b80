"""McKean trees: random leaf weights and the level-one adversarial construction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .model import DomainError, ModelParams, TailProfile, c_p, r_q, s_p
from .parallel import DEFAULT_CHUNK, run_chunks

NU_MAX = 10_000_000


class TreeOverflowError(OverflowError):
    pass


def _log_q(t: float) -> float:
    if not t > 0:
        raise DomainError("t must be positive")
    # log(1 - e^-t), accurate for small and large t
    return math.log(-math.expm1(-t))


def sample_nu(t: float, rng: np.random.Generator, size: Optional[int] = None,
              nu_max: int = NU_MAX):
    """Leaf count: geometric on {1, 2, ...} with success probability e^-t."""
    n = 1 if size is None else int(size)
    out = K.draw_nu_batch(rng, _log_q(t), n, nu_max)
    if np.any(out > nu_max):
        raise TreeOverflowError(f"leaf count above nu_max={nu_max}")
    return int(out[0]) if size is None else out


@dataclass
class WeightTreeSample:
    nu: int
    thetas: np.ndarray
    picks: np.ndarray
    weights: np.ndarray

    def conservation_error(self, alpha: float) -> float:
        return abs(float(np.sum(np.abs(self.weights) ** alpha)) - 1.0)

    def dump(self, fh) -> None:
        """One line per split: step k, the 1-based leaf picked, the angle."""
        for k, (i, th) in enumerate(zip(self.picks, self.thetas), 1):
            fh.write(f"{k} {int(i)} {float(th)!r}\n")


def weights_from_steps(picks: Sequence[int], thetas: Sequence[float], params: ModelParams) -> np.ndarray:
    """Replay a recursion: step k splits leaf picks[k-1] (1-based, <= k) at angle thetas[k-1]."""
    w = [1.0]
    for k, (i, th) in enumerate(zip(picks, thetas), 1):
        if not 1 <= i <= k:
            raise ValueError(f"pick {i} at step {k} outside 1..{k}")
        b = w[i - 1]
        w[i - 1:i] = [float(c_p(th, params.p)) * b, float(s_p(th, params.p)) * b]
    return np.array(w)


def sample_tree(t: float, params: ModelParams, rng: np.random.Generator,
                nu_max: int = NU_MAX) -> WeightTreeSample:
    w, picks, c2, s2 = K.record_tree(rng, _log_q(t), params.p, params.p_int, nu_max)
    if w.size == 0:
        raise TreeOverflowError(f"leaf count above nu_max={nu_max}")
    th = np.mod(np.arctan2(s2, c2), 2.0 * math.pi)
    th[th == 0.0] = 2.0 * math.pi
    return WeightTreeSample(int(w.size), th, picks, w)


def moment_closed_form(t: float, gamma: float, params: ModelParams) -> float:
    """E sum_j |beta_j|^gamma = exp(t (2 R_{2 gamma / alpha} - 1))."""
    return math.exp(t * (2.0 * r_q(2.0 * gamma / params.alpha) - 1.0))


@dataclass
class TreeStats:
    nu: np.ndarray
    sums: np.ndarray        # (n, len(gammas))
    max_weight: np.ndarray
    alpha_dev: np.ndarray


def tree_stats(t: float, params: ModelParams, n_samples: int, seed: int = 0,
               gammas: Sequence[float] = (), chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
               nu_max: int = NU_MAX, key: Sequence[int] = (1,)) -> TreeStats:
    """Per-tree leaf count, power sums, largest weight and conservation defect."""
    lq = _log_q(t)
    g = np.asarray(gammas, dtype=float)

    def work(gen, size):
        return K.tree_sums(gen, lq, params.p, params.p_int, size, g, params.alpha, nu_max)

    parts = run_chunks(work, n_samples, seed, chunk_size, threads, key)
    nu = np.concatenate([p[0] for p in parts])
    if np.any(nu < 0):
        raise TreeOverflowError(f"leaf count above nu_max={nu_max}")
    return TreeStats(nu, np.concatenate([p[1] for p in parts]),
                     np.concatenate([p[2] for p in parts]), np.concatenate([p[3] for p in parts]))


@dataclass
class MomentEstimate:
    estimate: float
    sigma: float
    exact: float
    n: int


def weight_moment(t: float, gamma: float, params: ModelParams, n_samples: int, seed: int = 0,
                  chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> MomentEstimate:
    """Monte Carlo mean of sum_j |beta_j|^gamma with its standard error.

    For gamma = alpha every tree sums to one; this is checked on the samples
    (to 1e-12) and the exact value 1 with zero spread is returned.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    st = tree_stats(t, params, n_samples, seed, (gamma,), chunk_size, threads)
    exact = moment_closed_form(t, gamma, params)
    if gamma == params.alpha:
        worst = float(st.alpha_dev.max())
        if worst >= 1e-12:
            raise ArithmeticError(f"weight conservation violated: {worst:.3e}")
        return MomentEstimate(1.0, 0.0, 1.0, n_samples)
    x = st.sums[:, 0]
    return MomentEstimate(float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size)), exact, n_samples)


@dataclass
class TailCheck:
    probability: float
    sigma: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.bound >= 1.0 or self.probability <= self.bound + 3 * self.sigma


def max_weight_tail(t: float, eps: float, q: float, params: ModelParams, n_samples: int,
                    seed: int = 0, chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> TailCheck:
    """Empirical P{max_j |beta_j| > eps} against eps^(-q/(1+p)) e^(-t(1 - 2 R_q))."""
    st = tree_stats(t, params, n_samples, seed, (), chunk_size, threads)
    hit = st.max_weight > eps
    ph = float(hit.mean())
    bound = eps ** (-q / (1.0 + params.p)) * math.exp(-t * (1.0 - 2.0 * r_q(q)))
    return TailCheck(ph, math.sqrt(ph * (1 - ph) / n_samples), bound)


def conservation_defect(t: float, params: ModelParams, n_samples: int, seed: int = 0,
                        chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> float:
    """max over trees of |sum_j |beta_j|^alpha - 1|."""
    return float(tree_stats(t, params, n_samples, seed, (), chunk_size, threads).alpha_dev.max())


@dataclass
class AdversarialTree:
    depth: int
    m1: int
    epsilon: float
    x_m1: float
    angle: float
    weights: np.ndarray = field(repr=False)

    @property
    def odd_weights(self) -> np.ndarray:
        # leaves 1, 3, 5, ... in left-to-right order
        return self.weights[0::2]

    def odd_alpha_sum(self, alpha: float) -> float:
        return float(np.sum(np.abs(self.odd_weights) ** alpha))


def build_adversarial_tree(x_seq, m1: int, eps: float, params: ModelParams) -> AdversarialTree:
    """Complete tree of depth N1 at angle pi/4, then one split per leaf.

    The final angle puts |cos|^(2/alpha) 2^(-N1/alpha) at the midpoint of
    [1/x, 1/(x - eps)], x = x_{m1}.
    """
    x = x_seq.x(m1) if isinstance(x_seq, TailProfile) else float(x_seq[m1 - 1])
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not x > 1.0 + eps:
        raise DomainError(f"construction infeasible: x_m1={x} <= 1 + eps")
    al = params.alpha
    n1 = int(math.floor(al * math.log2(x - eps)))
    scale = 0.5 ** (n1 / al)
    target = 0.5 * (1.0 / x + 1.0 / (x - eps))
    cos_abs = (target / scale) ** (al / 2.0)
    theta = math.acos(min(cos_abs, 1.0))
    left = float(c_p(theta, params.p)) * scale
    right = float(s_p(theta, params.p)) * scale
    w = np.tile([left, right], 2 ** n1)
    return AdversarialTree(n1, m1, float(eps), float(x), theta, w)
