"""Samples of V = sum_j beta_j X_j and queries on their empirical law."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _kernels as K
from .fourier import CFGrid
from .model import (InitialLaw, ModelParams, RateSchedule, SamplingError, TailProfile,
                    explosion_schedule)
from .parallel import DEFAULT_CHUNK, run_chunks
from .trees import NU_MAX, TreeOverflowError, _log_q

LEAF_BUDGET = 1 << 21


@dataclass
class EmpiricalMeasure:
    samples: np.ndarray                 # sorted
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)
    raw: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.size > 1 and np.any(s[1:] < s[:-1]):
            s = np.sort(s)
        self.samples = s

    @classmethod
    def from_unsorted(cls, values, seed=None, meta=None, keep_raw=False):
        v = np.asarray(values, dtype=float)
        return cls(np.sort(v), seed, dict(meta or {}), v if keep_raw else None)

    @property
    def n(self) -> int:
        return int(self.samples.size)

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.n

    def cdf_left(self, x):
        return np.searchsorted(self.samples, x, side="left") / self.n

    def count(self, a, b, closed=(True, True)) -> int:
        lo = np.searchsorted(self.samples, a, side="left" if closed[0] else "right")
        hi = np.searchsorted(self.samples, b, side="right" if closed[1] else "left")
        return int(max(hi - lo, 0))


def _binomial(k: int, n: int):
    p = k / n
    return p, math.sqrt(p * (1.0 - p) / n)


def interval_mass(em: EmpiricalMeasure, a: float, b: float):
    """Fraction of samples in [a, b] and its binomial standard error."""
    if b < a:
        raise ValueError("need a <= b")
    return _binomial(em.count(a, b), em.n)


def tail_masses(em: EmpiricalMeasure, a: float):
    """Masses of (-inf, -a], (-a, a) and [a, inf) with standard errors; needs a > 0."""
    if not a > 0:
        raise ValueError("a must be positive for the three intervals to partition the line")
    n = em.n
    below = em.count(-np.inf, -a)
    above = em.count(a, np.inf)
    return _binomial(below, n), _binomial(n - below - above, n), _binomial(above, n)


def symmetry_gap(em: EmpiricalMeasure, a: float):
    """mass(-inf, -a) - mass(a, inf) and its multinomial standard error."""
    n = em.n
    pl = em.count(-np.inf, -a, (True, False)) / n
    pr = em.count(a, np.inf, (False, True)) / n
    d = pl - pr
    return d, math.sqrt(max(pl + pr - d * d, 0.0) / n)


def empirical_cf(em: EmpiricalMeasure, xi_grid) -> CFGrid:
    """(1/n) sum cos(xi V) per grid point; the imaginary part is kept as a diagnostic."""
    xi = np.asarray(xi_grid, dtype=float)
    phi = np.empty_like(xi)
    sig = np.empty_like(xi)
    imag = np.empty_like(xi)
    s = em.samples
    for i, v in enumerate(xi):
        if v == 0.0:
            phi[i], sig[i], imag[i] = 1.0, 0.0, 0.0
            continue
        arg = v * s
        c = np.cos(arg)
        phi[i] = c.mean()
        sig[i] = c.std() / math.sqrt(s.size)
        imag[i] = np.sin(arg).mean()
    return CFGrid(xi, phi, sigma=sig, imag=imag)


# ------------------------------------------------------------------ sampling

def _finite_or_raise(v):
    if not np.all(np.isfinite(v)):
        raise SamplingError("non-finite velocity sample (initial law quantile overflowed)")
    return v


def _iid_chunk(law: InitialLaw):
    def work(gen, size):
        return law.quantile(gen.random(size))
    return work


def _tree_chunk(t: float, law: InitialLaw, params: ModelParams, nu_max: int):
    lq = _log_q(t)

    def work(gen, size):
        out = []
        left = size
        while left > 0:
            w, u, counts, done = K.tree_leaves(gen, lq, params.p, params.p_int, left,
                                               LEAF_BUDGET, nu_max, True)
            if done and counts[-1] < 0:
                raise TreeOverflowError(f"leaf count above nu_max={nu_max}")
            x = law.quantile(u)
            offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
            out.append(np.add.reduceat(w * x, offsets))
            left -= done
        return np.concatenate(out)
    return work


def sample_velocity(t: float, law: InitialLaw, params: ModelParams, n_samples: int,
                    seed: int = 0, chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
                    method: str = "tree", keep_raw: bool = False,
                    nu_max: int = NU_MAX) -> EmpiricalMeasure:
    """Draw n samples of mu(., t).

    method "tree" builds one fresh tree per sample and fresh X_j's by
    inverse CDF.  method "branching" steps through time with the branching
    property, re-using a pool of n earlier-time samples (see sample_path).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    meta = {"t": t, "law": law.describe(), "p": params.p, "method": method,
            "chunk_size": chunk_size}
    if method == "branching":
        em = sample_path([t], law, params, n_samples, seed, chunk_size, threads,
                         nu_max=nu_max, keep_raw=keep_raw)[0]
        em.meta.update(meta)
        return em
    if method != "tree":
        raise ValueError(f"unknown sampling method {method!r}")
    if t == 0:
        work = _iid_chunk(law)
    else:
        work = _tree_chunk(t, law, params, nu_max)
    v = np.concatenate(run_chunks(work, n_samples, seed, chunk_size, threads, key=(2,)))
    return EmpiricalMeasure.from_unsorted(_finite_or_raise(v), seed, meta, keep_raw)


def sample_path(t_grid: Sequence[float], law: InitialLaw, params: ModelParams, n_samples: int,
                seed: int = 0, chunk_size: int = DEFAULT_CHUNK, threads: int = 1,
                h_max: float = 2.0, nu_max: int = NU_MAX,
                keep_raw: bool = False) -> list[EmpiricalMeasure]:
    """Population samples at every time in ``t_grid`` (nondecreasing).

    Uses V(s + h) = sum_j beta_j(h) V_j(s) with the V_j(s) drawn uniformly
    from the n samples held at time s.  The first pool is iid from the
    initial law at time 0.  Steps are at most h_max long.  Each pool is an
    exact draw in the large-n limit; for finite n the resampling adds
    correlation between samples, of the same O(1/sqrt n) order as the
    Monte Carlo error itself.
    """
    ts = [float(t) for t in t_grid]
    if any(b < a for a, b in zip(ts, ts[1:])) or (ts and ts[0] < 0):
        raise ValueError("t_grid must be nonnegative and nondecreasing")
    pool = np.concatenate(run_chunks(_iid_chunk(law), n_samples, seed, chunk_size, threads,
                                     key=(3, 0)))
    _finite_or_raise(pool)
    now = 0.0
    stage = 0
    out = []
    for t in ts:
        gap = t - now
        steps = int(math.ceil(gap / h_max - 1e-12)) if gap > 0 else 0
        for _ in range(steps):
            h = gap / steps
            stage += 1
            lq = _log_q(h)
            prev = pool

            def work(gen, size, prev=prev, lq=lq):
                return K.branch_from_pool(gen, lq, params.p, params.p_int, size, prev, nu_max)

            pool = np.concatenate(run_chunks(work, n_samples, seed, chunk_size, threads,
                                             key=(3, stage)))
            if np.any(np.isnan(pool)):
                raise TreeOverflowError(f"leaf count above nu_max={nu_max}")
        now = t
        meta = {"t": t, "law": law.describe(), "p": params.p, "method": "branching",
                "chunk_size": chunk_size, "h_max": h_max}
        out.append(EmpiricalMeasure.from_unsorted(_finite_or_raise(pool), seed, meta, keep_raw))
    return out


# ------------------------------------------------------------------ explosion

@dataclass
class ExplosionRow:
    t: float
    m: int
    x: float
    below: float
    below_sigma: float
    central: float
    central_sigma: float
    above: float
    above_sigma: float
    window: float
    window_sigma: float
    n: int

    @property
    def available(self) -> bool:
        return self.m > 0


def explosion_curve(t_grid, law: InitialLaw, params: ModelParams, profile: TailProfile,
                    schedule: Optional[RateSchedule], n_samples: int, seed: int = 0,
                    chunk_size: int = DEFAULT_CHUNK, threads: int = 1, window: float = 1.0,
                    method: str = "branching") -> list[ExplosionRow]:
    """Per-t masses beyond -x(t), inside (-x(t), x(t)), beyond x(t), and in [-window, window].

    Without a schedule only the window mass is filled in (m = 0, x = nan).
    """
    ts = [float(t) for t in t_grid]
    if method == "branching":
        ems = sample_path(ts, law, params, n_samples, seed, chunk_size, threads)
    else:
        ems = [sample_velocity(t, law, params, n_samples, seed, chunk_size, threads) for t in ts]
    rows = []
    nan = float("nan")
    for t, em in zip(ts, ems):
        wm, ws = interval_mass(em, -window, window)
        sv = None if schedule is None else explosion_schedule(profile, law, params, schedule, t)
        if sv is None:
            rows.append(ExplosionRow(t, 0, nan, nan, nan, nan, nan, nan, nan, wm, ws, em.n))
            continue
        if sv.available:
            (b, bs), (c, cs), (a, as_) = tail_masses(em, sv.x)
        else:
            b = bs = c = cs = a = as_ = nan
        rows.append(ExplosionRow(t, sv.m, sv.x, b, bs, c, cs, a, as_, wm, ws, em.n))
    return rows
