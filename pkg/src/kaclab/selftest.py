"""Quick invariant suite over the shipped fixtures."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .bounds import admissible_constants, step3_terms, tightness_radius
from .csvio import emit_csv
from .fourier import cf_grid, evolve_cf
from .mixture import build_mixture, lemma_residual, mixture_identity_residual, v_m_bound, v_m_sup
from .model import (Cauchy, ExpPowerTail, Gaussian, LogPowerTail, ModelParams, ParetoSymmetric,
                    SlowLogTail, TailProfile, r_q)
from .stable import StableLaw, sine_integral_alpha, sine_integral_quadrature, stable_cdf
from .trees import conservation_defect, weight_moment


@dataclass
class Check:
    name: str
    value: float
    limit: float
    passed: bool


def _le(name, value, limit) -> Check:
    return Check(name, float(value), float(limit), bool(value <= limit))


def _close(name, value, target, tol) -> Check:
    return Check(name, float(abs(value - target)), float(tol), bool(abs(value - target) <= tol))


def run_selftest(seed: int = 0, threads: int = 1) -> list[Check]:
    out = []
    for p in (0.0, 1.0, 3.0):
        d = conservation_defect(2.0, ModelParams(p), 10_000, seed=seed, threads=threads)
        out.append(_le(f"conservation p={p:g}", d, 1e-12))
    P = ModelParams(1.0)
    me = weight_moment(2.0, P.alpha, P, 10_000, seed=seed, threads=threads)
    out.append(_close("moment gamma=alpha", me.estimate, 1.0, 0.0))
    for q, v in ((2.0, 0.5), (4.0, 0.375), (6.0, 0.3125), (1.0, 2.0 / math.pi)):
        out.append(_close(f"R_q q={q:g}", r_q(q), v, 1e-14))
    for al in (0.3, 0.5, 0.8, 1.2, 1.5, 1.8):
        rel = abs(sine_integral_quadrature(al) / sine_integral_alpha(al) - 1.0)
        out.append(_le(f"sine integral alpha={al:g}", rel, 1e-8))
    out.append(_close("sine integral alpha=1", sine_integral_alpha(1.0), math.pi / 2, 0.0))

    grid = np.linspace(-50.0, 50.0, 1001)
    laws = [ParetoSymmetric(0.5), ExpPowerTail(0.5), LogPowerTail(0.5), SlowLogTail(1.0),
            Cauchy(), Gaussian(1.0)]
    for law in laws:
        F = np.asarray(law.cdf(grid))
        sym = float(np.max(np.abs(F + np.asarray(law.cdf(-grid)) - 1.0)))
        out.append(_le(f"symmetry {law.kind}", sym, 1e-12))
        out.append(_le(f"monotone {law.kind}", max(0.0, -float(np.min(np.diff(F)))), 0.0))

    st = StableLaw(1.0, 1.0)
    x = np.array([-3.0, -0.5, 0.7, 4.0])
    out.append(_le("stable cdf alpha=1", np.max(np.abs(stable_cdf(st, x) - (0.5 + np.arctan(x) / math.pi))),
                   1e-12))

    law = ParetoSymmetric(0.5)
    prof = TailProfile(1.0, 2.0, 0.5)
    mix = build_mixture(law, prof, 3, P)
    out.append(_close("K1 at x_m=4", mix.K1, 4.0 / 3.0, 1e-12))
    out.append(_close("K2 at x_m=4", mix.K2, 4.0, 1e-12))
    out.append(_close("a_m at x_m=4", mix.a_m, 2.0 * math.pi / 3.0, 1e-12))
    out.append(_le("mixture identity", mixture_identity_residual(mix, np.linspace(-100, 100, 2001)), 1e-12))
    for xi in (0.1, 0.5, 1.0):
        out.append(_le(f"lemma identity xi={xi:g}", lemma_residual(mix, xi), 1e-6))
    out.append(_le("v_m sup vs bound", v_m_sup(mix) - v_m_bound(mix), 0.0))

    consts = admissible_constants(P, 3.0)
    out.append(Check("gamma positive", consts.gamma, 0.0, consts.gamma > 0))
    rep = step3_terms(mix, consts, 5.0, 1.0)
    out.append(_le("step-3 terms finite", 0.0 if all(math.isfinite(v) and v >= 0 for v in rep.terms.values())
                   else 1.0, 0.0))
    out.append(_close("tightness radius cauchy", tightness_radius(Cauchy(), P, 0.05),
                      (2.6 * (1 / math.pi) * (5.0 / 3.0) * (1 + 2 * math.pi) ** 2 / 0.05), 1e-3))

    phi0 = cf_grid(Cauchy(), 8.0, 257)
    drift = float(np.max(np.abs(evolve_cf(phi0, 1.0, P).phi - phi0.phi)))
    out.append(_le("cauchy fixed point drift t=1", drift, 1e-8))

    with tempfile.TemporaryDirectory() as d:
        rows = [{"a": 0.1, "b": 1}, {"a": 1e-300, "b": 2}]
        p1 = emit_csv(rows, os.path.join(d, "a.csv"))
        p2 = emit_csv(rows, os.path.join(d, "b.csv"))
        with open(p1, "rb") as f1, open(p2, "rb") as f2:
            same = f1.read() == f2.read()
    out.append(Check("csv byte identity", 0.0 if same else 1.0, 0.0, same))
    return out
