"""Batch runner: kaclab {simulate,solve,classify,mixture,bounds,selftest} [--config PATH] ..."""

from __future__ import annotations

import argparse
import math
import os
import sys
from typing import Optional

import numpy as np

from .bounds import (AdmissibilityError, InapplicableError, admissible_constants, megabound_check,
                     step3_terms, tightness_radius, upper_rate_terms, xi_case1, xi_case2)
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .csvio import emit_csv
from .fourier import CFGrid, cf_from_trees, cf_grid, evolve_cf, limit_check
from .mixture import (InvalidProfileError, build_mixture, lemma_residual, mixture_identity_residual,
                      sample_component, v_m_bound, v_m_sup)
from .model import classify_tail, explosion_schedule
from .montecarlo import explosion_curve
from .selftest import run_selftest
from .stable import StableLaw, a0_from_c0, kolmogorov_distance

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2


class InvariantFailure(RuntimeError):
    def __init__(self, message: str, report: str):
        super().__init__(message)
        self.report = report


def _path(out: str, name: str) -> str:
    return os.path.join(out, name)


def _schedule(cfg: ExperimentConfig):
    try:
        consts = admissible_constants(cfg.params(), cfg.get("constants", "q"), cfg.constant_overrides(),
                                      cfg.get("constants", "delta"), cfg.get("constants", "d_star"))
    except AdmissibilityError as e:
        if cfg.params().alpha >= 2:
            return None, None
        raise ConfigError("constants", str(e)) from None
    return consts, consts.schedule()


# ------------------------------------------------------------------ subcommands

SIMULATE_COLUMNS = ["t", "m", "x", "below", "below_sigma", "central", "central_sigma", "above",
                    "above_sigma", "window", "window_sigma", "n"]


def cmd_simulate(cfg: ExperimentConfig, out: str, threads: int) -> list[str]:
    run = cfg.values["run"]
    _, sched = _schedule(cfg)
    rows = explosion_curve(run["t_grid"], cfg.law(), cfg.params(), cfg.profile(), sched,
                           run["n_samples"], run["seed"], run["chunk_size"], threads,
                           run["window"], run["method"])
    return [emit_csv(rows, _path(out, "simulate.csv"), SIMULATE_COLUMNS)]


def _limit_target(cfg: ExperimentConfig):
    law, params = cfg.law(), cfg.params()
    if params.alpha >= 2:
        var = getattr(law, "variance", None)
        return None if var is None else StableLaw(2.0, var / 2.0)
    tc = classify_tail(law, params)
    if tc.kind != "NDA":
        return None
    return 0 if tc.estimate == 0 else StableLaw(params.alpha, a0_from_c0(tc.estimate, params.alpha))


def cmd_solve(cfg: ExperimentConfig, out: str, threads: int) -> list[str]:
    run = cfg.values["run"]
    law, params = cfg.law(), cfg.params()
    phi0 = cf_grid(law, run["xi_max"], run["n_xi"])
    ts = run["t_grid"]
    sols = evolve_cf(phi0, max(ts), params, run["dt"], run["n_theta"], times=ts)
    target = _limit_target(cfg)
    stride = max(1, (phi0.xi.size - 1) // 128)
    pick = np.arange(0, phi0.xi.size, stride)
    rows, cf_rows = [], []
    nan = float("nan")
    for t, sol in zip(sorted(ts), sols):
        trees = None
        if run["cf_samples"] > 0:
            if t > 0:
                trees = cf_from_trees(phi0.xi[pick], t, law, params, run["cf_samples"], run["seed"],
                                      run["chunk_size"], threads)
            else:
                trees = CFGrid(phi0.xi[pick], phi0.phi[pick], phi0.kappa, sigma=np.zeros(pick.size))
        gap = nan if trees is None else float(np.max(np.abs(sol.phi[pick] - trees.phi)))
        sig = nan if trees is None else float(np.max(trees.sigma))
        rows.append({"t": t, "drift": float(np.max(np.abs(sol.phi - phi0.phi))),
                     "limit_distance": nan if target is None else limit_check(sol, target),
                     "trees_distance": gap, "trees_sigma_max": sig})
        for j, i in enumerate(pick):
            cf_rows.append({"t": t, "xi": float(phi0.xi[i]), "phi": float(sol.phi[i]),
                            "phi_trees": nan if trees is None else float(trees.phi[j]),
                            "sigma": nan if trees is None else float(trees.sigma[j])})
    return [emit_csv(rows, _path(out, "solve.csv"),
                     ["t", "drift", "limit_distance", "trees_distance", "trees_sigma_max"]),
            emit_csv(cf_rows, _path(out, "cf.csv"), ["t", "xi", "phi", "phi_trees", "sigma"])]


def cmd_classify(cfg: ExperimentConfig, out: str, threads: int) -> list[str]:
    run = cfg.values["run"]
    law, params = cfg.law(), cfg.params()
    tc = classify_tail(law, params)
    a0 = a0_from_c0(tc.estimate, params.alpha) if tc.kind == "NDA" and params.alpha < 2 else float("nan")
    try:
        radius = tightness_radius(law, params, run["tightness_eps"], run["tightness_split"])
    except InapplicableError:
        radius = float("nan")
    row = {"law": law.kind, "kind": tc.kind, "estimate": tc.estimate, "span": tc.span,
           "growth": tc.growth, "a0": a0, "tightness_eps": run["tightness_eps"], "radius": radius}
    return [emit_csv([row], _path(out, "classify.csv"), list(row))]


MIXTURE_COLUMNS = ["m", "x_m", "theta_m", "inv_K1", "K1", "K2", "a_m", "a_m_quadrature",
                   "identity_residual", "lemma_0.1", "lemma_0.5", "lemma_1", "v_m_sup", "v_m_bound",
                   "ks_mixed", "ks_limit", "k_m", "A_m"]


def cmd_mixture(cfg: ExperimentConfig, out: str, threads: int) -> list[str]:
    run = cfg.values["run"]
    law, params, profile = cfg.law(), cfg.params(), cfg.profile()
    delta = cfg.get("constants", "delta")
    n = run["n_samples"]
    ks_limit = math.sqrt(math.log(2.0 / 1e-3) / (2.0 * n))
    rows, bad = [], []
    for m in run["mixture_m"]:
        try:
            mix = build_mixture(law, profile, m, params)
        except InvalidProfileError as e:
            bad.append(f"m={m}: {e}")
            continue
        em = sample_component(mix, "mixed", n, run["seed"], run["chunk_size"], threads)
        row = {"m": m, "x_m": mix.x_m, "theta_m": mix.theta_m, "inv_K1": mix.inv_K1, "K1": mix.K1,
               "K2": mix.K2, "a_m": mix.a_m, "a_m_quadrature": mix.a_m_quadrature(),
               "identity_residual": mixture_identity_residual(mix, mix.check_grid()),
               "lemma_0.1": lemma_residual(mix, 0.1), "lemma_0.5": lemma_residual(mix, 0.5),
               "lemma_1": lemma_residual(mix, 1.0), "v_m_sup": v_m_sup(mix), "v_m_bound": v_m_bound(mix),
               "ks_mixed": kolmogorov_distance(em, law.cdf), "ks_limit": ks_limit,
               "k_m": mix.k_m(delta), "A_m": mix.A_m(delta)}
        rows.append(row)
        if row["identity_residual"] >= 1e-12:
            bad.append(f"m={m}: identity residual {row['identity_residual']:.3e}")
        if max(row["lemma_0.1"], row["lemma_0.5"], row["lemma_1"]) >= 1e-6:
            bad.append(f"m={m}: lemma identity residual too large")
        if row["v_m_sup"] > row["v_m_bound"]:
            bad.append(f"m={m}: v_m exceeds its bound")
        if row["ks_mixed"] > ks_limit:
            bad.append(f"m={m}: mixed sample KS {row['ks_mixed']:.4f} > {ks_limit:.4f}")
    path = emit_csv(rows, _path(out, "mixture.csv"), MIXTURE_COLUMNS)
    if bad:
        raise InvariantFailure("; ".join(bad), path)
    return [path]


TERM_NAMES = ["R1", "R2", "R3_1", "R3_2", "R3_3", "R3_4", "R4", "R5", "R6", "R7_1", "R7_2", "R8"]


def cmd_bounds(cfg: ExperimentConfig, out: str, threads: int) -> list[str]:
    run = cfg.values["run"]
    law, params, profile = cfg.law(), cfg.params(), cfg.profile()
    consts, sched = _schedule(cfg)
    if consts is None:
        raise ConfigError("model.p", "the bound needs p > 0")
    paths = [emit_csv([{"name": k, "value": v} for k, v in consts.as_dict().items()],
                      _path(out, "constants.csv"), ["name", "value"])]
    ts = [t for t in run["t_grid"] if t > 0]
    step_rows, mixes = [], {}
    for t in ts:
        sv = explosion_schedule(profile, law, params, sched, t)
        row = {"t": t, "m": sv.m, "x": sv.x}
        if sv.available:
            if sv.m not in mixes:
                mixes[sv.m] = build_mixture(law, profile, sv.m, params)
            rep = step3_terms(mixes[sv.m], consts, t, sv.x)
            row.update(rep.terms, total=rep.total)
        step_rows.append(row)
    paths.append(emit_csv(step_rows, _path(out, "step3.csv"), ["t", "m", "x"] + TERM_NAMES + ["total"]))
    mb = megabound_check(law, profile, params, consts, ts, run["n_samples"], run["seed"],
                         run["chunk_size"], threads)
    mb_rows = [{"t": r.t, "m": r.m, "x": r.x, "mc_lhs": r.mc_lhs, "mc_sigma": r.mc_sigma,
                "central": r.central, "central_sigma": r.central_sigma, "bound_total": r.bound_total,
                "slack": r.slack, "vacuous": r.vacuous, "holds": r.holds} for r in mb]
    mb_path = emit_csv(mb_rows, _path(out, "megabound.csv"), list(mb_rows[0]) if mb_rows else
                       ["t", "m", "x", "mc_lhs", "mc_sigma", "central", "central_sigma", "bound_total",
                        "slack", "vacuous", "holds"])
    paths.append(mb_path)
    xi_fn = None
    if law.kind == "pareto_symmetric" and law.beta < params.alpha:
        xi_fn = xi_case1(params, law.beta, consts, run["rate_scale"])
    elif law.kind == "slow_log_tail" and abs(law.a - params.alpha) < 1e-12:
        xi_fn = xi_case2(params, run["rate_scale"])
    if xi_fn is not None:
        rates = upper_rate_terms(law, params, xi_fn, run["rate_eps"], run["rate_tau"], run["rate_t_grid"])
        paths.append(emit_csv(rates, _path(out, "rates.csv"), ["t", "xi", "term1", "term2"]))
    failed = [r.t for r in mb if r.m > 0 and not r.holds]
    if failed:
        raise InvariantFailure(f"bound violated beyond 3 sigma at t={failed}", mb_path)
    return paths


def cmd_selftest(cfg: ExperimentConfig, out: str, threads: int) -> list[str]:
    checks = run_selftest(cfg.get("run", "seed"), threads)
    path = emit_csv(checks, _path(out, "selftest.csv"), ["name", "value", "limit", "passed"])
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise InvariantFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}", path)
    return [path]


COMMANDS = {"simulate": cmd_simulate, "solve": cmd_solve, "classify": cmd_classify,
            "mixture": cmd_mixture, "bounds": cmd_bounds, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kaclab", description="Inelastic Kac model experiments.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", metavar="PATH", help="INI experiment file (defaults if omitted)")
    ap.add_argument("--seed", type=int, help="override run.seed")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (output does not depend on it)")
    ap.add_argument("--out", metavar="DIR", help="override output.directory")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("run.seed", "must be nonnegative")
            cfg.set("run", "seed", args.seed)
        threads = args.threads if args.threads is not None else cfg.get("run", "threads")
        if threads <= 0:
            raise ConfigError("run.threads", "must be positive")
        out = args.out or cfg.get("output", "directory")
        paths = COMMANDS[args.command](cfg, out, threads)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantFailure as e:
        print(f"invariant failure: {e}; report: {e.report}", file=sys.stderr)
        return EXIT_INVARIANT
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
