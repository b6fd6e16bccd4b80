"""Experiment configuration: one INI file with [model] [law] [profile] [constants] [run] [output]."""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import InitialLaw, ModelParams, TailProfile, load_table, make_law


class ConfigError(ValueError):
    """Bad or unknown configuration entry; ``key`` names it as section.key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _as_int(text: str) -> int:
    v = float(text)
    if not v.is_integer():
        raise ValueError(f"{text!r} is not an integer")
    return int(v)


def parse_grid(text: str) -> list[float]:
    """'a:b:h' (inclusive of b) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError("range grids are start:stop:step with step > 0")
        a, b, h = parts
        n = int(math.floor((b - a) / h + 1e-9))
        return [a + k * h for k in range(n + 1)]
    vals = [float(v) for v in text.replace(",", " ").split()]
    if not vals:
        raise ValueError("empty grid")
    return vals


def _int_list(text: str) -> list[int]:
    return [_as_int(v) for v in text.replace(",", " ").split()]


# section -> key -> (parser, default); None default means "unset"
SCHEMA = {
    "model": {"p": (float, 1.0)},
    "law": {"kind": (str, "pareto_symmetric"), "beta": (float, None), "alpha": (float, None),
            "variance": (float, None), "table": (str, None)},
    "profile": {"x1": (float, 1.0), "ratio": (float, 2.0), "c": (float, 0.5),
                "c_form": (str, "constant")},
    "constants": {"q": (float, 3.0), "sigma": (float, None), "tau": (float, None),
                  "tau1": (float, None), "tau2": (float, None), "tau3": (float, None),
                  "tau4": (float, None), "tau5": (float, None), "delta": (float, 0.5),
                  "d_star": (float, 0.1), "eta_frac": (float, 0.5)},
    "run": {"t_grid": (parse_grid, [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0]),
            "n_samples": (_as_int, 100_000), "seed": (_as_int, 0),
            "chunk_size": (_as_int, 65536), "threads": (_as_int, 1),
            "method": (str, "branching"), "window": (float, 1.0),
            "xi_max": (float, 8.0), "n_xi": (_as_int, 1025), "dt": (float, 0.01),
            "n_theta": (_as_int, 512), "cf_samples": (_as_int, 0),
            "mixture_m": (_int_list, [3]), "tightness_eps": (float, 0.05),
            "tightness_split": (float, 1.0), "rate_t_grid": (parse_grid, [5.0, 10.0, 20.0, 40.0]),
            "rate_eps": (float, 0.5), "rate_tau": (float, 1.0), "rate_scale": (float, 1.0)},
    "output": {"directory": (str, "out")},
}

_LAW_KEYS = {
    "pareto_symmetric": ("beta",), "exp_power_tail": ("beta",), "log_power_tail": ("beta",),
    "slow_log_tail": ("alpha",), "cauchy": (), "gaussian": ("variance",), "point_mass": (),
    "tabulated": ("table",),
}


def _render(v) -> str:
    if isinstance(v, list):
        return ", ".join(_render(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    base_dir: str = "."
    source: Optional[str] = None

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"{section}.{key}", "unknown key")
        self.values[section][key] = value

    # ---------------------------------------------------------- builders

    def params(self) -> ModelParams:
        try:
            return ModelParams(self.get("model", "p"))
        except ValueError as e:
            raise ConfigError("model.p", str(e)) from None

    def law(self) -> InitialLaw:
        sec = self.values["law"]
        kind = sec["kind"]
        if kind not in _LAW_KEYS:
            raise ConfigError("law.kind", f"unknown law kind {kind!r}")
        wanted = _LAW_KEYS[kind]
        for k in ("beta", "alpha", "variance", "table"):
            if sec[k] is not None and k not in wanted:
                raise ConfigError(f"law.{k}", f"not a parameter of {kind}")
        if kind == "tabulated":
            if sec["table"] is None:
                raise ConfigError("law.table", "tabulated law needs a table path")
            path = sec["table"]
            if not os.path.isabs(path):
                path = os.path.join(self.base_dir, path)
            try:
                return load_table(path)
            except (OSError, ValueError) as e:
                raise ConfigError("law.table", str(e)) from None
        kw = {k: sec[k] for k in wanted if sec[k] is not None}
        try:
            return make_law(kind, **kw)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"law.{wanted[0] if wanted else 'kind'}", str(e)) from None

    def profile(self) -> TailProfile:
        sec = self.values["profile"]
        c = sec["c"]
        if sec["c_form"] == "constant":
            cfn = c
        elif sec["c_form"] == "over_log":
            def cfn(x, c=c):
                return c / math.log(x)
        else:
            raise ConfigError("profile.c_form", "must be 'constant' or 'over_log'")
        try:
            return TailProfile(sec["x1"], sec["ratio"], cfn)
        except ValueError as e:
            raise ConfigError("profile.x1", str(e)) from None

    def constant_overrides(self) -> dict:
        sec = self.values["constants"]
        return {k: v for k, v in sec.items() if k not in ("q", "delta", "d_star") and v is not None}

    # ---------------------------------------------------------- serialization

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        for section, keys in SCHEMA.items():
            cp[section] = {k: _render(self.values[section][k]) for k in keys
                           if self.values[section][k] is not None}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def default_config() -> ExperimentConfig:
    return ExperimentConfig({s: {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in keys.items()}
                             for s, keys in SCHEMA.items()})


def parse_config(text: str, base_dir: str = ".", source: Optional[str] = None) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as e:
        raise ConfigError("file", str(e).splitlines()[0]) from None
    cfg = default_config()
    cfg.base_dir, cfg.source = base_dir, source
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(section, "unknown section")
        for key, raw in cp[section].items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{section}.{key}", "unknown key")
            parser = SCHEMA[section][key][0]
            try:
                cfg.values[section][key] = parser(raw)
            except ValueError as e:
                raise ConfigError(f"{section}.{key}", f"cannot parse {raw!r}: {e}") from None
    _check(cfg)
    return cfg


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError("file", f"{path}: {e.strerror}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)), path)


def _check(cfg: ExperimentConfig) -> None:
    run = cfg.values["run"]
    for key in ("n_samples", "chunk_size", "threads", "n_xi", "n_theta"):
        if run[key] <= 0:
            raise ConfigError(f"run.{key}", "must be positive")
    if run["seed"] < 0:
        raise ConfigError("run.seed", "must be nonnegative")
    if run["cf_samples"] < 0:
        raise ConfigError("run.cf_samples", "must be nonnegative")
    if run["method"] not in ("tree", "branching"):
        raise ConfigError("run.method", "must be 'tree' or 'branching'")
    ts = np.asarray(run["t_grid"])
    if np.any(ts < 0) or np.any(np.diff(ts) < 0):
        raise ConfigError("run.t_grid", "times must be nonnegative and nondecreasing")
    if not 0 < run["tightness_eps"] < 1:
        raise ConfigError("run.tightness_eps", "must lie in (0, 1)")
    if any(m < 1 for m in run["mixture_m"]):
        raise ConfigError("run.mixture_m", "indices start at 1")
    cfg.params()
    cfg.law()
    cfg.profile()
