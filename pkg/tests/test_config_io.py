import math
import os

import pytest
from hypothesis import given, strategies as st

from kaclab.config import ConfigError, default_config, load_config, parse_config, parse_grid
from kaclab.csvio import emit_csv, format_value

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")


def test_parse_grid_forms():
    assert parse_grid("0:12:2") == [0, 2, 4, 6, 8, 10, 12]
    assert parse_grid("0:1:0.25") == [0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("5, 10 20") == [5, 10, 20]
    for bad in ("1:0:1", "0:1:0", "", "0:1"):
        with pytest.raises(ValueError):
            parse_grid(bad)


def test_defaults_roundtrip():
    cfg = default_config()
    again = parse_config(cfg.to_ini())
    assert again.values == cfg.values


@pytest.mark.parametrize("name", ["pareto", "cauchy", "gaussian", "slowlog", "tabulated"])
def test_shipped_configs_load(name):
    cfg = load_config(os.path.join(CONFIGS, f"{name}.ini"))
    law = cfg.law()
    assert law.kind in ("pareto_symmetric", "cauchy", "gaussian", "slow_log_tail", "tabulated")
    assert cfg.params().p >= 0


@pytest.mark.parametrize("text,key", [
    ("[run]\nn_samples = -5\n", "run.n_samples"),
    ("[run]\nn_samples = 1.5\n", "run.n_samples"),
    ("[run]\nbogus = 1\n", "run.bogus"),
    ("[nope]\na = 1\n", "nope"),
    ("[model]\np = -1\n", "model.p"),
    ("[law]\nkind = cauchy\nbeta = 0.5\n", "law.beta"),
    ("[law]\nkind = martian\n", "law.kind"),
    ("[law]\nkind = pareto_symmetric\nbeta = 3\n", "law.beta"),
    ("[law]\nkind = tabulated\n", "law.table"),
    ("[profile]\nc_form = cubic\n", "profile.c_form"),
    ("[run]\nt_grid = 3, 1\n", "run.t_grid"),
    ("[run]\nmethod = magic\n", "run.method"),
    ("[run]\ntightness_eps = 2\n", "run.tightness_eps"),
    ("not an ini", "file"),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.key == key


def test_missing_file():
    with pytest.raises(ConfigError) as info:
        load_config("/nonexistent/x.ini")
    assert info.value.key == "file"


def test_integer_scientific_notation():
    cfg = parse_config("[run]\nn_samples = 1e6\n")
    assert cfg.get("run", "n_samples") == 1_000_000


def test_over_log_profile():
    cfg = parse_config("[profile]\nx1 = 16\nc = 0.25\nc_form = over_log\n")
    assert cfg.profile().c_of(math.e ** 2) == pytest.approx(0.125)


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.1"
    assert format_value(float("nan")) == "nan"
    assert format_value(-math.inf) == "-inf"
    assert format_value(None) == ""
    assert format_value("a,b") == "a,b"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_roundtrips(x):
    assert float(format_value(x)) == x


def test_emit_csv(tmp_path):
    path = emit_csv([{"a": 1, "b": 0.5}, {"a": 2, "b": "x,y"}], str(tmp_path / "d" / "o.csv"))
    assert open(path, newline="").read() == 'a,b\n1,0.5\n2,"x,y"\n'
    empty = emit_csv([], str(tmp_path / "e.csv"), ["a"])
    assert open(empty).read() == "a\n"
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError) as info:
        emit_csv([{"a": 1}], str(blocker / "nested.csv"))
    assert "cannot write" in str(info.value)
