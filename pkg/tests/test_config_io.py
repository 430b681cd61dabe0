import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcflab.config import CONSTANT_KEYS, SCHEMA, ConfigError, ExperimentConfig, load_config, parse_config
from mcflab.io import atomic_write, csv_text, dumps, read_csv


def test_defaults():
    cfg = ExperimentConfig()
    assert cfg.n == 3 and cfg.gauge == "radial" and cfg.L_sweep == (16.0, 32.0, 64.0)
    assert cfg.eps0 == 0.04 and cfg.delta == 0.05 and cfg.K == 10.0
    assert set(cfg.constants()) == set(CONSTANT_KEYS)
    with pytest.raises(AttributeError):
        cfg.nonexistent


def test_parse_config_text():
    cfg = parse_config("# comment\nn = 4\nL_sweep=8,16\n\ntargets = bowl-translation , gaussian-area\nseed=7  # trailing\n")
    assert cfg.n == 4 and cfg.seed == 7
    assert cfg.L_sweep == (8.0, 16.0)
    assert cfg.targets == ("bowl-translation", "gaussian-area")


@pytest.mark.parametrize("text", [
    "n=3\nn=4\n",
    "just words\n",
    "color=blue\n",
    "rtol=0\n",
    "rtol=-1e-8\n",
    "n=1\n",
    "gauge=spherical\n",
    "n=three\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_replace_and_round_trip(tmp_path):
    cfg = ExperimentConfig().replace(seed=5, L=16.0, a_values=(10.0, 30.0))
    path = tmp_path / "run.cfg"
    path.write_text(cfg.to_text())
    back = load_config(path)
    assert back.values == cfg.values
    assert ExperimentConfig().seed == 0


def test_snapshot_is_json_ready():
    snap = ExperimentConfig().snapshot()
    assert list(snap) == sorted(SCHEMA)
    json.dumps(snap)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.floats(1e-14, 1.0), st.integers(3, 8), st.lists(st.floats(1.0, 200.0), min_size=1, max_size=4))
def test_config_text_round_trip(seed, rtol, n, Ls):
    cfg = ExperimentConfig({"seed": seed, "rtol": rtol, "n": n, "L_sweep": tuple(Ls)})
    assert parse_config(cfg.to_text()).values == cfg.values


def test_atomic_write_replaces(tmp_path):
    path = tmp_path / "sub" / "out.txt"
    atomic_write(path, "one\n")
    atomic_write(path, "two\n")
    assert path.read_text() == "two\n"
    assert [p.name for p in path.parent.iterdir()] == ["out.txt"]


def test_dumps_handles_numpy_and_is_sorted():
    text = dumps({"b": np.float64(1.5), "a": np.arange(3), "c": np.bool_(True), "d": float("nan"), "e": (np.int64(2),)})
    assert json.loads(text) == {"a": [0, 1, 2], "b": 1.5, "c": True, "d": "nan", "e": [2]}
    assert text.index('"a"') < text.index('"b"')


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(allow_nan=False, allow_infinity=False), st.integers(-5, 5)), max_size=10))
def test_csv_round_trip_is_exact(rows):
    text = csv_text("mcflab.test/1", ["x", "k"], rows)
    schema, cols, back = read_csv(text)
    assert schema == "mcflab.test/1" and cols == ["x", "k"]
    assert [(float(a), int(b)) for a, b in back] == [(float(a), b) for a, b in rows]


def test_read_csv_needs_schema():
    with pytest.raises(ValueError):
        read_csv("x,y\n1,2\n")
