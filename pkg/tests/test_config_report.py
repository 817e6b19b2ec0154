import json
import math

import numpy as np
import pytest

from dividend_barrier import ConfigError
from dividend_barrier.config import load_config, parse_config
from dividend_barrier.report import fmt, read_csv, write_csv, write_summary, write_svg

from conftest import write_config


def test_default_config(cfg):
    assert cfg.model.r == 0.1 and cfg.model.c == 0.2
    assert cfg.target.epsilon == 0.1 and cfg.target.horizon == 1.0
    assert cfg.mc.paths == 100000 and cfg.seed == 20240501
    assert cfg.hjb.rtol == 1e-10
    assert parse_config(cfg.echo()) == cfg


def test_defaults_for_optional_sections(config_dict):
    data = {"model": config_dict["model"], "target": config_dict["target"]}
    cfg = parse_config(data)
    assert cfg.seed == 0 and cfg.pde.nx == 800 and cfg.mc.dt == 1e-3


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["model"].pop("mu"), "missing key 'model.mu'"),
    (lambda d: d.pop("target"), "missing section 'target'"),
    (lambda d: d["model"].update(muu=1.0), "unknown key(s) in 'model': muu"),
    (lambda d: d.update(extra=1), "unknown top-level key(s): extra"),
    (lambda d: d["model"].update(mu="one"), "model.mu: expected a number"),
    (lambda d: d["pde"].update(nx=2.5), "pde.nx: expected an integer"),
    (lambda d: d["mc"].update(antithetic="yes"), "mc.antithetic"),
    (lambda d: d.update(seed=-1), "seed: must be >= 0"),
    (lambda d: d.update(seed=1 << 64), "64 bits"),
    (lambda d: d["model"].update(r=0.5), "r ≤ c violated"),
    (lambda d: d["target"].update(epsilon=1.0), "epsilon outside (0,1)"),
])
def test_schema_errors_name_the_problem(config_dict, mutate, message):
    mutate(config_dict)
    with pytest.raises(ConfigError) as exc:
        parse_config(config_dict)
    assert message in str(exc.value)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


@pytest.mark.parametrize("x, s", [(0.1, "0.1"), (1.0, "1"), (0.0, "0"), (-2.5, "-2.5"),
                                  (1 / 3, "0.333333333333"), (12345.678901234567, "12345.6789012"),
                                  (1.5e-9, "0.0000000015"), (math.nan, "nan"), (-math.inf, "-inf"),
                                  (True, "true"), (7, "7"), ("Constrained", "Constrained")])
def test_number_format(x, s):
    assert fmt(x) == s


def test_csv_round_trip(tmp_path):
    rows = [(1.0, 0.25, True), (2.0, 1 / 3, False)]
    path = write_csv(tmp_path / "a.csv", ("x", "y", "ok"), rows)
    text = path.read_text()
    assert text.splitlines()[0] == "x,y,ok"
    assert text.endswith("\n") and "\r" not in text
    header, body = read_csv(path)
    assert header == ["x", "y", "ok"]
    assert np.allclose(body, [[1.0, 0.25, 1.0], [2.0, 1 / 3, 0.0]], rtol=1e-11)
    # no temp files left behind
    assert [p.name for p in tmp_path.iterdir()] == ["a.csv"]


def test_summary_is_strict_json(tmp_path):
    path = write_summary(tmp_path / "s.json", {"b": np.float64(1.5), "n": np.int64(3), "bad": math.nan,
                                               "flag": np.bool_(True), "nested": {"v": [math.inf, 1.0]}})
    data = json.loads(path.read_text())
    assert data == {"schema_version": 1, "b": 1.5, "n": 3, "bad": None, "flag": True,
                    "nested": {"v": [None, 1.0]}}


def test_svg_is_reproducible(tmp_path):
    series = [("a", [0, 1, 2], [1, 0.5, 0.2]), ("b", [0, 1, 2], [1, 0.7, 0.4])]
    p1 = write_svg(tmp_path / "a.svg", series, "x", "y", "t").read_bytes()
    p2 = write_svg(tmp_path / "b.svg", series, "x", "y", "t").read_bytes()
    assert p1 == p2 and p1.startswith(b"<?xml")


def test_write_config_helper(tmp_path, config_dict):
    assert load_config(write_config(tmp_path, config_dict)).seed == 20240501
