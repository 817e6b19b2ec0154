"""Strict JSON run configuration.

Schema::

    {"model":  {"mu", "sigma2", "sigmap2", "r", "c", "m"},      required
     "target": {"epsilon", "T"},                                required
     "hjb":    {"x_max", "tol"},                                optional
     "pde":    {"nx", "nt", "tol"},                             optional
     "mc":     {"paths", "dt", "value_horizon", "antithetic"},  optional
     "seed":   unsigned 64-bit integer}                         optional

Unknown keys anywhere are rejected so that typos cannot silently fall back to defaults.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .hjb import SolverOptions
from .model import ModelParams, SolvencyTarget, validate_params
from .survival import PdeOptions

_MODEL_KEYS = ("mu", "sigma2", "sigmap2", "r", "c", "m")
_TARGET_KEYS = ("epsilon", "T")
_SECTIONS = {"model", "target", "hjb", "pde", "mc", "seed"}


@dataclass(frozen=True)
class McOptions:
    paths: int = 100_000
    dt: float = 1e-3
    value_horizon: float | None = None
    antithetic: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    target: SolvencyTarget
    hjb: SolverOptions = field(default_factory=SolverOptions)
    pde: PdeOptions = field(default_factory=PdeOptions)
    mc: McOptions = field(default_factory=McOptions)
    seed: int = 0

    def echo(self) -> dict:
        """Plain-dict view of the inputs, in schema form."""
        return {
            "model": {k: getattr(self.model, k) for k in _MODEL_KEYS},
            "target": {"epsilon": self.target.epsilon, "T": self.target.horizon},
            "hjb": {"x_max": self.hjb.x_max, "tol": self.hjb.rtol},
            "pde": {"nx": self.pde.nx, "nt": self.pde.nt, "tol": self.pde.tol},
            "mc": {"paths": self.mc.paths, "dt": self.mc.dt, "value_horizon": self.mc.value_horizon,
                   "antithetic": self.mc.antithetic},
            "seed": self.seed,
        }


def _number(where, value, positive=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(f"{where}: must be positive, got {value!r}")
    return float(value)


def _integer(where, value, minimum=1):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _section(data, name, allowed, required=()):
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"'{name}' must be an object")
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
    for k in required:
        if k not in sec:
            raise ConfigError(f"missing key '{name}.{k}'")
    return sec


def parse_config(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - _SECTIONS)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    for name in ("model", "target"):
        if name not in data:
            raise ConfigError(f"missing section '{name}'")

    sec = _section(data, "model", _MODEL_KEYS, _MODEL_KEYS)
    model = ModelParams(**{k: _number(f"model.{k}", sec[k]) for k in _MODEL_KEYS})
    sec = _section(data, "target", _TARGET_KEYS, _TARGET_KEYS)
    target = SolvencyTarget(_number("target.epsilon", sec["epsilon"]), _number("target.T", sec["T"]))
    report = validate_params(model, target)
    if not report.ok:
        raise ConfigError("; ".join(report.messages))

    sec = _section(data, "hjb", ("x_max", "tol"))
    hjb = SolverOptions()
    if sec.get("x_max") is not None:
        hjb = SolverOptions(**{**hjb.__dict__, "x_max": _number("hjb.x_max", sec["x_max"], True)})
    if "tol" in sec:
        hjb = SolverOptions(**{**hjb.__dict__, "rtol": _number("hjb.tol", sec["tol"], True)})

    sec = _section(data, "pde", ("nx", "nt", "tol"))
    pde = PdeOptions(nx=_integer("pde.nx", sec.get("nx", PdeOptions.nx), 3),
                     nt=_integer("pde.nt", sec.get("nt", PdeOptions.nt), 1),
                     tol=_number("pde.tol", sec.get("tol", PdeOptions.tol), True))

    sec = _section(data, "mc", ("paths", "dt", "value_horizon", "antithetic"))
    vh = sec.get("value_horizon")
    anti = sec.get("antithetic", False)
    if not isinstance(anti, bool):
        raise ConfigError(f"mc.antithetic: expected true/false, got {anti!r}")
    mc = McOptions(paths=_integer("mc.paths", sec.get("paths", McOptions.paths)),
                   dt=_number("mc.dt", sec.get("dt", McOptions.dt), True),
                   value_horizon=None if vh is None else _number("mc.value_horizon", vh, True),
                   antithetic=anti)

    seed = data.get("seed", 0)
    seed = _integer("seed", seed, 0)
    if seed >= 1 << 64:
        raise ConfigError("seed must fit in 64 bits")
    return RunConfig(model, target, hjb, pde, mc, seed)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_config(data)
