"""Run configuration: INI sections per subcommand, flag overrides, validation.

A config file holds one ``[command]`` section per subcommand with
``key = value`` lines.  Values given on the command line win over the file,
and the file wins over the defaults below.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Mapping

from .forest import DEFAULT_DEPTH_CAP

__all__ = ["ConfigError", "Param", "PARAMS", "RunConfig", "load_config", "parse_value"]


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (a usage error)."""


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # int, float, str, bool, ints, floats
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    help: str = ""
    choices: tuple[str, ...] | None = None


def _between(lo, hi):
    return lambda v: lo <= v <= hi


_pos = (lambda v: v > 0, "must be > 0")
_nonneg = (lambda v: v >= 0, "must be >= 0")
_ell = (lambda v: v > 1, "must be > 1")
_out = Param("output", "str", None, help="write the JSON report here (default stdout)")
_csv = Param("output", "str", None, help="write the CSV table here (default stdout)")
_rep = Param("report", "str", None, help="also write a JSON summary with the resolved config here")


def _p(name, kind, default, rule=None, help="", choices=None):
    check, text = rule if rule else (None, "")
    return Param(name, kind, default, check, text, help, choices)


PARAMS: dict[str, list[Param]] = {
    "verify-vanishing": [
        _p("d", "int", 2, (_between(2, DEFAULT_DEPTH_CAP + 1), f"must lie in [2, {DEFAULT_DEPTH_CAP + 1}]"),
           "coefficient degree (2d+1 modes)"),
        _p("box", "int", 4, _nonneg, "exhaustive box |k| <= box"),
        _p("L", "int", 1, _pos, "torus size"),
        _p("samples", "int", 0, _nonneg, "random constrained points instead of the box when > 0"),
        _p("seed", "int", 0),
        _p("radius", "int", 12, _pos, "sampling radius for random points"),
        _out,
    ],
    "count": [
        _p("table", "str", "cubic", help="which counting table", choices=("cubic", "divisor", "constrained")),
        _p("mu_min", "int", -20), _p("mu_max", "int", 20),
        _p("mu2_min", "int", -20), _p("mu2_max", "int", 20),
        _p("n_max", "int", 1000, _nonneg, "largest n for the divisor table"),
        _p("tree", "ints", (1,), help="branch indices l_1..l_D of the tree (constrained table)"),
        _p("box", "int", 4, _nonneg, "box for constrained tuples"),
        _csv,
        _rep,
    ],
    "coeff": [
        _p("d", "int", 2, (_between(2, DEFAULT_DEPTH_CAP + 1), f"must lie in [2, {DEFAULT_DEPTH_CAP + 1}]")),
        _p("box", "int", 2, _nonneg),
        _p("L", "int", 1, _pos),
        _p("kind", "str", "H", choices=("H", "G")),
        _p("resonant", "bool", True, help="only tuples on the resonance surface"),
        _csv,
        _rep,
    ],
    "chains": [
        _p("d", "int", 2, (_between(1, 3), "must lie in [1, 3]")),
        _p("points", "int", 100, _pos),
        _p("seed", "int", 0),
        _p("radius", "int", 12, _pos),
        _p("L", "int", 1, _pos),
        _out,
    ],
    "scaling": [
        _p("d", "int", 2, (lambda v: v == 2, "only d = 2 is implemented")),
        _p("Ls", "ints", (4, 8, 16, 32), (lambda v: len(v) >= 1 and min(v) >= 1, "need positive L values")),
        _p("ell", "float", 2.0, _ell),
        _p("trials", "int", 1, _pos),
        _p("seed", "int", 0),
        _p("radius", "float", 1.0, _pos),
        _p("slack", "float", 0.5, _nonneg, "allowed excess of the fitted slope over 2(d-1)"),
        _csv,
        _rep,
    ],
    "simulate": [
        _p("Ls", "ints", (4, 8), (lambda v: len(v) >= 1 and min(v) >= 1, "need positive L values")),
        _p("N", "int", 8, _pos, "mode box |k| <= N"),
        _p("A", "float", 1.0, help="initial amplitude of A exp(-pi K^2)"),
        _p("eps", "floats", (), (lambda v: all(e >= 0 for e in v), "must be >= 0"),
           "explicit eps values (default: the eps0/factor grid)"),
        _p("gamma", "float", 0.1, _nonneg),
        _p("small", "float", 0.1, _pos, "eps0^2 L^gamma"),
        _p("factors", "floats", (1.0, 2.0, 4.0), (lambda v: len(v) >= 1 and min(v) > 0, "must be > 0")),
        _p("ell", "float", 1.5, _ell),
        _p("M", "float", 1.0, _pos, "run to M T_R"),
        _p("dt", "float", 0.1, _pos),
        _p("samples", "int", 2000, _pos, "approximate number of stored samples"),
        _p("scheme", "str", "gauss4", choices=("gauss4", "rk4")),
        _p("drift_tol", "float", 1e-8, _pos),
        _p("t_max", "float", None, _pos, "cap on the final time"),
        _p("with_q", "bool", False, help="also evaluate the Q-corrected Fourier prediction"),
        _p("q_samples", "int", 200, _pos),
        _p("P", "int", 0, (_between(0, 2), "must be 0, 1 or 2"), "normal-form depth for c_K diagnostics"),
        _p("workers", "int", 1, _pos),
        _p("trajectory", "str", None, help="write (L, eps, t, K, Re u, Im u) CSV here"),
        _out,
    ],
}


def parse_value(p: Param, raw: Any) -> Any:
    if raw is None:
        return None
    if not isinstance(raw, str):
        if p.kind in ("ints", "floats"):
            conv = int if p.kind == "ints" else float
            return tuple(conv(x) for x in raw)
        return raw
    s = raw.strip()
    try:
        if p.kind == "int":
            return int(s)
        if p.kind == "float":
            return float(s)
        if p.kind == "bool":
            low = s.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(s)
        if p.kind == "ints":
            return tuple(int(x) for x in s.replace(",", " ").split())
        if p.kind == "floats":
            return tuple(float(x) for x in s.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{p.name}: cannot parse {raw!r} as {p.kind}") from exc
    return s


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: Mapping[str, Any]

    def __getattr__(self, name: str) -> Any:
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def to_dict(self) -> dict:
        out = {"command": self.command}
        for k, v in self.values.items():
            out[k] = list(v) if isinstance(v, tuple) else v
        return out


def _validate(command: str, values: dict) -> None:
    for p in PARAMS[command]:
        v = values[p.name]
        if v is None:
            continue
        if p.kind in ("float", "floats"):
            vals = v if isinstance(v, tuple) else (v,)
            if not all(math.isfinite(x) for x in vals):
                raise ConfigError(f"{p.name} must be finite")
        if p.choices and v not in p.choices:
            raise ConfigError(f"{p.name} must be one of {', '.join(p.choices)}")
        if p.check and not p.check(v):
            raise ConfigError(f"{p.name}={v!r} {p.rule}")
    if command == "count" and values["table"] == "constrained":
        if any(l < 1 or l > 2 * k + 3 for k, l in enumerate(values["tree"])) or not values["tree"]:
            raise ConfigError("tree branch indices must satisfy 1 <= l_k <= 2k+3 for levels k = 0, 1, ...")
    if command == "simulate" and any(e == 0 for e in values["eps"]) and values["t_max"] is None:
        raise ConfigError("eps = 0 needs t_max (there is no resonant time scale)")


def load_config(command: str, path: str | Path | None = None, overrides: Mapping[str, Any] | None = None) -> RunConfig:
    """Resolve defaults, then the ``[command]`` section of ``path``, then ``overrides``."""
    if command not in PARAMS:
        raise ConfigError(f"unknown command {command!r}")
    params = {p.name: p for p in PARAMS[command]}
    values = {p.name: p.default for p in PARAMS[command]}
    if path is not None:
        cp = configparser.ConfigParser()
        cp.optionxform = str  # keep L, N, M, P case
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if cp.has_section(command):
            for key, raw in cp.items(command):
                if key not in params:
                    raise ConfigError(f"unknown key {key!r} in [{command}]")
                values[key] = parse_value(params[key], raw)
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        if key not in params:
            raise ConfigError(f"unknown option {key!r} for {command}")
        values[key] = parse_value(params[key], raw)
    _validate(command, values)
    return RunConfig(command, values)
