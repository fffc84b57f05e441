"""Flat dotted key-value experiment configuration.

Example::

    command = fit
    model.m = 1.0
    model.gamma = 4
    numerics.L = 64, 96
    output.formats = csv, json

Blank lines and lines starting with '#' are ignored.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional

from .errors import SchemaError

COMMANDS = ("bands", "thresholds", "flatband", "count", "ssf", "fit", "constant", "toroidal", "validate")
# commands whose predictions rest on the gamma > 2 accumulation asymptotics
NEEDS_GAMMA_ABOVE_2 = ("count", "fit", "constant")
OUTPUT_ROOT_ENV = "DIRAC2D_OUTPUT_ROOT"


def _float(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    return int(text)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _words(text: str) -> list[str]:
    return [x for x in text.replace(",", " ").split()]


def _str(text: str) -> str:
    return text.strip()


@dataclass(frozen=True)
class Field:
    parse: Callable[[str], Any]
    default: Any
    check: Optional[Callable[[Any], Optional[str]]] = None


def _nonneg(x) -> Optional[str]:
    return None if x >= 0 else "must be nonnegative"


def _positive(x) -> Optional[str]:
    return None if x > 0 else "must be positive"


def _one_of(*options):
    def check(x):
        return None if x in options else f"must be one of {', '.join(options)}"
    return check


def _each(check):
    def inner(xs):
        for x in xs:
            msg = check(x)
            if msg:
                return msg
        return None
    return inner


def _formats(xs) -> Optional[str]:
    bad = [x for x in xs if x not in ("csv", "json")]
    return f"unknown formats {bad}" if bad else None


def _v1(text) -> Optional[str]:
    kind = text.split(":")[0]
    return None if kind in ("none", "impulse", "power") else "must be none, impulse:<value> or power:<Gamma>:<gamma>"


SCHEMA: dict[str, Field] = {
    "command": Field(_str, None, _one_of(*COMMANDS)),
    "model.m": Field(_float, 1.0, _nonneg),
    "model.gamma": Field(_float, 4.0, _positive),
    "model.Gamma2": Field(_float, 1.0, _nonneg),
    "model.Gamma3": Field(_float, 1.0, _nonneg),
    "model.v1": Field(_str, "impulse:1.0", _v1),
    "model.sign": Field(_int, 1, lambda s: None if s in (-1, 1) else "must be -1 or 1"),
    "model.potential_file": Field(_str, ""),
    "numerics.L": Field(_ints, [32], _each(lambda L: None if L >= 2 else "entries must be >= 2")),
    "numerics.boundary": Field(_str, "open", _one_of("open", "periodic")),
    "numerics.lambda0": Field(_float, 0.1, _positive),
    "numerics.lambda_floor": Field(_float, 1e-8, _positive),
    "numerics.lambda_grid": Field(_floats, []),
    "numerics.floor_rule": Field(_str, "localization", _one_of("localization", "momentum")),
    "numerics.M": Field(_ints, [16], _each(lambda M: None if M >= 4 else "entries must be >= 4")),
    "numerics.grid_N": Field(_int, 64, _positive),
    "numerics.nodes": Field(_int, 24, lambda n: None if n >= 16 else "must be >= 16"),
    "numerics.seed": Field(_int, 0),
    "numerics.samples": Field(_int, 20, _positive),
    "input.series": Field(_str, ""),
    "output.dir": Field(_str, "results"),
    "output.formats": Field(_words, ["csv", "json"], _formats),
}


@dataclass
class ExperimentConfig:
    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def command(self) -> str:
        return self.values["command"]

    def output_dir(self) -> Path:
        out = Path(self.values["output.dir"])
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root and not out.is_absolute():
            out = Path(root) / out
        return out

    def resolved(self) -> dict:
        return {k: self.values[k] for k in sorted(self.values)}


def parse_text(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise SchemaError("expected 'key = value'", f"line {lineno}")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    return raw


def build_config(raw: Mapping[str, str], overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    """Validate raw strings against the schema; ``overrides`` win over ``raw``."""
    merged = dict(raw)
    merged.update(overrides or {})
    values: dict[str, Any] = {}
    for key in merged:
        if key not in SCHEMA:
            raise SchemaError(f"unknown key {key!r}", key)
    for key, rule in SCHEMA.items():
        if key in merged:
            try:
                val = rule.parse(merged[key])
            except ValueError as exc:
                raise SchemaError(f"cannot parse {merged[key]!r} ({exc})", key) from None
        else:
            val = rule.default
        if val is None:
            raise SchemaError("required", key)
        if rule.check is not None:
            msg = rule.check(val)
            if msg:
                raise SchemaError(msg, key)
        values[key] = val
    if values["command"] in NEEDS_GAMMA_ABOVE_2 and values["model.gamma"] <= 2:
        raise SchemaError(
            "must exceed 2: the accumulation asymptotics of the flat-band "
            "eigenvalues are established only for gamma > 2", "model.gamma")
    if values["command"] == "toroidal" and values["model.gamma"] <= 2:
        raise SchemaError("must exceed the dimension d = 2", "model.gamma")
    return ExperimentConfig(values)


def load_config(path: str | Path, overrides: Optional[Mapping[str, str]] = None) -> ExperimentConfig:
    return build_config(parse_text(Path(path).read_text()), overrides)
