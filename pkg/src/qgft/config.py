"""Experiment configuration: JSON file plus command-line overrides, checked against a schema."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema

__all__ = ["ConfigError", "ExperimentConfig", "DEFAULTS", "DEFAULT_TOLERANCES", "parse_complex", "parse_int_range", "load_config"]

DEFAULT_TOLERANCES = {
    "haar_closed_form": 1e-10,
    "orthogonality": 1e-8,
    "plancherel": 1e-8,
    "dual_weight": 1e-8,
    "hausdorff_young": 1e-8,
    "convolution": 1e-12,
    "module_action": 1e-8,
    "zsweep_slope": 0.01,
    "zsweep_constant": 1e-8,
    "zsweep_imag": 1e-10,
    "transport": 1e-10,
    "oracle": 1e-10,
}

DEFAULTS = {
    "backend": "suq2",
    "q": 0.5,
    "trunc_n": 64,
    "tower_l": 3,
    "z_grid": ["-0.5"],
    "p_grid": [1.0, 4 / 3, 1.5, 2.0],
    "n_range": [1, 2, 3, 4, 5],
    "seed": 7,
    "samples": 200,
    "tolerances": {},
}

_COMPLEX = {"oneOf": [{"type": "number"}, {"type": "string", "minLength": 1}]}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": list(DEFAULTS),
    "properties": {
        "backend": {"type": "string", "pattern": r"^(suq2|s3|cyclic\([1-9][0-9]*\))$"},
        "q": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "trunc_n": {"type": "integer", "minimum": 2},
        "tower_l": {"type": "number", "minimum": 0, "multipleOf": 0.5},
        "z_grid": {"type": "array", "minItems": 1, "items": _COMPLEX},
        "p_grid": {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 1, "maximum": 2}},
        "n_range": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
        "seed": {"type": "integer", "minimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0} for k in DEFAULT_TOLERANCES},
        },
    },
}


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def parse_complex(text) -> complex:
    """Accept ``-0.5``, ``"-0.5+0i"``, ``"0.7j"`` and similar."""
    if isinstance(text, (int, float)):
        return complex(text)
    s = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise ConfigError(f"cannot parse complex number {text!r}") from None


def parse_int_range(text: str) -> list[int]:
    """``"1..5"`` or ``"1,2,4"``."""
    out: list[int] = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", part)
        if m:
            out.extend(range(int(m.group(1)), int(m.group(2)) + 1))
        else:
            try:
                out.append(int(part))
            except ValueError:
                raise ConfigError(f"cannot parse integer list item {part!r}") from None
    return out


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


@dataclass(frozen=True)
class ExperimentConfig:
    backend: str
    q: float
    trunc_n: int
    tower_l: Fraction
    z_grid: tuple
    p_grid: tuple
    n_range: tuple
    seed: int
    samples: int
    tolerances: dict = field(default_factory=dict)

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def echo(self) -> dict:
        return {
            "backend": self.backend,
            "q": self.q,
            "trunc_n": self.trunc_n,
            "tower_l": str(self.tower_l),
            "z_grid": [format_complex(z) for z in self.z_grid],
            "p_grid": list(self.p_grid),
            "n_range": list(self.n_range),
            "seed": self.seed,
            "samples": self.samples,
            "tolerances": {k: self.tol(k) for k in DEFAULT_TOLERANCES},
        }


def format_complex(z: complex) -> str:
    return f"{z.real:g}{z.imag:+g}i"


def load_config(path: str | Path | None, overrides: dict) -> ExperimentConfig:
    """Merge defaults, the JSON file at ``path`` and ``overrides`` (flags win), then validate."""
    raw = dict(DEFAULTS)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        raw.update(data)
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "z_grid":
            value = _split(value)
        elif key == "p_grid":
            try:
                value = [float(v) for v in _split(value)]
            except ValueError:
                raise ConfigError(f"cannot parse p grid {value!r}") from None
        elif key == "n_range":
            value = parse_int_range(value)
        raw[key] = value
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None
    level = Fraction(raw["tower_l"]).limit_denominator(2)
    if raw["backend"] == "suq2" and max(raw["n_range"]) > 2 * level:
        raise ConfigError(f"n_range exceeds the tower: max n is {int(2 * level)}")
    return ExperimentConfig(
        backend=raw["backend"],
        q=float(raw["q"]),
        trunc_n=int(raw["trunc_n"]),
        tower_l=level,
        z_grid=tuple(parse_complex(z) for z in raw["z_grid"]),
        p_grid=tuple(float(p) for p in raw["p_grid"]),
        n_range=tuple(int(n) for n in raw["n_range"]),
        seed=int(raw["seed"]),
        samples=int(raw["samples"]),
        tolerances=dict(raw["tolerances"]),
    )
