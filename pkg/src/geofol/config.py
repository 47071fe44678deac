"""Scenario configuration: INI file with fixed sections and keys.

Unknown sections or keys are rejected, tolerances must be positive and seeds
integers. ``reference()`` renders every key with its default and meaning.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Key:
    kind: str  # int, float, tol, str, bool, floats, optional-float
    default: Any
    help: str


SCHEMA: dict[str, dict[str, Key]] = {
    "run": {
        "seed": Key("int", 0, "seed for every random sample"),
        "jobs": Key("int", 1, "worker processes for independent suites"),
        "csv": Key("bool", True, "write trajectory CSV files next to the report"),
        "csv_samples": Key("int", 400, "rows per trajectory CSV"),
    },
    "typechange": {
        "eta_override": Key("optional-float", None, "use this eta instead of half the certified value"),
        "eta_grid": Key("int", 2001, "grid size of the eta search"),
        "eta_tol": Key("tol", 1e-9, "minimum |eigenvalue| of G0 accepted by the eta search"),
        "flatten_start": Key("float", 0.8, "distance to the bad set where the interpolation starts"),
        "flatten_width": Key("float", 0.3, "width of the flattening step"),
        "rotation_halfwidth": Key("float", 0.3, "half-width of the rotation window around pi/2"),
        "audit_points": Key("int", 10000, "u-grid size of the construction audit"),
        "mutation": Key("str", "", "fault injection: flip:i,j or u2 (empty for none)"),
    },
    "sampling": {
        "points": Key("int", 1000, "random quotient points for residual and divergence checks"),
        "bracket_points": Key("int", 100, "points for the bracket table"),
        "bracket_digits": Key("int", 50, "mpmath digits for the bracket table"),
        "u_grid": Key("int", 2001, "u-grid for norm and sign checks"),
        "overlap_points": Key("int", 12, "u-values per quarter for the branch overlap check"),
        "crosspath_points": Key("int", 100, "random inputs for the two-route connection check"),
    },
    "flow": {
        "starts": Key("int", 20, "random starts for the closed-form flow comparison"),
        "tol": Key("tol", 1e-10, "integration tolerance for the flow comparison"),
    },
    "orbits": {
        "u0": Key("floats", [0.3, 0.7, 1.0, 1.5], "initial u values of the leaf-length sweep"),
        "tol": Key("tol", 1e-8, "closure tolerance"),
        "integ_tol": Key("tol", 1e-12, "integration tolerance"),
        "horizon": Key("float", 1000.0, "largest integration span"),
    },
    "surfaces": {
        "samples": Key("int", 20, "random geodesics per audit"),
        "horizon": Key("float", 100.0, "largest integration span"),
        "tol": Key("tol", 1e-8, "closure tolerance"),
        "integ_tol": Key("tol", 1e-11, "integration tolerance"),
    },
    "sasaki": {
        "geodesics": Key("int", 5, "base geodesics per causal type"),
        "length": Key("float", 2.0, "parameter length of each base geodesic"),
        "tol": Key("tol", 1e-11, "integration tolerance"),
        "samples": Key("int", 9, "points checked along each lift"),
    },
    "riemannize": {
        "points": Key("int", 200, "audit points per foliation"),
        "rapidity": Key("float", 0.7, "boost of the Minkowski foliations"),
    },
}

INTEGRATION_TOLS = (("flow", "tol"), ("orbits", "integ_tol"), ("surfaces", "integ_tol"), ("sasaki", "tol"))


def _parse(section: str, key: str, spec: Key, raw: str):
    where = f"[{section}] {key}"
    raw = raw.strip()
    try:
        if spec.kind == "int":
            if not raw.lstrip("+-").isdigit():
                raise ValueError
            return int(raw)
        if spec.kind in ("float", "tol"):
            v = float(raw)
        elif spec.kind == "optional-float":
            return None if raw.lower() in ("", "none") else float(raw)
        elif spec.kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        elif spec.kind == "floats":
            return [float(x) for x in raw.replace(",", " ").split()]
        else:
            return raw
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {spec.kind}") from None
    if not math.isfinite(v):
        raise ConfigError(f"{where}: must be finite")
    if spec.kind == "tol" and v <= 0:
        raise ConfigError(f"{where}: tolerance must be > 0, got {v}")
    return v


@dataclass
class ScenarioConfig:
    values: dict = field(default_factory=lambda: {s: {k: v.default for k, v in keys.items()} for s, keys in SCHEMA.items()})

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config parse error: {exc}") from None
        cfg = cls()
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]")
            for key, raw in parser.items(section):
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key [{section}] {key}")
                cfg.values[section][key] = _parse(section, key, SCHEMA[section][key], raw)
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_text(text)

    def validate(self) -> None:
        for section, keys in SCHEMA.items():
            for key, spec in keys.items():
                v = self.values[section][key]
                if spec.kind == "int" and (not isinstance(v, int) or isinstance(v, bool)):
                    raise ConfigError(f"[{section}] {key}: expected an integer")
                if spec.kind == "int" and key != "seed" and v < 1:
                    raise ConfigError(f"[{section}] {key}: must be >= 1")
                if spec.kind == "tol" and not v > 0:
                    raise ConfigError(f"[{section}] {key}: tolerance must be > 0")
        if not self.values["orbits"]["u0"]:
            raise ConfigError("[orbits] u0: need at least one value")
        mut = self.values["typechange"]["mutation"]
        if mut and not (mut == "u2" or mut.startswith("flip:")):
            raise ConfigError(f"[typechange] mutation: unknown value {mut!r}")

    def with_overrides(self, seed: int | None = None, tol: float | None = None) -> "ScenarioConfig":
        cfg = ScenarioConfig({s: dict(v) for s, v in self.values.items()})
        if seed is not None:
            cfg.values["run"]["seed"] = int(seed)
        if tol is not None:
            if not tol > 0:
                raise ConfigError("--tol must be > 0")
            for section, key in INTEGRATION_TOLS:
                cfg.values[section][key] = float(tol)
        cfg.validate()
        return cfg

    def typechange_params(self) -> dict:
        tc = self.values["typechange"]
        return {
            "eta_override": tc["eta_override"],
            "eta_grid": tc["eta_grid"],
            "eta_tol": tc["eta_tol"],
            "flatten_start": tc["flatten_start"],
            "flatten_width": tc["flatten_width"],
            "rotation_halfwidth": tc["rotation_halfwidth"],
            "audit_points": tc["audit_points"],
            "mutation": tc["mutation"] or None,
        }

    def as_dict(self) -> dict:
        return {s: dict(v) for s, v in self.values.items()}


def reference() -> str:
    """Every section and key with its default, as a commented INI file."""
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, spec in keys.items():
            d = spec.default
            if isinstance(d, list):
                d = ", ".join(repr(x) for x in d)
            elif d is None:
                d = "none"
            elif isinstance(d, bool):
                d = "true" if d else "false"
            lines.append(f"# {spec.help} ({spec.kind})")
            lines.append(f"{key} = {d}")
        lines.append("")
    return "\n".join(lines)
