"""Scenario configuration: JSON files with unit-suffixed quantities.

A quantity is given as ``<name>_<unit>``, e.g. ``"length_um": 100`` or
``"temperature_nK": 50``.  Everything is converted to SI on load; the
resolved values are what the manifest records.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

SCENARIOS = ("prethermalization", "lightcone", "gge", "recurrence", "sinegordon",
             "thermometry", "cooling")

UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6},
    "temperature": {"K": 1.0, "uK": 1e-6, "nK": 1e-9},
    "density": {"per_m": 1.0, "per_um": 1e6},
    "angular": {"rad_per_s": 1.0, "2pi_Hz": 2 * math.pi, "2pi_kHz": 2e3 * math.pi},
    "velocity": {"m_per_s": 1.0, "mm_per_s": 1e-3, "um_per_ms": 1e-3},
    "mass": {"kg": 1.0, "amu": 1.66053906660e-27},
}

SPECIES = {"Rb87": {"atom_mass": 1.443e-25, "scattering_length": 5.2e-9}}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def load_json(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), f"cannot read file ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(str(path), "top level must be an object")
    return data


def quantity(block: dict, name: str, kind: str, path: str, default: Any = None,
             required: bool = False):
    """SI value of ``name`` from ``block`` (looks for ``name_<unit>`` keys)."""
    found = [(u, block[f"{name}_{u}"]) for u in UNITS[kind] if f"{name}_{u}" in block]
    if len(found) > 1:
        raise ConfigError(f"{path}.{name}", "given in more than one unit")
    if not found:
        if required:
            units = ", ".join(f"{name}_{u}" for u in UNITS[kind])
            raise ConfigError(f"{path}.{name}", f"missing (one of {units})")
        return default
    unit, value = found[0]
    key = f"{path}.{name}_{unit}"
    scale = UNITS[kind][unit]
    if isinstance(value, list):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError(key, "must be a list of numbers")
        return [float(v) * scale for v in value]
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(key, "must be a number")
    return float(value) * scale


def _block(data: dict, name: str, required: bool = True) -> dict:
    if name not in data:
        if required:
            raise ConfigError(name, "missing block")
        return {}
    if not isinstance(data[name], dict):
        raise ConfigError(name, "must be an object")
    return data[name]


def _int(block: dict, key: str, path: str, default: Optional[int] = None, minimum: int = 1) -> Optional[int]:
    if key not in block:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing")
        return default
    v = block[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}", "must be an integer")
    if v < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}")
    return v


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int
    gas: dict
    basis: dict
    ensemble: dict
    evolution: dict
    observables: dict
    output: str
    raw: dict = field(default_factory=dict)

    def resolved(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed, "gas": self.gas, "basis": self.basis,
                "ensemble": self.ensemble, "evolution": self.evolution,
                "observables": self.observables, "output": self.output}


def parse_config(data: dict, source: str = "<config>") -> ScenarioConfig:
    """Validate the structure and convert every quantity to SI."""
    if "scenario" not in data:
        raise ConfigError("scenario", "missing")
    scenario = data["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {scenario!r} (expected one of {', '.join(SCENARIOS)})")
    if "seed" not in data:
        raise ConfigError("seed", "missing (a seed is mandatory)")
    seed = data["seed"]
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigError("seed", "must be a non-negative integer")

    g = _block(data, "gas")
    species = g.get("species")
    if species is not None and species not in SPECIES:
        raise ConfigError("gas.species", f"unknown species {species!r}")
    defaults = SPECIES.get(species, {})
    gas = {
        "atom_mass": quantity(g, "atom_mass", "mass", "gas", defaults.get("atom_mass"),
                              required="atom_mass" not in defaults),
        "scattering_length": quantity(g, "scattering_length", "length", "gas",
                                      defaults.get("scattering_length"),
                                      required="scattering_length" not in defaults),
        "omega_perp": quantity(g, "omega_perp", "angular", "gas", required=True),
        "n1d": quantity(g, "n1d", "density", "gas", required=True),
        "temperature": quantity(g, "temperature", "temperature", "gas", 0.0),
        "tunnel_coupling": quantity(g, "tunnel_coupling", "angular", "gas", 0.0),
        "atom_number": g.get("atom_number"),
    }
    geo = _block(g, "geometry") if "geometry" in g else None
    if geo is None:
        raise ConfigError("gas.geometry", "missing block")
    gtype = geo.get("type")
    if gtype == "box":
        gas["geometry"] = {"type": "box", "length": quantity(geo, "length", "length", "gas.geometry", required=True)}
    elif gtype == "harmonic":
        gas["geometry"] = {"type": "harmonic",
                           "omega_par": quantity(geo, "omega_par", "angular", "gas.geometry"),
                           "length": quantity(geo, "length", "length", "gas.geometry", required=True)}
    else:
        raise ConfigError("gas.geometry.type", "must be 'box' or 'harmonic'")

    b = _block(data, "basis")
    basis = {
        "grid_points": _int(b, "grid_points", "basis", minimum=16),
        "modes": _int(b, "modes", "basis", 0, minimum=0) or None,
        "grid_length": quantity(b, "grid_length", "length", "basis"),
        "sound_speed": quantity(b, "sound_speed", "velocity", "basis"),
    }
    L = gas["geometry"]["length"]
    if basis["grid_length"] is not None and not math.isclose(basis["grid_length"], L, rel_tol=1e-9):
        raise ConfigError("basis.grid_length", f"grid of length {basis['grid_length']:g} m does not span L = {L:g} m")

    e = _block(data, "ensemble")
    ensemble = {"R": _int(e, "R", "ensemble", minimum=2), "sampler": e.get("sampler")}
    for k in ("sweeps",):
        if k in e:
            ensemble[k] = _int(e, k, "ensemble")

    ev = _block(data, "evolution", required=False)
    evolution = {"times": quantity(ev, "times", "time", "evolution"),
                 "times_crossing": ev.get("times_crossing")}
    tc = evolution["times_crossing"]
    if tc is not None and not (isinstance(tc, list) and all(isinstance(x, (int, float)) for x in tc)):
        raise ConfigError("evolution.times_crossing", "must be a list of numbers (units of L/c)")
    for key in ("times", "times_crossing"):
        ts = evolution[key]
        if ts is not None and (len(ts) == 0 or any(t < 0 for t in ts)):
            raise ConfigError(f"evolution.{key}", "must be a non-empty list of times >= 0")

    obs = _block(data, "observables", required=False)
    if "output" not in data or not isinstance(data["output"], str):
        raise ConfigError("output", "missing output directory")
    return ScenarioConfig(scenario, seed, gas, basis, ensemble, evolution, dict(obs),
                          data["output"], data)


def load_config(path) -> ScenarioConfig:
    return parse_config(load_json(path), str(path))
