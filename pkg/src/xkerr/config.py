"""Run configuration: a JSON document with unit-suffixed keys.

Frequencies in the file are ordinary frequencies (``*_over_2pi_*``); they
are converted to angular frequencies here and nowhere else.
"""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .cavity import AtomCloud, CavityParams, TWO_PI
from .conditioning import DetectionChannel
from .dwell import PulseShape

ENV_DEFAULT = "XKERR_DEFAULT_CONFIG"


class ConfigError(ValueError):
    pass


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_frac = {"type": "number", "minimum": 0, "maximum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "xkerr run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "cavity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kappa0_over_2pi_khz": _pos,
                "g_over_2pi_mhz": _nonneg,
                "gamma_over_2pi_mhz": _pos,
                "eta": _nonneg,
                "delta_c_over_2pi_khz": _num,
                "finesse": _pos,
                "waist_um": _pos,
                "wavelength_nm": _pos,
                "check_consistency": {"type": "boolean"},
            },
        },
        "cloud": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma_radial_um": _pos,
                "sigma_axial_um": _pos,
                "offset_um": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3},
            },
        },
        "channel": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "efficiency": _frac,
                "background_rate_hz": _nonneg,
                "window_us": _pos,
            },
        },
        "pulse": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["square", "gaussian"]},
                "duration_us": _pos,
                "amplitude": _nonneg,
            },
        },
        "sweeps": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["variable", "start", "stop", "points"],
                "properties": {
                    "variable": {"enum": ["delta_over_2pi_mhz", "n_c", "tau_us"]},
                    "start": _num,
                    "stop": _num,
                    "points": {"type": "integer", "minimum": 2},
                },
            },
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "delta_over_2pi_mhz": _num,
                "n_s": _nonneg,
                "n_detected": {"type": "integer", "minimum": 0},
                "n_trials": {"type": "integer", "minimum": 1},
                "window_len_us": _pos,
            },
        },
        "tomography": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "epsilon_d": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "contrast_ref": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "n_resamples": {"type": "integer", "minimum": 0},
                "strict_fringes": {"type": "boolean"},
                "max_fev": {"type": "integer", "minimum": 1},
                "simulate": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "state": {"enum": ["maximally_mixed", "physics", "matrix"]},
                        "phi_rad": _num,
                        "n_s": _nonneg,
                        "n_c": _nonneg,
                        "rho_re": {"type": "array"},
                        "rho_im": {"type": "array"},
                        "counts_scale": _pos,
                        "noise": {"enum": ["none", "poisson"]},
                    },
                },
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}

DEFAULTS = {
    "cavity": {
        "kappa0_over_2pi_khz": 150.0,
        "g_over_2pi_mhz": 0.8,
        "gamma_over_2pi_mhz": 5.2,
        "eta": 3.8,
        "delta_c_over_2pi_khz": 0.0,
        "finesse": 77.1e3,
        "waist_um": 35.5,
        "wavelength_nm": 852.347,
        "check_consistency": False,
    },
    "cloud": {"sigma_radial_um": 5.0, "sigma_axial_um": 19.0, "offset_um": [0.0, 0.0, 0.0]},
    "channel": {"efficiency": 0.2, "background_rate_hz": 0.0, "window_us": 2.0},
    "pulse": {"kind": "square", "duration_us": 2.0, "amplitude": 0.4},
    "sweeps": [],
    "scenario": {
        "delta_over_2pi_mhz": -8.0,
        "n_s": 1.0,
        "n_detected": 1,
        "n_trials": 200_000,
        "window_len_us": 0.5,
    },
    "tomography": {
        "epsilon_d": 1.0,
        "contrast_ref": 1.0,
        "n_resamples": 100,
        "strict_fringes": True,
        "max_fev": 100_000,
        "simulate": {
            "state": "physics",
            "phi_rad": 0.45,
            "n_s": 0.0505,
            "n_c": 0.509,
            "counts_scale": 4000.0,
            "noise": "none",
        },
    },
    "seed": 0,
    "output": {"format": "csv"},
}


@dataclass
class Sweep:
    variable: str
    start: float
    stop: float
    points: int

    def values(self):
        import numpy as np

        return np.linspace(self.start, self.stop, self.points)


@dataclass
class RunConfig:
    cavity: CavityParams
    cloud: AtomCloud
    channel: DetectionChannel
    pulse: PulseShape
    sweeps: list[Sweep]
    seed: int
    output_path: str | None
    output_format: str
    scenario: dict = field(default_factory=dict)
    tomography: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, repr=False)

    def sweep(self, variable: str, default: tuple[float, float, int]) -> Sweep:
        for s in self.sweeps:
            if s.variable == variable:
                return s
        return Sweep(variable, *default)

    @property
    def delta(self) -> float:
        return TWO_PI * 1e6 * self.scenario["delta_over_2pi_mhz"]


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _path(err) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def build(doc: dict) -> RunConfig:
    """Validate ``doc`` against :data:`SCHEMA`, fill defaults and convert units."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(f"{_path(e)}: {e.message}" for e in errors))
    d = _merge(DEFAULTS, doc)
    c, cl, ch, p = d["cavity"], d["cloud"], d["channel"], d["pulse"]
    try:
        cavity = CavityParams(
            kappa0=TWO_PI * 1e3 * c["kappa0_over_2pi_khz"],
            g=TWO_PI * 1e6 * c["g_over_2pi_mhz"],
            Gamma=TWO_PI * 1e6 * c["gamma_over_2pi_mhz"],
            eta=c["eta"],
            delta_c=TWO_PI * 1e3 * c["delta_c_over_2pi_khz"],
            finesse=c["finesse"],
            waist=1e-6 * c["waist_um"],
            wavelength=1e-9 * c["wavelength_nm"],
            check_consistency=c["check_consistency"],
        )
    except ValueError as exc:
        raise ConfigError(f"cavity: {exc}") from exc
    try:
        cloud = AtomCloud(1e-6 * cl["sigma_radial_um"], 1e-6 * cl["sigma_axial_um"],
                          tuple(1e-6 * x for x in cl["offset_um"]))
        channel = DetectionChannel(ch["efficiency"], ch["background_rate_hz"], 1e-6 * ch["window_us"])
        pulse = PulseShape(p["kind"], 1e-6 * p["duration_us"], p["amplitude"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        cavity=cavity,
        cloud=cloud,
        channel=channel,
        pulse=pulse,
        sweeps=[Sweep(**s) for s in d["sweeps"]],
        seed=d["seed"],
        output_path=d["output"].get("path"),
        output_format=d["output"]["format"],
        scenario=d["scenario"],
        tomography=d["tomography"],
        raw=d,
    )


def load(path: str | os.PathLike | None = None) -> RunConfig:
    """Read a config file; falls back to ``$XKERR_DEFAULT_CONFIG``, then defaults."""
    if path is None:
        path = os.environ.get(ENV_DEFAULT)
    if path is None:
        return build({})
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return build(doc)
