"""Run configuration: JSON schema, loading, and builders for library objects.

A run config is a single JSON object with named blocks.  Only "trap" is
always required; each command checks for the blocks it needs.  Unknown keys
are rejected everywhere so typos fail loudly instead of being ignored.

Frequencies are ordinary frequencies in Hz (converted to angular
internally), times in seconds, mass in atomic mass units, temperatures in
kelvin.
"""

from __future__ import annotations

import json

import jsonschema

from .errors import ConfigError
from .gaussian import GaussianState, coherent_state, thermal_state
from .protocol import (
    Protocol,
    ScalingFunction,
    TrapPair,
    b_extended,
    b_minimal,
    constant_protocol,
    linear_protocol,
    shortcut_protocol,
    smooth_protocol,
)

AMU = 1.66053906660e-27  # kg

TWO_PI = 6.283185307179586

_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_NUM = {"type": "number"}

PROTOCOL_KINDS = ["shortcut", "linear", "smooth", "constant"]

SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "additionalProperties": False,
    "required": ["trap"],
    "properties": {
        "trap": {
            "type": "object",
            "additionalProperties": False,
            "required": ["f0_hz", "ff_hz", "tf_s", "mass_amu"],
            "properties": {
                "f0_hz": _POS,
                "ff_hz": _POS,
                "tf_s": _POS,
                "mass_amu": _POS,
            },
        },
        "protocol": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"type": "string", "enum": PROTOCOL_KINDS},
                "smooth": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"gamma_rate": _POS, "t0": _POS},
                },
                "extra_coeffs": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": [{"type": "integer", "minimum": 6}, _NUM],
                        "additionalItems": False,
                        "minItems": 2,
                        "maxItems": 2,
                    },
                },
            },
        },
        "state": {
            "type": "object",
            "additionalProperties": False,
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "thermal": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["T_K"],
                    "properties": {"T_K": _NONNEG},
                },
                "coherent": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["re", "im"],
                    "properties": {"re": _NUM, "im": _NUM},
                },
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "required": ["rf_hz", "fz_hz"],
            "properties": {
                "rf_hz": _POS,
                "fz_hz": _POS,
                "lead_periods": _POS,
                "trail_s": _POS,
                "dt_s": _POS,
                "escape_radius_m": _POS,
                "keep_static_axial": {"type": "boolean"},
                "ramp_cycles": _NONNEG,
                "switch_phase_rad": _NUM,
                "ic": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "x_m": _NUM,
                        "y_m": _NUM,
                        "z_m": _NUM,
                        "vx_ms": _NUM,
                        "vy_ms": _NUM,
                        "vz_ms": _NUM,
                    },
                },
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "required": ["tf_s"],
            "properties": {
                "tf_s": {"type": "array", "minItems": 1, "items": _POS},
                "protocols": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "string", "enum": PROTOCOL_KINDS},
                },
            },
        },
        "optimize": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_extra": {"type": "integer", "minimum": 0},
                "p": {"type": "number", "minimum": 2},
                "grid": {"type": "integer", "minimum": 1001},
            },
        },
        "cycle": {
            "type": "object",
            "additionalProperties": False,
            "required": ["T_cold_K"],
            "properties": {"T_cold_K": _POS},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"dir": {"type": "string"}},
        },
    },
}


def validate_config(cfg: dict) -> dict:
    """Validate against the schema; ConfigError carries the field path."""
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = ".".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from exc
    return cfg


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return validate_config(cfg)


def require_blocks(cfg: dict, *blocks: str) -> None:
    missing = [b for b in blocks if b not in cfg]
    if missing:
        raise ConfigError(f"missing block(s) required by this command: {', '.join(missing)}")


def build_pair(cfg: dict, tf: float | None = None) -> TrapPair:
    t = cfg["trap"]
    return TrapPair(
        omega0=TWO_PI * t["f0_hz"],
        omegaf=TWO_PI * t["ff_hz"],
        tf=tf if tf is not None else t["tf_s"],
        mass=t["mass_amu"] * AMU,
    )


def build_protocol(cfg: dict, pair: TrapPair,
                   kind: str | None = None) -> tuple[Protocol, ScalingFunction | None]:
    """Protocol from the config's protocol block; also returns the scaling
    function when the kind defines one (shortcut), else None."""
    p = cfg.get("protocol", {})
    kind = kind if kind is not None else p.get("kind", "shortcut")
    if kind == "shortcut":
        extra = p.get("extra_coeffs")
        if extra:
            b = b_extended(pair, [(int(k), float(a)) for k, a in extra])
        else:
            b = b_minimal(pair)
        return shortcut_protocol(b, pair), b
    if kind == "linear":
        return linear_protocol(pair), None
    if kind == "smooth":
        sm = p.get("smooth", {})
        return smooth_protocol(pair, gamma_rate=sm.get("gamma_rate"),
                               t0=sm.get("t0")), None
    if kind == "constant":
        return constant_protocol(pair.omega0, pair.tf), None
    raise ConfigError(f"unknown protocol kind '{kind}'")


def build_state(cfg: dict, pair: TrapPair) -> GaussianState:
    """Initial Gaussian state at the starting trap frequency."""
    require_blocks(cfg, "state")
    s = cfg["state"]
    if "thermal" in s:
        return thermal_state(pair.omega0, s["thermal"]["T_K"], pair.mass)
    c = s["coherent"]
    return coherent_state(pair.omega0, complex(c["re"], c["im"]), pair.mass)
