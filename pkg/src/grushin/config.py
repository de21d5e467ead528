"""Experiment configuration: schema, loading, validation.

Configs are YAML (the human-writable default) or JSON; both parse to the
same mapping and validate against the published schema below.  Unknown
keys are rejected everywhere.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import yaml

__all__ = ["CONFIG_SCHEMA", "load_config", "ConfigError"]


class ConfigError(ValueError):
    pass


_QUAD = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_z": {"type": "integer", "minimum": 8},
        "t_axis_factor": {"type": "number", "exclusiveMinimum": 0},
        "subsample": {"type": "integer", "minimum": 1},
        "near_char_refine": {"type": "integer", "minimum": 1},
        "char_threshold": {"type": "number", "minimum": 0},
        "inner_refine": {"type": "integer", "minimum": 1},
        "inner_band": {"type": "number", "minimum": 0},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["space", "suites"],
    "properties": {
        "space": {
            "type": "object",
            "additionalProperties": False,
            "required": ["m", "k", "gamma"],
            "properties": {
                "m": {"type": "integer", "minimum": 1},
                "k": {"type": "integer", "minimum": 0},
                "gamma": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "coefficients": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "family": {"enum": ["identity", "block", "violating"]},
                "f": {"type": "number"},
                "g": {"type": "number"},
                "h": {"type": "number"},
                "p": {"type": "number"},
                "structural": {"type": "number"},
                "expect_hypothesis_failure": {"type": "boolean"},
            },
        },
        "suites": {
            "type": "array",
            "minItems": 1,
            "items": {
                "enum": [
                    "identities",
                    "theorem24",
                    "carleman:est1",
                    "carleman:df",
                    "carleman:f10",
                    "carleman:har1",
                    "ucp",
                ]
            },
        },
        "samples": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 10},
                "rho_min": {"type": "number", "exclusiveMinimum": 0},
                "rho_max": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "quadrature": _QUAD,
        "carleman": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "R": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "sweep": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
                "K": {"type": "number", "minimum": 0},
                "q": {"type": "number", "exclusiveMinimum": 1, "exclusiveMaximum": 2},
                "kappa": {"type": "number", "exclusiveMinimum": 0},
                "members": {"type": "integer", "minimum": 1, "maximum": 20},
            },
        },
        "ucp": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_z": {"type": "integer", "minimum": 16},
                "r_out": {"type": "number", "exclusiveMinimum": 0},
                "K_values": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "radii": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "tol": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "threads": {"type": "integer", "minimum": 1},
        "baseline_store": {"type": "string"},
        "out": {"type": "string"},
    },
}


def load_config(path) -> dict:
    """Parse and validate a YAML/JSON config; raises ConfigError on any defect."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            cfg = json.loads(text)
        else:
            cfg = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"config is not parseable: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates the schema: {exc.message}") from exc
    return cfg
