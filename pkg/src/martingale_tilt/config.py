"""Versioned experiment configuration.

A config is a JSON object with five blocks (model, constants, experiment,
execution, output).  It is validated against :data:`SCHEMA` before any
computation; unknown keys are rejected at every level.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath
from typing import Any

import jsonschema

from .core import InvalidInputError

SCHEMA_VERSION = 1

OPERATIONS = ("check-conditions", "tail", "ratio", "enumerate", "lemmas", "mdp", "calibrate")

_number = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}
_lambda_token = {"oneOf": [{"type": "number", "minimum": 0}, {"type": "string", "pattern": "^sqrt_n/[0-9.]+$"}]}

_MODEL = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["rademacher", "heteroscedastic", "truncated_gaussian", "bernstein_mixture"]},
        "n": _pos_int,
        "amplitude": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "cutoff": {"type": "number", "exclusiveMinimum": 0},
        "weights": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "levels": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
    },
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "model", "experiment"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": _MODEL,
        "constants": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c0": {"type": "number", "exclusiveMinimum": 0},
                "c1": {"type": "number", "minimum": 1},
                "delta": {"type": "number", "minimum": 0},
                "alpha0": {"type": "number", "exclusiveMinimum": 0},
                "c": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "experiment": {
            "type": "object",
            "additionalProperties": False,
            "required": ["operation"],
            "properties": {
                "operation": {"enum": list(OPERATIONS)},
                "models": {"type": "array", "items": _MODEL, "minItems": 1},
                "n_values": {"type": "array", "items": _pos_int, "minItems": 1},
                "x": {"type": "number"},
                "x_values": {"type": "array", "items": _number, "minItems": 1},
                "lambda": {"type": ["number", "null"], "minimum": 0},
                "lambda_values": {"type": "array", "items": _lambda_token, "minItems": 1},
                "ks_lambda_values": {"type": "array", "items": _lambda_token},
                "ks_n_values": {"type": "array", "items": _pos_int},
                "estimator": {"enum": ["naive", "importance", "enumeration"]},
                "side": {"enum": ["upper", "lower", "both"]},
                "beta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
                "c_max": {"type": "number", "exclusiveMinimum": 0},
                "bernstein_C": {"type": "number", "exclusiveMinimum": 0},
                "epsilon": {"type": "number", "exclusiveMinimum": 0},
                "k_max": {"type": "integer", "minimum": 2},
            },
        },
        "execution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "N": _pos_int,
                "seed": {"type": "integer", "minimum": 0},
                "workers": _pos_int,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": ["string", "null"]},
                "prefix": {"type": "string"},
                "formats": {
                    "type": "array",
                    "items": {"enum": ["csv", "json", "dat", "svg"]},
                    "uniqueItems": True,
                },
            },
        },
    },
}

DEFAULT_EXECUTION = {"N": 100_000, "seed": 0, "workers": 1}
DEFAULT_OUTPUT = {"dir": None, "prefix": "", "formats": ["csv", "json", "dat"]}


def validate(raw: dict) -> None:
    """Raise InvalidInputError if ``raw`` does not match the schema."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidInputError(f"config invalid at {where}: {exc.message}") from exc


@dataclass
class ExperimentConfig:
    model: dict
    experiment: dict
    constants: dict = field(default_factory=dict)
    execution: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        validate(raw)
        raw = copy.deepcopy(raw)
        return cls(
            model=raw["model"],
            experiment=raw["experiment"],
            constants=raw.get("constants", {}),
            execution=raw.get("execution", {}),
            output=raw.get("output", {}),
            schema_version=raw["schema_version"],
        )

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "model": copy.deepcopy(self.model),
            "experiment": copy.deepcopy(self.experiment),
        }
        for key in ("constants", "execution", "output"):
            block = getattr(self, key)
            if block:
                out[key] = copy.deepcopy(block)
        return out

    @classmethod
    def load(cls, path: str | FsPath) -> "ExperimentConfig":
        try:
            raw = json.loads(FsPath(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(raw)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @property
    def operation(self) -> str:
        return self.experiment["operation"]

    def execution_value(self, key: str) -> Any:
        return self.execution.get(key, DEFAULT_EXECUTION[key])

    def output_value(self, key: str) -> Any:
        return self.output.get(key, DEFAULT_OUTPUT[key])

    def resolved(self) -> dict:
        """Config with execution and output defaults filled in."""
        out = self.to_dict()
        out["execution"] = {**DEFAULT_EXECUTION, **self.execution}
        out["output"] = {**DEFAULT_OUTPUT, **self.output}
        out.setdefault("constants", {})
        return out


def packaged_configs() -> list[str]:
    root = resources.files("martingale_tilt") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_packaged(name: str) -> ExperimentConfig:
    """One of the versioned configs shipped with the package, e.g. ``"lemma_grid"``."""
    res = resources.files("martingale_tilt") / "configs" / f"{name}.json"
    if not res.is_file():
        raise InvalidInputError(f"no packaged config {name!r}; available: {packaged_configs()}")
    return ExperimentConfig.from_dict(json.loads(res.read_text()))
