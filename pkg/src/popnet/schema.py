"""Validation of experiment configuration documents.

The schema lives in ``data/config_schema.json`` (the subset of JSON Schema
used there: type, required, properties, additionalProperties, enum,
minimum).  Violations raise SchemaError carrying the field path, so a bad
file reports exactly which entry is wrong.
"""

from __future__ import annotations

import json
from importlib import resources

from .errors import SchemaError

__all__ = ["load_schema", "validate_config"]

_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "integer": int,
    "boolean": bool,
}


def load_schema() -> dict:
    text = resources.files("popnet").joinpath("data/config_schema.json").read_text()
    return json.loads(text)


def _check_type(value, expected: str, path: str):
    if expected == "number":
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif expected == "integer":
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, _TYPES[expected])
    if not ok:
        raise SchemaError(path, f"expected {expected}, got {type(value).__name__}")


def _validate(value, schema: dict, path: str):
    if "type" in schema:
        _check_type(value, schema["type"], path)
    if "enum" in schema and value not in schema["enum"]:
        raise SchemaError(path, f"must be one of {schema['enum']}, got {value!r}")
    if "minimum" in schema and isinstance(value, (int, float)) and value < schema["minimum"]:
        raise SchemaError(path, f"must be >= {schema['minimum']}, got {value}")
    if isinstance(value, dict):
        props = schema.get("properties", {})
        for key in schema.get("required", []):
            if key not in value:
                raise SchemaError(f"{path}.{key}" if path else key, "required field is missing")
        extra = schema.get("additionalProperties", True)
        for key, sub in value.items():
            sub_path = f"{path}.{key}" if path else key
            if key in props:
                _validate(sub, props[key], sub_path)
            elif extra is False:
                raise SchemaError(sub_path, "unknown field")
            elif isinstance(extra, dict):
                _validate(sub, extra, sub_path)


def validate_config(config: dict) -> dict:
    """Validate an experiment config document; returns it unchanged."""
    if not isinstance(config, dict):
        raise SchemaError("", f"config must be an object, got {type(config).__name__}")
    _validate(config, load_schema(), "")
    return config
