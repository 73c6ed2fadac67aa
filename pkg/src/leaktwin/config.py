"""Scenario configuration document (one JSON object, six sections)."""

from __future__ import annotations

import dataclasses
import json
import math
from pathlib import Path
from typing import Any, Mapping

from .harvester import HarvesterParams
from .modem import ModemParams
from .power_train import ComparatorSwitch, ConverterModel, Supercap
from .simkernel import OVERRIDE_KEYS, Scenario, SimParams

SECTION_TYPES = {
    "harvester": HarvesterParams,
    "converter": ConverterModel,
    "supercap": Supercap,
    "comparator": ComparatorSwitch,
    "modem": ModemParams,
    "scenario": Scenario,
}
_EXCLUDED = {"comparator": {"closed"}}
_INT_FIELDS = {"seed", "epoch"}
_OPTIONAL = {"leak_start", "dry_out_at", "rewet_at"}
_STR_FIELDS = {"device_id"}


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _fields(section: str) -> list[str]:
    cls = SECTION_TYPES[section]
    return [f.name for f in dataclasses.fields(cls) if f.name not in _EXCLUDED.get(section, ())]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(path, "must be finite")
    return float(value)


def _coerce(section: str, name: str, value: Any, path: str) -> Any:
    if name == "efficiency_table":
        if not isinstance(value, list):
            raise ConfigError(path, "expected a list of [current, efficiency] pairs")
        table = []
        for i, pair in enumerate(value):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"{path}[{i}]", "expected [current, efficiency]")
            table.append((_number(pair[0], f"{path}[{i}][0]"), _number(pair[1], f"{path}[{i}][1]")))
        return tuple(table)
    if name == "overrides":
        if not isinstance(value, dict):
            raise ConfigError(path, "expected an object")
        out = {}
        for key, v in value.items():
            if key not in OVERRIDE_KEYS:
                raise ConfigError(f"{path}.{key}", "unknown parameter")
            out[key] = _coerce(OVERRIDE_KEYS[key], key, v, f"{path}.{key}")
        return out
    if name in _STR_FIELDS:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    if name in _OPTIONAL and value is None:
        return None
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    return _number(value, path)


def parse_config(doc: Mapping[str, Any]) -> tuple[SimParams, Scenario]:
    """Validate a config document; absent fields keep their defaults."""
    if not isinstance(doc, Mapping):
        raise ConfigError("", "config must be a JSON object")
    for key in doc:
        if key not in SECTION_TYPES:
            raise ConfigError(key, f"unknown section (expected one of {', '.join(SECTION_TYPES)})")
    built: dict[str, Any] = {}
    for section, cls in SECTION_TYPES.items():
        body = doc.get(section, {})
        if not isinstance(body, Mapping):
            raise ConfigError(section, "expected an object")
        allowed = _fields(section)
        kwargs = {}
        for name, value in body.items():
            path = f"{section}.{name}"
            if name not in allowed:
                raise ConfigError(path, "unknown key")
            kwargs[name] = _coerce(section, name, value, path)
        try:
            built[section] = cls(**kwargs)
        except (ValueError, KeyError) as exc:
            raise ConfigError(section, str(exc).strip("'\"")) from None
    scenario = built.pop("scenario")
    params = SimParams(**built)
    try:
        params.with_overrides(scenario.overrides)
    except (ValueError, KeyError) as exc:
        raise ConfigError("scenario.overrides", str(exc)) from None
    return params, scenario


def load_config(path: str | Path | None) -> tuple[SimParams, Scenario]:
    if path is None:
        return SimParams(), Scenario()
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("", f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path} is not valid JSON: {exc}") from None
    return parse_config(doc)


def default_document() -> dict[str, Any]:
    """The shipped defaults as a config document."""
    params, scenario = SimParams(), Scenario()
    doc: dict[str, Any] = {}
    for section in SECTION_TYPES:
        obj = scenario if section == "scenario" else getattr(params, section)
        body = {}
        for name in _fields(section):
            value = getattr(obj, name)
            if name == "efficiency_table":
                value = [list(p) for p in value]
            elif name == "overrides":
                value = dict(value)
            body[name] = value
        doc[section] = body
    return doc
