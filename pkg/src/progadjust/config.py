"""Scenario configuration files (TOML).

A file holds global keys, an optional ``preset`` name and an optional list
of ``[[scenario]]`` tables::

    preset = "het_base"     # start from a built-in grid ...
    reps = 50               # ... and override any field for every scenario

    [[scenario]]            # or list scenarios explicitly
    scenario_id = "mine"
    effect_kind = "constant"
    n = 100

Every :class:`ScenarioConfig` and :class:`DgpSpec` field is a key; the
shift is given by name. Unknown keys and wrongly typed values are errors.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError, DataError
from .simulation.dgp import ShiftSpec
from .simulation.presets import preset
from .simulation.runner import ScenarioConfig

DGP_KEYS = {"effect_kind": str, "pi1": float, "noise_sd": float, "n_covariates": int,
            "w2_sd": float, "w3_rate": float, "w4_shape": float, "w4_scale": float}
SCENARIO_KEYS = {"scenario_id": str, "shift": str, "n": int, "n_hist": int, "reps": int,
                 "master_seed": int, "estimators": list, "sl_profile": str,
                 "crossfit_folds": int, "alpha": float}
FIELD_KEYS = {**DGP_KEYS, **SCENARIO_KEYS}
TOP_KEYS = set(FIELD_KEYS) | {"preset", "scenario"}


def _check_value(key, value, where):
    want = FIELD_KEYS[key]
    ok = {
        str: isinstance(value, str),
        int: isinstance(value, int) and not isinstance(value, bool),
        float: isinstance(value, (int, float)) and not isinstance(value, bool),
        list: isinstance(value, list) and all(isinstance(v, str) for v in value),
    }[want]
    if not ok:
        raise ConfigError(f"{where}: {key} must be of type {want.__name__}, got {value!r}")
    return float(value) if want is float else value


def _check_table(table: dict, where: str) -> dict:
    unknown = sorted(set(table) - set(FIELD_KEYS))
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return {k: _check_value(k, v, where) for k, v in table.items()}


def apply_overrides(cfg: ScenarioConfig, overrides: dict) -> ScenarioConfig:
    """Return ``cfg`` with validated flat ``overrides`` applied."""
    dgp_kw = {k: v for k, v in overrides.items() if k in DGP_KEYS}
    sc_kw = {k: v for k, v in overrides.items() if k in SCENARIO_KEYS}
    try:
        if dgp_kw:
            sc_kw["dgp"] = dataclasses.replace(cfg.dgp, **dgp_kw)
        if "shift" in sc_kw:
            sc_kw["shift"] = ShiftSpec(sc_kw["shift"])
        if "estimators" in sc_kw:
            sc_kw["estimators"] = tuple(sc_kw["estimators"])
        return dataclasses.replace(cfg, **sc_kw)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc


def resolve(doc: dict) -> list[ScenarioConfig]:
    unknown = sorted(set(doc) - TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown top-level keys {unknown}")
    scenarios = doc.get("scenario", [])
    if not isinstance(scenarios, list) or not all(isinstance(s, dict) for s in scenarios):
        raise ConfigError("'scenario' must be an array of tables ([[scenario]])")
    name = doc.get("preset")
    if name is not None and scenarios:
        raise ConfigError("give either 'preset' or [[scenario]] tables, not both")
    if name is not None and not isinstance(name, str):
        raise ConfigError("'preset' must be a string")
    glob = _check_table({k: v for k, v in doc.items() if k not in ("preset", "scenario")},
                        "top level")
    if name is not None:
        base = preset(name)
        if "scenario_id" in glob and len(base) > 1:
            raise ConfigError("scenario_id cannot be overridden for a multi-scenario preset")
        return [apply_overrides(c, glob) for c in base]
    if not scenarios:
        return [apply_overrides(ScenarioConfig(), glob)]
    out = [apply_overrides(ScenarioConfig(), {**glob, **_check_table(s, f"scenario {i}")})
           for i, s in enumerate(scenarios)]
    ids = [c.scenario_id for c in out]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"scenario_id values must be unique, got {ids}")
    return out


def load_config(path) -> list[ScenarioConfig]:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve(doc)


def scenario_dict(cfg: ScenarioConfig) -> dict:
    """Flat, JSON-ready view of a fully resolved scenario."""
    d = {k: getattr(cfg.dgp, k) for k in DGP_KEYS}
    d.update({k: getattr(cfg, k) for k in SCENARIO_KEYS if k != "shift"})
    d["shift"] = cfg.shift.kind
    d["estimators"] = list(cfg.estimators)
    return dict(sorted(d.items()))


def config_digest(configs) -> str:
    blob = json.dumps([scenario_dict(c) for c in configs], sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
