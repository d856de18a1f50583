"""JSON run configuration: pool definitions, engine/reward/trainer knobs.

A run config gathers everything a CLI command needs.  Paths inside a config
file resolve relative to the file's own directory.  Command-line flags
override config values, which override built-in defaults.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from .engine import EngineConfig
from .pool import (
    HttpBackend,
    ModelDescriptor,
    RoutingPool,
    SimulatedBackend,
    SimulatedProfile,
    load_knowledge_base,
)
from .protocol import DEFAULT_LEXICON, TagLexicon
from .rewards import RewardConfig
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return mapping[key]


def load_pool_config(source, base_dir: str = ".") -> RoutingPool:
    """Build a RoutingPool from a config path or an inline mapping."""
    if isinstance(source, str):
        path = os.path.join(base_dir, source)
        base_dir = os.path.dirname(path) or "."
        try:
            with open(path, encoding="utf-8") as handle:
                source = json.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"pool config not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"pool config {path}: invalid JSON: {exc}")
    if not isinstance(source, dict):
        raise ConfigError("pool config must be a JSON object")
    models = _require(source, "models", "pool config")
    if not isinstance(models, list) or not models:
        raise ConfigError("pool config: models must be a nonempty list")
    pool = RoutingPool()
    for i, entry in enumerate(models):
        context = f"pool model #{i}"
        backend_cfg = _require(entry, "backend", context)
        kind = _require(backend_cfg, "type", context)
        if kind == "sim":
            kb = backend_cfg.get("kb", {})
            kb_path = backend_cfg.get("kb_path")
            if kb_path:
                try:
                    kb = load_knowledge_base(os.path.join(base_dir, kb_path))
                except (OSError, ValueError) as exc:
                    raise ConfigError(f"{context}: {exc}")
            backend = SimulatedBackend(
                SimulatedProfile(
                    knowledge_base=kb,
                    accuracy=float(backend_cfg.get("accuracy", 1.0)),
                    verbosity=int(backend_cfg.get("verbosity", 16)),
                    seed=int(backend_cfg.get("seed", 0)),
                )
            )
        elif kind == "http":
            backend = HttpBackend(
                model=str(_require(backend_cfg, "model", context)),
                url_env=str(backend_cfg.get("url_env", "MULTIROUTE_API_URL")),
                api_key_env=str(
                    backend_cfg.get("api_key_env", "MULTIROUTE_API_KEY")
                ),
                temperature=float(backend_cfg.get("temperature", 0.0)),
            )
        else:
            raise ConfigError(f"{context}: unknown backend type {kind!r}")
        try:
            descriptor = ModelDescriptor(
                id=str(_require(entry, "id", context)),
                display_name=str(entry.get("display_name", entry["id"])),
                param_count_b=float(_require(entry, "param_count_b", context)),
                cost_per_token=float(_require(entry, "cost_per_token", context)),
                descriptor_text=str(_require(entry, "descriptor_text", context)),
                backend=backend,
            )
            pool.register(descriptor)
        except ValueError as exc:
            raise ConfigError(f"{context}: {exc}")
    return pool


def _lexicon_from(config: dict) -> TagLexicon:
    pairs = {}
    for kind in ("think", "route", "info", "answer"):
        if kind in config:
            value = config[kind]
            if not (isinstance(value, list) and len(value) == 2):
                raise ConfigError(f"lexicon: {kind} must be an [open, close] pair")
            pairs[f"{kind}_open"], pairs[f"{kind}_close"] = value
    aliases = config.get("info_aliases")
    if aliases is not None:
        pairs["info_aliases"] = tuple(tuple(pair) for pair in aliases)
    try:
        return TagLexicon(**pairs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"lexicon: {exc}")


@dataclass
class RunConfig:
    pool: RoutingPool
    engine: EngineConfig = EngineConfig()
    reward: RewardConfig = RewardConfig()
    trainer: TrainConfig = TrainConfig()
    policy: dict = field(default_factory=lambda: {"kind": "scripted", "script": []})
    seed: int = 0
    eval_warmup_costs: tuple[float, ...] = ()
    base_dir: str = "."


def _build_engine_config(section: dict, lexicon: TagLexicon) -> EngineConfig:
    known = {
        "max_routing_steps",
        "max_response_tokens",
        "max_sequence_tokens",
        "max_api_response_tokens",
        "timeout_ms",
    }
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"engine: unknown keys {sorted(unknown)}")
    kwargs = {key: section[key] for key in known & set(section)}
    try:
        return EngineConfig(lexicon=lexicon, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"engine: {exc}")


def _build_section(cls, section: dict, name: str):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}")


def load_run_config(path: str, overrides: Optional[dict] = None) -> RunConfig:
    """Load a run config file and apply flag overrides.

    ``overrides`` maps dotted section keys ("reward.alpha", "trainer.steps",
    "engine.max_routing_steps", "seed") to values; None values are ignored.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("run config must be a JSON object")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in key:
            section, leaf = key.split(".", 1)
            data.setdefault(section, {})
            if not isinstance(data[section], dict):
                raise ConfigError(f"cannot override {key}: {section} is not an object")
            data[section][leaf] = value
        else:
            data[key] = value

    base_dir = os.path.dirname(path) or "."
    pool = load_pool_config(_require(data, "pool", "run config"), base_dir)
    lexicon = (
        _lexicon_from(data["lexicon"]) if "lexicon" in data else DEFAULT_LEXICON
    )
    engine = _build_engine_config(data.get("engine", {}), lexicon)
    reward = _build_section(RewardConfig, data.get("reward", {}), "reward")
    trainer = _build_section(TrainConfig, data.get("trainer", {}), "trainer")
    policy = data.get("policy", {"kind": "scripted", "script": []})
    if not isinstance(policy, dict) or "kind" not in policy:
        raise ConfigError("policy section must be an object with a 'kind'")
    seed = int(data.get("seed", 0))
    warmup = data.get("eval_warmup_costs", ())
    if warmup and not all(isinstance(c, (int, float)) for c in warmup):
        raise ConfigError("eval_warmup_costs must be numbers")
    return RunConfig(
        pool=pool,
        engine=engine,
        reward=reward,
        trainer=trainer,
        policy=policy,
        seed=seed,
        eval_warmup_costs=tuple(float(c) for c in warmup),
        base_dir=base_dir,
    )
