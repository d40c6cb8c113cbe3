"""Experiment configuration: nested dataclasses with defaults, loaded from
TOML with unknown-key rejection and dotted ``key=value`` overrides."""
from __future__ import annotations

import dataclasses
import hashlib
import json
import re
import sys
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .coverage import CoverageModel
from .ddpg import DdpgConfig
from .energy import EnergyModel
from .marl import DqnConfig
from .solar import SchedulerConfig
from .world import ConfigError, Scenario, WorldConfig, validate_world


@dataclass
class ScenarioBlock:
    world: WorldConfig = field(default_factory=WorldConfig)
    coverage: CoverageModel = field(default_factory=CoverageModel)
    energy: EnergyModel = field(default_factory=EnergyModel)

    def build(self) -> Scenario:
        validate_world(self.world)
        return Scenario(self.world, self.coverage, self.energy)


@dataclass
class AgentBlock:
    ddpg: DdpgConfig = field(default_factory=DdpgConfig)
    dqn: DqnConfig = field(default_factory=DqnConfig)


@dataclass
class RunBlock:
    episodes: int = 300
    workers: int = 1
    seed: int = 0
    eval_seeds: list[int] = field(default_factory=lambda: [1000, 1001, 1002])
    window: int = 10  # slots before/after an event in evaluation summaries
    wall_budget: float = 0.0  # seconds, 0 = unlimited
    out: str = "runs/default"


@dataclass
class ExperimentConfig:
    scenario: ScenarioBlock = field(default_factory=ScenarioBlock)
    agent: AgentBlock = field(default_factory=AgentBlock)
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    run: RunBlock = field(default_factory=RunBlock)


def _locate(text: Optional[str], path: list) -> str:
    """Best-effort 'line N' for a dotted key path in TOML source."""
    if not text:
        return ""
    keys = [p for p in path if not isinstance(p, int)]
    table: list = []
    header = re.compile(r"^\s*\[\[?\s*([^\]]+?)\s*\]\]?\s*(#.*)?$")
    for no, line in enumerate(text.splitlines(), 1):
        m = header.match(line)
        if m:
            table = [k.strip().strip('"') for k in m.group(1).split(".")]
            if table == keys:
                return f"line {no}: "
            continue
        m = re.match(r"^\s*([A-Za-z0-9_\-\"\.]+)\s*=", line)
        if m:
            full = table + [k.strip().strip('"') for k in m.group(1).split(".")]
            if full == keys:
                return f"line {no}: "
    return ""


def _dotted(path: list) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out


def _coerce(value, tp, path, text):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    where = _locate(text, path)
    if origin is typing.Union:
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(value, inner[0], path, text)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}{_dotted(path)} must be a table")
        return build(tp, value, path, text)
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError(f"{where}{_dotted(path)} must be an array")
        item = args[0] if args else Any
        return [_coerce(v, item, path + [i], text) for i, v in enumerate(value)]
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}{_dotted(path)} expects a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}{_dotted(path)} expects an integer, got {value!r}")
        return value
    if tp is bool and not isinstance(value, bool):
        raise ConfigError(f"{where}{_dotted(path)} expects true/false, got {value!r}")
    if tp is str and not isinstance(value, str):
        raise ConfigError(f"{where}{_dotted(path)} expects a string, got {value!r}")
    return value


def build(cls, data: dict, path: Optional[list] = None, text: Optional[str] = None):
    """Instantiate dataclass ``cls`` from a nested dict, rejecting unknown keys."""
    path = path or []
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    for key in data:
        if key not in names:
            where = _locate(text, path + [key])
            raise ConfigError(f"{where}unknown config key {_dotted(path + [key])!r}")
    kwargs = {k: _coerce(v, hints[k], path + [k], text) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{_locate(text, path)}{_dotted(path) or 'config'}: {exc}") from exc


def parse_override(item: str) -> tuple[list, Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key.strip().split("."), value


def apply_overrides(data: dict, overrides) -> dict:
    for item in overrides or ():
        keys, value = parse_override(item)
        node = data
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {item!r} descends into a non-table")
        node[keys[-1]] = value
    return data


def load_config(path=None, overrides=None) -> ExperimentConfig:
    text = None
    data: dict = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    apply_overrides(data, overrides)
    cfg = build(ExperimentConfig, data, [], text)
    validate_world(cfg.scenario.world)
    return cfg


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_strip_none(v) for v in obj]
    return obj


def to_dict(cfg) -> dict:
    return _strip_none(dataclasses.asdict(cfg))


def dump_config(cfg) -> str:
    return tomli_w.dumps(to_dict(cfg))


def config_hash(cfg) -> str:
    blob = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
