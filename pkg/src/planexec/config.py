"""Declarative TOML configuration covering every runtime parameter.

Each table maps onto one dataclass; keys not listed in :data:`SECTIONS`
are rejected so typos fail loudly instead of being ignored.
"""
from __future__ import annotations

import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import CorpusSpec
from .llm import CompletionParams
from .orchestrator import RunConfig
from .sandbox import ResourceLimits


class ConfigError(ValueError):
    pass


MODES = ("executor", "planner", "primitives", "full", "all")


@dataclass(frozen=True)
class CorpusSettings:
    seed: int = 0
    n_entities: int = 60
    docs_per_entity: int = 3
    distractor_density: float = 0.3
    see_also: int = 2

    def __post_init__(self):
        self.spec()

    def spec(self) -> CorpusSpec:
        return CorpusSpec(self.n_entities, self.docs_per_entity, self.distractor_density, self.see_also)


@dataclass(frozen=True)
class TaskSettings:
    count: int = 20
    constraint_count: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.count < 1 or self.constraint_count < 2:
            raise ConfigError("tasks.count must be >= 1 and tasks.constraint_count >= 2")


@dataclass(frozen=True)
class BenchSettings:
    mode: str = "full"
    parallelism: int = 1
    trace_dir: str = "traces"
    report_format: str = "table"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"bench.mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if self.report_format not in ("table", "csv"):
            raise ConfigError(f"bench.report_format must be table or csv, got {self.report_format!r}")
        if self.parallelism < 1:
            raise ConfigError("bench.parallelism must be >= 1")


@dataclass(frozen=True)
class BackendSettings:
    kind: str = "policy"  # policy | http | record | replay
    cassette: str = ""
    base_url: str = ""
    model: str = ""
    executor_base_url: str = ""  # empty: executor shares the planner endpoint
    executor_model: str = ""
    timeout: float = 600.0
    max_retries: int = 3

    def __post_init__(self):
        if self.kind not in ("policy", "http", "record", "replay"):
            raise ConfigError(f"backend.kind must be policy, http, record or replay, got {self.kind!r}")
        if self.kind in ("record", "replay") and not self.cassette:
            raise ConfigError(f"backend.kind {self.kind!r} needs backend.cassette")


@dataclass(frozen=True)
class ToolSettings:
    search: str = "simulated"  # simulated | serp
    corpus_dir: str = ""
    default_k: int = 5
    concurrency: int = 8
    max_variants: int = 8
    requests_per_second: float = 8.0

    def __post_init__(self):
        if self.search not in ("simulated", "serp"):
            raise ConfigError(f"tools.search must be simulated or serp, got {self.search!r}")


@dataclass(frozen=True)
class Settings:
    run: RunConfig = field(default_factory=RunConfig)
    limits: ResourceLimits = field(default_factory=ResourceLimits)
    completion: CompletionParams = field(default_factory=CompletionParams)
    corpus: CorpusSettings = field(default_factory=CorpusSettings)
    tasks: TaskSettings = field(default_factory=TaskSettings)
    bench: BenchSettings = field(default_factory=BenchSettings)
    backend: BackendSettings = field(default_factory=BackendSettings)
    tools: ToolSettings = field(default_factory=ToolSettings)


SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(Settings)}


def _build(section: str, cls, values: dict):
    if not isinstance(values, dict):
        raise ConfigError(f"[{section}] must be a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    values = dict(values)
    if "stop_sequences" in values:
        values["stop_sequences"] = tuple(values["stop_sequences"])
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from None


def settings_from_dict(data: dict) -> Settings:
    unknown = sorted(set(data) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    return Settings(**{name: _build(name, factory, data.get(name, {})) for name, factory in SECTIONS.items()})


def load_config(path: str | Path | None = None) -> Settings:
    if path is None:
        return Settings()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return settings_from_dict(data)


def override(settings: Settings, section: str, **values) -> Settings:
    """Copy of ``settings`` with non-None ``values`` replaced in one section."""
    values = {k: v for k, v in values.items() if v is not None}
    if not values:
        return settings
    current = getattr(settings, section)
    return dataclasses.replace(settings, **{section: _build(section, type(current),
                                                              {**dataclasses.asdict(current), **values})})
