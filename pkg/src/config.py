"""
Configuration management for memanno.

A run is described by a single YAML file whose sections mirror the dataclasses
below; command-line flags override file values. Secrets are never read from
the file, only from the environment variable it names.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal

import yaml
from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv(override=False)

BackendKind = Literal["remote", "mock"]


@dataclass
class CorpusConfig:
    """Where the C sources live and which files to take."""
    root: Path = field(default_factory=lambda: Path("."))
    include: List[str] = field(default_factory=lambda: ["*.c", "*.h"])
    exclude: List[str] = field(default_factory=list)
    max_workers: int = 4


@dataclass
class GenerationConfig:
    """LLM generation settings."""
    model_name: str = "codestral-22b"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    endpoint: str = field(default_factory=lambda: os.getenv("OPENAI_BASE_URL", ""))
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2  # retries after the first attempt
    retry_backoff: float = 1.0


@dataclass
class BackendConfig:
    """Backend selection, mock fixtures and completion cache."""
    kind: BackendKind = "remote"
    mock_fixtures: Path | None = None
    cache_dir: Path | None = field(default_factory=lambda: Path(".memanno_cache"))
    max_in_flight: int = 4


@dataclass
class AnnotationConfig:
    """Annotation pipeline knobs (CE = context depth, PF = post-filter)."""
    context_depth: int = 1
    post_filter: bool = True
    alloc_qualifier: int = 1
    free_qualifier: int = 3
    prompt_dir: Path | None = None


@dataclass
class OutputConfig:
    """Output locations."""
    output_dir: Path = field(default_factory=lambda: Path("memanno_out"))
    annotations: Path | None = None
    builtins: Path | None = None

    @property
    def annotations_path(self) -> Path:
        return self.annotations or self.output_dir / "annotations.json"


@dataclass
class RunConfig:
    """Main configuration for a memanno run."""
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    backend: BackendConfig = field(default_factory=BackendConfig)
    annotation: AnnotationConfig = field(default_factory=AnnotationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_dict(cls, data: Dict[str, Any] | None) -> "RunConfig":
        """Build a configuration from a parsed YAML mapping."""
        config = cls()
        sections = {f.name for f in fields(config)}
        for section, values in (data or {}).items():
            if section not in sections:
                raise ConfigError(f"Unknown configuration section: {section}")
            _update_dataclass(getattr(config, section), values or {}, section)
        return config

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        """Load configuration from a YAML file."""
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Configuration file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"Invalid YAML in {path}: {e}") from e
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"Configuration root must be a mapping: {path}")
        return cls.from_dict(data)

    def validate(self) -> None:
        """Check cross-field invariants; raises ConfigError."""
        if self.backend.kind not in ("remote", "mock"):
            raise ConfigError(f"backend.kind must be 'remote' or 'mock', got {self.backend.kind!r}")
        if self.backend.kind == "mock" and self.backend.mock_fixtures is None:
            raise ConfigError("backend.mock_fixtures is required for the mock backend")
        if self.annotation.context_depth < 0:
            raise ConfigError("annotation.context_depth must be >= 0")
        if self.generation.temperature < 0:
            raise ConfigError("generation.temperature must be >= 0")
        if self.generation.max_output_tokens <= 0:
            raise ConfigError("generation.max_output_tokens must be positive")
        if self.backend.max_in_flight < 1:
            raise ConfigError("backend.max_in_flight must be >= 1")
        if self.generation.max_retries < 0:
            raise ConfigError("generation.max_retries must be >= 0")
        if self.annotation.alloc_qualifier < 1 or self.annotation.free_qualifier < 1:
            raise ConfigError("annotation qualifiers must be >= 1")


def _update_dataclass(target: Any, values: Dict[str, Any], section: str) -> None:
    if not isinstance(values, dict):
        raise ConfigError(f"Section {section!r} must be a mapping")
    known = {f.name: f for f in fields(target)}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"Unknown configuration key: {section}.{key}")
        current = getattr(target, key)
        if is_dataclass(current):
            _update_dataclass(current, value or {}, f"{section}.{key}")
        elif isinstance(current, Path) or _is_path_field(known[key]):
            setattr(target, key, Path(value) if value is not None else None)
        else:
            setattr(target, key, value)


def _is_path_field(f: Any) -> bool:
    return "Path" in str(f.type)
