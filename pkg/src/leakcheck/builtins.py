"""
Builtin allocator/deallocator table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import FrozenSet

import yaml

from ..errors import ConfigError

DEFAULT_BUILTINS_PATH = Path(__file__).parent / "builtin_allocators.yaml"


@dataclass(frozen=True)
class BuiltinTable:
    allocators: FrozenSet[str] = field(default_factory=frozenset)
    deallocators: FrozenSet[str] = field(default_factory=frozenset)

    @classmethod
    def empty(cls) -> "BuiltinTable":
        return cls()

    @classmethod
    def load(cls, path: Path | str | None = None) -> "BuiltinTable":
        """Load a table from YAML; defaults to the shipped libc table."""
        path = Path(path) if path else DEFAULT_BUILTINS_PATH
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"Cannot load builtin table {path}: {e}") from e
        if not isinstance(data, dict) or set(data) - {"allocators", "deallocators"}:
            raise ConfigError(f"Builtin table {path} must map 'allocators'/'deallocators' to name lists")
        return cls(
            allocators=frozenset(data.get("allocators") or ()),
            deallocators=frozenset(data.get("deallocators") or ()),
        )
