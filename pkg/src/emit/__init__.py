"""Serializers for analyzer annotation formats."""

from .cooddy import cooddy_key, emit_cooddy, parse_cooddy
from .codeql import CodeQLModelTable, build_codeql_model_table, emit_codeql_models

__all__ = [
    "cooddy_key",
    "emit_cooddy",
    "parse_cooddy",
    "CodeQLModelTable",
    "build_codeql_model_table",
    "emit_codeql_models",
]
