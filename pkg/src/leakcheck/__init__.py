"""Annotation-driven intraprocedural leak checker."""

from .builtins import DEFAULT_BUILTINS_PATH, BuiltinTable
from .statements import Construct, Statement, StatementTree, parse_body
from .checker import (
    CheckReport,
    LeakReason,
    LeakWarning,
    annotation_identity,
    check_corpus,
    check_function,
    classify_releases,
)

__all__ = [
    "DEFAULT_BUILTINS_PATH",
    "BuiltinTable",
    "Construct",
    "Statement",
    "StatementTree",
    "parse_body",
    "CheckReport",
    "LeakReason",
    "LeakWarning",
    "annotation_identity",
    "check_corpus",
    "check_function",
    "classify_releases",
]
