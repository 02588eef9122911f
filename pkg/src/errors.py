"""
Exception hierarchy shared by all memanno modules.

Every error carries the CLI exit code it maps to.
"""

from __future__ import annotations


class MemannoError(Exception):
    """Base class for all memanno errors."""
    exit_code: int = 1


class ConfigError(MemannoError):
    """Invalid configuration or command-line usage."""
    exit_code = 1


class BackendConfigError(ConfigError):
    """LLM backend cannot be constructed (missing token, bad fixture file...)."""


class CorpusError(MemannoError):
    """The corpus root cannot be read."""
    exit_code = 2


class BackendError(MemannoError):
    """LLM backend failed after all retry attempts."""
    exit_code = 3


class PromptError(MemannoError):
    """A prompt template or its arguments are invalid."""


class ResponseParseError(MemannoError):
    """No JSON object could be extracted from a completion."""

    def __init__(self, message: str, raw_text: str = ""):
        super().__init__(message)
        self.raw_text = raw_text


class UnknownFunctionError(MemannoError, KeyError):
    """A function id is not part of the call graph."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown function"


class AnnotationError(MemannoError):
    """Annotation invariants are violated."""


class EmitError(MemannoError):
    """An annotation set cannot be serialized."""


class GroundTruthError(MemannoError):
    """A label file violates the AnnotationSet schema or its invariants."""
