"""LLM backends, completion cache and answer parsing."""

from ..config import GenerationConfig
from .backends import CompletionBackend, MockBackend, OpenAIBackend
from .completion_cache import CompletionCache, cache_key
from .llm_client import LLMClient, RawCompletion, build_client
from .response_parser import (
    AllocationFindings,
    PostFilterVerdict,
    Verdict,
    extract_last_json_object,
    parse_allocation_response,
    parse_postfilter_response,
)

__all__ = [
    "GenerationConfig",
    "CompletionBackend",
    "MockBackend",
    "OpenAIBackend",
    "CompletionCache",
    "cache_key",
    "LLMClient",
    "RawCompletion",
    "build_client",
    "AllocationFindings",
    "PostFilterVerdict",
    "Verdict",
    "extract_last_json_object",
    "parse_allocation_response",
    "parse_postfilter_response",
]
