"""Query prompt templates and rendering."""

from .prompt_builder import (
    PromptBuilder,
    PromptKind,
    PromptText,
    default_builder,
    prompt_hash,
    render_initial_prompt,
    render_postfilter_prompt,
)

__all__ = [
    "PromptBuilder",
    "PromptKind",
    "PromptText",
    "default_builder",
    "prompt_hash",
    "render_initial_prompt",
    "render_postfilter_prompt",
]
