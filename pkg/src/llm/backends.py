"""
Completion backends: a remote OpenAI-compatible chat endpoint and a
deterministic fixture-driven mock.
"""

from __future__ import annotations

import json
import logging
import os
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, Mapping

from openai import (
    APIConnectionError,
    APITimeoutError,
    InternalServerError,
    OpenAI,
    OpenAIError,
    RateLimitError,
)

from ..config import GenerationConfig
from ..errors import BackendConfigError, BackendError
from ..prompts import PromptKind, PromptText

logger = logging.getLogger(__name__)

RETRYABLE_ERRORS = (APIConnectionError, APITimeoutError, RateLimitError, InternalServerError)

DEFAULT_MOCK_ANSWERS: Dict[PromptKind, str] = {
    PromptKind.INITIAL: '{"allocated_variables": [], "deallocated_variables": []}',
    PromptKind.POSTFILTER: '{"answer": false}',
}


class CompletionBackend(ABC):
    """A source of completions for rendered prompts."""

    deterministic: bool = False

    @property
    @abstractmethod
    def backend_id(self) -> str:
        ...

    @abstractmethod
    def generate(self, prompt: PromptText, config: GenerationConfig) -> str:
        """Return the model's answer text for ``prompt``."""


class OpenAIBackend(CompletionBackend):
    """
    Remote backend speaking the chat/completions protocol.

    The bearer token comes from the environment variable named by
    ``config.api_key_env``; ``config.endpoint`` selects any compatible server.
    """

    def __init__(self, config: GenerationConfig, client: OpenAI | None = None):
        self.config = config
        if client is None:
            api_key = os.getenv(config.api_key_env, "").strip()
            if not api_key:
                raise BackendConfigError(
                    f"Missing API token: environment variable {config.api_key_env} is not set"
                )
            client = OpenAI(
                api_key=api_key,
                base_url=config.endpoint or None,
                timeout=config.timeout,
                max_retries=0,
            )
        self.client = client

    @property
    def backend_id(self) -> str:
        return f"openai:{self.config.endpoint or 'default'}:{self.config.model_name}"

    def generate(self, prompt: PromptText, config: GenerationConfig) -> str:
        attempts = 1 + max(0, config.max_retries)
        last_error: Exception | None = None

        logger.info(f"[LLM] 🤖 {prompt.kind.value} query for {prompt.function_name} with {config.model_name} ({len(prompt.text)} chars)")
        for attempt in range(attempts):
            try:
                response = self.client.chat.completions.create(
                    model=config.model_name,
                    messages=[{"role": "user", "content": prompt.text}],
                    temperature=config.temperature,
                    max_tokens=config.max_output_tokens,
                )
                if not response.choices:
                    raise BackendError(f"Backend returned no choices for {prompt.function_name}")
                return response.choices[0].message.content or ""
            except RETRYABLE_ERRORS as e:
                last_error = e
                logger.warning(f"[LLM] Attempt {attempt + 1}/{attempts} failed: {e}")
                if attempt + 1 < attempts:
                    time.sleep(config.retry_backoff * (attempt + 1))
            except OpenAIError as e:
                raise BackendError(f"Backend rejected request: {e}") from e

        raise BackendError(f"Backend unavailable after {attempts} attempts: {last_error}")


class MockBackend(CompletionBackend):
    """
    Fixture-driven backend.

    Fixture keys are prompt hashes or function names; a value is either the
    answer to the initial query or ``{"initial": ..., "postfilter": ...}``.
    Prompts without a fixture get an empty answer.
    """

    deterministic = True

    def __init__(self, fixtures: Mapping[str, Any], source: str = "inline"):
        self.fixtures = dict(fixtures)
        self.source = source

    @classmethod
    def from_file(cls, path: Path | str) -> "MockBackend":
        path = Path(path)
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise BackendConfigError(f"Cannot load mock fixtures {path}: {e}") from e
        if not isinstance(data, dict):
            raise BackendConfigError(f"Mock fixtures must be a JSON object: {path}")
        return cls(data, source=path.name)

    @property
    def backend_id(self) -> str:
        return f"mock:{self.source}"

    def generate(self, prompt: PromptText, config: GenerationConfig) -> str:
        for key in (prompt.prompt_hash, prompt.function_name):
            if key and key in self.fixtures:
                answer = self._answer_for(self.fixtures[key], prompt.kind)
                if answer is not None:
                    return answer
        return DEFAULT_MOCK_ANSWERS[prompt.kind]

    @staticmethod
    def _answer_for(entry: Any, kind: PromptKind) -> str | None:
        if isinstance(entry, str):
            return entry if kind == PromptKind.INITIAL else None
        if isinstance(entry, dict):
            value = entry.get(kind.value)
            if value is None:
                return None
            return value if isinstance(value, str) else json.dumps(value)
        return None
