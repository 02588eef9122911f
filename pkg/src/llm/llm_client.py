"""
LLM client: backend + cache + bounded concurrency.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass

from ..config import BackendConfig, GenerationConfig
from ..prompts import PromptText
from .backends import CompletionBackend, MockBackend, OpenAIBackend
from .completion_cache import CompletionCache, cache_key

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawCompletion:
    """Model text exactly as returned."""
    text: str
    backend_id: str
    cached: bool = False


class LLMClient:
    """
    Completes prompts through a backend, reusing cached answers.

    At most ``max_in_flight`` backend requests run at once; any number of
    threads may call :meth:`complete`.
    """

    def __init__(
        self,
        backend: CompletionBackend,
        config: GenerationConfig | None = None,
        cache: CompletionCache | None = None,
        max_in_flight: int = 4,
    ):
        self.backend = backend
        self.config = config or GenerationConfig()
        self.cache = cache
        self.max_in_flight = max(1, max_in_flight)
        self._slots = threading.BoundedSemaphore(self.max_in_flight)
        self._lock = threading.Lock()
        self.backend_calls = 0
        self.cache_hits = 0

    @property
    def deterministic(self) -> bool:
        return self.backend.deterministic

    def complete(self, prompt: PromptText) -> RawCompletion:
        """
        Complete a prompt.

        Raises:
            BackendError: when the backend fails after its retries
        """
        key = cache_key(prompt, self.config.model_name, self.config.temperature)
        if self.cache is not None:
            text = self.cache.get(key)
            if text is not None:
                with self._lock:
                    self.cache_hits += 1
                return RawCompletion(text=text, backend_id=self.backend.backend_id, cached=True)

        with self._slots:
            text = self.backend.generate(prompt, self.config)
        with self._lock:
            self.backend_calls += 1

        if self.cache is not None:
            self.cache.set(key, prompt, self.config.model_name, text)
        return RawCompletion(text=text, backend_id=self.backend.backend_id, cached=False)


def build_client(backend_config: BackendConfig, generation: GenerationConfig) -> LLMClient:
    """Construct the configured backend, cache and client."""
    backend: CompletionBackend
    if backend_config.kind == "mock":
        backend = MockBackend.from_file(backend_config.mock_fixtures)  # type: ignore[arg-type]
    else:
        backend = OpenAIBackend(generation)
    cache = CompletionCache(backend_config.cache_dir) if backend_config.cache_dir else None
    logger.info(f"[LLM] Backend {backend.backend_id}, cache={'on' if cache else 'off'}, in-flight={backend_config.max_in_flight}")
    return LLMClient(backend, generation, cache, backend_config.max_in_flight)
