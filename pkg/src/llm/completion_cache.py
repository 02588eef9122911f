"""
Content-addressed completion cache.

Layout: ``<cache_dir>/<key[:2]>/<key>.json`` with
``{prompt_hash, model, text, timestamp}``. Writes are atomic
(temp file + rename); unreadable entries are treated as misses.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Optional

from ..prompts import PromptText

logger = logging.getLogger(__name__)


def cache_key(prompt: PromptText, model: str, temperature: float) -> str:
    payload = json.dumps([prompt.kind.value, prompt.text, model, float(temperature)])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class CompletionCache:
    """File-based cache for completions."""

    def __init__(self, cache_dir: Path | str):
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.json"

    def get(self, key: str) -> Optional[str]:
        """Cached completion text, or None on miss or corrupt entry."""
        path = self._path(key)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            text = data["text"]
            if not isinstance(text, str):
                raise ValueError("text is not a string")
        except (OSError, ValueError, KeyError, TypeError) as e:
            logger.warning(f"[CACHE] ⚠️ Corrupt cache entry {path.name}, bypassing: {e}")
            return None
        logger.debug(f"[CACHE] Hit {key[:12]}")
        return text

    def set(self, key: str, prompt: PromptText, model: str, text: str) -> None:
        """Store a completion atomically."""
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {
            "prompt_hash": prompt.prompt_hash,
            "model": model,
            "text": text,
            "timestamp": time.time(),
        }
        fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as f:
                json.dump(entry, f, indent=2, ensure_ascii=False)
            os.replace(tmp_name, path)
        except OSError as e:
            logger.warning(f"[CACHE] Failed to write {path.name}: {e}")
            try:
                os.unlink(tmp_name)
            except OSError:
                pass
