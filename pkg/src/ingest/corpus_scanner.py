"""
Corpus scanning: find the C files that make up a codebase.
"""

from __future__ import annotations

import fnmatch
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple

from ..errors import CorpusError

logger = logging.getLogger(__name__)

DEFAULT_INCLUDE = ("*.c", "*.h")


@dataclass(frozen=True)
class CorpusFile:
    """One source file: path relative to the corpus root (posix), size and sha256."""
    path: str
    size: int
    sha256: str


@dataclass(frozen=True)
class CorpusIndex:
    """Files of a corpus, sorted lexicographically by relative path."""
    root: Path
    files: Tuple[CorpusFile, ...] = ()
    skipped: Tuple[Tuple[str, str], ...] = field(default=())

    def read_text(self, file: CorpusFile) -> str:
        """Read a file's content (undecodable bytes are replaced)."""
        return (self.root / file.path).read_bytes().decode("utf-8", errors="replace")

    def __len__(self) -> int:
        return len(self.files)


def _matches(rel_path: str, patterns: Sequence[str]) -> bool:
    name = rel_path.rsplit("/", 1)[-1]
    return any(
        fnmatch.fnmatchcase(rel_path, pattern) or fnmatch.fnmatchcase(name, pattern)
        for pattern in patterns
    )


def scan_codebase(
    root: Path | str,
    include_globs: Sequence[str] = DEFAULT_INCLUDE,
    exclude_globs: Sequence[str] = (),
) -> CorpusIndex:
    """
    Index all files under ``root`` matching an include glob and no exclude glob.

    A glob matches either the path relative to ``root`` or the bare file name.
    Unreadable files are recorded in ``skipped``; an unreadable root is fatal.

    Args:
        root: Corpus root directory
        include_globs: Patterns a file must match
        exclude_globs: Patterns that remove a file

    Returns:
        CorpusIndex in lexicographic path order
    """
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"Corpus root is not a readable directory: {root}")

    try:
        candidates = sorted(p for p in root.rglob("*") if p.is_file())
    except OSError as e:
        raise CorpusError(f"Cannot list corpus root {root}: {e}") from e

    files: List[CorpusFile] = []
    skipped: List[Tuple[str, str]] = []

    for path in candidates:
        rel = path.relative_to(root).as_posix()
        if not _matches(rel, include_globs) or _matches(rel, exclude_globs):
            continue
        try:
            data = path.read_bytes()
        except OSError as e:
            logger.warning(f"[INGEST] ⚠️ Skipping unreadable file {rel}: {e}")
            skipped.append((rel, str(e)))
            continue
        files.append(CorpusFile(path=rel, size=len(data), sha256=hashlib.sha256(data).hexdigest()))

    files.sort(key=lambda f: f.path)
    logger.info(f"[INGEST] Indexed {len(files)} files under {root} ({len(skipped)} skipped)")
    return CorpusIndex(root=root, files=tuple(files), skipped=tuple(skipped))
