"""
Prompt builder for allocation/deallocation queries.

Templates are plain UTF-8 text assets (``templates/initial.txt`` and
``templates/postfilter.txt``) so their wording can be diffed and swapped
without touching code.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, Sequence

from ..errors import PromptError
from ..ingest import FunctionRecord

TEMPLATE_DIR = Path(__file__).parent / "templates"

PLACEHOLDER_RE = re.compile(r"\{([a-z_]+)\}")

CONTEXT_SEPARATOR = "\n\n"


class PromptKind(str, Enum):
    INITIAL = "initial"
    POSTFILTER = "postfilter"


REQUIRED_PLACEHOLDERS: Dict[PromptKind, frozenset] = {
    PromptKind.INITIAL: frozenset({"func_name", "code"}),
    PromptKind.POSTFILTER: frozenset({"func_name", "structure", "variable_name", "source"}),
}


@dataclass(frozen=True)
class PromptText:
    """A rendered prompt."""
    text: str
    kind: PromptKind
    function_id: str
    function_name: str = ""

    @property
    def prompt_hash(self) -> str:
        """sha256 over kind and text; the key used by mock fixtures."""
        return prompt_hash(self.kind, self.text)


def prompt_hash(kind: PromptKind | str, text: str) -> str:
    kind_value = kind.value if isinstance(kind, PromptKind) else kind
    return hashlib.sha256(f"{kind_value}\0{text}".encode("utf-8")).hexdigest()


class PromptBuilder:
    """
    Renders the two query templates.

    The initial query lists context (callee) bodies before the target
    function; the post-filter query puts the target first, then its callees.
    """

    def __init__(self, template_dir: Path | str | None = None):
        self.template_dir = Path(template_dir) if template_dir else TEMPLATE_DIR
        self.templates = {kind: self._load(kind) for kind in PromptKind}

    def _load(self, kind: PromptKind) -> str:
        path = self.template_dir / f"{kind.value}.txt"
        try:
            template = path.read_text(encoding="utf-8")
        except OSError as e:
            raise PromptError(f"Cannot read prompt template {path}: {e}") from e

        found = set(PLACEHOLDER_RE.findall(template))
        required = REQUIRED_PLACEHOLDERS[kind]
        if found != required:
            raise PromptError(
                f"Template {path} placeholders {sorted(found)} != expected {sorted(required)}"
            )
        return template

    def render_initial(
        self,
        function: FunctionRecord,
        context: Sequence[FunctionRecord] = (),
    ) -> PromptText:
        """
        Render the initial allocation query.

        Args:
            function: Target function (must have a body)
            context: Callee records, placed before the target body

        Returns:
            PromptText of kind INITIAL
        """
        if not function.body:
            raise PromptError(f"Function {function.name} has no body")
        code = CONTEXT_SEPARATOR.join([c.body for c in context] + [function.body])
        text = self.templates[PromptKind.INITIAL].replace("{func_name}", function.name)
        text = text.replace("{code}", code)
        return PromptText(text=text, kind=PromptKind.INITIAL, function_id=function.id, function_name=function.name)

    def render_postfilter(
        self,
        function: FunctionRecord,
        context: Sequence[FunctionRecord],
        structure: str,
        variable_name: str,
    ) -> PromptText:
        """
        Render the post-filter query asking whether the return value points
        into the structure passed as ``variable_name``.
        """
        if not structure or not variable_name:
            raise PromptError("structure and variable_name must be non-empty")
        if variable_name not in function.param_names:
            raise PromptError(
                f"{variable_name!r} is not a parameter of {function.name} "
                f"(parameters: {function.param_names})"
            )
        source = CONTEXT_SEPARATOR.join([function.body] + [c.body for c in context])
        text = self.templates[PromptKind.POSTFILTER]
        text = text.replace("{func_name}", function.name)
        text = text.replace("{structure}", structure)
        text = text.replace("{variable_name}", variable_name)
        text = text.replace("{source}", source)
        return PromptText(text=text, kind=PromptKind.POSTFILTER, function_id=function.id, function_name=function.name)


@lru_cache(maxsize=None)
def default_builder() -> PromptBuilder:
    return PromptBuilder()


def render_initial_prompt(
    function: FunctionRecord,
    context: Sequence[FunctionRecord] = (),
) -> PromptText:
    return default_builder().render_initial(function, context)


def render_postfilter_prompt(
    function: FunctionRecord,
    context: Sequence[FunctionRecord],
    structure: str,
    variable_name: str,
) -> PromptText:
    return default_builder().render_postfilter(function, context, structure, variable_name)
