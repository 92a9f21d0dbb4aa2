"""Prompt templates: shipped defaults, user overrides, rendering.

Templates are plain text files, one per task kind, with {{placeholder}}
tokens.  Template text is configuration: anything in a templates
directory overrides the shipped default of the same name.  Rendering a
template that references a placeholder the task does not provide is an
error naming the placeholder, so typos fail fast instead of leaking
literal braces into prompts.
"""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path
from typing import Mapping

TASK_KINDS = (
    "binary",
    "multilabel",
    "multiclass",
    "sentiment",
    "extract",
    "derive_themes",
    "coalesce_themes",
    "judge_extraction",
)

# The system template carries the persona framing shared by all tasks.
SYSTEM_KIND = "system"

_PLACEHOLDER = re.compile(r"\{\{(\w+)\}\}")


class TemplateError(ValueError):
    pass


class TemplateSet:
    """Task-kind -> template text, with override support."""

    def __init__(self, templates: Mapping[str, str]) -> None:
        missing = [k for k in (*TASK_KINDS, SYSTEM_KIND) if k not in templates]
        if missing:
            raise TemplateError(f"missing template(s): {missing}")
        self._templates = dict(templates)

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "TemplateSet":
        templates: dict[str, str] = {}
        package_dir = resources.files(__package__) / "templates"
        for entry in package_dir.iterdir():
            if entry.name.endswith(".txt"):
                templates[entry.name[: -len(".txt")]] = entry.read_text(encoding="utf-8")
        if directory is not None:
            directory = Path(directory)
            if not directory.is_dir():
                raise TemplateError(f"templates directory not found: {directory}")
            for path in sorted(directory.glob("*.txt")):
                templates[path.stem] = path.read_text(encoding="utf-8")
        return cls(templates)

    def text(self, kind: str) -> str:
        if kind not in self._templates:
            raise TemplateError(f"no template for task kind {kind!r}")
        return self._templates[kind]

    def render(self, kind: str, values: Mapping[str, str]) -> str:
        template = self.text(kind)
        unknown = [name for name in _PLACEHOLDER.findall(template) if name not in values]
        if unknown:
            raise TemplateError(f"unknown placeholder {unknown[0]}")
        return _PLACEHOLDER.sub(lambda m: str(values[m.group(1)]), template).strip() + "\n"

    def fingerprint(self) -> dict[str, str]:
        """Stable copy of all template texts, for cache keying."""
        return dict(sorted(self._templates.items()))


_DEFAULT_TEMPLATES: TemplateSet | None = None


def default_templates() -> TemplateSet:
    global _DEFAULT_TEMPLATES
    if _DEFAULT_TEMPLATES is None:
        _DEFAULT_TEMPLATES = TemplateSet.load()
    return _DEFAULT_TEMPLATES
