"""Prompt templates: one text file per template, `{name}` placeholders.

Templates live as package data under provider/templates/ and can be overridden
by pointing the library at another directory, so prompt wording is tunable
without code changes.  Rendering is strict: every placeholder that appears in
the body must be bound, and binding an unknown name is an error, which keeps
template edits and call sites honest with each other.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ..errors import UsageError

# Placeholder tokens look like {source} or {target_language}: lowercase
# identifiers only, so literal braces in surrounding prose or code samples
# do not collide.
_PLACEHOLDER = re.compile(r"\{([a-z][a-z0-9_]*)\}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    def placeholders(self) -> frozenset[str]:
        return frozenset(_PLACEHOLDER.findall(self.body))

    def render(self, **bindings: str) -> str:
        wanted = self.placeholders()
        missing = wanted - set(bindings)
        if missing:
            raise UsageError(
                f"template {self.name}: unbound placeholders {sorted(missing)}"
            )
        extra = set(bindings) - wanted
        if extra:
            raise UsageError(
                f"template {self.name}: unknown placeholders {sorted(extra)}"
            )
        # Single pass, so placeholder-looking text inside a bound value is
        # never re-substituted.
        return _PLACEHOLDER.sub(lambda m: bindings[m.group(1)], self.body)


class PromptLibrary:
    """All templates from one directory, loaded eagerly and kept immutable."""

    def __init__(self, templates: dict[str, PromptTemplate], origin: str):
        self._templates = dict(templates)
        self.origin = origin

    @classmethod
    def from_dir(cls, path: Path) -> "PromptLibrary":
        path = Path(path)
        if not path.is_dir():
            raise UsageError(f"template directory not found: {path}")
        templates = {}
        for file in sorted(path.glob("*.txt")):
            templates[file.stem] = PromptTemplate(
                name=file.stem, body=file.read_text(encoding="utf-8")
            )
        if not templates:
            raise UsageError(f"no *.txt templates under {path}")
        return cls(templates, origin=str(path))

    @classmethod
    def default(cls) -> "PromptLibrary":
        root = resources.files("spectra.provider") / "templates"
        with resources.as_file(root) as path:
            return cls.from_dir(Path(path))

    def get(self, name: str) -> PromptTemplate:
        try:
            return self._templates[name]
        except KeyError:
            raise UsageError(
                f"no template named {name!r} in {self.origin} "
                f"(have: {', '.join(sorted(self._templates))})"
            ) from None

    def names(self) -> list[str]:
        return sorted(self._templates)
