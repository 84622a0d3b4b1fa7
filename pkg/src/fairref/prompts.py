"""The 80-profession evaluation prompt set.

Professions are grouped into eight occupation categories; each renders into
a photo prompt through a template. Alternative framings ("Headshot of ...",
"Full body of ...") are a template swap, not a different prompt set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ParseError

DEFAULT_TEMPLATE = "Photo of {}"

#: Category sizes the bundled prompt set must satisfy (80 prompts total).
EXPECTED_CATEGORY_COUNTS = {
    "artists": 6,
    "food_and_beverage": 6,
    "musicians": 9,
    "security": 6,
    "sports": 9,
    "stem": 12,
    "workers": 7,
    "others": 25,
}


@dataclass(frozen=True)
class PromptEntry:
    """One profession with its category and rendering template."""

    text: str  # article + profession, e.g. "a doctor"
    category: str
    template: str = DEFAULT_TEMPLATE

    def render(self) -> str:
        return self.template.format(self.text)


@dataclass(frozen=True)
class PromptSet:
    """An ordered collection of prompt entries."""

    entries: tuple[PromptEntry, ...]

    def render_all(self) -> list[str]:
        return [entry.render() for entry in self.entries]

    def category_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for entry in self.entries:
            counts[entry.category] = counts.get(entry.category, 0) + 1
        return counts


def load_prompt_set(path: str | Path | None = None, template: str | None = None) -> PromptSet:
    """Load the bundled professions (or a file with the same JSON layout).

    The bundled set is validated against :data:`EXPECTED_CATEGORY_COUNTS`.
    """
    if path is None:
        text = resources.files("fairref.data").joinpath("professions.json").read_text()
        source = "professions.json"
    else:
        text = Path(path).read_text()
        source = str(path)
    try:
        data = json.loads(text)
        categories = data["categories"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{source}: expected JSON with a 'categories' object: {exc}") from exc
    chosen_template = template if template is not None else data.get("template", DEFAULT_TEMPLATE)
    if "{}" not in chosen_template:
        raise ParseError(f"{source}: template must contain a '{{}}' placeholder")

    entries: list[PromptEntry] = []
    for category, professions in categories.items():
        if not isinstance(professions, list) or not all(
            isinstance(p, str) and p for p in professions
        ):
            raise ParseError(f"{source}: category {category!r} must list non-empty strings")
        entries.extend(
            PromptEntry(text=profession, category=category, template=chosen_template)
            for profession in professions
        )

    prompt_set = PromptSet(entries=tuple(entries))
    if path is None:
        counts = prompt_set.category_counts()
        if counts != EXPECTED_CATEGORY_COUNTS:
            raise ParseError(
                f"bundled prompt set has category counts {counts}, "
                f"expected {EXPECTED_CATEGORY_COUNTS}"
            )
    return prompt_set


__all__ = [
    "DEFAULT_TEMPLATE",
    "EXPECTED_CATEGORY_COUNTS",
    "PromptEntry",
    "PromptSet",
    "load_prompt_set",
]
