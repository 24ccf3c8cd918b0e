"""Render triplets as natural-language sentences via per-relation templates."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .kg import KnowledgeGraph

BUILTIN_FAMILIES = ("conceptnet", "explaknow")
STYLES = ("natural", "static")


class TemplateError(Exception):
    """Raised for malformed template files or missing relation templates."""


@dataclass(frozen=True)
class TemplateSet:
    """Per-relation sentence templates.

    Every template contains the literal markers ``{head}`` and ``{tail}``.
    Relations in ``inverted`` render the tail before the head.
    """

    style: str
    templates: dict[str, str]
    inverted: frozenset[str]

    def __post_init__(self) -> None:
        missing = self.inverted - self.templates.keys()
        if missing:
            raise TemplateError(f"inverted relations without template: {sorted(missing)}")

    def template_for(self, relation: str) -> str:
        try:
            return self.templates[relation]
        except KeyError:
            raise TemplateError(f"no template for relation {relation!r}") from None


def load_templates(path: str | Path, style: str = "natural") -> TemplateSet:
    """Parse a relation<TAB>template<TAB>inverted_flag TSV file."""
    path = Path(path)
    templates: dict[str, str] = {}
    inverted: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise TemplateError(f"{path}:{lineno}: expected 3 columns")
            relation, template, flag = parts
            if "{head}" not in template or "{tail}" not in template:
                raise TemplateError(
                    f"{path}:{lineno}: template must contain {{head}} and {{tail}}"
                )
            if flag not in ("0", "1"):
                raise TemplateError(f"{path}:{lineno}: inverted flag must be 0 or 1")
            if flag == "1":
                if template.index("{tail}") > template.index("{head}"):
                    raise TemplateError(
                        f"{path}:{lineno}: inverted template must place tail first"
                    )
                inverted.add(relation)
            templates[relation] = template
    if not templates:
        raise TemplateError(f"{path}: no templates")
    return TemplateSet(style=style, templates=templates, inverted=frozenset(inverted))


def builtin_templates(family: str = "conceptnet", style: str = "natural") -> TemplateSet:
    """Load one of the shipped template sets."""
    if family not in BUILTIN_FAMILIES:
        raise TemplateError(f"unknown template family {family!r}")
    if style not in STYLES:
        raise TemplateError(f"unknown template style {style!r}")
    ref = resources.files("cckg").joinpath(f"data/templates/{family}.{style}.tsv")
    with resources.as_file(ref) as path:
        return load_templates(path, style=style)


def _surface(label: str) -> str:
    return label.replace("_", " ")


def verbalize_labels(
    head: str, relation: str, tail: str, templates: TemplateSet
) -> str:
    """Render one raw (head, relation, tail) as a sentence.

    Underscores in concept labels become spaces; grammatical errors in the
    source triplets propagate unchanged.
    """
    template = templates.template_for(relation)
    return template.format(head=_surface(head), tail=_surface(tail))


def verbalize(triplet_id: int, kg: KnowledgeGraph, templates: TemplateSet) -> str:
    """One sentence for one indexed triplet."""
    head, relation, tail = kg.triplet_labels(triplet_id)
    return verbalize_labels(head, relation, tail, templates)


def verbalize_sentences(kg: KnowledgeGraph, templates: TemplateSet) -> list[str]:
    """All sentences in triplet-id order (the alignment contract)."""
    if kg.n_triplets == 0:
        raise TemplateError("empty KG: nothing to verbalize")
    # Fail on any missing relation before producing output.
    for name in kg.relation_names:
        templates.template_for(name)
    return [verbalize(tid, kg, templates) for tid in range(kg.n_triplets)]


def verbalize_all(
    kg: KnowledgeGraph, templates: TemplateSet, out_path: str | Path
) -> int:
    """Write one sentence per line, line i = triplet i. Returns line count."""
    sentences = verbalize_sentences(kg, templates)
    with open(out_path, "w", encoding="utf-8") as fh:
        for sentence in sentences:
            fh.write(sentence)
            fh.write("\n")
    return len(sentences)
