"""Prompt templates: the built-in catalog, JSON catalogs, and rendering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from .errors import DataError

DOC_SLOT = "{document}"
CAND_SLOT = "{candidate}"


class CatalogError(DataError):
    pass


class TemplateValidationError(CatalogError):
    def __init__(self, template_id: str, message: str):
        super().__init__(f"template {template_id!r}: {message}")
        self.template_id = template_id


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    encoder_template: str
    decoder_template: str

    def __post_init__(self):
        validate_template(self)


@dataclass(frozen=True)
class RenderedPrompt:
    encoder_text: str
    decoder_text: str
    candidate_char_span: tuple[int, int]


def validate_template(t: PromptTemplate) -> None:
    if not t.id:
        raise TemplateValidationError(t.id, "empty id")
    if t.encoder_template.count(DOC_SLOT) != 1:
        raise TemplateValidationError(t.id, f"encoder must contain {DOC_SLOT} exactly once")
    if CAND_SLOT in t.encoder_template:
        raise TemplateValidationError(t.id, f"encoder must not contain {CAND_SLOT}")
    if t.decoder_template.count(CAND_SLOT) != 1:
        raise TemplateValidationError(t.id, f"decoder must contain {CAND_SLOT} exactly once")
    if DOC_SLOT in t.decoder_template:
        raise TemplateValidationError(t.id, f"decoder must not contain {DOC_SLOT}")


# (id, encoder label, decoder prefix); encoder is '<label>"{document}"' and
# decoder is '<prefix>"{candidate}"'.
_BUILTIN_ROWS = (
    ("p1", "", ""),
    ("p1_1", "Article: ", ""),
    ("p1_2", "", "Keyphrases: "),
    ("p1_3", "Article: ", "Keyphrases: "),
    ("p2", "Article: ", "This article mainly talks about "),
    ("p2_1", "Passage: ", "This passage mainly talks about "),
    ("p2_2", "Book: ", "This book mainly talks about "),
    ("p2_3", "Document: ", "This document mainly talks about "),
    ("p2_4", "Paper: ", "This paper mainly talks about "),
    ("p2_5", "Content: ", "This content mainly talks about "),
    ("p2_6", "Text: ", "This text mainly talks about "),
    ("p3", "Article: ", "Keyphrases of this article are "),
    ("p3_1", "Article: ", "Keywords of this article are "),
    ("p3_2", "Article: ", "The keyphrases of this article are "),
    ("p3_3", "Article: ", "Extract keyphrases from this article: "),
)

_BUILTIN = tuple(
    PromptTemplate(pid, f'{enc}"{DOC_SLOT}"', f'{dec}"{CAND_SLOT}"')
    for pid, enc, dec in _BUILTIN_ROWS
)


def builtin_catalog() -> list[PromptTemplate]:
    return list(_BUILTIN)


def catalog_by_id(catalog: list[PromptTemplate] | None = None) -> dict[str, PromptTemplate]:
    return {t.id: t for t in (catalog if catalog is not None else _BUILTIN)}


def parse_catalog(entries) -> list[PromptTemplate]:
    if not isinstance(entries, list):
        raise CatalogError("catalog must be a JSON array")
    templates: list[PromptTemplate] = []
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise CatalogError(f"catalog entry {i} is not an object")
        missing = [k for k in ("id", "encoder", "decoder") if not isinstance(entry.get(k), str)]
        if missing:
            raise CatalogError(f"catalog entry {i}: missing or non-string field(s) {missing}")
        if entry["id"] in seen:
            raise CatalogError(f"duplicate template id {entry['id']!r}")
        seen.add(entry["id"])
        templates.append(PromptTemplate(entry["id"], entry["encoder"], entry["decoder"]))
    return templates


def load_catalog(source: str | Path | IO[str]) -> list[PromptTemplate]:
    """Load a JSON catalog (``[{"id", "encoder", "decoder"}, ...]``)."""
    try:
        if hasattr(source, "read"):
            entries = json.load(source)
        else:
            with open(source, encoding="utf-8") as fh:
                entries = json.load(fh)
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog is not valid JSON: {exc}") from exc
    return parse_catalog(entries)


def dump_catalog(templates: list[PromptTemplate]) -> str:
    return json.dumps(
        [{"id": t.id, "encoder": t.encoder_template, "decoder": t.decoder_template}
         for t in templates],
        ensure_ascii=False, indent=2)


def render(t: PromptTemplate, document_text: str, candidate_surface: str) -> RenderedPrompt:
    # str.replace would also rewrite slot markers occurring inside the
    # substituted text; split on the single slot instead.
    enc_head, enc_tail = t.encoder_template.split(DOC_SLOT)
    dec_head, dec_tail = t.decoder_template.split(CAND_SLOT)
    start = len(dec_head)
    return RenderedPrompt(
        encoder_text=enc_head + document_text + enc_tail,
        decoder_text=dec_head + candidate_surface + dec_tail,
        candidate_char_span=(start, start + len(candidate_surface)),
    )
