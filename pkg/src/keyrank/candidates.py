"""Noun-phrase candidate extraction with the ``(NN.*|JJ)*NN.*`` chunk grammar."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .textproc import TaggedToken, stem_phrase


@dataclass(frozen=True)
class Candidate:
    surface: str
    stemmed_key: str
    token_span: tuple[int, int]
    first_char_offset: int


def is_noun(pos: str) -> bool:
    return pos.startswith("NN")


def is_chunk_tag(pos: str) -> bool:
    return pos == "JJ" or pos.startswith("NN")


def make_candidate(tagged: Sequence[TaggedToken], start: int, end: int) -> Candidate:
    words = [t.token.text for t in tagged[start:end]]
    return Candidate(
        surface=" ".join(words),
        stemmed_key=stem_phrase(words),
        token_span=(start, end),
        first_char_offset=tagged[start].token.char_start,
    )


def extract_candidates(tagged: Sequence[TaggedToken]) -> list[Candidate]:
    """Return the maximal grammar chunks of ``tagged`` in document order.

    Each maximal run of ``NN.*``/``JJ`` tokens is cut after its last noun;
    runs without a noun yield nothing.
    """
    out: list[Candidate] = []
    i, n = 0, len(tagged)
    while i < n:
        if not is_chunk_tag(tagged[i].pos):
            i += 1
            continue
        start, last_noun = i, -1
        while i < n and is_chunk_tag(tagged[i].pos):
            if is_noun(tagged[i].pos):
                last_noun = i
            i += 1
        if last_noun >= 0:
            out.append(make_candidate(tagged, start, last_noun + 1))
    return out


def dedup_candidates(cands: Sequence[Candidate]) -> list[Candidate]:
    seen: set[str] = set()
    out = []
    for c in cands:
        if c.stemmed_key not in seen:
            seen.add(c.stemmed_key)
            out.append(c)
    return out
