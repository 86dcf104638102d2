"""End-to-end extraction: truncate, chunk, render, score, rank."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .candidates import Candidate, dedup_candidates, extract_candidates
from .prompts import PromptTemplate, render
from .scoring import (
    ScoredCandidate,
    ScorerConfig,
    TokenLogProbs,
    locate_candidate_window,
    rank_candidates,
    score_candidate,
    truncate_encoder_input,
)
from .textproc import TaggedToken, TaggerConfig, pos_tag, tokenize


class Scorer(Protocol):
    label: str

    def score(self, encoder_text: str, decoder_texts: Sequence[str]) -> list[TokenLogProbs]:
        ...


@dataclass
class Extraction:
    document_text: str
    candidates: list[Candidate]
    ranked: list[ScoredCandidate] = field(default_factory=list)

    def top(self, k: int) -> list[ScoredCandidate]:
        return self.ranked[:k]


def score_candidates(text: str, candidates: Sequence[Candidate], template: PromptTemplate,
                     scorer: Scorer) -> list[ScoredCandidate]:
    if not candidates:
        return []
    rendered = [render(template, text, c.surface) for c in candidates]
    encoder_text = rendered[0].encoder_text
    results = scorer.score(encoder_text, [rp.decoder_text for rp in rendered])
    scored = []
    for cand, rp, tlp in zip(candidates, rendered, results, strict=True):
        window = locate_candidate_window(tlp, rp)
        scored.append(ScoredCandidate(cand, score_candidate(window, tlp)))
    return rank_candidates(scored)


def extract_from_tagged(text: str, tagged: Sequence[TaggedToken], template: PromptTemplate,
                        scorer: Scorer, cfg: ScorerConfig | None = None) -> Extraction:
    """Rank candidates of an already tagged document.

    Only the first ``max_encoder_tokens`` tokens are kept; the document text
    is cut after the last kept token so every candidate is in the encoder
    context.
    """
    cfg = cfg or ScorerConfig()
    kept = truncate_encoder_input(tagged, cfg)
    text = text[:kept[-1].token.char_end] if kept else ""
    cands = dedup_candidates(extract_candidates(kept))
    return Extraction(text, cands, score_candidates(text, cands, template, scorer))


def extract_keyphrases(document: str, template: PromptTemplate, scorer: Scorer,
                       cfg: ScorerConfig | None = None,
                       tagger: TaggerConfig | None = None) -> Extraction:
    return extract_from_tagged(document, pos_tag(tokenize(document), tagger),
                               template, scorer, cfg)
