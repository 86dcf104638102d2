"""Candidate importance scores from decoder token log-probabilities.

A candidate's score is the negated mean log-probability of the decoder
tokens that spell it out inside the rendered decoder prompt::

    pi_c = -(1 / l_c) * sum(logprobs[m : m + l_c])

Lower scores mean the model finds the candidate more probable, so ranking
is ascending.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Literal, Sequence, TypeVar

from .candidates import Candidate
from .errors import ConfigError, KeyrankError
from .prompts import RenderedPrompt
from .textproc import tokenize


class ScoringError(KeyrankError):
    pass


class AlignmentError(ScoringError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (first mismatch at character offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class TokenLogProbs:
    tokens: tuple[str, ...]
    logprobs: tuple[float, ...]

    def __init__(self, tokens: Sequence[str], logprobs: Sequence[float]):
        object.__setattr__(self, "tokens", tuple(tokens))
        object.__setattr__(self, "logprobs", tuple(float(x) for x in logprobs))
        if len(self.tokens) != len(self.logprobs):
            raise ValueError(
                f"{len(self.tokens)} tokens but {len(self.logprobs)} log-probs")
        for i, lp in enumerate(self.logprobs):
            if not lp <= 0.0:
                raise ValueError(f"log-prob at index {i} is {lp!r}; must be <= 0")

    def text(self) -> str:
        return "".join(self.tokens)


@dataclass(frozen=True)
class CandidateTokenWindow:
    m: int
    l_c: int

    def __post_init__(self):
        if self.m < 0 or self.l_c < 1:
            raise ValueError(f"invalid window m={self.m}, l_c={self.l_c}")


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: Candidate
    pi_c: float


@dataclass(frozen=True)
class ScorerConfig:
    max_encoder_tokens: int = 512
    backend: Literal["reference", "remote"] = "reference"

    def __post_init__(self):
        if self.max_encoder_tokens < 1:
            raise ConfigError("max_encoder_tokens must be >= 1")
        if self.backend not in ("reference", "remote"):
            raise ConfigError(f"unknown scorer backend {self.backend!r}")


def check_reconstruction(tokens: Sequence[str], text: str) -> None:
    """Raise :class:`AlignmentError` unless ``"".join(tokens) == text``."""
    pos = 0
    for tok in tokens:
        chunk = text[pos:pos + len(tok)]
        if chunk != tok:
            k = next((i for i, (a, b) in enumerate(zip(tok, chunk)) if a != b),
                     min(len(tok), len(chunk)))
            raise AlignmentError("decoder tokens do not reconstruct the decoder text", pos + k)
        pos += len(tok)
    if pos != len(text):
        raise AlignmentError("decoder tokens do not reconstruct the decoder text", pos)


def locate_candidate_window(scored_tokens: TokenLogProbs, rp: RenderedPrompt) -> CandidateTokenWindow:
    """Find the smallest run of decoder tokens covering the candidate span.

    Tokens are joined by plain concatenation. A token straddling either edge
    of the span is included.
    """
    check_reconstruction(scored_tokens.tokens, rp.decoder_text)
    start, end = rp.candidate_char_span
    if not 0 <= start < end <= len(rp.decoder_text):
        raise ScoringError(f"empty or out-of-range candidate span {rp.candidate_char_span}")
    first = last = -1
    pos = 0
    for i, tok in enumerate(scored_tokens.tokens):
        tok_start, tok_end = pos, pos + len(tok)
        pos = tok_end
        if tok_start < end and tok_end > start:
            if first < 0:
                first = i
            last = i
    return CandidateTokenWindow(first, last - first + 1)


def score_candidate(window: CandidateTokenWindow, tlp: TokenLogProbs) -> float:
    if window.m + window.l_c > len(tlp.logprobs):
        raise ScoringError(f"window {window} exceeds {len(tlp.logprobs)} decoder tokens")
    total = math.fsum(tlp.logprobs[window.m:window.m + window.l_c])
    return -total / window.l_c


def rank_key(sc: ScoredCandidate):
    return (sc.pi_c, sc.candidate.first_char_offset, sc.candidate.stemmed_key)


def rank_candidates(scored: Sequence[ScoredCandidate]) -> list[ScoredCandidate]:
    for sc in scored:
        if not math.isfinite(sc.pi_c):
            raise ScoringError(
                f"non-finite score {sc.pi_c!r} for candidate {sc.candidate.surface!r}")
    return sorted(scored, key=rank_key)


T = TypeVar("T")


def truncate_encoder_input(document_tokens: Sequence[T], cfg: ScorerConfig) -> list[T]:
    return list(document_tokens[:cfg.max_encoder_tokens])


# ---------------------------------------------------------------------------
# Reference backend: add-one smoothed unigram model of the encoder text
# ---------------------------------------------------------------------------

_PIECE_RE = re.compile(r"\s*(?:\w+(?:[-'’]\w+)*|[^\w\s])")


def decoder_pieces(text: str) -> list[str]:
    """Split decoder text into pieces that concatenate back to ``text``.

    Leading whitespace sticks to the following word or punctuation mark;
    trailing whitespace becomes its own piece.
    """
    pieces = [m.group() for m in _PIECE_RE.finditer(text)]
    consumed = sum(map(len, pieces))
    if consumed < len(text):
        pieces.append(text[consumed:])
    return pieces


def reference_score(document_tokens: Sequence[str], decoder_tokens: Sequence[str]) -> TokenLogProbs:
    """Per-token log-probs under an add-one smoothed document unigram model.

    ``log p(w) = log((c(w) + 1) / (N + V + 1))`` with counts over the
    case-folded document tokens. Decoder tokens are case-folded and stripped
    of surrounding whitespace before lookup but returned verbatim.
    """
    counts = Counter(w.casefold() for w in document_tokens)
    denom = len(document_tokens) + len(counts) + 1
    logprobs = [math.log((counts.get(tok.strip().casefold(), 0) + 1) / denom)
                for tok in decoder_tokens]
    return TokenLogProbs(decoder_tokens, logprobs)


class ReferenceScorer:
    """Deterministic offline backend built on :func:`reference_score`.

    The encoder text is word-tokenized to form the unigram model; each
    decoder text is split with :func:`decoder_pieces`.
    """

    label = "reference"

    def score(self, encoder_text: str, decoder_texts: Sequence[str]) -> list[TokenLogProbs]:
        words = [t.text for t in tokenize(encoder_text)]
        return [reference_score(words, decoder_pieces(d)) for d in decoder_texts]
