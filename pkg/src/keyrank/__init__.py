"""Prompt-based unsupervised keyphrase extraction and evaluation."""

from .candidates import Candidate, dedup_candidates, extract_candidates
from .evaluation import (
    EvalReport,
    LabeledDocument,
    aggregate_documents,
    average_over_datasets,
    f1_at_k,
    load_dataset,
)
from .pipeline import Extraction, extract_keyphrases
from .prompts import PromptTemplate, RenderedPrompt, builtin_catalog, load_catalog, render
from .scoring import (
    CandidateTokenWindow,
    ReferenceScorer,
    ScoredCandidate,
    ScorerConfig,
    TokenLogProbs,
    locate_candidate_window,
    rank_candidates,
    reference_score,
    score_candidate,
    truncate_encoder_input,
)
from .textproc import TaggedToken, TaggerConfig, Token, pos_tag, stem, tokenize

__version__ = "0.1.0"
