"""Datasets, stemmed exact-match F1@K, and macro/micro aggregation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import fsum
from pathlib import Path
from typing import IO, Iterable, Literal, Mapping, Sequence

from .candidates import Candidate
from .errors import DataError
from .textproc import stem_phrase, tokenize

DEFAULT_KS = (5, 10, 15)

Aggregation = Literal["macro", "micro"]


@dataclass(frozen=True)
class LabeledDocument:
    id: str
    document: str
    gold_keyphrases: tuple[str, ...]


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    matches: int = 0
    retrieved: int = 0
    relevant: int = 0


@dataclass(frozen=True)
class EvalReport:
    per_k: dict[int, PRF]
    num_documents: int

    @property
    def ks(self) -> tuple[int, ...]:
        return tuple(sorted(self.per_k))

    def to_dict(self) -> dict:
        return {
            "num_documents": self.num_documents,
            "per_k": {str(k): {"precision": m.precision, "recall": m.recall, "f1": m.f1}
                      for k, m in sorted(self.per_k.items())},
        }


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def normalize_phrase(phrase: str) -> str:
    return " ".join(phrase.split())


def phrase_key(phrase: str) -> str:
    """Stemmed, lowercased key of a free-text phrase (as candidates are keyed)."""
    return stem_phrase(t.text for t in tokenize(normalize_phrase(phrase).lower()))


def _open_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            yield from fh
    else:
        yield from source


def load_dataset(source: str | Path | IO[str] | Iterable[str]) -> list[LabeledDocument]:
    """Read a JSONL dataset: ``{"id", "document", "keyphrases"}`` per line."""
    docs: list[LabeledDocument] = []
    seen: set[str] = set()
    for lineno, line in enumerate(_open_lines(source), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise DataError(f"line {lineno}: expected a JSON object")
        for name, kind in (("id", str), ("document", str), ("keyphrases", list)):
            if name not in obj:
                raise DataError(f"line {lineno}: missing field {name!r}")
            if not isinstance(obj[name], kind):
                raise DataError(f"line {lineno}: field {name!r} must be a {kind.__name__}")
        if obj["id"] in seen:
            raise DataError(f"line {lineno}: duplicate document id {obj['id']!r}")
        seen.add(obj["id"])
        if not all(isinstance(k, str) for k in obj["keyphrases"]):
            raise DataError(f"line {lineno}: keyphrases must be strings")
        gold = tuple(p for p in map(normalize_phrase, obj["keyphrases"]) if p)
        if not gold:
            raise DataError(f"document {obj['id']!r}: no keyphrases")
        docs.append(LabeledDocument(obj["id"], obj["document"], gold))
    return docs


def gold_keys(gold: Iterable[str]) -> list[str]:
    """Distinct stemmed keys of ``gold`` in first-seen order."""
    keys = dict.fromkeys(k for k in map(phrase_key, gold) if k)
    return list(keys)


def present_gold(gold: Sequence[str], document: str) -> list[str]:
    """Keep the gold phrases whose stemmed token sequence occurs in ``document``."""
    doc_stems = " " + stem_phrase(t.text for t in tokenize(document.lower())) + " "
    return [g for g in gold if phrase_key(g) and f" {phrase_key(g)} " in doc_stems]


def f1_at_k(predicted_ranked: Sequence[Candidate], gold: Sequence[str], k: int) -> PRF:
    if k <= 0:
        raise ValueError(f"k must be positive, got {k}")
    top = predicted_ranked[:k]
    remaining = set(gold_keys(gold))
    relevant = len(remaining)
    matches = 0
    for cand in top:
        if cand.stemmed_key in remaining:
            remaining.discard(cand.stemmed_key)
            matches += 1
    precision = matches / len(top) if top else 0.0
    recall = matches / relevant if relevant else 0.0
    return PRF(precision, recall, f1_score(precision, recall), matches, len(top), relevant)


def evaluate_ranking(predicted_ranked: Sequence[Candidate], gold: Sequence[str],
                     ks: Sequence[int] = DEFAULT_KS) -> dict[int, PRF]:
    return {k: f1_at_k(predicted_ranked, gold, k) for k in ks}


def aggregate_documents(per_doc: Sequence[Mapping[int, PRF]],
                        aggregation: Aggregation = "macro") -> EvalReport:
    """Combine per-document metrics into one report.

    ``macro`` averages the per-document numbers; ``micro`` pools match,
    retrieved and relevant counts first.
    """
    if not per_doc:
        raise ValueError("no documents to aggregate")
    ks = set(per_doc[0])
    if any(set(d) != ks for d in per_doc):
        raise ValueError("documents were evaluated at different K values")
    n = len(per_doc)
    per_k: dict[int, PRF] = {}
    for k in sorted(ks):
        rows = [d[k] for d in per_doc]
        matches = sum(r.matches for r in rows)
        retrieved = sum(r.retrieved for r in rows)
        relevant = sum(r.relevant for r in rows)
        if aggregation == "macro":
            p = fsum(r.precision for r in rows) / n
            r_ = fsum(r.recall for r in rows) / n
            f = fsum(r.f1 for r in rows) / n
        elif aggregation == "micro":
            p = matches / retrieved if retrieved else 0.0
            r_ = matches / relevant if relevant else 0.0
            f = f1_score(p, r_)
        else:
            raise ValueError(f"unknown aggregation {aggregation!r}")
        per_k[k] = PRF(p, r_, f, matches, retrieved, relevant)
    return EvalReport(per_k, n)


def average_over_datasets(reports: Sequence[EvalReport]) -> EvalReport:
    """Unweighted mean of each metric across dataset-level reports."""
    if not reports:
        raise ValueError("no reports to average")
    ks = set(reports[0].per_k)
    if any(set(r.per_k) != ks for r in reports):
        raise ValueError("reports cover different K values")
    n = len(reports)
    per_k = {}
    for k in sorted(ks):
        ms = [r.per_k[k] for r in reports]
        per_k[k] = PRF(
            fsum(m.precision for m in ms) / n,
            fsum(m.recall for m in ms) / n,
            fsum(m.f1 for m in ms) / n,
            sum(m.matches for m in ms),
            sum(m.retrieved for m in ms),
            sum(m.relevant for m in ms),
        )
    return EvalReport(per_k, sum(r.num_documents for r in reports))
