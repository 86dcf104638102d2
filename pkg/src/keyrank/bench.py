"""Benchmark and prompt-sweep runners shared by the CLI and the tests."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

from .errors import ConfigError
from .evaluation import (
    DEFAULT_KS,
    PRF,
    EvalReport,
    LabeledDocument,
    aggregate_documents,
    average_over_datasets,
    evaluate_ranking,
    present_gold,
)
from .pipeline import Scorer, extract_keyphrases
from .prompts import PromptTemplate
from .scoring import ScoredCandidate, ScorerConfig
from .textproc import TaggerConfig

AVG_DATASET = "Avg."


@dataclass
class RunConfig:
    prompt_ids: list[str] = field(default_factory=lambda: ["p2_6"])
    scorer: Literal["reference", "remote"] = "reference"
    endpoint: str | None = None
    top_k: int = 15
    eval_ks: tuple[int, ...] = DEFAULT_KS
    max_encoder_tokens: int = 512
    aggregation: Literal["macro", "micro"] = "macro"
    present_only: bool = False
    workers: int = 1

    def validate(self, evaluating: bool = False) -> None:
        if not self.prompt_ids:
            raise ConfigError("at least one prompt id is required")
        if self.top_k < 1:
            raise ConfigError("top-k must be positive")
        if self.max_encoder_tokens < 1:
            raise ConfigError("max-encoder-tokens must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.aggregation not in ("macro", "micro"):
            raise ConfigError(f"unknown aggregation {self.aggregation!r}")
        if evaluating:
            if not self.eval_ks or any(k < 1 for k in self.eval_ks):
                raise ConfigError("evaluation K values must be positive")
            if list(self.eval_ks) != sorted(set(self.eval_ks)):
                raise ConfigError("evaluation K values must be strictly ascending")
            if self.top_k < max(self.eval_ks):
                raise ConfigError(
                    f"top-k ({self.top_k}) must be >= the largest K ({max(self.eval_ks)})")

    @property
    def scorer_config(self) -> ScorerConfig:
        return ScorerConfig(self.max_encoder_tokens, self.scorer)


@dataclass
class DocumentResult:
    doc_id: str
    ranked: list[ScoredCandidate]
    gold: list[str]
    metrics: dict[int, PRF] | None  # None: excluded (no present gold)

    def to_log(self, prompt_id: str, dataset_id: str | None = None) -> dict:
        entry = {"id": self.doc_id, "prompt_id": prompt_id}
        if dataset_id is not None:
            entry["dataset"] = dataset_id
        entry["gold"] = self.gold
        entry["candidates"] = [
            {"phrase": sc.candidate.surface, "stemmed": sc.candidate.stemmed_key,
             "score": sc.pi_c, "offset": sc.candidate.first_char_offset}
            for sc in self.ranked
        ]
        entry["metrics"] = None if self.metrics is None else {
            str(k): {"precision": m.precision, "recall": m.recall, "f1": m.f1}
            for k, m in self.metrics.items()}
        return entry


@dataclass
class SweepRow:
    prompt_id: str
    scorer_label: str
    dataset_id: str
    report: EvalReport


@dataclass
class SweepReport:
    rows: list[SweepRow]

    def to_dict(self) -> dict:
        return {"rows": [
            {"prompt_id": r.prompt_id, "scorer": r.scorer_label, "dataset": r.dataset_id,
             **r.report.to_dict()}
            for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> "SweepReport":
        rows = []
        for r in data["rows"]:
            per_k = {int(k): PRF(v["precision"], v["recall"], v["f1"])
                     for k, v in r["per_k"].items()}
            rows.append(SweepRow(r["prompt_id"], r["scorer"], r["dataset"],
                                 EvalReport(per_k, r["num_documents"])))
        return cls(rows)


def evaluate_document(doc: LabeledDocument, template: PromptTemplate, scorer: Scorer,
                      cfg: RunConfig, tagger: TaggerConfig | None = None) -> DocumentResult:
    extraction = extract_keyphrases(doc.document, template, scorer, cfg.scorer_config, tagger)
    ranked = extraction.top(cfg.top_k)
    gold = list(doc.gold_keyphrases)
    if cfg.present_only:
        gold = present_gold(gold, doc.document)
        if not gold:
            return DocumentResult(doc.id, ranked, gold, None)
    metrics = evaluate_ranking([sc.candidate for sc in ranked], gold, cfg.eval_ks)
    return DocumentResult(doc.id, ranked, gold, metrics)


def run_benchmark(docs: Sequence[LabeledDocument], template: PromptTemplate, scorer: Scorer,
                  cfg: RunConfig, tagger: TaggerConfig | None = None
                  ) -> tuple[EvalReport, list[DocumentResult]]:
    """Evaluate one prompt on one dataset; results keep dataset order."""
    if not docs:
        raise ConfigError("dataset is empty")
    cfg.validate(evaluating=True)

    def work(doc):
        return evaluate_document(doc, template, scorer, cfg, tagger)

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, docs))
    else:
        results = [work(d) for d in docs]
    scored = [r.metrics for r in results if r.metrics is not None]
    if not scored:
        raise ConfigError("no document has a gold keyphrase present in its text")
    return aggregate_documents(scored, cfg.aggregation), results


def run_sweep(datasets: Sequence[tuple[str, Sequence[LabeledDocument]]],
              templates: Sequence[PromptTemplate], scorer: Scorer, cfg: RunConfig,
              tagger: TaggerConfig | None = None, on_document=None) -> SweepReport:
    """One row per (prompt, dataset) plus an ``Avg.`` row per prompt.

    ``on_document(prompt_id, dataset_id, result)`` is called for each
    document in a deterministic order, e.g. to write audit logs.
    """
    if not datasets:
        raise ConfigError("at least one dataset is required")
    if not templates:
        raise ConfigError("at least one prompt is required")
    ids = [d for d, _ in datasets]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"dataset ids are not unique: {ids}")
    pids = [t.id for t in templates]
    if len(set(pids)) != len(pids):
        raise ConfigError(f"prompt ids are not unique: {pids}")
    if AVG_DATASET in ids:
        raise ConfigError(f"{AVG_DATASET!r} is reserved")
    rows: list[SweepRow] = []
    for template in templates:
        reports = []
        for dataset_id, docs in datasets:
            report, results = run_benchmark(docs, template, scorer, cfg, tagger)
            if on_document is not None:
                for res in results:
                    on_document(template.id, dataset_id, res)
            rows.append(SweepRow(template.id, scorer.label, dataset_id, report))
            reports.append(report)
        rows.append(SweepRow(template.id, scorer.label, AVG_DATASET,
                             average_over_datasets(reports)))
    return SweepReport(rows)
