"""Cascade orchestration: selection, highlighting, fusion, evaluation."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import RunConfig
from .corpus import Document
from .errors import CascadeError, DataError
from .fusion import FusionModel, generate
from .oracle import Instance, align_summary_sentence, gold_labels, instance_tokens
from .rouge import METRICS, rouge_summary
from .selector import SelectorModel, predict, rank_instances
from .strategy import PROP_DOCUMENT, PROP_INSTANCE, THRESHOLD, HighlightMask, apply_strategy, highlight_rate

log = logging.getLogger(__name__)

ORACLE_MODES = ("gt_sent_sys_tag", "gt_sent_sys_tag_fusion", "gt_sent_gt_tag", "gt_sent_gt_tag_fusion")
GOLD = "gold"


@dataclass
class Provenance:
    sentence_indices: tuple[int, ...]
    p_sent: float | None
    mask: list[int]
    strategy: str
    token_sources: list[int | None] = field(default_factory=list)


@dataclass
class SummaryOutput:
    doc_id: str
    sentences: list[list[str]] = field(default_factory=list)
    provenance: list[Provenance] = field(default_factory=list)
    # per-sentence decode traces; kept in memory only
    traces: list[list[dict]] = field(default_factory=list, repr=False, compare=False)

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sentences": self.sentences,
            "provenance": [
                {"sent_idx": list(p.sentence_indices), "p_sent": p.p_sent, "mask": p.mask,
                 "strategy": p.strategy, "token_sources": p.token_sources}
                for p in self.provenance
            ],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "SummaryOutput":
        prov = [Provenance(tuple(p["sent_idx"]), p["p_sent"], p["mask"], p["strategy"], p.get("token_sources", []))
                for p in rec.get("provenance", [])]
        return cls(rec["doc_id"], rec["sentences"], prov)


def write_summaries(outputs: Sequence[SummaryOutput], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for out in outputs:
            fh.write(json.dumps(out.to_record(), ensure_ascii=False) + "\n")


def read_summaries(path) -> list[SummaryOutput]:
    with open(path, encoding="utf-8") as fh:
        try:
            return [SummaryOutput.from_record(json.loads(line)) for line in fh if line.strip()]
        except (json.JSONDecodeError, KeyError) as exc:
            raise DataError(f"{path}: bad summary record ({exc})") from None


# -- shared steps ----------------------------------------------------------------

def write_traces(outputs: Sequence[SummaryOutput], path) -> None:
    """One line per decode step: doc, sentence, step, token, p_gen, top attention."""
    with open(path, "w", encoding="utf-8") as fh:
        for out in outputs:
            for k, trace in enumerate(out.traces):
                for rec in trace:
                    fh.write(json.dumps({"doc_id": out.doc_id, "sentence": k, **rec}, ensure_ascii=False) + "\n")


def _fallback(mask: HighlightMask, probs: np.ndarray) -> HighlightMask:
    """An all-zero mask highlights its single most probable token instead."""
    if mask.count or not len(mask):
        return mask
    bits = [0] * len(mask)
    bits[int(np.argmax(probs))] = 1
    log.info("all-zero highlight mask replaced by its top token")
    return HighlightMask(bits, mask.source, mask.parameter)


def _order(items: list, config: RunConfig, key=lambda item: item[0].sentence_indices[0]) -> list:
    return sorted(items, key=key) if config.order == "document" else items


def _fuse(instances, masks, p_sents, strategy, doc_id, fuser, config) -> SummaryOutput:
    out = SummaryOutput(doc_id)
    for inst, mask, p in zip(instances, masks, p_sents):
        try:
            gen = generate(inst, mask, fuser, config.beam_width, config.max_len)
        except (CascadeError, ValueError) as exc:
            log.warning("document %s instance %s skipped: %s", doc_id, inst.sentence_indices, exc)
            continue
        out.sentences.append(gen.tokens)
        out.traces.append(gen.trace)
        out.provenance.append(Provenance(inst.sentence_indices, p, list(mask.bits), strategy,
                                         [t.source_position for t in gen.provenance]))
    return out


def _extract(instances, masks, p_sents, strategy, doc_id) -> SummaryOutput:
    out = SummaryOutput(doc_id)
    for inst, mask, p in zip(instances, masks, p_sents):
        positions = [i for i, b in enumerate(mask.bits) if b]
        if not positions:
            log.info("document %s instance %s: empty highlight, empty sentence", doc_id, inst.sentence_indices)
        tokens = inst.real_tokens
        out.sentences.append([tokens[i] for i in positions])
        out.provenance.append(Provenance(inst.sentence_indices, p, list(mask.bits), strategy, positions))
    return out


def select(doc: Document, selector: SelectorModel, config: RunConfig):
    """Top-k instances in output order, their p_sent and token probabilities."""
    ranked = _order(rank_instances(doc, selector, config.k, config.pair_window, config.disjoint), config)
    instances = [inst for inst, _ in ranked]
    probs = [tp for _, tp in predict(instances, selector)]
    return instances, [p for _, p in ranked], probs


# -- public operations --------------------------------------------------------------

def summarize(doc: Document, selector: SelectorModel, fuser: FusionModel, config: RunConfig) -> SummaryOutput:
    instances, p_sents, probs = select(doc, selector, config)
    masks = apply_strategy(probs, config.strategy, config.strategy_param)
    masks = [_fallback(m, p) for m, p in zip(masks, probs)]
    return _fuse(instances, masks, p_sents, config.strategy, doc.id, fuser, config)


def extract_tag_summary(doc: Document, selector: SelectorModel, config: RunConfig) -> SummaryOutput:
    instances, p_sents, probs = select(doc, selector, config)
    masks = apply_strategy(probs, config.strategy, config.strategy_param)
    return _extract(instances, masks, p_sents, config.strategy, doc.id)


def gt_instances(doc: Document, config: RunConfig) -> list[Instance]:
    """One positive instance per reference sentence, in reference order."""
    if not doc.summary:
        raise DataError(f"document {doc.id!r} has no reference summary for oracle selection")
    out = []
    for ref in doc.summary:
        al = align_summary_sentence(doc, ref, config.pair_margin, config.pair_window)
        toks = instance_tokens(doc, al.sentence_indices)
        out.append(Instance(doc.id, al.sentence_indices, toks, 1, gold_labels(toks, ref), list(ref)))
    if config.order == "document":
        out.sort(key=lambda i: i.sentence_indices[0])
    return out


def oracle_summarize(
    doc: Document,
    mode: str,
    selector: SelectorModel | None,
    fuser: FusionModel | None,
    config: RunConfig,
) -> SummaryOutput:
    if mode not in ORACLE_MODES:
        raise ValueError(f"unknown oracle mode {mode!r}; expected one of {ORACLE_MODES}")
    instances = gt_instances(doc, config)
    if "sys_tag" in mode:
        if selector is None:
            raise ValueError(f"mode {mode} needs a selector")
        probs = [tp for _, tp in predict(instances, selector)]
        masks = apply_strategy(probs, config.strategy, config.strategy_param)
        strategy = config.strategy
    else:
        probs = [np.asarray(i.real_highlights, dtype=float) for i in instances]
        masks = [HighlightMask(i.real_highlights, GOLD, 1.0) for i in instances]
        strategy = GOLD
    p_sents = [None] * len(instances)
    if mode.endswith("fusion"):
        if fuser is None:
            raise ValueError(f"mode {mode} needs a fusion model")
        masks = [_fallback(m, p) for m, p in zip(masks, probs)]
        return _fuse(instances, masks, p_sents, strategy, doc.id, fuser, config)
    return _extract(instances, masks, p_sents, strategy, doc.id)


@dataclass
class EvalResult:
    per_doc: dict[str, dict]
    recall: dict[str, float]
    precision: dict[str, float]
    f1: dict[str, float]

    def row(self) -> tuple[float, float, float]:
        return tuple(self.f1[m] for m in METRICS)


def evaluate(docs: Sequence[Document], outputs: Sequence[SummaryOutput]) -> EvalResult:
    """Corpus means of per-document ROUGE, in percentage points."""
    by_id = {o.doc_id: o for o in outputs}
    doc_ids = {d.id for d in docs}
    unmatched = sorted(doc_ids ^ set(by_id))
    if unmatched:
        raise DataError(f"outputs and documents do not match; unmatched ids: {', '.join(unmatched)}")
    per_doc = {}
    for d in docs:
        if not d.summary:
            raise DataError(f"document {d.id!r} has no reference summary")
        per_doc[d.id] = rouge_summary(by_id[d.id].sentences, d.summary)
    n = max(len(docs), 1)
    stats = {}
    for stat in ("recall", "precision", "f1"):
        stats[stat] = {m: 100.0 * sum(getattr(s[m], stat) for s in per_doc.values()) / n for m in METRICS}
    return EvalResult(per_doc, stats["recall"], stats["precision"], stats["f1"])


def render_table(results: dict[str, EvalResult]) -> str:
    """Aligned text table of F1 scores, one row per named system."""
    name_w = max([len("System")] + [len(n) for n in results])
    lines = [f"{'System':<{name_w}}  {'R-1':>6}  {'R-2':>6}  {'R-L':>6}"]
    for name, res in results.items():
        r1, r2, rl = res.row()
        lines.append(f"{name:<{name_w}}  {r1:6.2f}  {r2:6.2f}  {rl:6.2f}")
    return "\n".join(lines)


def write_eval_csv(results: dict[str, EvalResult], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["system", "metric", "recall", "precision", "f1"])
        for name, res in results.items():
            for m in METRICS:
                w.writerow([name, m, f"{res.recall[m]:.6f}", f"{res.precision[m]:.6f}", f"{res.f1[m]:.6f}"])


SWEEP_HEADER = ["parameter", "strategy", "scope", "highlight_rate", "R-1", "R-2", "R-L"]


def sweep_thresholds(
    docs: Sequence[Document],
    selector: SelectorModel,
    fuser: FusionModel | None,
    grid: Sequence[float],
    strategies: Sequence[str],
    config: RunConfig,
) -> list[dict]:
    """Highlight rate and corpus ROUGE per (strategy, grid value).

    Without a fusion model the highlighted tokens are extracted directly.
    """
    if not grid:
        raise ValueError("grid must be nonempty")
    selected = {d.id: select(d, selector, config) for d in docs}
    rows = []
    for strategy in strategies:
        for value in grid:
            outputs, all_masks = [], []
            for d in docs:
                instances, p_sents, probs = selected[d.id]
                masks = apply_strategy(probs, strategy, value)
                all_masks += masks
                if fuser is None:
                    outputs.append(_extract(instances, masks, p_sents, strategy, d.id))
                else:
                    fixed = [_fallback(m, p) for m, p in zip(masks, probs)]
                    outputs.append(_fuse(instances, fixed, p_sents, strategy, d.id, fuser, config))
            res = evaluate(docs, outputs)
            r1, r2, rl = res.row()
            rows.append({
                "parameter": value,
                "strategy": "threshold" if strategy == THRESHOLD else "proportional",
                "scope": {THRESHOLD: "-", PROP_INSTANCE: "instance", PROP_DOCUMENT: "document"}[strategy],
                "highlight_rate": highlight_rate(all_masks) if all_masks else 0.0,
                "R-1": r1, "R-2": r2, "R-L": rl,
            })
    return rows


def write_sweep_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SWEEP_HEADER)
        w.writeheader()
        for row in rows:
            w.writerow({k: (f"{v:.6f}" if isinstance(v, float) else v) for k, v in row.items()})
