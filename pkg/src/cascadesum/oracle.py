"""Training-instance construction from (document, reference summary) pairs.

Every reference sentence is aligned to the singleton or pair of document
sentences that best covers it; the aligned sentences become a positive
instance whose tokens are labelled by lemma overlap with the reference.
Negatives are sampled from the remaining singletons and pairs.
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .corpus import SEP, Document, is_punct, is_stopword, lemmatize
from .errors import DataError
from .rouge import rouge_n

log = logging.getLogger(__name__)

PAIR_WINDOW = 30
PAIR_MARGIN = 0.02


@dataclass
class Instance:
    doc_id: str
    sentence_indices: tuple[int, ...]
    tokens: list[str]
    label: int
    highlight_labels: list[int]
    target: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.sentence_indices = tuple(self.sentence_indices)
        if not 1 <= len(self.sentence_indices) <= 2:
            raise DataError("an instance holds one or two sentences")
        if len(set(self.sentence_indices)) != len(self.sentence_indices):
            raise DataError("instance sentence indices must be distinct")
        if len(self.highlight_labels) != len(self.tokens):
            raise DataError("highlight labels must align with tokens")
        if self.label == 1 and not self.target:
            raise DataError("positive instance needs a target")

    @property
    def segments(self) -> list[list[str]]:
        """Tokens of each sentence, separator removed."""
        segs, cur = [], []
        for tok in self.tokens:
            if tok == SEP:
                segs.append(cur)
                cur = []
            else:
                cur.append(tok)
        segs.append(cur)
        return segs

    @property
    def real_tokens(self) -> list[str]:
        return [t for t in self.tokens if t != SEP]

    @property
    def real_highlights(self) -> list[int]:
        return [h for t, h in zip(self.tokens, self.highlight_labels) if t != SEP]

    def to_record(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "sent_idx": list(self.sentence_indices),
            "tokens": self.tokens,
            "label": self.label,
            "highlights": self.highlight_labels,
            "target": self.target,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Instance":
        return cls(rec["doc_id"], rec["sent_idx"], rec["tokens"], int(rec["label"]), rec["highlights"], rec["target"])


@dataclass(frozen=True)
class Alignment:
    sentence_indices: tuple[int, ...]
    score: float


def instance_tokens(doc: Document, indices: Sequence[int]) -> list[str]:
    tokens = list(doc.sentences[indices[0]])
    for i in indices[1:]:
        tokens += [SEP] + doc.sentences[i]
    return tokens


def alignment_score(candidate_lemmas: Sequence[str], ref_lemmas: Sequence[str]) -> float:
    """Mean of ROUGE-1 and ROUGE-2 recall of the reference."""
    return 0.5 * (rouge_n(candidate_lemmas, ref_lemmas, 1).recall + rouge_n(candidate_lemmas, ref_lemmas, 2).recall)


def candidate_sets(n_sentences: int, window: int = PAIR_WINDOW) -> list[tuple[int, ...]]:
    singles = [(i,) for i in range(n_sentences)]
    pairs = list(combinations(range(min(n_sentences, window)), 2))
    return singles + pairs


def align_summary_sentence(
    doc: Document, ref_sentence: Sequence[str], margin: float = PAIR_MARGIN, window: int = PAIR_WINDOW
) -> Alignment:
    if not doc.sentences:
        raise DataError(f"document {doc.id!r} has no sentences")
    ref = [lemmatize(t) for t in ref_sentence]
    lemmas = [[lemmatize(t) for t in s] for s in doc.sentences]

    singles = [(alignment_score(lemmas[i], ref), i) for i in range(len(lemmas))]
    best_single = min(singles, key=lambda s: (-s[0], s[1]))
    result = Alignment((best_single[1],), best_single[0])

    best_pair = None
    for i, j in combinations(range(min(len(lemmas), window)), 2):
        score = alignment_score(lemmas[i] + lemmas[j], ref)
        key = (-score, i, i + j)
        if best_pair is None or key < best_pair[0]:
            best_pair = (key, Alignment((i, j), score))
    if best_pair is not None and best_pair[1].score > best_single[0] + margin:
        result = best_pair[1]
    return result


def make_highlight_labels(tokens: Sequence[str], ref_sentence: Sequence[str]) -> list[int]:
    ref = {lemmatize(t) for t in ref_sentence if not is_punct(t)}
    return [int(t != SEP and not is_punct(t) and lemmatize(t) in ref) for t in tokens]


def smooth_labels(mask: Sequence[int], tokens: Sequence[str]) -> list[int]:
    """Bridge single-word gaps between highlights, then drop isolated stopwords.

    Both passes read the mask as it stood before that pass; separator
    tokens are never highlighted and act as unhighlighted neighbours.
    """
    if len(mask) != len(tokens):
        raise ValueError(f"mask length {len(mask)} != token count {len(tokens)}")
    n = len(mask)
    src = list(mask)
    bridged = list(src)
    for i in range(1, n - 1):
        if src[i] == 0 and src[i - 1] == 1 and src[i + 1] == 1 and tokens[i] != SEP:
            bridged[i] = 1
    out = list(bridged)
    for i in range(n):
        left = bridged[i - 1] if i > 0 else 0
        right = bridged[i + 1] if i < n - 1 else 0
        if bridged[i] == 1 and left == 0 and right == 0 and is_stopword(tokens[i]):
            out[i] = 0
    return out


def gold_labels(tokens: Sequence[str], ref_sentence: Sequence[str]) -> list[int]:
    return smooth_labels(make_highlight_labels(tokens, ref_sentence), tokens)


def _doc_rng(seed: int, doc_id: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(doc_id.encode("utf-8"))])


def build_doc_instances(
    doc: Document, negative_ratio: int = 1, seed: int = 0, margin: float = PAIR_MARGIN, window: int = PAIR_WINDOW
) -> list[Instance]:
    if not doc.summary:
        raise DataError(f"document {doc.id!r} has no reference summary")
    aligned = [align_summary_sentence(doc, ref, margin, window) for ref in doc.summary]
    positives = []
    for ref, al in zip(doc.summary, aligned):
        toks = instance_tokens(doc, al.sentence_indices)
        positives.append(Instance(doc.id, al.sentence_indices, toks, 1, gold_labels(toks, ref), list(ref)))

    taken = {al.sentence_indices for al in aligned}
    pool = [c for c in candidate_sets(len(doc.sentences), window) if c not in taken]
    wanted = negative_ratio * len(positives)
    if wanted > len(pool):
        log.warning("document %s: only %d negatives available, %d requested", doc.id, len(pool), wanted)
    picks = []
    if wanted and pool:
        picks = _doc_rng(seed, doc.id).choice(len(pool), size=min(wanted, len(pool)), replace=False).tolist()

    out = []
    for k, pos in enumerate(positives):
        out.append(pos)
        for p in picks[k * negative_ratio:(k + 1) * negative_ratio]:
            toks = instance_tokens(doc, pool[p])
            out.append(Instance(doc.id, pool[p], toks, 0, [0] * len(toks), []))
    return out


def build_instances(
    docs: Iterable[Document], negative_ratio: int = 1, seed: int = 0, margin: float = PAIR_MARGIN, window: int = PAIR_WINDOW
) -> list[Instance]:
    """Positives (one per reference sentence) interleaved with their negatives.

    Output is ordered by document id, then reference-sentence index.
    """
    docs = sorted(docs, key=lambda d: d.id)
    out = []
    for doc in docs:
        out.extend(build_doc_instances(doc, negative_ratio, seed, margin, window))
    return out


def write_instances(instances: Iterable[Instance], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_record(), ensure_ascii=False) + "\n")


def read_instances(path) -> list[Instance]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(Instance.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise DataError(f"{path}: bad instance record at line {lineno}: {exc}") from None
    return out
