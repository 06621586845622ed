"""ROUGE-1/2/L scoring on surface tokens.

No stemming or stopword removal happens here; callers lemmatize first when
they want lemma matching.

Summary-level ROUGE-L follows the union-LCS formulation: for every reference
sentence ``r`` the positions of ``r`` hit by the LCS with each candidate
sentence are unioned, and each hit is counted only while unused copies of
that token remain on both sides::

    hits      = sum over r of |union_c LCS(r, c)|   (clipped by token counts)
    recall    = hits / total reference tokens
    precision = hits / total candidate tokens

ROUGE-1/2 at summary level score the concatenation of all sentences.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

Tokens = Sequence[str]


@dataclass(frozen=True)
class RougeScore:
    recall: float
    precision: float
    f1: float

    @classmethod
    def from_counts(cls, hits: float, ref_total: float, cand_total: float) -> "RougeScore":
        recall = hits / ref_total if ref_total > 0 else 0.0
        precision = hits / cand_total if cand_total > 0 else 0.0
        if recall + precision == 0:
            return cls(recall, precision, 0.0)
        return cls(recall, precision, 2 * recall * precision / (recall + precision))


ZERO = RougeScore(0.0, 0.0, 0.0)


def ngrams(tokens: Tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _concat_ngrams(sentences: Sequence[Tokens], n: int) -> Counter:
    return ngrams([t for s in sentences for t in s], n)


def _overlap(cand: Counter, ref: Counter) -> RougeScore:
    hits = sum((cand & ref).values())
    return RougeScore.from_counts(hits, sum(ref.values()), sum(cand.values()))


def rouge_n(candidate: Tokens, reference: Tokens, n: int) -> RougeScore:
    """Multiset-clipped n-gram overlap between two token sequences."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _overlap(ngrams(candidate, n), ngrams(reference, n))


def lcs_table(a: Tokens, b: Tokens) -> list[list[int]]:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i, x in enumerate(a, 1):
        row, prev = table[i], table[i - 1]
        for j, y in enumerate(b, 1):
            row[j] = prev[j - 1] + 1 if x == y else max(prev[j], row[j - 1])
    return table


def lcs_length(a: Tokens, b: Tokens) -> int:
    return lcs_table(a, b)[-1][-1]


def lcs_positions(a: Tokens, b: Tokens) -> list[int]:
    """Indices into ``a`` of one longest common subsequence with ``b``.

    Backtracking prefers dropping from ``a`` on ties, which fixes the
    choice when several LCSs exist.
    """
    table = lcs_table(a, b)
    i, j = len(a), len(b)
    hits = []
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1]:
            hits.append(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return hits[::-1]


def rouge_l(candidate: Tokens, reference: Tokens) -> RougeScore:
    if not candidate or not reference:
        return ZERO
    return RougeScore.from_counts(lcs_length(candidate, reference), len(reference), len(candidate))


def rouge_lsum(candidate_sentences: Sequence[Tokens], reference_sentences: Sequence[Tokens]) -> RougeScore:
    cand_total = sum(len(s) for s in candidate_sentences)
    ref_total = sum(len(s) for s in reference_sentences)
    if cand_total == 0 or ref_total == 0:
        return ZERO
    cand_left = Counter(t for s in candidate_sentences for t in s)
    ref_left = Counter(t for s in reference_sentences for t in s)
    hits = 0
    for ref in reference_sentences:
        union = set()
        for cand in candidate_sentences:
            union.update(lcs_positions(ref, cand))
        for pos in sorted(union):
            tok = ref[pos]
            if cand_left[tok] > 0 and ref_left[tok] > 0:
                hits += 1
                cand_left[tok] -= 1
                ref_left[tok] -= 1
    return RougeScore.from_counts(hits, ref_total, cand_total)


METRICS = ("rouge-1", "rouge-2", "rouge-l")


def rouge_summary(candidate_sentences: Sequence[Tokens], reference_sentences: Sequence[Tokens]) -> dict[str, RougeScore]:
    return {
        "rouge-1": _overlap(_concat_ngrams(candidate_sentences, 1), _concat_ngrams(reference_sentences, 1)),
        "rouge-2": _overlap(_concat_ngrams(candidate_sentences, 2), _concat_ngrams(reference_sentences, 2)),
        "rouge-l": rouge_lsum(candidate_sentences, reference_sentences),
    }
