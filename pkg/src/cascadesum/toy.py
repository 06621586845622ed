"""Synthetic corpora with planted sentence provenance.

Each reference sentence is built either by compressing one document
sentence (dropping some words) or by joining the head of one sentence with
the tail of another. Content words never repeat within a document, so the
planted indices are the unique best alignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .corpus import Document, is_stopword, lemmatize

_ONSETS = "b d f g k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()
_FILLERS = ["the", "of", "and", "to", "in"]


def lexicon(size: int) -> list[str]:
    """Deterministic pseudo-words that are their own lemma and not stopwords."""
    words = []
    for a, b, c, d in product(_ONSETS, _VOWELS, _ONSETS, _VOWELS):
        w = a + b + c + d
        if lemmatize(w) == w and not is_stopword(w):
            words.append(w)
        if len(words) == size:
            break
    return words


@dataclass
class ToyCorpus:
    docs: list[Document]
    plants: list[list[tuple[int, ...]]]


def synthetic_corpus(
    n_docs: int = 20,
    seed: int = 0,
    sentences: tuple[int, int] = (5, 8),
    sentence_len: tuple[int, int] = (6, 9),
    refs: tuple[int, int] = (2, 3),
    pair_fraction: float = 0.5,
    filler_rate: float = 0.15,
    keep_rate: float = 0.75,
    lexicon_size: int = 2000,
) -> ToyCorpus:
    rng = np.random.default_rng(seed)
    words = lexicon(lexicon_size)
    docs, plants = [], []
    for d in range(n_docs):
        n_sent = int(rng.integers(sentences[0], sentences[1] + 1))
        lengths = rng.integers(sentence_len[0], sentence_len[1] + 1, size=n_sent)
        pool = rng.permutation(len(words))[: int(lengths.sum())]
        sents, start = [], 0
        for n in lengths:
            sent = []
            for w in pool[start:start + n]:
                if sent and rng.random() < filler_rate:
                    sent.append(_FILLERS[int(rng.integers(len(_FILLERS)))])
                sent.append(words[w])
            sents.append(sent)
            start += n

        n_refs = int(rng.integers(refs[0], refs[1] + 1))
        order = [int(i) for i in rng.permutation(n_sent)]
        summary, doc_plants = [], []
        for _ in range(n_refs):
            if len(order) >= 2 and rng.random() < pair_fraction:
                i, j = sorted((order.pop(), order.pop()))
                a, b = sents[i], sents[j]
                ref = a[: max(2, len(a) // 2)] + b[len(b) // 2:]
                doc_plants.append((i, j))
            elif order:
                i = order.pop()
                kept = [t for t in sents[i] if rng.random() < keep_rate]
                ref = kept if len(kept) >= 3 else sents[i][:3]
                doc_plants.append((i,))
            else:
                break
            summary.append(ref)
        docs.append(Document(f"toy-{seed}-{d:03d}", sents, summary))
        plants.append(doc_plants)
    return ToyCorpus(docs, plants)
