"""Corpus ingestion: tokenization, lemmatization, stopwords and vocabulary.

Documents arrive pre-split into sentences (one JSON record per line); this
module never performs sentence boundary detection.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .errors import DataError

PAD, UNK, BOS, EOS, CLS, SEP = "<pad>", "<unk>", "<s>", "</s>", "[CLS]", "[SEP]"
RESERVED = (PAD, UNK, BOS, EOS, CLS, SEP)
PAD_ID, UNK_ID, BOS_ID, EOS_ID, CLS_ID, SEP_ID = range(len(RESERVED))

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_VOWELS = set("aeiouy")
_UNDOUBLE = set("bdgmnprt")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it into word and punctuation tokens.

    Every non-word, non-space character becomes its own token, so the
    output is stable under ``tokenize(" ".join(tokens))``.
    """
    return _TOKEN_RE.findall(text.lower())


def is_punct(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


@lru_cache(maxsize=1)
def _lemma_table() -> dict[str, str]:
    table = {}
    text = resources.files("cascadesum.data").joinpath("lemmas.tsv").read_text("utf-8")
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        form, lemma = line.split("\t")
        table[form] = lemma
    return table


@lru_cache(maxsize=1)
def stopwords() -> frozenset[str]:
    text = resources.files("cascadesum.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip() and not w.startswith("#"))


STOPWORDS_VERSION = 1
LEMMA_TABLE_VERSION = 1


def is_stopword(token: str) -> bool:
    return token in stopwords()


def _valid_stem(stem: str) -> bool:
    return len(stem) >= 3 and any(ch in _VOWELS for ch in stem)


def _restore(stem: str) -> str:
    # stopp -> stop, hop -> hope, walk -> walk
    if stem[-1] == stem[-2] and stem[-1] in _UNDOUBLE:
        return stem[:-1]
    groups = len(re.findall(r"[aeiou]+", stem))
    if (
        groups == 1
        and stem[-1] not in _VOWELS | set("wx")
        and stem[-2] in _VOWELS
        and stem[-3] not in _VOWELS
    ):
        return stem + "e"
    return stem


def _lemma_step(word: str) -> str:
    table = _lemma_table()
    if word in table:
        return table[word]
    if len(word) < 4 or not word.isalpha():
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(("sses", "shes", "ches", "xes", "zes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is")):
        return word[:-1]
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("eed"):
        return word
    if word.endswith("ed") and _valid_stem(word[:-2]):
        return _restore(word[:-2])
    if word.endswith("ing") and _valid_stem(word[:-3]):
        return _restore(word[:-3])
    return word


@lru_cache(maxsize=1 << 16)
def lemmatize(token: str) -> str:
    """Map ``token`` to its lemma via the bundled table, then suffix rules.

    The rules are iterated to a fixed point, which makes the function
    idempotent by construction.
    """
    current = token
    for _ in range(8):
        nxt = _lemma_step(current)
        if nxt == current:
            return current
        current = nxt
    return current


@dataclass
class Document:
    id: str
    sentences: list[list[str]]
    summary: list[list[str]] = field(default_factory=list)

    def __post_init__(self):
        if not self.id:
            raise DataError("document id must be nonempty")
        for i, sent in enumerate(self.sentences):
            if not sent:
                raise DataError(f"document {self.id!r}: sentence {i} is empty after tokenization")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "document": [" ".join(s) for s in self.sentences],
            "summary": [" ".join(s) for s in self.summary],
        }


def parse_record(record: dict, lineno: int | None = None) -> Document:
    where = f" at line {lineno}" if lineno is not None else ""
    if not isinstance(record, dict):
        raise DataError(f"record is not an object{where}")
    for key in ("id", "document"):
        if key not in record:
            raise DataError(f"missing field: {key}{where}")
    sentences = record["document"]
    summary = record.get("summary", [])
    if not isinstance(sentences, list) or not isinstance(summary, list):
        raise DataError(f"document and summary must be lists of strings{where}")
    try:
        return Document(
            id=str(record["id"]),
            sentences=[tokenize(s) for s in sentences],
            summary=[t for t in (tokenize(s) for s in summary) if t],
        )
    except DataError as exc:
        raise DataError(f"{exc}{where}") from None


def load_corpus(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed JSON at line {lineno}: {exc.msg}") from None
            docs.append(parse_record(record, lineno))
    return docs


def dump_corpus(docs: Iterable[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(doc.to_record(), ensure_ascii=False) + "\n")


class Vocab:
    """Token inventory shared by the selector and fusion models.

    Reserved ids are fixed: 0 pad, 1 unk, 2 bos, 3 eos, 4 cls, 5 sep.
    """

    def __init__(self, tokens: Sequence[str] = ()):
        self.itos: list[str] = list(RESERVED)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for tok in tokens:
            if tok in self.stoi:
                continue
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    def __len__(self):
        return len(self.itos)

    def __contains__(self, token):
        return token in self.stoi

    def id(self, token: str) -> int:
        return self.stoi.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.itos[i] for i in ids]

    def to_list(self) -> list[str]:
        return list(self.itos)

    @classmethod
    def from_list(cls, tokens: Sequence[str]) -> "Vocab":
        if tuple(tokens[: len(RESERVED)]) != RESERVED:
            raise DataError("vocabulary does not start with the reserved tokens")
        return cls(tokens[len(RESERVED):])

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.itos == other.itos


def build_vocab(docs: Iterable[Document], max_size: int) -> Vocab:
    if max_size <= len(RESERVED):
        raise ValueError(f"max_size must exceed the {len(RESERVED)} reserved tokens")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}
    for doc in docs:
        for sent in doc.sentences + doc.summary:
            for tok in sent:
                counts[tok] += 1
                first_seen.setdefault(tok, len(first_seen))
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    ranked = [t for t in ranked if t not in RESERVED]
    return Vocab(ranked[: max_size - len(RESERVED)])
