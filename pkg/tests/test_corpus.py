import json

import pytest
from hypothesis import given, settings, strategies as st

from cascadesum.corpus import (
    RESERVED,
    Document,
    Vocab,
    _lemma_table,
    build_vocab,
    dump_corpus,
    is_stopword,
    lemmatize,
    load_corpus,
    stopwords,
    tokenize,
)
from cascadesum.errors import DataError


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


class TestTokenize:
    def test_rule_application(self):
        assert tokenize("A Duke student.") == ["a", "duke", "student", "."]

    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("   \t ") == []

    def test_golden_abbreviation(self):
        # frozen from one run of the rule set
        assert tokenize("U.S. officials said") == ["u", ".", "s", ".", "officials", "said"]
        assert tokenize("U.S. officials said") == tokenize("U.S. officials said")

    def test_whitespace_collapsed(self):
        assert tokenize("two   words\n") == ["two", "words"]

    @given(st.text(max_size=60))
    def test_retokenize_is_stable(self, text):
        toks = tokenize(text)
        assert tokenize(" ".join(toks)) == toks
        assert all(t == t.lower() for t in toks)


class TestLemmatize:
    def test_plural(self):
        assert lemmatize("students") == "student"

    def test_irregular_table(self):
        assert _lemma_table()["said"] == "say"
        assert lemmatize("said") == "say"

    def test_fixed_point(self):
        assert lemmatize("duke") == "duke"

    @pytest.mark.parametrize("word,lemma", [
        ("admitted", "admit"), ("stopped", "stop"), ("hoping", "hope"), ("hopping", "hop"),
        ("studies", "study"), ("walked", "walk"), ("called", "call"), ("boxes", "box"),
        ("news", "news"), ("was", "be"), ("children", "child"),
    ])
    def test_suffix_rules(self, word, lemma):
        assert lemmatize(word) == lemma

    def test_table_lemmas_are_fixed_points(self):
        for lemma in set(_lemma_table().values()):
            assert lemmatize(lemma) == lemma, lemma

    @given(st.text(alphabet="abcdefghilmnoprstuy", min_size=1, max_size=14))
    @settings(max_examples=500)
    def test_idempotent(self, word):
        once = lemmatize(word)
        assert lemmatize(once) == once


class TestStopwords:
    @pytest.mark.parametrize("tok,expected", [("the", True), ("student", False), ("of", True)])
    def test_membership(self, tok, expected):
        assert is_stopword(tok) is expected

    def test_list_size(self):
        assert 140 <= len(stopwords()) <= 170


class TestLoadCorpus:
    def test_single_record(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps({"id": "d1", "document": ["A b."], "summary": ["B."]})])
        docs = load_corpus(p)
        assert len(docs) == 1 and docs[0].id == "d1"
        assert docs[0].sentences == [["a", "b", "."]]
        assert docs[0].summary == [["b", "."]]

    def test_empty_file(self, tmp_path):
        assert load_corpus(write_lines(tmp_path / "c.jsonl", [])) == []

    def test_missing_document_field(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [
            json.dumps({"id": "ok", "document": ["x"]}),
            json.dumps({"id": "bad"}),
        ])
        with pytest.raises(DataError, match="missing field: document at line 2"):
            load_corpus(p)

    def test_malformed_line(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps({"id": "ok", "document": ["x"]}), "{not json"])
        with pytest.raises(DataError, match="line 2"):
            load_corpus(p)

    def test_summary_optional(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps({"id": "d", "document": ["x y"]})])
        assert load_corpus(p)[0].summary == []

    def test_empty_sentence_rejected(self, tmp_path):
        p = write_lines(tmp_path / "c.jsonl", [json.dumps({"id": "d", "document": ["x", "  "]})])
        with pytest.raises(DataError, match="sentence 1"):
            load_corpus(p)

    def test_order_preserved(self, tmp_path):
        lines = [json.dumps({"id": f"d{i}", "document": ["w"]}) for i in (3, 1, 2)]
        assert [d.id for d in load_corpus(write_lines(tmp_path / "c.jsonl", lines))] == ["d3", "d1", "d2"]

    def test_round_trip(self, tmp_path, toy):
        path = tmp_path / "rt.jsonl"
        dump_corpus(toy.docs, path)
        again = load_corpus(path)
        assert [(d.id, d.sentences, d.summary) for d in again] == [(d.id, d.sentences, d.summary) for d in toy.docs]

    def test_round_trip_punctuation(self, tmp_path):
        doc = Document("p", [tokenize("Mr. Smith's dog -- barked, loudly!")], [tokenize("dog's bark.")])
        dump_corpus([doc], tmp_path / "p.jsonl")
        assert load_corpus(tmp_path / "p.jsonl")[0] == doc


class TestVocab:
    def test_frequency_order(self):
        v = build_vocab([Document("d", [["a", "a", "b"]])], 10)
        assert v.id("a") < v.id("b")
        assert "a" in v and "b" in v

    def test_truncation(self):
        v = build_vocab([Document("d", [["a", "a", "b"]])], len(RESERVED) + 1)
        assert "a" in v and "b" not in v
        assert len(v) == len(RESERVED) + 1

    def test_empty_corpus(self):
        v = build_vocab([], 10)
        assert v.to_list() == list(RESERVED)

    def test_tie_broken_by_first_occurrence(self):
        v = build_vocab([Document("d", [["z", "y", "x"]])], 10)
        assert v.id("z") < v.id("y") < v.id("x")

    def test_max_size_must_exceed_reserved(self):
        with pytest.raises(ValueError):
            build_vocab([], len(RESERVED))

    def test_reserved_fixed_and_unique(self, toy):
        v = build_vocab(toy.docs, 50)
        assert len(v) <= 50
        assert v.to_list()[: len(RESERVED)] == list(RESERVED)
        assert len(set(v.to_list())) == len(v)
        assert Vocab.from_list(v.to_list()) == v

    def test_unknown_maps_to_unk(self):
        v = Vocab(["a"])
        assert v.encode(["a", "zzz"]) == [v.id("a"), 1]
