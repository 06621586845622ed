import random

import pytest
from hypothesis import given, strategies as st

from cascadesum.rouge import (
    METRICS,
    lcs_length,
    lcs_positions,
    rouge_l,
    rouge_lsum,
    rouge_n,
    rouge_summary,
)

from oracles import brute_lcs, brute_rouge_l, brute_rouge_n

words = st.lists(st.sampled_from("a b c d e".split()), max_size=7)


def triple(s):
    return (s.recall, s.precision, s.f1)


class TestRougeN:
    def test_identical(self):
        s = rouge_n(list("abc"), list("abc"), 1)
        assert triple(s) == (1.0, 1.0, 1.0)

    def test_disjoint(self):
        assert triple(rouge_n(["x"], ["y"], 1)) == (0.0, 0.0, 0.0)

    def test_clipping(self):
        s = rouge_n(["the", "the", "the"], ["the", "cat"], 1)
        assert s.recall == 0.5 and s.precision == pytest.approx(1 / 3)

    def test_bigram_shorter_than_n(self):
        assert triple(rouge_n(["a"], ["a"], 2)) == (0.0, 0.0, 0.0)

    def test_bad_n(self):
        with pytest.raises(ValueError):
            rouge_n(["a"], ["a"], 0)

    @given(words, words, st.integers(1, 3))
    def test_matches_brute_force(self, cand, ref, n):
        assert triple(rouge_n(cand, ref, n)) == pytest.approx(brute_rouge_n(cand, ref, n), abs=1e-12)

    @given(words, words)
    def test_f1_symmetric(self, a, b):
        assert rouge_n(a, b, 1).f1 == pytest.approx(rouge_n(b, a, 1).f1, abs=1e-12)


class TestRougeL:
    def test_known_lcs(self):
        assert lcs_length(list("abcbdab"), list("bdcaba")) == 4

    def test_empty(self):
        assert triple(rouge_l([], ["a"])) == (0.0, 0.0, 0.0)

    @given(words, words)
    def test_matches_brute_force(self, cand, ref):
        assert lcs_length(cand, ref) == brute_lcs(cand, ref)
        assert triple(rouge_l(cand, ref)) == pytest.approx(brute_rouge_l(cand, ref), abs=1e-12)

    @given(words, words)
    def test_positions_form_a_common_subsequence(self, a, b):
        pos = lcs_positions(a, b)
        assert pos == sorted(set(pos))
        assert len(pos) == lcs_length(a, b)
        sub = iter(b)
        assert all(any(a[p] == y for y in sub) for p in pos)


class TestSummaryLevel:
    def test_single_sentence_reduces_to_sentence_level(self):
        rng = random.Random(4)
        for _ in range(50):
            c = [rng.choice("abcd") for _ in range(rng.randint(1, 6))]
            r = [rng.choice("abcd") for _ in range(rng.randint(1, 6))]
            # with unique LCS the union is the LCS itself
            assert rouge_lsum([c], [r]).recall <= rouge_l(c, r).recall + 1e-12

    def test_union_lcs_hand_trace(self):
        # ref w1..w5, cand1 hits w1 w2, cand2 hits w3 w5: union covers 4 of 5
        ref = [["w1", "w2", "w3", "w4", "w5"]]
        cands = [["w1", "w2", "x"], ["w3", "y", "w5"]]
        s = rouge_lsum(cands, ref)
        assert s.recall == pytest.approx(4 / 5)
        assert s.precision == pytest.approx(4 / 6)

    def test_union_clipped_by_candidate_counts(self):
        # the candidate has one "a", so only one of the two reference "a"s can count
        ref = [["a", "b"], ["a", "c"]]
        cands = [["a"]]
        s = rouge_lsum(cands, ref)
        assert s.recall == pytest.approx(1 / 4)

    def test_concatenated_bigrams(self):
        out = rouge_summary([["a", "b"], ["c", "d"]], [["b", "c"]])
        # bigram b-c spans the sentence boundary of the candidate
        assert out["rouge-2"].recall == 1.0

    def test_identity(self):
        ref = [["the", "cat", "sat"], ["on", "the", "mat"]]
        out = rouge_summary(ref, ref)
        assert all(out[m].f1 == pytest.approx(1.0) for m in METRICS)

    def test_empty_candidate(self):
        out = rouge_summary([], [["a"]])
        assert all(out[m].f1 == 0.0 for m in METRICS)
