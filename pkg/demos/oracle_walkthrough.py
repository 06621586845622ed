"""
From reference sentences to training instances
==============================================

Each reference sentence is matched to the one or two document sentences
it was most likely built from. The words it shares with them become the
highlight labels the selector learns to predict.
"""

from cascadesum.corpus import Document, tokenize
from cascadesum.oracle import align_summary_sentence, build_instances, make_highlight_labels, smooth_labels

doc = Document(
    "duke",
    [tokenize(s) for s in [
        "A Duke student has admitted to hanging a noose from a tree.",
        "The university said the student was identified by campus police.",
        "Classes continued as normal on Wednesday.",
        "The student admitted to placing the noose early Wednesday morning.",
    ]],
    [tokenize("A Duke student admitted to placing the noose on the tree early Wednesday.")],
)

# alignment: best singleton, or a pair if it wins by a clear margin
ref = doc.summary[0]
al = align_summary_sentence(doc, ref)
print("aligned sentences:", al.sentence_indices, "score %.3f" % al.score)

# highlight labels: lemma overlap with the reference, punctuation excluded
tokens = doc.sentences[al.sentence_indices[0]]
raw = make_highlight_labels(tokens, ref)
print(" ".join(t.upper() if b else t for t, b in zip(tokens, raw)))

# smoothing fills one-word gaps, then drops stopwords left on their own
print(smooth_labels([0, 1, 0, 1, 1], ["the", "president", "of", "the", "union"]))
print(smooth_labels([0, 0, 1, 0], ["he", "said", "that", "today"]))

# one positive per reference sentence, plus sampled negatives
for inst in build_instances([doc], negative_ratio=2, seed=0):
    print(inst.label, inst.sentence_indices, " ".join(inst.tokens)[:60])
