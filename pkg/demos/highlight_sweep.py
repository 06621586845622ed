"""
How much to highlight
=====================

The selector gives each word a probability. A threshold keeps every word
above it. A proportional budget keeps the top fraction of words, counted
per instance or per document. This sweep prints the highlight rate and
ROUGE of the extracted words at each setting.
"""

from cascadesum.config import RunConfig
from cascadesum.corpus import build_vocab
from cascadesum.oracle import build_instances
from cascadesum.pipeline import sweep_thresholds
from cascadesum.selector import SelectorConfig, train_selector
from cascadesum.toy import synthetic_corpus
from cascadesum.training import TrainConfig

docs = synthetic_corpus(n_docs=6, seed=8).docs
vocab = build_vocab(docs, 30_000)
selector, _ = train_selector(build_instances(docs, 2, seed=0), TrainConfig(epochs=40, batch_size=16),
                             vocab, SelectorConfig(len(vocab), width=64, ff=128))

grid = [0.05, 0.15, 0.3, 0.5, 0.7]
rows = sweep_thresholds(docs, selector, None, grid, ["threshold", "prop_instance", "prop_document"], RunConfig())

print("%-12s %-9s %5s  %5s  %6s %6s %6s" % ("strategy", "scope", "param", "rate", "R-1", "R-2", "R-L"))
for r in rows:
    print("%-12s %-9s %5.2f  %5.2f  %6.2f %6.2f %6.2f" % (
        r["strategy"], r["scope"], r["parameter"], r["highlight_rate"], r["R-1"], r["R-2"], r["R-L"]))

# the threshold rows: rate falls as the threshold rises
rates = [r["highlight_rate"] for r in rows if r["strategy"] == "threshold"]
assert rates == sorted(rates, reverse=True)
