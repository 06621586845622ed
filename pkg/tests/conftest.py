import pytest

from cascadesum.config import RunConfig
from cascadesum.corpus import build_vocab
from cascadesum.fusion import FusionConfig, train_fusion
from cascadesum.oracle import build_instances
from cascadesum.selector import SelectorConfig, train_selector
from cascadesum.toy import synthetic_corpus
from cascadesum.training import TrainConfig


@pytest.fixture(scope="session")
def toy():
    return synthetic_corpus(n_docs=8, seed=11)


@pytest.fixture(scope="session")
def small():
    """A 4-document corpus with models overfit to it, shared across modules."""
    corpus = synthetic_corpus(n_docs=4, seed=21)
    vocab = build_vocab(corpus.docs, 10_000)
    instances = build_instances(corpus.docs, negative_ratio=2, seed=0)
    selector, sel_log = train_selector(
        instances, TrainConfig(epochs=60, batch_size=8, lr=2e-3),
        vocab, SelectorConfig(len(vocab), width=32, layers=1, heads=2, ff=64, max_len=64))
    fuser, fus_log = train_fusion(
        instances, TrainConfig(epochs=120, batch_size=5, lr=1e-2),
        vocab, FusionConfig(len(vocab), emb=24, hidden=24, attn=24))
    config = RunConfig(k=4, beam_width=2, max_len=30)
    return {"corpus": corpus, "vocab": vocab, "instances": instances, "selector": selector,
            "fuser": fuser, "sel_log": sel_log, "fus_log": fus_log, "config": config}


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
