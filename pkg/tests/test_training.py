import json

import numpy as np
import pytest

from cascadesum.corpus import is_stopword, lemmatize
from cascadesum.errors import NumericError, TrainingDiverged
from cascadesum.toy import lexicon, synthetic_corpus
from cascadesum.training import EpochLog, TrainConfig, check_finite, checkpoint_path, minibatches


def test_minibatches_partition_indices():
    batches = minibatches(10, 3, np.random.default_rng(0))
    assert [len(b) for b in batches] == [3, 3, 3, 1]
    assert sorted(np.concatenate(batches).tolist()) == list(range(10))


def test_check_finite_reports_position():
    check_finite(1.0, 1, 0)
    with pytest.raises(TrainingDiverged) as info:
        check_finite(float("nan"), 4, 7)
    assert isinstance(info.value, NumericError) and "epoch 4" in str(info.value) and "step 7" in str(info.value)


def test_epoch_log_jsonl(tmp_path):
    log = EpochLog(tmp_path / "sub" / "log.jsonl")
    log.add(epoch=1, loss=0.5)
    log.add(epoch=2, loss=0.25)
    lines = (tmp_path / "sub" / "log.jsonl").read_text().splitlines()
    assert [json.loads(x)["epoch"] for x in lines] == [1, 2] and len(log.records) == 2


def test_checkpoint_path(tmp_path):
    assert checkpoint_path(TrainConfig(), "sel", 1) is None
    p = checkpoint_path(TrainConfig(checkpoint_dir=str(tmp_path / "ck")), "sel", 12)
    assert p.name == "sel-epoch012.ckpt" and p.parent.is_dir()


@pytest.mark.parametrize("kw", [{"loss_form": "other"}, {"batch_size": 0}, {"lam": -0.1}])
def test_train_config_validation(kw):
    with pytest.raises(ValueError):
        TrainConfig(**kw)


class TestToy:
    def test_lexicon_words_are_plain_content_words(self):
        words = lexicon(300)
        assert len(set(words)) == 300
        assert all(lemmatize(w) == w and not is_stopword(w) for w in words)

    def test_reproducible(self):
        a, b = synthetic_corpus(5, seed=3), synthetic_corpus(5, seed=3)
        assert a == b
        assert a != synthetic_corpus(5, seed=4)

    def test_plants_align_with_summaries(self):
        toy = synthetic_corpus(10, seed=1)
        for doc, plants in zip(toy.docs, toy.plants):
            assert len(plants) == len(doc.summary)
            used = [i for p in plants for i in p]
            assert len(used) == len(set(used))
            for p, ref in zip(plants, doc.summary):
                src = {t for i in p for t in doc.sentences[i]}
                assert set(ref) <= src
