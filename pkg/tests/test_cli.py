import csv
import json

import pytest

from cascadesum.cli import COMMANDS, main
from cascadesum.config import RunConfig, dump_config, load_config, read_config_text
from cascadesum.corpus import dump_corpus
from cascadesum.errors import ConfigError
from cascadesum.toy import synthetic_corpus

TINY = """
# tiny models so the command chain runs in seconds
width = 16
layers = 1
heads = 2
ff = 16
max_seq_len = 64
selector_epochs = 3
selector_batch_size = 4
fusion_emb = 8
fusion_hidden = 8
fusion_attn = 8
fusion_epochs = 3
fusion_batch_size = 4
beam_width = 2
max_len = 8
grid = 0.0, 0.5
"""


class TestConfig:
    def test_defaults(self):
        c = RunConfig()
        assert (c.k, c.strategy_param, c.lam, c.beam_width, c.max_len, c.negative_ratio) == (4, 0.15, 0.2, 4, 40, 1)

    def test_parse_types(self):
        c = read_config_text("k = 2\ncoverage = yes\ngrid = 0.1,0.2\nclip_norm = none\norder = document  # trailing")
        assert c.k == 2 and c.coverage is True and c.grid == [0.1, 0.2] and c.clip_norm is None
        assert c.order == "document"

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown config key: colour"):
            read_config_text("colour = red")

    def test_bad_value(self):
        with pytest.raises(ConfigError, match="k"):
            read_config_text("k = four")

    def test_missing_equals(self):
        with pytest.raises(ConfigError, match="line 1"):
            read_config_text("k 4")

    def test_overrides_win(self, tmp_path):
        (tmp_path / "c.cfg").write_text("k = 2\nseed = 5\n")
        c = load_config(tmp_path / "c.cfg", ["k=3"])
        assert (c.k, c.seed) == (3, 5)

    def test_dump_round_trip(self):
        c = read_config_text("k = 2\nstrategy = prop_document\ncorpus = x.jsonl\nclip_norm = 5.0")
        assert read_config_text(dump_config(c)) == c

    def test_validation(self):
        with pytest.raises(ConfigError):
            RunConfig(k=0)
        with pytest.raises(ConfigError):
            read_config_text("lam = 2")


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    dump_corpus(synthetic_corpus(n_docs=3, seed=2).docs, d / "corpus.jsonl")
    (d / "run.cfg").write_text(TINY + f"""
corpus = {d / 'corpus.jsonl'}
instances = {d / 'inst.jsonl'}
selector_checkpoint = {d / 'sel.ckpt'}
fusion_checkpoint = {d / 'fus.ckpt'}
summaries = {d / 'out.jsonl'}
""")
    return d


def run(workdir, command, *sets):
    args = [command, "-c", str(workdir / "run.cfg")]
    for s in sets:
        args += ["-s", s]
    return main(args)


class TestCommandChain:
    def test_full_chain(self, workdir, capsys):
        assert run(workdir, "build-oracle") == 0
        assert (workdir / "inst.jsonl").exists()
        assert run(workdir, "train-selector", f"output={workdir / 'sel.log'}") == 0
        assert run(workdir, "train-fusion") == 0
        log = [json.loads(line) for line in (workdir / "sel.log").read_text().splitlines()]
        assert [r["epoch"] for r in log] == [1, 2, 3] and {"loss", "accuracy"} <= set(log[0])

        assert run(workdir, "summarize", f"trace={workdir / 'trace.jsonl'}") == 0
        assert (workdir / "trace.jsonl").exists()
        assert run(workdir, "evaluate", f"output={workdir / 'eval.csv'}") == 0
        out = capsys.readouterr().out
        assert "R-1" in out and (workdir / "eval.csv").exists()

        assert run(workdir, "extract-tag", f"summaries={workdir / 'tag.jsonl'}") == 0
        for mode in ("gt_sent_gt_tag", "gt_sent_sys_tag", "gt_sent_gt_tag_fusion"):
            assert run(workdir, "oracle-run", f"oracle_mode={mode}", f"summaries={workdir / mode}.jsonl") == 0
        assert run(workdir, "evaluate", f"summaries={workdir / 'gt_sent_gt_tag.jsonl'}") == 0

        assert run(workdir, "sweep", f"output={workdir / 'sweep.csv'}") == 0
        rows = list(csv.DictReader(open(workdir / "sweep.csv")))
        assert len(rows) == 2 * 3 and float(rows[0]["highlight_rate"]) == 1.0

    def test_all_commands_registered(self):
        assert set(COMMANDS) == {"build-oracle", "train-selector", "train-fusion", "summarize",
                                 "extract-tag", "oracle-run", "evaluate", "sweep"}


class TestExitCodes:
    def test_unknown_key_is_usage_error(self, workdir, capsys):
        assert run(workdir, "build-oracle", "colour=red") == 1
        assert "unknown config key" in capsys.readouterr().err

    def test_bad_command(self):
        assert main(["fly"]) == 1

    def test_help(self):
        assert main(["--help"]) == 0

    def test_missing_required_path(self, tmp_path):
        assert main(["build-oracle", "-s", f"corpus={tmp_path / 'none.jsonl'}", "-s", "instances=x"]) == 1

    def test_malformed_corpus_is_data_error(self, tmp_path, capsys):
        (tmp_path / "bad.jsonl").write_text('{"id": "a"}\n')
        code = main(["build-oracle", "-s", f"corpus={tmp_path / 'bad.jsonl'}", "-s", f"instances={tmp_path / 'i'}"])
        assert code == 2 and "missing field: document at line 1" in capsys.readouterr().err

    def test_id_mismatch_is_data_error(self, workdir, tmp_path):
        (tmp_path / "s.jsonl").write_text('{"doc_id": "nobody", "sentences": [], "provenance": []}\n')
        assert run(workdir, "evaluate", f"summaries={tmp_path / 's.jsonl'}") == 2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_is_numeric_error(self, workdir, capsys):
        if not (workdir / "inst.jsonl").exists():
            assert run(workdir, "build-oracle") == 0
        code = run(workdir, "train-selector", "selector_lr=1e308", "selector_epochs=50",
                   f"selector_checkpoint={workdir / 'nan.ckpt'}")
        assert code == 3 and "epoch" in capsys.readouterr().err
