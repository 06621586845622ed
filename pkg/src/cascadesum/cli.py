"""Command-line entry point.

Every command reads one config file (``--config``) plus ``--set KEY=VALUE``
overrides. Exit codes: 0 success, 1 usage/config error, 2 data error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import RunConfig, load_config
from .corpus import build_vocab, load_corpus
from .errors import CascadeError
from .fusion import FusionModel, train_fusion
from .oracle import build_instances, read_instances, write_instances
from .pipeline import (
    ORACLE_MODES,
    evaluate,
    extract_tag_summary,
    oracle_summarize,
    read_summaries,
    render_table,
    summarize,
    sweep_thresholds,
    write_eval_csv,
    write_summaries,
    write_sweep_csv,
    write_traces,
)
from .selector import SelectorModel, train_selector

log = logging.getLogger("cascadesum")


def cmd_build_oracle(cfg: RunConfig) -> None:
    cfg.require("corpus", "instances", exist=["corpus"])
    docs = load_corpus(cfg.corpus)
    instances = build_instances(docs, cfg.negative_ratio, cfg.seed, cfg.pair_margin, cfg.pair_window)
    write_instances(instances, cfg.instances)
    pos = sum(i.label for i in instances)
    print(f"wrote {len(instances)} instances ({pos} positive) to {cfg.instances}")


def _training_inputs(cfg: RunConfig):
    cfg.require("corpus", "instances", exist=["corpus", "instances"])
    vocab = build_vocab(load_corpus(cfg.corpus), cfg.vocab_size)
    return vocab, read_instances(cfg.instances)


def cmd_train_selector(cfg: RunConfig) -> None:
    cfg.require("selector_checkpoint")
    vocab, instances = _training_inputs(cfg)
    train = cfg.selector_train()
    if cfg.output:
        train.log_path = cfg.output
    model, history = train_selector(instances, train, vocab, cfg.selector_model(len(vocab)))
    model.save(cfg.selector_checkpoint)
    last = history[-1] if history else {}
    print(f"selector saved to {cfg.selector_checkpoint}; last epoch {json.dumps(last)}")


def cmd_train_fusion(cfg: RunConfig) -> None:
    cfg.require("fusion_checkpoint")
    vocab, instances = _training_inputs(cfg)
    train = cfg.fusion_train()
    if cfg.output:
        train.log_path = cfg.output
    model, history = train_fusion(instances, train, vocab, cfg.fusion_model(len(vocab)))
    model.save(cfg.fusion_checkpoint)
    last = history[-1] if history else {}
    print(f"fusion model saved to {cfg.fusion_checkpoint}; last epoch {json.dumps(last)}")


def cmd_summarize(cfg: RunConfig) -> None:
    cfg.require("corpus", "selector_checkpoint", "fusion_checkpoint", "summaries",
                exist=["corpus", "selector_checkpoint", "fusion_checkpoint"])
    docs = load_corpus(cfg.corpus)
    selector = SelectorModel.load(cfg.selector_checkpoint)
    fuser = FusionModel.load(cfg.fusion_checkpoint)
    outputs = [summarize(d, selector, fuser, cfg) for d in docs]
    write_summaries(outputs, cfg.summaries)
    if cfg.trace:
        write_traces(outputs, cfg.trace)
    print(f"wrote {len(outputs)} summaries to {cfg.summaries}")


def cmd_extract_tag(cfg: RunConfig) -> None:
    cfg.require("corpus", "selector_checkpoint", "summaries", exist=["corpus", "selector_checkpoint"])
    docs = load_corpus(cfg.corpus)
    selector = SelectorModel.load(cfg.selector_checkpoint)
    outputs = [extract_tag_summary(d, selector, cfg) for d in docs]
    write_summaries(outputs, cfg.summaries)
    print(f"wrote {len(outputs)} summaries to {cfg.summaries}")


def cmd_oracle_run(cfg: RunConfig) -> None:
    cfg.require("corpus", "summaries", exist=["corpus"])
    if cfg.oracle_mode not in ORACLE_MODES:
        raise CascadeError(f"oracle_mode must be one of {', '.join(ORACLE_MODES)}")
    docs = load_corpus(cfg.corpus)
    selector = fuser = None
    if "sys_tag" in cfg.oracle_mode:
        cfg.require("selector_checkpoint", exist=["selector_checkpoint"])
        selector = SelectorModel.load(cfg.selector_checkpoint)
    if cfg.oracle_mode.endswith("fusion"):
        cfg.require("fusion_checkpoint", exist=["fusion_checkpoint"])
        fuser = FusionModel.load(cfg.fusion_checkpoint)
    outputs = [oracle_summarize(d, cfg.oracle_mode, selector, fuser, cfg) for d in docs]
    write_summaries(outputs, cfg.summaries)
    print(f"wrote {len(outputs)} summaries to {cfg.summaries}")


def cmd_evaluate(cfg: RunConfig) -> None:
    cfg.require("corpus", "summaries", exist=["corpus", "summaries"])
    result = evaluate(load_corpus(cfg.corpus), read_summaries(cfg.summaries))
    table = {cfg.summaries: result}
    print(render_table(table))
    if cfg.output:
        write_eval_csv(table, cfg.output)


def cmd_sweep(cfg: RunConfig) -> None:
    cfg.require("corpus", "selector_checkpoint", "output", exist=["corpus", "selector_checkpoint"])
    docs = load_corpus(cfg.corpus)
    selector = SelectorModel.load(cfg.selector_checkpoint)
    fuser = FusionModel.load(cfg.fusion_checkpoint) if cfg.fusion_checkpoint else None
    rows = sweep_thresholds(docs, selector, fuser, cfg.grid, cfg.sweep_strategies, cfg)
    write_sweep_csv(rows, cfg.output)
    print(f"wrote {len(rows)} sweep rows to {cfg.output}")


COMMANDS = {
    "build-oracle": (cmd_build_oracle, "align references and write training instances"),
    "train-selector": (cmd_train_selector, "train the instance scorer / token tagger"),
    "train-fusion": (cmd_train_fusion, "train the pointer-generator fusion model"),
    "summarize": (cmd_summarize, "run the full cascade"),
    "extract-tag": (cmd_extract_tag, "cascade without fusion: emit highlighted tokens"),
    "oracle-run": (cmd_oracle_run, "ground-truth sentence / tag variants"),
    "evaluate": (cmd_evaluate, "ROUGE table for a summaries file"),
    "sweep": (cmd_sweep, "highlight-amount sweep to CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascadesum", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-c", "--config", help="flat key = value config file")
        p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set)
        COMMANDS[args.command][0](cfg)
    except CascadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
