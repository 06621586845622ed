"""Run configuration read from a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored. Keys mirror the fields of
:class:`RunConfig`; an unknown key is an error. List-valued keys take
comma-separated values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable

from .errors import ConfigError
from .fusion import FusionConfig
from .selector import SelectorConfig
from .training import TrainConfig


@dataclass
class RunConfig:
    # paths
    corpus: str | None = None
    instances: str | None = None
    selector_checkpoint: str | None = None
    fusion_checkpoint: str | None = None
    summaries: str | None = None
    output: str | None = None
    checkpoint_dir: str | None = None
    trace: str | None = None
    # oracle construction
    negative_ratio: int = 1
    pair_margin: float = 0.02
    pair_window: int = 30
    vocab_size: int = 30000
    # cascade
    k: int = 4
    strategy: str = "threshold"
    strategy_param: float = 0.15
    disjoint: bool = True
    order: str = "rank"
    oracle_mode: str = "gt_sent_gt_tag"
    beam_width: int = 4
    max_len: int = 40
    seed: int = 0
    # selector model and training
    lam: float = 0.2
    loss_form: str = "convex"
    width: int = 128
    layers: int = 2
    heads: int = 4
    ff: int = 512
    max_seq_len: int = 128
    selector_epochs: int = 10
    selector_batch_size: int = 16
    selector_lr: float = 1e-3
    # fusion model and training
    fusion_emb: int = 64
    fusion_hidden: int = 64
    fusion_attn: int = 64
    coverage: bool = False
    fusion_epochs: int = 10
    fusion_batch_size: int = 16
    fusion_lr: float = 1e-3
    clip_norm: float | None = None
    # sweep
    grid: list[float] = field(default_factory=lambda: [0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5])
    sweep_strategies: list[str] = field(default_factory=lambda: ["threshold", "prop_instance", "prop_document"])

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.order not in ("rank", "document"):
            raise ConfigError(f"order must be 'rank' or 'document', got {self.order!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError("lam must lie in [0, 1]")

    def selector_train(self) -> TrainConfig:
        return TrainConfig(lam=self.lam, epochs=self.selector_epochs, batch_size=self.selector_batch_size,
                           seed=self.seed, lr=self.selector_lr, loss_form=self.loss_form,
                           clip_norm=self.clip_norm, checkpoint_dir=self.checkpoint_dir)

    def fusion_train(self) -> TrainConfig:
        return TrainConfig(lam=self.lam, epochs=self.fusion_epochs, batch_size=self.fusion_batch_size,
                           seed=self.seed, lr=self.fusion_lr, clip_norm=self.clip_norm,
                           checkpoint_dir=self.checkpoint_dir)

    def selector_model(self, vocab_size: int) -> SelectorConfig:
        return SelectorConfig(vocab_size, self.width, self.layers, self.heads, self.ff, self.max_seq_len)

    def fusion_model(self, vocab_size: int) -> FusionConfig:
        return FusionConfig(vocab_size, self.fusion_emb, self.fusion_hidden, self.fusion_attn, self.coverage)

    def require(self, *names: str, exist: Iterable[str] = ()) -> None:
        """Fail unless the named paths are set (and those in ``exist`` exist)."""
        for name in names:
            if not getattr(self, name):
                raise ConfigError(f"config key {name!r} is required for this command")
        for name in exist:
            if not Path(getattr(self, name)).exists():
                raise ConfigError(f"{name}: no such file {getattr(self, name)!r}")


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(name: str, raw: str):
    kind = str(_FIELDS[name].type)
    raw = raw.strip()
    try:
        if "None" in kind and raw.lower() in ("", "none", "null"):
            return None
        if kind.startswith("list[float]"):
            return [float(x) for x in raw.split(",") if x.strip()]
        if kind.startswith("list[str]"):
            return [x.strip() for x in raw.split(",") if x.strip()]
        if kind.startswith("bool"):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_pairs(pairs: Iterable[tuple[str, str]], base: RunConfig | None = None) -> RunConfig:
    values = dataclasses.asdict(base) if base else {}
    for key, raw in pairs:
        key = key.strip().replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        values[key] = _convert(key, raw)
    return RunConfig(**values)


def read_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        pairs.append((key, raw))
    return parse_pairs(pairs, base)


def load_config(path=None, overrides: Iterable[str] = ()) -> RunConfig:
    cfg = RunConfig()
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg = read_config_text(text, cfg)
    pairs = []
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        pairs.append(tuple(item.split("=", 1)))
    return parse_pairs(pairs, cfg) if pairs else cfg


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name} = {'' if value is None else value}")
    return "\n".join(lines) + "\n"
