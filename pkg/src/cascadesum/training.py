"""Shared training configuration and loop helpers."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import TrainingDiverged


@dataclass
class TrainConfig:
    lam: float = 0.2
    epochs: int = 10
    batch_size: int = 16
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None
    # "convex": (1-lam)*L_sent + lam*L_tag; "additive": L_sent + lam*L_tag
    loss_form: str = "convex"
    checkpoint_dir: str | None = None
    log_path: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lam must lie in [0, 1], got {self.lam}")
        if self.loss_form not in ("convex", "additive"):
            raise ValueError(f"unknown loss_form {self.loss_form!r}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


def minibatches(n: int, batch_size: int, rng: np.random.Generator) -> list[np.ndarray]:
    order = rng.permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def check_finite(loss: float, epoch: int, step: int) -> None:
    if not math.isfinite(loss):
        raise TrainingDiverged(epoch, step, loss)


class EpochLog:
    """Collects per-epoch records and mirrors them to a JSON-lines file."""

    def __init__(self, path=None):
        self.records: list[dict] = []
        self.path = Path(path) if path else None
        if self.path:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("")

    def add(self, **record) -> None:
        self.records.append(record)
        if self.path:
            with self.path.open("a") as fh:
                fh.write(json.dumps(record) + "\n")


def checkpoint_path(config: TrainConfig, stem: str, epoch: int) -> Path | None:
    if not config.checkpoint_dir:
        return None
    d = Path(config.checkpoint_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / f"{stem}-epoch{epoch:03d}.ckpt"


def config_dict(config) -> dict:
    return asdict(config)
