"""Turning token highlight probabilities into binary masks.

Three strategies: a fixed probability threshold, or a top-probability
budget proportional to the word count of each instance or of the whole
document (all selected instances together). No label smoothing is applied
to these inference-time masks.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from typing import Sequence

import numpy as np

THRESHOLD = "threshold"
PROP_INSTANCE = "prop_instance"
PROP_DOCUMENT = "prop_document"
STRATEGIES = (THRESHOLD, PROP_INSTANCE, PROP_DOCUMENT)

DEFAULT_THRESHOLD = 0.15


@dataclass
class HighlightMask:
    bits: list[int]
    source: str
    parameter: float

    def __len__(self):
        return len(self.bits)

    @property
    def count(self) -> int:
        return sum(self.bits)


def threshold_highlight(probs: Sequence[float], tau: float = DEFAULT_THRESHOLD) -> HighlightMask:
    """Highlight every token with probability >= tau (tau clamped to [0, 1])."""
    tau = min(max(tau, 0.0), 1.0)
    return HighlightMask([int(p >= tau) for p in probs], THRESHOLD, tau)


def budget(rate: float, n: int) -> int:
    """ceil(rate * n), computed exactly on the decimal ``rate`` was written as.

    Float products overshoot (0.07 * 100 gives 7.000000000000001) and the
    binary value of 0.1 is slightly above 0.1, so neither is used directly.
    """
    return math.ceil(Fraction(repr(float(rate))) * n)


def _top(probs: np.ndarray, k: int) -> np.ndarray:
    # stable sort keeps the earlier position first among equal probabilities
    order = np.argsort(-probs, kind="stable")
    bits = np.zeros(len(probs), dtype=int)
    bits[order[:k]] = 1
    return bits


def proportional_highlight(prob_groups: Sequence[Sequence[float]], rate: float, scope: str = "instance") -> list[HighlightMask]:
    """Highlight the ceil(rate * N) most probable words per budget.

    With ``scope="instance"`` each group has its own budget; with
    ``scope="document"`` one budget covers the concatenated groups.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must lie in [0, 1]")
    if scope == "instance":
        return [
            HighlightMask(_top(np.asarray(g, dtype=float), budget(rate, len(g))).tolist(), PROP_INSTANCE, rate)
            for g in prob_groups
        ]
    if scope != "document":
        raise ValueError(f"unknown scope {scope!r}")
    flat = np.concatenate([np.asarray(g, dtype=float) for g in prob_groups]) if prob_groups else np.zeros(0)
    bits = _top(flat, budget(rate, len(flat)))
    out, start = [], 0
    for g in prob_groups:
        out.append(HighlightMask(bits[start:start + len(g)].tolist(), PROP_DOCUMENT, rate))
        start += len(g)
    return out


def apply_strategy(prob_groups: Sequence[Sequence[float]], strategy: str, parameter: float) -> list[HighlightMask]:
    if strategy == THRESHOLD:
        return [threshold_highlight(g, parameter) for g in prob_groups]
    if strategy == PROP_INSTANCE:
        return proportional_highlight(prob_groups, parameter, "instance")
    if strategy == PROP_DOCUMENT:
        return proportional_highlight(prob_groups, parameter, "document")
    raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def highlight_rate(masks: Sequence[HighlightMask]) -> float:
    if not masks:
        raise ValueError("highlight_rate needs at least one mask")
    total = sum(len(m) for m in masks)
    return sum(m.count for m in masks) / total if total else 0.0
