"""Joint instance scorer and token tagger on a small Transformer encoder.

Input layout is ``[CLS] sent1 [SEP]`` for singletons and
``[CLS] sent1 [SEP] sent2 [SEP]`` for pairs. The instance head reads the
final ``[CLS]`` state, the token head reads every real (non-special) token:

    p_sent      = sigmoid(u . h_cls)
    p_highlight = sigmoid(v . h_i)

Neither head has a bias term.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import nncore as nn
from .corpus import CLS_ID, PAD_ID, SEP, SEP_ID, Document, Vocab
from .errors import DataError
from .oracle import PAIR_WINDOW, Instance, candidate_sets, instance_tokens
from .training import EpochLog, TrainConfig, check_finite, checkpoint_path, minibatches

log = logging.getLogger(__name__)

_MASK_NEG = -1e9


@dataclass
class SelectorConfig:
    vocab_size: int
    width: int = 128
    layers: int = 2
    heads: int = 4
    ff: int = 512
    max_len: int = 128

    def __post_init__(self):
        if self.width % self.heads:
            raise ValueError("width must be divisible by heads")


class SelectorModel(nn.Module):
    def __init__(self, config: SelectorConfig, vocab: Vocab, seed: int = 0):
        super().__init__(seed)
        if config.vocab_size != len(vocab):
            raise ValueError("config.vocab_size does not match the vocabulary")
        self.config = config
        self.vocab = vocab
        d = config.width
        self.uniform("tok_emb", (config.vocab_size, d), fan_in=d)
        self.uniform("pos_emb", (config.max_len, d), fan_in=d)
        self.uniform("seg_emb", (2, d), fan_in=d)
        self.ones("emb_ln_g", (d,))
        self.zeros("emb_ln_b", (d,))
        for l in range(config.layers):
            for w in "qkvo":
                self.uniform(f"l{l}.W{w}", (d, d))
                self.zeros(f"l{l}.b{w}", (d,))
            self.ones(f"l{l}.ln1_g", (d,))
            self.zeros(f"l{l}.ln1_b", (d,))
            self.uniform(f"l{l}.W1", (d, config.ff))
            self.zeros(f"l{l}.b1", (config.ff,))
            self.uniform(f"l{l}.W2", (config.ff, d))
            self.zeros(f"l{l}.b2", (d,))
            self.ones(f"l{l}.ln2_g", (d,))
            self.zeros(f"l{l}.ln2_b", (d,))
        self.uniform("u", (d,))
        self.uniform("v", (d,))

    @property
    def u(self) -> nn.Parameter:
        return self.params["u"]

    @property
    def v(self) -> nn.Parameter:
        return self.params["v"]

    def meta(self) -> dict:
        return {"kind": "selector", "config": asdict(self.config), "vocab": self.vocab.to_list()}

    def save(self, path) -> None:
        nn.save_checkpoint(path, self.state_dict(), self.meta())

    @classmethod
    def load(cls, path) -> "SelectorModel":
        state, meta = nn.load_checkpoint(path)
        if meta.get("kind") != "selector":
            raise DataError(f"{path} is not a selector checkpoint")
        model = cls(SelectorConfig(**meta["config"]), Vocab.from_list(meta["vocab"]))
        model.load_state_dict(state)
        return model

    # -- forward ------------------------------------------------------------

    def forward(self, batch: "Batch") -> nn.Tensor:
        """Final-layer states, shape (B, T, width)."""
        p = self.params
        cfg = self.config
        B, T = batch.ids.shape
        H, dh = cfg.heads, cfg.width // cfg.heads
        x = nn.embedding(p["tok_emb"], batch.ids) + nn.embedding(p["pos_emb"], np.arange(T)) \
            + nn.embedding(p["seg_emb"], batch.segments)
        x = nn.layer_norm(x, p["emb_ln_g"], p["emb_ln_b"])
        key_mask = np.where(batch.pad, _MASK_NEG, 0.0)[:, None, None, :]
        scale = 1.0 / np.sqrt(dh)

        def heads(t):
            return t.reshape(B, T, H, dh).transpose(0, 2, 1, 3)

        for l in range(cfg.layers):
            q = heads(x @ p[f"l{l}.Wq"] + p[f"l{l}.bq"])
            k = heads(x @ p[f"l{l}.Wk"] + p[f"l{l}.bk"])
            v = heads(x @ p[f"l{l}.Wv"] + p[f"l{l}.bv"])
            attn = nn.softmax(q @ k.transpose(0, 1, 3, 2) * scale + key_mask, axis=-1)
            ctx = (attn @ v).transpose(0, 2, 1, 3).reshape(B, T, cfg.width)
            x = nn.layer_norm(x + ctx @ p[f"l{l}.Wo"] + p[f"l{l}.bo"], p[f"l{l}.ln1_g"], p[f"l{l}.ln1_b"])
            ff = nn.relu(x @ p[f"l{l}.W1"] + p[f"l{l}.b1"]) @ p[f"l{l}.W2"] + p[f"l{l}.b2"]
            x = nn.layer_norm(x + ff, p[f"l{l}.ln2_g"], p[f"l{l}.ln2_b"])
        return x

    def heads_forward(self, batch: "Batch") -> tuple[nn.Tensor, nn.Tensor]:
        """(p_sent of shape (B,), p_highlight over all positions of shape (B, T))."""
        h = self.forward(batch)
        d = self.config.width
        B, T = batch.ids.shape
        p_sent = nn.sigmoid(h[:, 0, :] @ self.u.reshape(d, 1)).reshape(B)
        p_tok = nn.sigmoid(h @ self.v.reshape(d, 1)).reshape(B, T)
        return p_sent, p_tok


@dataclass
class Batch:
    ids: np.ndarray
    segments: np.ndarray
    pad: np.ndarray
    real: np.ndarray
    labels: np.ndarray
    token_labels: np.ndarray

    @property
    def positive(self) -> np.ndarray:
        return self.labels == 1


def layout(instance: Instance) -> tuple[list[str], list[int], list[bool]]:
    """Model-side token sequence, segment ids and real-token flags."""
    segs = instance.segments
    tokens, seg_ids, real = ["[CLS]"], [0], [False]
    for s, seg in enumerate(segs):
        tokens += seg + [SEP]
        seg_ids += [s] * (len(seg) + 1)
        real += [True] * len(seg) + [False]
    return tokens, seg_ids, real


def fit_to_length(instance: Instance, max_len: int) -> Instance:
    """Trim the longest sentence from the right until the layout fits."""
    segs = instance.segments
    budget = max_len - 1 - len(segs)
    if sum(len(s) for s in segs) <= budget:
        return instance
    log.warning("instance %s %s truncated to %d positions", instance.doc_id, instance.sentence_indices, max_len)
    labels, start = [], 0
    for seg in segs:
        labels.append(instance.real_highlights[start:start + len(seg)])
        start += len(seg)
    lengths = [len(s) for s in segs]
    while sum(lengths) > budget:
        lengths[int(np.argmax(lengths))] -= 1
    tokens, hl = [], []
    for i, (seg, lab, n) in enumerate(zip(segs, labels, lengths)):
        if i:
            tokens.append(SEP)
            hl.append(0)
        tokens += seg[:n]
        hl += lab[:n]
    return Instance(instance.doc_id, instance.sentence_indices, tokens, instance.label, hl, instance.target)


def make_batch(instances: Sequence[Instance], vocab: Vocab, max_len: int) -> Batch:
    layouts = [layout(inst) for inst in instances]
    T = max(len(t) for t, _, _ in layouts)
    if T > max_len:
        raise DataError(f"instance of {T} positions exceeds max length {max_len}")
    B = len(instances)
    ids = np.full((B, T), PAD_ID, dtype=np.int64)
    segs = np.zeros((B, T), dtype=np.int64)
    pad = np.ones((B, T), dtype=bool)
    real = np.zeros((B, T), dtype=bool)
    tok_labels = np.zeros((B, T))
    for b, (inst, (toks, seg_ids, is_real)) in enumerate(zip(instances, layouts)):
        n = len(toks)
        ids[b, :n] = [CLS_ID] + [SEP_ID if t == SEP else vocab.id(t) for t in toks[1:]]
        segs[b, :n] = seg_ids
        pad[b, :n] = False
        real[b, :n] = is_real
        tok_labels[b, np.flatnonzero(is_real)] = inst.real_highlights
    labels = np.array([inst.label for inst in instances], dtype=np.int64)
    return Batch(ids, segs, pad, real, labels, tok_labels)


@dataclass
class EncoderStates:
    hidden: nn.Tensor
    real: np.ndarray

    @property
    def cls(self) -> nn.Tensor:
        return self.hidden[0]

    @property
    def tokens(self) -> nn.Tensor:
        return self.hidden[np.flatnonzero(self.real)]


@dataclass
class InstanceScore:
    p_sent: nn.Tensor
    token_probs: nn.Tensor


def encode(instance: Instance, model: SelectorModel) -> EncoderStates:
    batch = make_batch([instance], model.vocab, model.config.max_len)
    h = model.forward(batch)
    T = batch.ids.shape[1]
    return EncoderStates(h.reshape(T, model.config.width), batch.real[0])


def score_instance(states: EncoderStates, model: SelectorModel) -> nn.Tensor:
    d = model.config.width
    return nn.sigmoid(states.cls.reshape(1, d) @ model.u.reshape(d, 1)).reshape(())


def score_tokens(states: EncoderStates, model: SelectorModel) -> nn.Tensor:
    d = model.config.width
    tok = states.tokens
    return nn.sigmoid(tok @ model.v.reshape(d, 1)).reshape(tok.shape[0])


def score(instance: Instance, model: SelectorModel) -> InstanceScore:
    states = encode(instance, model)
    return InstanceScore(score_instance(states, model), score_tokens(states, model))


def selector_loss(score: InstanceScore, instance: Instance, lam: float, form: str = "convex") -> nn.Tensor:
    """Instance BCE interpolated with mean per-token BCE (positives only)."""
    w_sent = (1.0 - lam) if form == "convex" else 1.0
    loss = nn.bce(score.p_sent, float(instance.label), w_sent)
    if lam > 0 and instance.label == 1:
        n = score.token_probs.shape[0]
        loss = loss + nn.bce(score.token_probs, instance.real_highlights, lam / n)
    return loss


def batch_loss(model: SelectorModel, batch: Batch, lam: float, form: str = "convex"):
    """Mean of ``selector_loss`` over the batch; returns (loss, p_sent)."""
    p_sent, p_tok = model.heads_forward(batch)
    B = batch.ids.shape[0]
    w_sent = ((1.0 - lam) if form == "convex" else 1.0) / B
    loss = nn.bce(p_sent, batch.labels, w_sent)
    if lam > 0 and batch.positive.any():
        n_real = batch.real.sum(axis=1, keepdims=True)
        w_tok = batch.real * batch.positive[:, None] * lam / (np.maximum(n_real, 1) * B)
        loss = loss + nn.bce(p_tok, batch.token_labels, w_tok)
    return loss, p_sent


def train_selector(
    instances: Sequence[Instance],
    config: TrainConfig,
    vocab: Vocab,
    model_config: SelectorConfig | None = None,
) -> tuple[SelectorModel, list[dict]]:
    if not instances:
        raise DataError("no training instances")
    if not any(inst.label == 1 for inst in instances):
        raise DataError("training instances contain no positive")
    model_config = model_config or SelectorConfig(vocab_size=len(vocab))
    model = SelectorModel(model_config, vocab, seed=config.seed)
    data = [fit_to_length(inst, model_config.max_len) for inst in instances]
    opt = nn.Adam(model.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps,
                  clip_norm=config.clip_norm)
    rng = np.random.default_rng(config.seed)
    history = EpochLog(config.log_path)
    for epoch in range(1, config.epochs + 1):
        total, correct = 0.0, 0
        for step, idx in enumerate(minibatches(len(data), config.batch_size, rng)):
            batch = make_batch([data[i] for i in idx], vocab, model_config.max_len)
            opt.zero_grad()
            loss, p_sent = batch_loss(model, batch, config.lam, config.loss_form)
            check_finite(loss.item(), epoch, step)
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
            correct += int(((p_sent.data >= 0.5) == (batch.labels == 1)).sum())
        history.add(epoch=epoch, loss=total / len(data), accuracy=correct / len(data))
        path = checkpoint_path(config, "selector", epoch)
        if path:
            model.save(path)
    return model, history.records


def predict(instances: Sequence[Instance], model: SelectorModel, batch_size: int = 32):
    """(p_sent, token probabilities over real tokens) per instance, no graph."""
    out = []
    with nn.no_grad():
        for start in range(0, len(instances), batch_size):
            chunk = [fit_to_length(i, model.config.max_len) for i in instances[start:start + batch_size]]
            batch = make_batch(chunk, model.vocab, model.config.max_len)
            p_sent, p_tok = model.heads_forward(batch)
            for b in range(len(chunk)):
                out.append((float(p_sent.data[b]), p_tok.data[b][batch.real[b]].copy()))
    return out


def candidate_instances(doc: Document, window: int = PAIR_WINDOW) -> list[Instance]:
    out = []
    for idx in candidate_sets(len(doc.sentences), window):
        toks = instance_tokens(doc, idx)
        out.append(Instance(doc.id, idx, toks, 0, [0] * len(toks)))
    return out


def rank_instances(
    doc: Document, model: SelectorModel, k: int = 4, window: int = PAIR_WINDOW, disjoint: bool = True
) -> list[tuple[Instance, float]]:
    """Top-``k`` candidates by p_sent, greedily skipping overlapping sentences."""
    if k < 1:
        raise ValueError("k must be >= 1")
    cands = candidate_instances(doc, window)
    scores = [p for p, _ in predict(cands, model)]
    order = sorted(range(len(cands)), key=lambda i: (-scores[i], cands[i].sentence_indices))
    chosen, used = [], set()
    for i in order:
        idx = cands[i].sentence_indices
        if disjoint and used.intersection(idx):
            continue
        chosen.append((cands[i], scores[i]))
        used.update(idx)
        if len(chosen) == k:
            break
    return chosen
