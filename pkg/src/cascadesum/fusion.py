"""Pointer-generator fusion of a highlighted singleton or pair.

Source tokens are embedded and shifted by a learned highlight-on or
highlight-off vector, read by a bidirectional LSTM, and decoded by a
unidirectional LSTM with additive attention. Each step mixes generation
and copying over the extended vocabulary (vocabulary plus the source's
out-of-vocabulary tokens)::

    final = p_gen * P_vocab + (1 - p_gen) * scatter(attention -> source ids)

Highlights enter on the encoder side only.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from . import nncore as nn
from .corpus import BOS_ID, EOS_ID, PAD_ID, UNK_ID, Vocab
from .errors import DataError
from .oracle import Instance
from .training import EpochLog, TrainConfig, check_finite, checkpoint_path, minibatches

log = logging.getLogger(__name__)

_MASK_NEG = -1e9


@dataclass
class FusionConfig:
    vocab_size: int
    emb: int = 64
    hidden: int = 64
    attn: int = 64
    coverage: bool = False
    coverage_weight: float = 1.0


class FusionModel(nn.Module):
    def __init__(self, config: FusionConfig, vocab: Vocab, seed: int = 0):
        super().__init__(seed)
        if config.vocab_size != len(vocab):
            raise ValueError("config.vocab_size does not match the vocabulary")
        self.config = config
        self.vocab = vocab
        V, E, H, A = config.vocab_size, config.emb, config.hidden, config.attn
        self.uniform("emb", (V, E), fan_in=E)
        self.uniform("hl_on", (E,), fan_in=E)
        self.uniform("hl_off", (E,), fan_in=E)
        for d in ("enc_f", "enc_b"):
            self.uniform(f"{d}.Wx", (E, 4 * H))
            self.uniform(f"{d}.Wh", (H, 4 * H))
            self.zeros(f"{d}.b", (4 * H,))
        self.uniform("reduce.Wh", (2 * H, H))
        self.zeros("reduce.bh", (H,))
        self.uniform("reduce.Wc", (2 * H, H))
        self.zeros("reduce.bc", (H,))
        self.uniform("dec.Win", (E + 2 * H, E))
        self.zeros("dec.bin", (E,))
        self.uniform("dec.Wx", (E, 4 * H))
        self.uniform("dec.Wh", (H, 4 * H))
        self.zeros("dec.b", (4 * H,))
        self.uniform("attn.Wenc", (2 * H, A))
        self.uniform("attn.Wdec", (H, A))
        self.zeros("attn.b", (A,))
        self.uniform("attn.v", (A, 1))
        if config.coverage:
            self.uniform("attn.wcov", (A,), fan_in=1)
        self.uniform("out.W1", (3 * H, H))
        self.zeros("out.b1", (H,))
        self.uniform("out.W2", (H, V))
        self.zeros("out.b2", (V,))
        self.uniform("pgen.w", (2 * H + H + E, 1))
        self.zeros("pgen.b", (1,))

    def meta(self) -> dict:
        return {"kind": "fusion", "config": asdict(self.config), "vocab": self.vocab.to_list()}

    def save(self, path) -> None:
        nn.save_checkpoint(path, self.state_dict(), self.meta())

    @classmethod
    def load(cls, path) -> "FusionModel":
        state, meta = nn.load_checkpoint(path)
        if meta.get("kind") != "fusion":
            raise DataError(f"{path} is not a fusion checkpoint")
        model = cls(FusionConfig(**meta["config"]), Vocab.from_list(meta["vocab"]))
        model.load_state_dict(state)
        return model


# -- source side ----------------------------------------------------------------

@dataclass
class Source:
    """Id-level view of a batch of source sequences."""

    ids: np.ndarray        # (B, S) vocabulary ids, OOV -> UNK
    ext_ids: np.ndarray    # (B, S) extended-vocabulary ids
    highlights: np.ndarray  # (B, S) 0/1
    pad: np.ndarray        # (B, S) True at padding
    oovs: list[list[str]]
    vocab_size: int

    @property
    def ext_size(self) -> int:
        return self.vocab_size + max((len(o) for o in self.oovs), default=0)

    def copy_matrix(self) -> np.ndarray:
        B, S = self.ids.shape
        onehot = np.zeros((B, S, self.ext_size))
        b, s = np.nonzero(~self.pad)
        onehot[b, s, self.ext_ids[b, s]] = 1.0
        return onehot

    def ext_id(self, b: int, token: str, vocab: Vocab) -> int:
        if token in vocab:
            return vocab.id(token)
        if token in self.oovs[b]:
            return self.vocab_size + self.oovs[b].index(token)
        return UNK_ID

    def token(self, b: int, ext_id: int, vocab: Vocab) -> str:
        if ext_id < self.vocab_size:
            return vocab.itos[ext_id]
        return self.oovs[b][ext_id - self.vocab_size]

    def repeat(self, n: int) -> "Source":
        return Source(
            np.repeat(self.ids, n, 0), np.repeat(self.ext_ids, n, 0), np.repeat(self.highlights, n, 0),
            np.repeat(self.pad, n, 0), [o for o in self.oovs for _ in range(n)], self.vocab_size,
        )


def make_source(token_lists: Sequence[Sequence[str]], masks: Sequence[Sequence[int]], vocab: Vocab) -> Source:
    if len(token_lists) != len(masks):
        raise ValueError("one mask per source is required")
    B = len(token_lists)
    S = max(len(t) for t in token_lists)
    ids = np.full((B, S), PAD_ID, dtype=np.int64)
    ext = np.full((B, S), PAD_ID, dtype=np.int64)
    hl = np.zeros((B, S), dtype=np.int64)
    pad = np.ones((B, S), dtype=bool)
    oovs = []
    for b, (toks, bits) in enumerate(zip(token_lists, masks)):
        if len(bits) != len(toks):
            raise ValueError(f"mask of length {len(bits)} for {len(toks)} source tokens")
        if not toks:
            raise DataError("empty fusion source")
        local = []
        for s, t in enumerate(toks):
            if t in vocab:
                ids[b, s] = ext[b, s] = vocab.id(t)
            else:
                if t not in local:
                    local.append(t)
                ids[b, s] = UNK_ID
                ext[b, s] = len(vocab) + local.index(t)
        hl[b, : len(toks)] = bits
        pad[b, : len(toks)] = False
        oovs.append(local)
    return Source(ids, ext, hl, pad, oovs, len(vocab))


def embed_source(source: Source, model: FusionModel) -> nn.Tensor:
    p = model.params
    bits = source.highlights[..., None]
    shift = nn.Tensor(bits) * p["hl_on"] + nn.Tensor(1 - bits) * p["hl_off"]
    return nn.embedding(p["emb"], source.ids) + shift


def embed_with_highlights(tokens: Sequence[str], mask, model: FusionModel) -> nn.Tensor:
    """Token embeddings plus the on/off vector per position, shape (S, E)."""
    bits = getattr(mask, "bits", mask)
    if len(bits) != len(tokens):
        raise ValueError(f"mask of length {len(bits)} for {len(tokens)} tokens")
    src = make_source([tokens], [bits], model.vocab)
    return embed_source(src, model).reshape(len(tokens), model.config.emb)


def _lstm_step(x_proj, h, c, Wh, b, H):
    gates = x_proj + h @ Wh + b
    i = nn.sigmoid(gates[:, :H])
    f = nn.sigmoid(gates[:, H:2 * H])
    o = nn.sigmoid(gates[:, 2 * H:3 * H])
    g = nn.tanh(gates[:, 3 * H:])
    c_new = f * c + i * g
    return o * nn.tanh(c_new), c_new


@dataclass
class EncoderOutput:
    states: nn.Tensor        # (B, S, 2H)
    features: nn.Tensor      # (B, S, A), attention projection of the states
    final_h: nn.Tensor       # (B, H)
    final_c: nn.Tensor       # (B, H)
    source: Source
    copy: np.ndarray         # (B, S, ext)

    def repeat(self, n: int) -> "EncoderOutput":
        """Tile every row ``n`` times (graph-free, for beam search)."""
        def rep(t):
            return nn.Tensor(np.repeat(t.data, n, 0))
        return EncoderOutput(rep(self.states), rep(self.features), rep(self.final_h), rep(self.final_c),
                             self.source.repeat(n), np.repeat(self.copy, n, 0))


def encode_source(embeddings: nn.Tensor, model: FusionModel, pad: np.ndarray | None = None):
    """Bidirectional LSTM pass; returns (states (B,S,2H), final_h, final_c).

    ``embeddings`` is (B, S, E) or a single (S, E) sequence, in which case
    the batch axis is dropped from all three outputs. Padded steps
    carry the previous state through unchanged.
    """
    single = embeddings.ndim == 2
    if single:
        embeddings = embeddings.reshape(1, *embeddings.shape)
    B, S, _ = embeddings.shape
    H = model.config.hidden
    p = model.params
    if pad is None:
        pad = np.zeros((B, S), dtype=bool)
    keep = (~pad).astype(embeddings.dtype)[..., None]
    outputs = {}
    finals = []
    for d, steps in (("enc_f", range(S)), ("enc_b", range(S - 1, -1, -1))):
        xp = embeddings @ p[f"{d}.Wx"]
        h = nn.Tensor(np.zeros((B, H)))
        c = nn.Tensor(np.zeros((B, H)))
        seq = [None] * S
        for t in steps:
            h_new, c_new = _lstm_step(xp[:, t, :], h, c, p[f"{d}.Wh"], p[f"{d}.b"], H)
            m = keep[:, t, :]
            if m.all():
                h, c = h_new, c_new
            else:
                h = h_new * m + h * (1.0 - m)
                c = c_new * m + c * (1.0 - m)
            seq[t] = h.reshape(B, 1, H)
        outputs[d] = nn.concat(seq, axis=1)
        finals.append((h, c))
    states = nn.concat([outputs["enc_f"], outputs["enc_b"]], axis=-1)
    (hf, cf), (hb, cb) = finals
    final_h = nn.tanh(nn.concat([hf, hb], -1) @ p["reduce.Wh"] + p["reduce.bh"])
    final_c = nn.concat([cf, cb], -1) @ p["reduce.Wc"] + p["reduce.bc"]
    if single:
        return states.reshape(S, 2 * H), final_h.reshape(H), final_c.reshape(H)
    return states, final_h, final_c


def encode(source: Source, model: FusionModel) -> EncoderOutput:
    states, final_h, final_c = encode_source(embed_source(source, model), model, source.pad)
    features = states @ model.params["attn.Wenc"]
    return EncoderOutput(states, features, final_h, final_c, source, source.copy_matrix())


# -- decoder ----------------------------------------------------------------------

@dataclass
class DecodeState:
    h: nn.Tensor
    c: nn.Tensor
    context: nn.Tensor
    attention: nn.Tensor | None = None
    p_gen: nn.Tensor | None = None
    vocab_dist: nn.Tensor | None = None
    final: nn.Tensor | None = None
    coverage: nn.Tensor | None = None
    coverage_loss: nn.Tensor | None = None


def initial_state(enc: EncoderOutput, model: FusionModel) -> DecodeState:
    B = enc.states.shape[0]
    ctx = nn.Tensor(np.zeros((B, 2 * model.config.hidden)))
    cov = nn.Tensor(np.zeros(enc.source.ids.shape)) if model.config.coverage else None
    return DecodeState(enc.final_h, enc.final_c, ctx, coverage=cov)


def decode_step(state: DecodeState, prev_token, enc: EncoderOutput, model: FusionModel, p_gen_override=None) -> DecodeState:
    """One decoder step. ``prev_token`` holds extended ids, one per row."""
    p = model.params
    H, A = model.config.hidden, model.config.attn
    B, S = enc.source.ids.shape
    prev = np.asarray(prev_token, dtype=np.int64).reshape(B)
    prev = np.where(prev >= model.config.vocab_size, UNK_ID, prev)

    x = nn.concat([nn.embedding(p["emb"], prev), state.context], -1) @ p["dec.Win"] + p["dec.bin"]
    h, c = _lstm_step(x @ p["dec.Wx"], state.h, state.c, p["dec.Wh"], p["dec.b"], H)

    pre = enc.features + (h @ p["attn.Wdec"] + p["attn.b"]).reshape(B, 1, A)
    if state.coverage is not None:
        pre = pre + state.coverage.reshape(B, S, 1) * p["attn.wcov"]
    scores = (nn.tanh(pre) @ p["attn.v"]).reshape(B, S) + np.where(enc.source.pad, _MASK_NEG, 0.0)
    attn = nn.softmax(scores, axis=-1)
    context = (attn.reshape(B, 1, S) @ enc.states).reshape(B, 2 * H)

    hidden = nn.concat([h, context], -1) @ p["out.W1"] + p["out.b1"]
    vocab_dist = nn.softmax(hidden @ p["out.W2"] + p["out.b2"], axis=-1)
    if p_gen_override is None:
        p_gen = nn.sigmoid(nn.concat([context, h, x], -1) @ p["pgen.w"] + p["pgen.b"])
    else:
        p_gen = nn.Tensor(np.full((B, 1), float(p_gen_override)))

    extra = enc.copy.shape[-1] - model.config.vocab_size
    gen = vocab_dist if extra == 0 else nn.concat([vocab_dist, nn.Tensor(np.zeros((B, extra)))], -1)
    copied = (attn.reshape(B, 1, S) @ nn.Tensor(enc.copy)).reshape(B, enc.copy.shape[-1])
    final = p_gen * gen + (1.0 - p_gen) * copied

    coverage = cov_loss = None
    if state.coverage is not None:
        cov_loss = (attn - nn.relu(attn - state.coverage)).sum(axis=-1)
        coverage = state.coverage + attn
    return DecodeState(h, c, context, attn, p_gen, vocab_dist, final, coverage, cov_loss)


# -- loss and training ----------------------------------------------------------

@dataclass
class TargetBatch:
    inputs: np.ndarray    # (B, T) previous-token ext ids, BOS first
    targets: np.ndarray   # (B, T) ext ids, EOS last
    weights: np.ndarray   # (B, T) 1/(len_b * B) on real steps


def make_targets(targets: Sequence[Sequence[str]], source: Source, vocab: Vocab) -> TargetBatch:
    B = len(targets)
    T = max(len(t) for t in targets) + 1
    inputs = np.full((B, T), PAD_ID, dtype=np.int64)
    outs = np.full((B, T), PAD_ID, dtype=np.int64)
    weights = np.zeros((B, T))
    for b, toks in enumerate(targets):
        if not toks:
            raise DataError("empty fusion target")
        ids = [source.ext_id(b, t, vocab) for t in toks] + [EOS_ID]
        inputs[b, : len(ids)] = [BOS_ID] + ids[:-1]
        outs[b, : len(ids)] = ids
        weights[b, : len(ids)] = 1.0 / (len(ids) * B)
    return TargetBatch(inputs, outs, weights)


def sequence_loss(model: FusionModel, source: Source, targets: TargetBatch, p_gen_override=None) -> nn.Tensor:
    """Teacher-forced mean per-token NLL (averaged over the batch)."""
    enc = encode(source, model)
    state = initial_state(enc, model)
    loss = None
    for t in range(targets.inputs.shape[1]):
        w = targets.weights[:, t]
        if not w.any():
            break
        state = decode_step(state, targets.inputs[:, t], enc, model, p_gen_override)
        term = nn.nll(nn.log(state.final), targets.targets[:, t], w)
        if state.coverage_loss is not None:
            term = term + (state.coverage_loss * (w * model.config.coverage_weight)).sum()
        loss = term if loss is None else loss + term
    return loss


def _bits(mask) -> list[int]:
    return list(getattr(mask, "bits", mask))


def fusion_loss(instance: Instance, mask, model: FusionModel, p_gen_override=None) -> nn.Tensor:
    if not instance.target:
        raise DataError("fusion loss needs a nonempty target")
    source = make_source([instance.real_tokens], [_bits(mask)], model.vocab)
    return sequence_loss(model, source, make_targets([instance.target], source, model.vocab), p_gen_override)


def train_fusion(
    instances: Sequence[Instance],
    config: TrainConfig,
    vocab: Vocab,
    model_config: FusionConfig | None = None,
) -> tuple[FusionModel, list[dict]]:
    """Teacher-forced training with the smoothed gold highlights as masks."""
    data = [i for i in instances if i.label == 1]
    if len(data) < len(instances):
        log.info("train_fusion: skipping %d negative instances", len(instances) - len(data))
    if not data:
        raise DataError("no positive instances to train fusion on")
    model_config = model_config or FusionConfig(vocab_size=len(vocab))
    model = FusionModel(model_config, vocab, seed=config.seed)
    opt = nn.Adam(model.parameters(), lr=config.lr, betas=(config.beta1, config.beta2), eps=config.eps,
                  clip_norm=config.clip_norm)
    rng = np.random.default_rng(config.seed)
    history = EpochLog(config.log_path)
    for epoch in range(1, config.epochs + 1):
        total = 0.0
        for step, idx in enumerate(minibatches(len(data), config.batch_size, rng)):
            chunk = [data[i] for i in idx]
            source = make_source([i.real_tokens for i in chunk], [i.real_highlights for i in chunk], vocab)
            targets = make_targets([i.target for i in chunk], source, vocab)
            opt.zero_grad()
            loss = sequence_loss(model, source, targets)
            check_finite(loss.item(), epoch, step)
            loss.backward()
            opt.step()
            total += loss.item() * len(idx)
        history.add(epoch=epoch, loss=total / len(data))
        path = checkpoint_path(config, "fusion", epoch)
        if path:
            model.save(path)
    return model, history.records


# -- decoding ---------------------------------------------------------------------

@dataclass
class TokenProvenance:
    copied: bool
    source_position: int | None


@dataclass
class Generation:
    tokens: list[str]
    provenance: list[TokenProvenance]
    trace: list[dict] = field(default_factory=list)
    score: float = 0.0


@dataclass
class _Hyp:
    ids: list[int]
    logp: float
    state: DecodeState
    steps: list[dict]


def _step_info(state: DecodeState, row: int, tok: int, enc_row_ext: np.ndarray, step: int) -> dict:
    p_gen = float(state.p_gen.data[row, 0])
    attn = state.attention.data[row]
    gen_mass = p_gen * (float(state.vocab_dist.data[row, tok]) if tok < state.vocab_dist.shape[1] else 0.0)
    hits = np.flatnonzero(enc_row_ext == tok)
    copy_mass = (1.0 - p_gen) * float(attn[hits].sum()) if hits.size else 0.0
    copied = copy_mass > gen_mass
    pos = int(hits[np.argmax(attn[hits])]) if copied else None
    return {"step": step, "id": tok, "p_gen": p_gen, "top_attention": int(np.argmax(attn)),
            "copied": copied, "source_position": pos}


def _select_rows(state: DecodeState, rows: list[int]) -> DecodeState:
    def pick(t):
        return None if t is None else nn.Tensor(t.data[rows])
    return DecodeState(pick(state.h), pick(state.c), pick(state.context), pick(state.attention), pick(state.p_gen),
                       pick(state.vocab_dist), pick(state.final), pick(state.coverage))


def _finish(hyp_ids, steps, source: Source, vocab: Vocab, score: float) -> Generation:
    tokens = [source.token(0, i, vocab) for i in hyp_ids]
    prov = [TokenProvenance(s["copied"], s["source_position"]) for s in steps[: len(hyp_ids)]]
    trace = [{"step": s["step"], "token": source.token(0, s["id"], vocab), "p_gen": s["p_gen"],
              "top_attention": s["top_attention"]} for s in steps]
    if not tokens:
        log.info("generation produced an empty sentence")
    return Generation(tokens, prov, trace, score)


def generate(instance: Instance, mask, model: FusionModel, beam_width: int = 4, max_len: int = 40,
             p_gen_override=None) -> Generation:
    """Beam search with length-normalized scores (log-probability / steps).

    The step count includes the EOS step for finished hypotheses.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    with nn.no_grad():
        source = make_source([instance.real_tokens], [_bits(mask)], model.vocab)
        enc = encode(source, model)
        beams = [_Hyp([], 0.0, initial_state(enc, model), [])]
        finished: list[tuple[float, list[int], list[dict]]] = []
        for step in range(max_len):
            n = len(beams)
            batch_state = DecodeState(
                nn.Tensor(np.concatenate([b.state.h.data for b in beams])),
                nn.Tensor(np.concatenate([b.state.c.data for b in beams])),
                nn.Tensor(np.concatenate([b.state.context.data for b in beams])),
                coverage=None if beams[0].state.coverage is None
                else nn.Tensor(np.concatenate([b.state.coverage.data for b in beams])),
            )
            prev = [b.ids[-1] if b.ids else BOS_ID for b in beams]
            tiled = enc.repeat(n)
            new = decode_step(batch_state, prev, tiled, model, p_gen_override)
            logp = np.log(np.maximum(new.final.data, 1e-300))
            cands = []
            for r, hyp in enumerate(beams):
                top = np.argsort(-logp[r], kind="stable")[: 2 * beam_width]
                cands += [(hyp.logp + logp[r, t], r, int(t)) for t in top]
            cands.sort(key=lambda c: (-c[0], c[1], c[2]))
            next_beams = []
            for total, r, tok in cands:
                info = _step_info(new, r, tok, tiled.source.ext_ids[r], step)
                steps = beams[r].steps + [info]
                if tok == EOS_ID:
                    finished.append((total / (len(beams[r].ids) + 1), beams[r].ids, steps))
                else:
                    next_beams.append(_Hyp(beams[r].ids + [tok], total, _select_rows(new, [r]), steps))
                if len(next_beams) == beam_width:
                    break
            beams = next_beams
            if len(finished) >= beam_width or not beams:
                break
        if not finished:
            finished = [(b.logp / max(len(b.ids), 1), b.ids, b.steps) for b in beams]
        score, ids, steps = max(finished, key=lambda f: f[0])
        return _finish(ids, steps, source, model.vocab, score)


def greedy_decode(instance: Instance, mask, model: FusionModel, max_len: int = 40, p_gen_override=None) -> Generation:
    with nn.no_grad():
        source = make_source([instance.real_tokens], [_bits(mask)], model.vocab)
        enc = encode(source, model)
        state = initial_state(enc, model)
        ids, steps, total = [], [], 0.0
        prev = BOS_ID
        for step in range(max_len):
            state = decode_step(state, [prev], enc, model, p_gen_override)
            tok = int(np.argmax(state.final.data[0]))
            total += float(np.log(max(state.final.data[0, tok], 1e-300)))
            steps.append(_step_info(state, 0, tok, source.ext_ids[0], step))
            if tok == EOS_ID:
                return _finish(ids, steps, source, model.vocab, total / (len(ids) + 1))
            ids.append(tok)
            prev = tok
        return _finish(ids, steps, source, model.vocab, total / max(len(ids), 1))
