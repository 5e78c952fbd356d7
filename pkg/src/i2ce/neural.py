"""GRU sequence auto-encoder with additive (Bahdanau) attention.

The encoder reads a sentence followed by ``<end>``; its last hidden state is
the sentence's intrinsic vector. The decoder starts from that vector and
reconstructs the sentence with teacher forcing during training. Row-vector
convention throughout: ``x @ W``.
"""

from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .embeddings import EmbeddingTable
from .text import END_ID, PAD_ID, START_ID, Vocabulary

log = logging.getLogger(__name__)

GATES = ("Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh")
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class GruParams:
    """Input weights ``W*`` (d_in x H), recurrent ``U*`` (H x H), biases ``b*`` (H)
    for the update (z), reset (r) and candidate (h) gates."""

    Wz: object
    Uz: object
    bz: object
    Wr: object
    Ur: object
    br: object
    Wh: object
    Uh: object
    bh: object

    @classmethod
    def from_dict(cls, params: dict, prefix: str) -> GruParams:
        return cls(**{g: params[f"{prefix}.{g}"] for g in GATES})

    def check(self, d_in: int, hidden: int) -> None:
        for g in GATES:
            shape = np.shape(getattr(self, g).data if isinstance(getattr(self, g), Tensor)
                             else getattr(self, g))
            want = {"W": (d_in, hidden), "U": (hidden, hidden), "b": (hidden,)}[g[0]]
            if shape != want:
                raise ValueError(f"GRU parameter {g} has shape {shape}, expected {want}")


def gru_step(params: GruParams, x, h_prev) -> Tensor:
    """One GRU update; ``h' = (1 - z) * h + z * h_tilde``.

    Works on single vectors or on batches (leading axis).
    """
    x, h = ag.as_tensor(x), ag.as_tensor(h_prev)
    if x.shape[-1] != np.shape(_data(params.Wz))[0] or h.shape[-1] != np.shape(_data(params.Uz))[0]:
        raise ValueError(f"GRU input shapes {x.shape}, {h.shape} do not match parameters")
    p = params
    z = ag.sigmoid(x @ p.Wz + h @ p.Uz + p.bz)
    r = ag.sigmoid(x @ p.Wr + h @ p.Ur + p.br)
    h_tilde = ag.tanh(x @ p.Wh + (r * h) @ p.Uh + p.bh)
    return h + z * (h_tilde - h)


def _data(x):
    return x.data if isinstance(x, Tensor) else x


def attention(W1, W2, v, decoder_state, encoder_states, mask=None, keys=None):
    """Additive attention: ``e_i = v . tanh(h_i W1 + s W2)``, weights =
    softmax(e), context = sum_i weights_i h_i.

    ``decoder_state`` is (H,) or (B, H); ``encoder_states`` is (L, H) or
    (B, L, H). ``keys`` may carry a precomputed ``encoder_states @ W1``.
    Returns (context, weights) as tensors.
    """
    enc = ag.as_tensor(encoder_states)
    s = ag.as_tensor(decoder_state)
    if enc.shape[-2] < 1:
        raise ValueError("attention needs at least one encoder state")
    if keys is None:
        keys = enc @ W1
    q = s @ W2
    q = ag.reshape(q, q.shape[:-1] + (1, q.shape[-1]))
    scores = ag.tanh(keys + q) @ v
    weights = ag.masked_softmax(scores, mask)
    w = ag.reshape(weights, weights.shape + (1,))
    context = ag.sum_(w * enc, axis=-2)
    return context, weights


@dataclass
class ModelConfig:
    d: int = 50
    hidden: int = 64
    attn: int = 32
    max_len: int = 20


@dataclass
class EncoderModel:
    vocab: Vocabulary
    params: dict[str, np.ndarray]
    config: ModelConfig
    frozen_embedding: bool = True

    def copy(self) -> EncoderModel:
        return EncoderModel(self.vocab, {k: v.copy() for k, v in self.params.items()},
                            copy.copy(self.config), self.frozen_embedding)

    def param_names(self) -> list[str]:
        return list(self.params)

    def trainable(self) -> list[str]:
        return [k for k in self.params if not (k == "embedding" and self.frozen_embedding)]


def init_model(vocab: Vocabulary, config: ModelConfig | None = None,
               embeddings: EmbeddingTable | None = None, seed: int = 0,
               frozen_embedding: bool = True) -> EncoderModel:
    """Seeded initialization. Embedding rows come from ``embeddings`` where the
    token has a vector; other rows (reserved tokens included) are random with
    a matching scale."""
    cfg = copy.copy(config) if config else ModelConfig()
    if embeddings is not None:
        cfg.d = embeddings.dim
    rng = np.random.default_rng(seed)
    V, d, H, A = len(vocab), cfg.d, cfg.hidden, cfg.attn

    scale = 1.0 / np.sqrt(d)
    emb = rng.normal(0.0, scale, (V, d))
    if embeddings is not None:
        rows = [(i, embeddings.vocab.stoi[t]) for i, t in enumerate(vocab.itos) if t in embeddings]
        if rows:
            known = embeddings.vectors[[j for _, j in rows]]
            emb = rng.normal(0.0, float(known.std()) or scale, (V, d))
            emb[[i for i, _ in rows]] = known
    emb[PAD_ID] = 0.0

    def uni(*shape, fan):
        k = 1.0 / np.sqrt(fan)
        return rng.uniform(-k, k, shape)

    params = {"embedding": emb}
    for prefix, d_in in (("enc", d), ("dec", d + H)):
        for gate in "zrh":
            params[f"{prefix}.W{gate}"] = uni(d_in, H, fan=H)
            params[f"{prefix}.U{gate}"] = uni(H, H, fan=H)
            params[f"{prefix}.b{gate}"] = np.zeros(H)
    params["att.W1"] = uni(H, A, fan=H)
    params["att.W2"] = uni(H, A, fan=H)
    params["att.v"] = uni(A, fan=A)
    params["out.W"] = uni(H, V, fan=H) * 0.1
    params["out.b"] = np.zeros(V)
    return EncoderModel(vocab, params, cfg, frozen_embedding)


def _tensors(model: EncoderModel, grad: bool) -> dict[str, Tensor]:
    trainable = set(model.trainable()) if grad else set()
    return {k: Tensor(v, k in trainable) for k, v in model.params.items()}


def _batch_ids(model: EncoderModel, batch: Sequence[Sequence[str]], truncate: bool):
    seqs = [model.vocab.encode(s) for s in batch]
    if truncate:
        seqs = [s[: model.config.max_len] for s in seqs]
    T = max(len(s) for s in seqs) + 1
    enc = np.full((len(seqs), T), PAD_ID)
    dec_in = np.full((len(seqs), T), PAD_ID)
    mask = np.zeros((len(seqs), T), dtype=bool)
    for b, s in enumerate(seqs):
        enc[b, : len(s) + 1] = s + [END_ID]
        dec_in[b, : len(s) + 1] = [START_ID] + s
        mask[b, : len(s) + 1] = True
    return enc, dec_in, mask


def _encode(P: dict[str, Tensor], ids: np.ndarray, mask: np.ndarray):
    gru = GruParams.from_dict(P, "enc")
    x = ag.take_rows(P["embedding"], ids)
    B, T = ids.shape
    h = Tensor(np.zeros((B, P["enc.Uz"].shape[0])))
    states = []
    for t in range(T):
        h_new = gru_step(gru, _slice_time(x, t), h)
        h = ag.where(mask[:, t:t + 1], h_new, h)
        states.append(h)
    return ag.stack(states, axis=1), h


def _slice_time(x: Tensor, t: int) -> Tensor:
    data = x.data[:, t]

    def backward(g):
        out = np.zeros_like(x.data)
        out[:, t] = g
        return (out,)

    return ag._make(data, (x,), backward)


def _decode_loss(P: dict[str, Tensor], enc_states: Tensor, enc_mask, init: Tensor,
                 dec_in: np.ndarray, targets: np.ndarray, tmask: np.ndarray) -> Tensor:
    gru = GruParams.from_dict(P, "dec")
    keys = enc_states @ P["att.W1"]
    emb = ag.take_rows(P["embedding"], dec_in)
    s = init
    outs = []
    for t in range(dec_in.shape[1]):
        context, _ = attention(P["att.W1"], P["att.W2"], P["att.v"], s, enc_states,
                               enc_mask, keys=keys)
        s = gru_step(gru, ag.concat([_slice_time(emb, t), context]), s)
        outs.append(s)
    logits = ag.stack(outs, axis=1) @ P["out.W"] + P["out.b"]
    return ag.cross_entropy(logits, targets, tmask)


def _targets(dec_in: np.ndarray, mask: np.ndarray) -> np.ndarray:
    targets = np.full_like(dec_in, PAD_ID)
    targets[:, :-1] = dec_in[:, 1:]
    lengths = mask.sum(axis=1)
    targets[np.arange(len(dec_in)), lengths - 1] = END_ID
    return targets


def batch_loss(model: EncoderModel, batch: Sequence[Sequence[str]], grad: bool = False):
    """Mean per-step reconstruction cross-entropy over a batch of sentences.

    Returns (loss tensor, parameter tensors)."""
    P = _tensors(model, grad)
    enc_ids, dec_in, mask = _batch_ids(model, batch, truncate=True)
    states, final = _encode(P, enc_ids, mask)
    loss = _decode_loss(P, states, mask, final, dec_in, _targets(dec_in, mask), mask)
    return loss, P


def corpus_loss(model: EncoderModel, corpus: Sequence[Sequence[str]], batch_size: int = 64) -> float:
    """Step-weighted mean reconstruction loss over ``corpus`` (no training)."""
    total = weight = 0.0
    corpus = [s for s in corpus if len(s) > 0]
    for start in range(0, len(corpus), batch_size):
        batch = corpus[start:start + batch_size]
        loss, _ = batch_loss(model, batch)
        n_steps = sum(min(len(s), model.config.max_len) + 1 for s in batch)
        total += float(loss.data) * n_steps
        weight += n_steps
    return total / weight


def encode(model: EncoderModel, seq: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    """Hidden states (len(seq) + 1, H) and the intrinsic vector (H,).

    Unknown tokens map to ``<unk>``; no truncation is applied.
    """
    if len(seq) == 0:
        raise ValueError("cannot encode an empty sentence")
    P = _tensors(model, grad=False)
    enc_ids, _, mask = _batch_ids(model, [seq], truncate=False)
    states, final = _encode(P, enc_ids, mask)
    return states.data[0], final.data[0]


def intrinsic_vector(model: EncoderModel, seq: Sequence[str]) -> np.ndarray:
    return encode(model, seq)[1]


def decode_train(model: EncoderModel, encoder_out, target: Sequence[str]):
    """Teacher-forced reconstruction loss of ``target`` given ``encoder_out``
    (the pair returned by :func:`encode`). Returns (mean loss, truncated flag)."""
    if len(target) == 0:
        raise ValueError("target must be nonempty")
    truncated = len(target) > model.config.max_len
    P = _tensors(model, grad=False)
    states, intrinsic = encoder_out
    _, dec_in, mask = _batch_ids(model, [target], truncate=True)
    enc_mask = np.ones((1, len(states)), dtype=bool)
    loss = _decode_loss(P, Tensor(states[None]), enc_mask, Tensor(intrinsic[None]),
                        dec_in, _targets(dec_in, mask), mask)
    return float(loss.data), truncated


def reconstruct(model: EncoderModel, seq: Sequence[str]) -> list[str]:
    """Greedy decoding from ``<start>`` until ``<end>`` or ``max_len`` tokens."""
    states, intrinsic = encode(model, seq)
    P = model.params
    gru = GruParams.from_dict(P, "dec")
    enc = states[None]
    keys = enc @ P["att.W1"]
    s = intrinsic[None]
    prev = START_ID
    out: list[int] = []
    for _ in range(model.config.max_len):
        context, _ = attention(P["att.W1"], P["att.W2"], P["att.v"], s, enc, keys=Tensor(keys))
        x = np.concatenate([P["embedding"][[prev]], context.data], axis=-1)
        s = gru_step(gru, x, s).data
        logits = s @ P["out.W"] + P["out.b"]
        prev = int(np.argmax(logits[0]))
        if prev == END_ID:
            break
        out.append(prev)
    return model.vocab.decode(out)


# --------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    epochs: int = 10
    lr: float = 0.5
    batch_size: int = 16
    seed: int = 0
    optimizer: str = "sgd"   # or "adam"
    clip: float = 5.0
    lr_decay: float = 1.0    # per-epoch multiplier


@dataclass
class TrainResult:
    model: EncoderModel
    losses: list[float] = field(default_factory=list)


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    norm = float(np.sqrt(sum((g * g).sum() for g in grads.values())))
    if max_norm and norm > max_norm:
        for g in grads.values():
            g *= max_norm / norm
    return norm


class _Adam:
    def __init__(self, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.m, self.v, self.t = {}, {}, 0

    def step(self, params, grads):
        self.t += 1
        for k, g in grads.items():
            m = self.m[k] = self.b1 * self.m.get(k, 0.0) + (1 - self.b1) * g
            v = self.v[k] = self.b2 * self.v.get(k, 0.0) + (1 - self.b2) * g * g
            m_hat = m / (1 - self.b1 ** self.t)
            v_hat = v / (1 - self.b2 ** self.t)
            params[k] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for k, g in grads.items():
            params[k] -= self.lr * g


def train_autoencoder(model: EncoderModel, corpus: Sequence[Sequence[str]],
                      config: TrainConfig | None = None, min_sentences: int = 50) -> TrainResult:
    """Self-supervised reconstruction training on a copy of ``model``.

    Returns the trained copy and the epoch-mean loss curve. The embedding
    matrix is not touched when ``model.frozen_embedding`` is set.
    """
    cfg = config or TrainConfig()
    corpus = [list(s) for s in corpus if len(s) > 0]
    if len(corpus) < min_sentences:
        raise ValueError(f"need >= {min_sentences} sentences, got {len(corpus)}")
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    if cfg.optimizer == "adam":
        opt = _Adam(cfg.lr)
    elif cfg.optimizer == "sgd":
        opt = _Sgd(cfg.lr)
    else:
        raise ValueError(f"unknown optimizer {cfg.optimizer!r}")

    losses = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(corpus))
        total = weight = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [corpus[i] for i in order[start:start + cfg.batch_size]]
            try:
                loss, P = batch_loss(model, batch, grad=True)
                loss.backward()
            except FloatingPointError as exc:
                raise TrainingDiverged(f"non-finite values at epoch {epoch}, "
                                       f"batch starting {start}: {exc}") from exc
            if not np.isfinite(loss.data):
                raise TrainingDiverged(f"loss is NaN at epoch {epoch}")
            grads = {k: P[k].grad for k in model.trainable() if P[k].grad is not None}
            clip_gradients(grads, cfg.clip)
            opt.step(model.params, grads)
            n_steps = sum(min(len(s), model.config.max_len) + 1 for s in batch)
            total += float(loss.data) * n_steps
            weight += n_steps
        losses.append(total / weight)
        opt.lr *= cfg.lr_decay
        log.debug("epoch %d loss %.4f", epoch, losses[-1])
    return TrainResult(model, losses)


# --------------------------------------------------------------------------
# checkpoints


def save_checkpoint(model: EncoderModel, path: str | Path) -> Path:
    """Write ``manifest.txt``, ``vocab.txt`` and little-endian float64
    ``params.bin`` into directory ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    cfg = model.config
    lines = [
        "format = i2ce-checkpoint",
        f"version = {CHECKPOINT_VERSION}",
        f"config.d = {cfg.d}",
        f"config.hidden = {cfg.hidden}",
        f"config.attn = {cfg.attn}",
        f"config.max_len = {cfg.max_len}",
        f"frozen_embedding = {str(model.frozen_embedding).lower()}",
        f"vocab_size = {len(model.vocab)}",
        f"vocab_sha256 = {model.vocab.sha256()}",
    ]
    offset = 0
    with open(path / "params.bin", "wb") as fh:
        for name, arr in model.params.items():
            raw = np.ascontiguousarray(arr, dtype="<f8").tobytes()
            fh.write(raw)
            shape = "x".join(map(str, arr.shape))
            lines.append(f"array.{name} = {shape} @ {offset}")
            offset += len(raw)
    (path / "manifest.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (path / "vocab.txt").write_text("\n".join(model.vocab.tokens) + "\n", encoding="utf-8")
    return path


def load_checkpoint(path: str | Path) -> EncoderModel:
    path = Path(path)
    manifest = {}
    arrays = []
    for line in (path / "manifest.txt").read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        key, _, value = (s.strip() for s in line.partition("="))
        if key.startswith("array."):
            shape, _, offset = value.partition("@")
            dims = tuple(int(x) for x in shape.strip().split("x") if x)
            arrays.append((key[len("array."):], dims, int(offset)))
        else:
            manifest[key] = value
    if manifest.get("format") != "i2ce-checkpoint":
        raise ValueError(f"{path}: not a checkpoint")
    if int(manifest["version"]) != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {manifest['version']}")
    text = (path / "vocab.txt").read_text(encoding="utf-8")
    vocab = Vocabulary(t for t in text.split("\n") if t)
    if vocab.sha256() != manifest["vocab_sha256"]:
        raise ValueError(f"{path}: vocabulary hash mismatch")
    raw = (path / "params.bin").read_bytes()
    params = {}
    for name, dims, offset in arrays:
        count = int(np.prod(dims)) if dims else 1
        params[name] = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(dims).astype(np.float64)
    config = ModelConfig(int(manifest["config.d"]), int(manifest["config.hidden"]),
                         int(manifest["config.attn"]), int(manifest["config.max_len"]))
    return EncoderModel(vocab, params, config, manifest["frozen_embedding"] == "true")
