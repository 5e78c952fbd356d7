"""Word vectors: text-format I/O, skip-gram training with negative sampling,
and the MEAN centroid metric."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .classic import MetricScore
from .text import RESERVED, Vocabulary, build_vocab, remove_stopwords

log = logging.getLogger(__name__)

SKIP, ZERO = "skip", "zero-vector"


@dataclass
class EmbeddingTable:
    """Vectors indexed by vocabulary id.

    ``known[i]`` is False for reserved ids and for tokens that had no vector
    in the source; those rows are zero.
    """

    vocab: Vocabulary
    vectors: np.ndarray
    known: np.ndarray = field(default=None)
    unk_policy: str = SKIP

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.known is None:
            self.known = np.ones(len(self.vocab), dtype=bool)
            self.known[: len(RESERVED)] = False
        if self.vectors.shape[0] != len(self.vocab):
            raise ValueError("one row per vocabulary id is required")
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 2:
            raise ValueError("embedding width must be >= 2")
        if not np.isfinite(self.vectors).all():
            raise ValueError("embedding table contains non-finite values")
        if self.unk_policy not in (SKIP, ZERO):
            raise ValueError(f"unknown unk_policy {self.unk_policy!r}")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def missing(self) -> list[str]:
        """Vocabulary tokens with no vector."""
        return [t for t, k in zip(self.vocab.itos, self.known) if not k and t not in RESERVED]

    def __contains__(self, tok: str) -> bool:
        i = self.vocab.stoi.get(tok)
        return i is not None and bool(self.known[i])

    def __getitem__(self, tok: str) -> np.ndarray:
        return self.vectors[self.vocab.stoi[tok]]

    def lookup(self, seq: Sequence[str]) -> tuple[list[str], np.ndarray]:
        """Tokens that resolve under the unk policy, with their vectors."""
        kept = []
        for tok in seq:
            if tok in self:
                kept.append(tok)
            elif self.unk_policy == ZERO:
                kept.append(tok)
        rows = [self[t] if t in self else np.zeros(self.dim) for t in kept]
        return kept, np.array(rows).reshape(len(kept), self.dim)


def load_embeddings(path: str | Path, vocab: Vocabulary | None = None,
                    unk_policy: str = SKIP) -> EmbeddingTable:
    """Read a ``token v1 ... vd`` text file.

    With ``vocab`` given, only its tokens are kept and the rest of the vocab is
    flagged missing; otherwise the file defines the vocabulary in file order.
    """
    entries: dict[str, np.ndarray] = {}
    order: list[str] = []
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            tok, raw = parts[0], parts[1:]
            try:
                vec = np.array([float(x) for x in raw], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed number in {line.strip()!r}") from None
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or dim == 0:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, got {len(vec)}")
            if vocab is None or tok in vocab:
                if tok not in entries:
                    order.append(tok)
                entries[tok] = vec
    if dim is None:
        raise ValueError(f"{path}: empty embedding file")
    if vocab is None:
        vocab = Vocabulary(order)
    vectors = np.zeros((len(vocab), dim))
    known = np.zeros(len(vocab), dtype=bool)
    for tok, vec in entries.items():
        i = vocab.stoi[tok]
        vectors[i] = vec
        known[i] = True
    known[: len(RESERVED)] = False
    table = EmbeddingTable(vocab, vectors, known, unk_policy)
    if table.missing:
        log.info("%d vocabulary tokens have no vector in %s", len(table.missing), path)
    return table


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, tok in enumerate(table.vocab.itos):
            if table.known[i]:
                fh.write(tok + " " + " ".join(repr(float(x)) for x in table.vectors[i]) + "\n")


# --------------------------------------------------------------------------
# skip-gram with negative sampling


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return np.exp(_log_sigmoid(x))


@dataclass
class SkipGramBatch:
    targets: np.ndarray    # (B,)
    contexts: np.ndarray   # (B,)
    negatives: np.ndarray  # (B, k)

    def __post_init__(self):
        self.targets = np.asarray(self.targets, dtype=np.int64)
        self.contexts = np.asarray(self.contexts, dtype=np.int64)
        self.negatives = np.asarray(self.negatives, dtype=np.int64).reshape(len(self.targets), -1)
        if self.negatives.shape[1] < 1:
            raise ValueError("need at least one negative per sample")


def skipgram_loss(target_vecs: np.ndarray, context_vecs: np.ndarray, batch: SkipGramBatch) -> float:
    """Objective to maximize: sum over samples of
    log sigma(c.t) + sum_i log sigma(-n_i.t)."""
    t = target_vecs[batch.targets]
    c = context_vecs[batch.contexts]
    n = context_vecs[batch.negatives]
    pos = np.einsum("bd,bd->b", c, t)
    neg = np.einsum("bkd,bd->bk", n, t)
    return float(_log_sigmoid(pos).sum() + _log_sigmoid(-neg).sum())


def skipgram_grad(target_vecs, context_vecs, batch: SkipGramBatch):
    """Objective value and its gradient with respect to both matrices."""
    t = target_vecs[batch.targets]
    c = context_vecs[batch.contexts]
    n = context_vecs[batch.negatives]
    pos = np.einsum("bd,bd->b", c, t)
    neg = np.einsum("bkd,bd->bk", n, t)
    value = float(_log_sigmoid(pos).sum() + _log_sigmoid(-neg).sum())
    gp = 1.0 - _sigmoid(pos)          # d/d pos of log sigma(pos)
    gn = -_sigmoid(neg)               # d/d neg of log sigma(-neg)
    d_t = gp[:, None] * c + np.einsum("bk,bkd->bd", gn, n)
    d_c = gp[:, None] * t
    d_n = gn[:, :, None] * t[:, None, :]
    g_target = np.zeros_like(target_vecs)
    g_context = np.zeros_like(context_vecs)
    np.add.at(g_target, batch.targets, d_t)
    np.add.at(g_context, batch.contexts, d_c)
    np.add.at(g_context, batch.negatives, d_n)
    return value, g_target, g_context


@dataclass
class SkipGramConfig:
    dim: int = 50
    window: int = 2
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.05
    batch_size: int = 256
    min_count: int = 1
    seed: int = 0


def noise_distribution(counts: np.ndarray, power: float = 0.75) -> np.ndarray:
    p = counts.astype(np.float64) ** power
    return p / p.sum()


def _pairs(ids: list[list[int]], window: int) -> np.ndarray:
    out = []
    for sent in ids:
        for i, t in enumerate(sent):
            for j in range(max(0, i - window), min(len(sent), i + window + 1)):
                if j != i:
                    out.append((t, sent[j]))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def train_skipgram(corpus: Sequence[Sequence[str]], config: SkipGramConfig | None = None,
                   return_history: bool = False):
    """Train target/context embeddings by SGD on the negative-sampling
    objective; returns the target matrix as an :class:`EmbeddingTable`.

    Deterministic for a given ``config.seed``.
    """
    cfg = config or SkipGramConfig()
    n_tokens = sum(len(s) for s in corpus)
    if n_tokens < 100:
        raise ValueError(f"skip-gram training needs >= 100 tokens, got {n_tokens}")
    vocab = build_vocab(corpus, cfg.min_count)
    if len(vocab.tokens) < 5:
        raise ValueError("vocabulary too small for skip-gram training (< 5 tokens)")
    rng = np.random.default_rng(cfg.seed)
    size, d = len(vocab), cfg.dim
    target = rng.uniform(-0.5 / d, 0.5 / d, (size, d))
    context = rng.uniform(-0.5 / d, 0.5 / d, (size, d))

    ids = [[i for i in vocab.encode(s) if i >= len(RESERVED)] for s in corpus]
    counts = np.zeros(size)
    for sent in ids:
        np.add.at(counts, sent, 1)
    noise = noise_distribution(counts)
    pairs = _pairs(ids, cfg.window)

    history = []
    n_batches = -(-len(pairs) // cfg.batch_size) * cfg.epochs
    done = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        total = 0.0
        for start in range(0, len(order), cfg.batch_size):
            # linear decay, as in the reference word2vec trainer
            lr = cfg.lr * max(1e-4, 1.0 - done / n_batches)
            done += 1
            chunk = pairs[order[start:start + cfg.batch_size]]
            negs = rng.choice(size, size=(len(chunk), cfg.negatives), p=noise)
            batch = SkipGramBatch(chunk[:, 0], chunk[:, 1], negs)
            value, g_t, g_c = skipgram_grad(target, context, batch)
            target += lr * g_t
            context += lr * g_c
            total += value
        history.append(-total / len(pairs))

    known = np.ones(size, dtype=bool)
    known[: len(RESERVED)] = False
    vectors = target.copy()
    vectors[~known] = 0.0
    table = EmbeddingTable(vocab, vectors, known)
    return (table, history) if return_history else table


# --------------------------------------------------------------------------
# MEAN


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def mean_vector(seq: Sequence[str], table: EmbeddingTable) -> np.ndarray | None:
    """Centroid of the resolvable word vectors, or None when nothing resolves.

    Rows are summed in sorted token order so the result does not depend on
    word order at all, not even in the last bit.
    """
    kept, rows = table.lookup(sorted(seq))
    if not kept:
        return None
    return rows.mean(axis=0)


def mean_metric(candidate: Sequence[str], refs: Sequence[Sequence[str]],
                table: EmbeddingTable, stopwords=None) -> MetricScore:
    """Mean over references of the cosine between stop-word-free centroids."""
    if not refs:
        return MetricScore("MEAN", 0.0)
    c = mean_vector(remove_stopwords(candidate, stopwords), table)
    total = 0.0
    for ref in refs:
        r = mean_vector(remove_stopwords(ref, stopwords), table)
        if c is not None and r is not None:
            total += cosine(c, r)
    return MetricScore("MEAN", total / len(refs))
