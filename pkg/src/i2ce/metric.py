"""The intrinsic-vector caption metric: cosine similarity between encoder
final states, plus the two-stage (generic, then caption) training recipe."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence


from .classic import MetricScore
from .embeddings import EmbeddingTable, cosine
from .neural import (EncoderModel, ModelConfig, TrainConfig, TrainingDiverged, corpus_loss,
                     init_model, intrinsic_vector, save_checkpoint, train_autoencoder)
from .text import build_vocab, tokenize

log = logging.getLogger(__name__)

__all__ = ["cosine", "i2ce_pair", "i2ce_candidate", "i2ce_corpus", "TrainingPlan",
           "TwoStageResult", "train_two_stage", "read_corpus"]


def i2ce_pair(model: EncoderModel, candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Cosine between the intrinsic vectors of two whole sentences."""
    if not candidate or not reference:
        raise ValueError("both sentences must be nonempty")
    return cosine(intrinsic_vector(model, candidate), intrinsic_vector(model, reference))


def i2ce_candidate(model: EncoderModel, candidate: Sequence[str],
                   refs: Sequence[Sequence[str]], aggregate: str = "mean") -> MetricScore:
    if not refs:
        raise ValueError("at least one reference is required")
    c = intrinsic_vector(model, candidate)
    scores = sorted(cosine(c, intrinsic_vector(model, r)) for r in refs)
    if aggregate == "mean":
        value = sum(scores) / len(scores)
    elif aggregate == "max":
        value = scores[-1]
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    return MetricScore("I2CE", value)


def i2ce_corpus(model: EncoderModel, corpus, aggregate: str = "mean") -> MetricScore:
    if not corpus:
        raise ValueError("corpus must be nonempty")
    values = [i2ce_candidate(model, c, refs, aggregate).value for c, refs in corpus]
    return MetricScore("I2CE", sum(values) / len(values))


def read_corpus(path: str | Path) -> list[list[str]]:
    """One sentence per line; blank lines are skipped."""
    with open(path, encoding="utf-8") as fh:
        return [toks for toks in (tokenize(line) for line in fh) if toks]


@dataclass
class TrainingPlan:
    stage1_corpus: Sequence[Sequence[str]] | str | Path | None
    stage2_corpus: Sequence[Sequence[str]] | str | Path
    stage1: TrainConfig = field(default_factory=TrainConfig)
    stage2: TrainConfig = field(default_factory=TrainConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    min_count: int = 2
    init_seed: int = 0
    skip_stage1: bool = False
    checkpoint_dir: str | Path | None = None


@dataclass
class TwoStageResult:
    model: EncoderModel
    stage1_losses: list[float]
    stage2_losses: list[float]
    stage1_initial_loss: float | None = None
    stage2_initial_loss: float | None = None
    checkpoints: list[Path] = field(default_factory=list)


def _sentences(src) -> list[list[str]]:
    if src is None:
        return []
    if isinstance(src, (str, Path)):
        return read_corpus(src)
    return [list(s) for s in src if len(s) > 0]


def coverage(corpus: Sequence[Sequence[str]], table: EmbeddingTable) -> float:
    total = sum(len(s) for s in corpus)
    hit = sum(tok in table for s in corpus for tok in s)
    return hit / total if total else 0.0


def train_two_stage(plan: TrainingPlan, embeddings: EmbeddingTable | None) -> TwoStageResult:
    """Train on the generic corpus, then keep training on the caption corpus.

    The vocabulary spans both corpora so the second stage warm-starts every
    parameter. A checkpoint is written after each stage when
    ``plan.checkpoint_dir`` is set.
    """
    stage1 = _sentences(plan.stage1_corpus)
    stage2 = _sentences(plan.stage2_corpus)
    if not stage2:
        raise ValueError("stage-2 corpus is empty")
    if not stage1 and not plan.skip_stage1:
        raise ValueError("stage-1 corpus is empty; pass skip_stage1=True to train on captions only")
    if plan.skip_stage1:
        stage1 = []

    vocab = build_vocab(stage1 + stage2, plan.min_count)
    if embeddings is not None:
        cov = coverage(stage1 + stage2, embeddings)
        if cov < 0.8:
            warnings.warn(f"embeddings cover only {cov:.1%} of corpus tokens", stacklevel=2)
    model = init_model(vocab, plan.model, embeddings, seed=plan.init_seed)

    checkpoints = []
    s1_losses: list[float] = []
    s1_initial = None
    if stage1:
        s1_initial = corpus_loss(model, stage1)
        try:
            result = train_autoencoder(model, stage1, plan.stage1)
        except TrainingDiverged as exc:
            raise TrainingDiverged(f"stage 1: {exc}") from exc
        model, s1_losses = result.model, result.losses
        if plan.checkpoint_dir is not None:
            checkpoints.append(save_checkpoint(model, Path(plan.checkpoint_dir) / "stage1"))
    s2_initial = corpus_loss(model, stage2)
    try:
        result = train_autoencoder(model, stage2, plan.stage2)
    except TrainingDiverged as exc:
        raise TrainingDiverged(f"stage 2: {exc}") from exc
    model = result.model
    if plan.checkpoint_dir is not None:
        checkpoints.append(save_checkpoint(model, Path(plan.checkpoint_dir) / "stage2"))
    return TwoStageResult(model, s1_losses, result.losses, s1_initial, s2_initial, checkpoints)
