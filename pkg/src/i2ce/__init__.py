"""Caption evaluation: n-gram metrics, word-vector metrics (MEAN, WMD) and the
intrinsic-vector metric I2CE built on a GRU sentence auto-encoder."""

from .classic import MetricScore, bleu, cider, meteor_lite, rouge_l
from .embeddings import EmbeddingTable, load_embeddings, mean_metric, train_skipgram
from .harness import EvaluationDataset, EvaluationReport, evaluate, load_dataset
from .metric import i2ce_candidate, i2ce_corpus, i2ce_pair, train_two_stage
from .neural import load_checkpoint, save_checkpoint
from .text import Vocabulary, build_vocab, remove_stopwords, tokenize
from .transport import solve_transport, wmd

__version__ = "0.1.0"

__all__ = [
    "MetricScore", "bleu", "cider", "meteor_lite", "rouge_l",
    "EmbeddingTable", "load_embeddings", "mean_metric", "train_skipgram",
    "EvaluationDataset", "EvaluationReport", "evaluate", "load_dataset",
    "i2ce_candidate", "i2ce_corpus", "i2ce_pair", "train_two_stage",
    "load_checkpoint", "save_checkpoint",
    "Vocabulary", "build_vocab", "remove_stopwords", "tokenize",
    "solve_transport", "wmd",
]
