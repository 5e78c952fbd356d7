"""Tokenization, stop words, n-grams and vocabularies shared by every metric."""

from __future__ import annotations

import hashlib
import string
from collections import Counter
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

PAD, START, END, UNK = "<pad>", "<start>", "<end>", "<unk>"
RESERVED = (PAD, START, END, UNK)
PAD_ID, START_ID, END_ID, UNK_ID = range(4)

STOPWORDS_FILE = "stopwords_en.txt"
STOPWORDS_SHA256 = "649e2341238138974f7fc014ba2c3655dc334605136791a9d1918a41fca86143"

_PUNCT = string.punctuation


def tokenize(raw: str) -> list[str]:
    """Lowercase ``raw``, split on whitespace and strip ASCII punctuation at
    token boundaries.

    Interior punctuation survives (``don't``, ``t-shirt``); tokens made only of
    punctuation are dropped.

    >>> tokenize("A cat sits.")
    ['a', 'cat', 'sits']
    """
    out = []
    for piece in raw.lower().split():
        tok = piece.strip(_PUNCT)
        if tok:
            out.append(tok)
    return out


@lru_cache(maxsize=None)
def load_stopwords() -> frozenset[str]:
    """The shipped 179-word English stop list."""
    text = resources.files("i2ce.data").joinpath(STOPWORDS_FILE).read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


def remove_stopwords(seq: Sequence[str], stopwords: Iterable[str] | None = None) -> list[str]:
    stop = load_stopwords() if stopwords is None else stopwords
    if not isinstance(stop, (set, frozenset)):
        stop = frozenset(stop)
    return [tok for tok in seq if tok not in stop]


def ngrams(seq: Sequence[str], n: int) -> Counter:
    """Count the contiguous ``n``-grams of ``seq`` (keys are tuples)."""
    if not 1 <= n <= 4:
        raise ValueError(f"n-gram order must be in 1..4, got {n}")
    return Counter(tuple(seq[i:i + n]) for i in range(len(seq) - n + 1))


class Vocabulary:
    """Bijective token <-> id map with four reserved ids.

    Ids 0..3 are ``<pad>``, ``<start>``, ``<end>``, ``<unk>``; the rest follow
    in the order given at construction.
    """

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: list[str] = list(RESERVED)
        self.stoi: dict[str, int] = {tok: i for i, tok in enumerate(RESERVED)}
        for tok in tokens:
            if tok in self.stoi:
                raise ValueError(f"duplicate vocabulary token {tok!r}")
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def __repr__(self) -> str:
        return f"Vocabulary(size={len(self)})"

    @property
    def tokens(self) -> list[str]:
        """Non-reserved tokens in id order."""
        return self.itos[len(RESERVED):]

    def id(self, tok: str) -> int:
        return self.stoi.get(tok, UNK_ID)

    def encode(self, seq: Sequence[str]) -> list[int]:
        return [self.stoi.get(tok, UNK_ID) for tok in seq]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.itos[i] for i in ids]

    def sha256(self) -> str:
        return hashlib.sha256("\n".join(self.itos).encode("utf-8")).hexdigest()


def build_vocab(corpus: Sequence[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Vocabulary of tokens seen at least ``min_count`` times.

    Ids are assigned by descending frequency, ties broken lexicographically.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(tok for seq in corpus for tok in seq)
    for tok in RESERVED:
        counts.pop(tok, None)
    if not counts:
        raise ValueError("empty corpus: cannot build a vocabulary")
    kept = sorted((tok for tok, c in counts.items() if c >= min_count),
                  key=lambda tok: (-counts[tok], tok))
    return Vocabulary(kept)
