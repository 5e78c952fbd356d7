"""Hard-matching caption metrics: BLEU, ROUGE-L, METEOR-lite and CIDEr."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from .text import ngrams

HIGHER = "higher-better"
LOWER = "lower-better"

Tokens = Sequence[str]
Corpus = Sequence[tuple[Tokens, Sequence[Tokens]]]


@dataclass(frozen=True)
class MetricScore:
    metric_name: str
    value: float | None  # None marks a missing value
    direction: str = HIGHER

    def __float__(self) -> float:
        if self.value is None:
            raise ValueError(f"{self.metric_name} is missing")
        return float(self.value)


def clipped_counts(candidate: Counter, refs: Sequence[Counter]) -> dict:
    """min(candidate count, max reference count) for every candidate n-gram."""
    out = {}
    for gram, count in candidate.items():
        best = max((ref.get(gram, 0) for ref in refs), default=0)
        out[gram] = min(count, best)
    return out


def _closest_ref_len(cand_len: int, ref_lens: Sequence[int]) -> int:
    # ties go to the shorter reference
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len == 0:
        return 0.0
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def bleu_stats(corpus: Corpus, max_n: int = 4):
    """Exact integer totals: (matches per n, totals per n, cand len, ref len)."""
    matches = [0] * max_n
    totals = [0] * max_n
    cand_len = ref_len = 0
    for cand, refs in corpus:
        cand_len += len(cand)
        ref_len += _closest_ref_len(len(cand), [len(r) for r in refs])
        for n in range(1, max_n + 1):
            cand_grams = ngrams(cand, n)
            clipped = clipped_counts(cand_grams, [ngrams(r, n) for r in refs])
            matches[n - 1] += sum(clipped.values())
            totals[n - 1] += sum(cand_grams.values())
    return matches, totals, cand_len, ref_len


def bleu(corpus: Corpus, max_n: int = 4, cumulative: bool = False) -> list[MetricScore]:
    """Corpus BLEU for orders 1..max_n, returned as ``B@1``..``B@max_n``.

    By default ``B@n`` is the clipped n-gram precision of order ``n`` times the
    corpus brevity penalty. With ``cumulative=True`` it is the brevity penalty
    times the geometric mean of precisions 1..n, as in the COCO toolkit.
    """
    if not corpus:
        raise ValueError("bleu needs a non-empty corpus")
    if not 1 <= max_n <= 4:
        raise ValueError("max_n must be in 1..4")
    matches, totals, c, r = bleu_stats(corpus, max_n)
    bp = brevity_penalty(c, r)
    precisions = [m / t if t else 0.0 for m, t in zip(matches, totals)]
    scores = []
    for n in range(1, max_n + 1):
        if cumulative:
            ps = precisions[:n]
            p = math.exp(sum(math.log(x) for x in ps) / n) if min(ps) > 0 else 0.0
        else:
            p = precisions[n - 1]
        scores.append(MetricScore(f"B@{n}", bp * p))
    return scores


def lcs_length(a: Tokens, b: Tokens) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: Tokens, refs: Sequence[Tokens], beta: float = 1.2) -> MetricScore:
    if not candidate:
        return MetricScore("ROUGE-L", 0.0)
    best = 0.0
    for ref in refs:
        lcs = lcs_length(candidate, ref)
        if lcs == 0 or not ref:
            continue
        rec = lcs / len(ref)
        prec = lcs / len(candidate)
        f = (1 + beta**2) * rec * prec / (rec + beta**2 * prec)
        best = max(best, f)
    return MetricScore("ROUGE-L", best)


def align(candidate: Tokens, ref: Tokens) -> tuple[int, int]:
    """Exact unigram alignment: (matches, chunks).

    Maximizes the number of matched tokens, then minimizes the number of
    chunks (runs contiguous and in order in both sentences). Exhaustive over
    which reference occurrence each candidate token takes, memoized on the set
    of reference positions already used.
    """
    positions = {}
    for j, tok in enumerate(ref):
        positions.setdefault(tok, []).append(j)
    n = len(candidate)

    @lru_cache(maxsize=None)
    def best(i: int, used: int, prev: int) -> tuple[int, int]:
        # returns (-matches, chunks) for candidate[i:], prev = ref pos of
        # candidate[i-1] if it was matched, else -2
        if i == n:
            return (0, 0)
        skip = best(i + 1, used, -2)
        result = skip
        for j in positions.get(candidate[i], ()):
            if used >> j & 1:
                continue
            neg, chunks = best(i + 1, used | (1 << j), j)
            cand = (neg - 1, chunks + (0 if j == prev + 1 else 1))
            if cand < result:
                result = cand
        return result

    neg, chunks = best(0, 0, -2)
    return -neg, chunks


def meteor_lite(candidate: Tokens, refs: Sequence[Tokens]) -> MetricScore:
    """METEOR with exact matching only (no stems or synonyms)."""
    best = 0.0
    for ref in refs:
        if not candidate or not ref:
            continue
        m, chunks = align(candidate, ref)
        if m == 0:
            continue
        p = m / len(candidate)
        r = m / len(ref)
        f = 10 * p * r / (r + 9 * p)
        penalty = 0.5 * (chunks / m) ** 3
        best = max(best, f * (1 - penalty))
    return MetricScore("METEOR", best)


def _tfidf(counts: Counter, df: Counter, log_n: float) -> dict:
    return {g: tf * (log_n - math.log(max(1.0, df[g]))) for g, tf in counts.items()}


def _cos(a: dict, b: dict) -> float:
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0 or nb == 0:
        return 0.0
    if len(a) > len(b):
        a, b = b, a
    return sum(v * b.get(g, 0.0) for g, v in a.items()) / (na * nb)


def cider_per_item(corpus: Corpus, max_n: int = 4) -> list[float]:
    """Per-candidate CIDEr. Document frequencies count reference sets."""
    if len(corpus) < 2:
        raise ValueError("CIDEr idf is undefined with fewer than two reference sets")
    log_n = math.log(len(corpus))
    dfs = []
    for n in range(1, max_n + 1):
        df = Counter()
        for _, refs in corpus:
            df.update({g for r in refs for g in ngrams(r, n)})
        dfs.append(df)
    scores = []
    for cand, refs in corpus:
        total = 0.0
        for n in range(1, max_n + 1):
            df = dfs[n - 1]
            vc = _tfidf(ngrams(cand, n), df, log_n)
            sims = [_cos(vc, _tfidf(ngrams(r, n), df, log_n)) for r in refs]
            total += sum(sims) / len(sims)
        scores.append(10.0 * total / max_n)
    return scores


def cider(corpus: Corpus, max_n: int = 4) -> MetricScore:
    per_item = cider_per_item(corpus, max_n)
    return MetricScore("CIDEr", sum(per_item) / len(per_item))
