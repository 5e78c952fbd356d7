import itertools
import math
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from helpers import oracle_bleu, oracle_lcs
from i2ce.classic import (align, bleu, brevity_penalty, cider, cider_per_item, clipped_counts,
                          lcs_length, meteor_lite, rouge_l)
from i2ce.text import ngrams, remove_stopwords

# -------------------------------------------------------------------------
# independent oracles


def brute_align(cand, ref):
    """Enumerate every one-to-one exact matching; best (matches, -chunks)."""
    best = (0, 0)
    pairs = [(i, j) for i, a in enumerate(cand) for j, b in enumerate(ref) if a == b]
    for k in range(len(pairs), 0, -1):
        for combo in itertools.combinations(pairs, k):
            if len({i for i, _ in combo}) < k or len({j for _, j in combo}) < k:
                continue
            combo = sorted(combo)
            chunks = 1 + sum(1 for (i1, j1), (i2, j2) in zip(combo, combo[1:])
                             if not (i2 == i1 + 1 and j2 == j1 + 1))
            if (k, -chunks) > (best[0], -best[1]) or best == (0, 0):
                best = (k, chunks)
        if best[0] == k:
            break
    return best


def random_sentence(rng, vocab, max_len, min_len=1):
    return [rng.choice(vocab) for _ in range(rng.randint(min_len, max_len))]


# -------------------------------------------------------------------------
# BLEU


def test_clipped_counts():
    assert clipped_counts(Counter({"the": 3}), [Counter({"the": 1}), Counter({"the": 2})]) == {"the": 2}
    assert clipped_counts(Counter({"cat": 1}), [Counter({"dog": 1})]) == {"cat": 0}
    assert clipped_counts(Counter(), [Counter({"dog": 1})]) == {}


def test_bleu_hand_examples():
    assert bleu([("a cat sits".split(), ["a cat sits".split()])], 1)[0].value == 1.0
    assert bleu([("the the the the".split(), ["the cat sat".split()])], 1)[0].value == 0.25
    value = bleu([("a cat".split(), ["a cat on a mat".split()])], 1)[0].value
    assert value == math.exp(1 - 5 / 2)


def test_bleu_names_and_errors():
    scores = bleu([("a b".split(), ["a b".split()])])
    assert [s.metric_name for s in scores] == ["B@1", "B@2", "B@3", "B@4"]
    assert scores[2].value == 0.0  # no trigrams at all
    with pytest.raises(ValueError):
        bleu([])
    with pytest.raises(ValueError):
        bleu([(["a"], [["a"]])], max_n=5)


def test_brevity_penalty_closest_reference_ties_to_shorter():
    # candidate of 3 against refs of 2 and 4: the tie goes to 2, so BP = 1
    # (taking 4 would give exp(1 - 4/3))
    assert bleu([(list("abc"), [list("ab"), list("abcd")])], 1)[0].value == 1.0
    assert brevity_penalty(0, 3) == 0.0


def test_bleu_cumulative_is_geometric_mean():
    corpus = [("a cat sits on the mat".split(), ["the cat sits on a mat".split()])]
    lit = [s.value for s in bleu(corpus)]
    cum = [s.value for s in bleu(corpus, cumulative=True)]
    assert cum[0] == lit[0]
    assert cum[1] == pytest.approx(math.sqrt(lit[0] * lit[1]))


def test_bleu_matches_bruteforce_oracle():
    rng = random.Random(1234)
    for _ in range(200):
        vocab = [f"w{i}" for i in range(rng.randint(2, 10))]
        corpus = [(random_sentence(rng, vocab, 8, 0),
                   [random_sentence(rng, vocab, 8) for _ in range(rng.randint(1, 4))])
                  for _ in range(rng.randint(1, 5))]
        if sum(len(c) for c, _ in corpus) == 0:
            continue
        got = [s.value for s in bleu(corpus, 4)]
        for g, want in zip(got, oracle_bleu(corpus, 4)):
            assert abs(g - want) <= 1e-9


words = st.sampled_from(list("abcdef"))
sentences = st.lists(words, min_size=1, max_size=8)
ref_sets = st.lists(sentences, min_size=1, max_size=4)


@settings(max_examples=100)
@given(sentences, ref_sets, st.randoms())
def test_hard_metrics_bounded_and_reference_order_invariant(cand, refs, rnd):
    shuffled = list(refs)
    rnd.shuffle(shuffled)
    for fn in (rouge_l, meteor_lite):
        a, b = fn(cand, refs).value, fn(cand, shuffled).value
        assert 0.0 <= a <= 1.0 and a == b
    for a, b in zip(bleu([(cand, refs)]), bleu([(cand, shuffled)])):
        assert 0.0 <= a.value <= 1.0 and a.value == b.value


@given(st.lists(st.tuples(st.lists(st.sampled_from(["a", "the", "cat", "on", "mat"]), min_size=1,
                                   max_size=8), ref_sets), min_size=1, max_size=4))
def test_stopword_removal_never_raises_unigram_matches(corpus):
    def clipped_sum(c):
        return sum(sum(clipped_counts(ngrams(x, 1), [ngrams(r, 1) for r in refs]).values())
                   for x, refs in c)
    stripped = [(remove_stopwords(c), [remove_stopwords(r) for r in refs]) for c, refs in corpus]
    assert clipped_sum(stripped) <= clipped_sum(corpus)


# -------------------------------------------------------------------------
# ROUGE-L


def test_rouge_examples():
    assert rouge_l(list("abc"), [list("abc")]).value == 1.0
    assert rouge_l(list("abc"), [list("def")]).value == 0.0
    # LCS 3, R = 1, P = 3/4, beta = 1.2; value from the F-measure definition
    r, p, b2 = 1.0, 0.75, 1.44
    assert rouge_l(list("abcd"), [list("acd")]).value == pytest.approx((1 + b2) * r * p / (r + b2 * p),
                                                                       abs=1e-15)
    assert rouge_l(list("abcd"), [list("acd")]).value == pytest.approx(0.8798076923076923, abs=1e-12)


def test_lcs_matches_dp_oracle():
    rng = random.Random(99)
    for _ in range(500):
        vocab = list("abcdefg")[: rng.randint(2, 7)]
        a = random_sentence(rng, vocab, 12, 0)
        b = random_sentence(rng, vocab, 12, 0)
        assert lcs_length(a, b) == oracle_lcs(a, b)


# -------------------------------------------------------------------------
# METEOR-lite


def test_meteor_hand_cases():
    assert meteor_lite(["a", "b"], [["b", "a"]]).value == 0.5
    assert meteor_lite(list("abc"), [list("abc")]).value == 1 - 0.5 * (1 / 3) ** 3
    assert meteor_lite(list("abc"), [list("xyz")]).value == 0.0


def test_meteor_prefers_fewer_chunks_among_max_alignments():
    # "a" can align to either occurrence; the one adjacent to "b" gives one chunk
    assert align(["a", "b"], ["a", "x", "a", "b"]) == (2, 1)


def test_align_matches_bruteforce():
    rng = random.Random(5)
    for _ in range(150):
        cand = random_sentence(rng, list("abc"), 6)
        ref = random_sentence(rng, list("abc"), 6)
        assert align(cand, ref) == brute_align(cand, ref)


# -------------------------------------------------------------------------
# CIDEr


def test_cider_needs_two_reference_sets():
    with pytest.raises(ValueError):
        cider([(["a"], [["a"]])])


def test_cider_identity_attains_maximum_and_disjoint_is_zero():
    corpus = [
        ("a cat on a mat".split(), ["a cat on a mat".split()]),
        ("dogs run fast".split(), ["birds fly high".split(), "fish swim deep".split()]),
        ("zebra".split(), ["cars drive on roads".split()]),
    ]
    scores = cider_per_item(corpus)
    assert scores[0] == max(scores) and scores[0] > 0
    assert scores[1] == 0.0 and scores[2] == 0.0


def test_cider_ngram_in_every_set_has_zero_idf():
    corpus = [(["x"], [["x", "a"]]), (["x"], [["x", "b"]])]
    assert cider(corpus).value == 0.0


@settings(max_examples=60)
@given(st.lists(st.tuples(sentences, ref_sets), min_size=2, max_size=4))
def test_cider_nonnegative(corpus):
    assert all(s >= 0 for s in cider_per_item(corpus))
