"""Hard-matching metrics on a handful of captions.

Run: python demos/hard_metrics.py
"""

from i2ce.classic import align, bleu, cider, meteor_lite, rouge_l
from i2ce.text import remove_stopwords, tokenize

refs = [tokenize(s) for s in (
    "A black cat is sleeping on the couch.",
    "The cat naps on a sofa.",
    "A small cat sleeping on a couch next to a pillow.",
)]
candidates = {
    "close": "a black cat sleeping on the couch",
    "synonyms": "a dark kitten napping on the sofa",
    "scrambled": "couch the on sleeping cat black a",
    "wrong": "a dog runs in the park",
}

# clipped n-gram precision per order, times the corpus brevity penalty
for name, text in candidates.items():
    cand = tokenize(text)
    scores = bleu([(cand, refs)])
    print(f"{name:10s}", " ".join(f"{s.metric_name}={s.value:.3f}" for s in scores))

# the scrambled caption keeps every unigram, so B@1 is blind to word order;
# higher orders and the LCS-based ROUGE-L are not
scrambled = tokenize(candidates["scrambled"])
print("\nROUGE-L close    ", round(rouge_l(tokenize(candidates["close"]), refs).value, 3))
print("ROUGE-L scrambled", round(rouge_l(scrambled, refs).value, 3))

# METEOR-lite: exact matches only, with a fragmentation penalty
m, chunks = align(scrambled, refs[0])
print(f"\nscrambled vs first reference: {m} matches in {chunks} chunks")
print("METEOR close    ", round(meteor_lite(tokenize(candidates["close"]), refs).value, 3))
print("METEOR scrambled", round(meteor_lite(scrambled, refs).value, 3))

# CIDEr needs at least two reference sets for idf to mean anything
corpus = [(tokenize(candidates["close"]), refs),
          (tokenize("a man rides a bike down the street"),
           [tokenize("a man riding a bicycle on a road"), tokenize("a guy on a bike in the street")])]
print("\nCIDEr", round(cider(corpus).value, 3))

# stop words carry a good share of unigram matches
syn = tokenize(candidates["synonyms"])
print("\nB@1  with stop words   ", round(bleu([(syn, refs)], 1)[0].value, 3))
stripped = [(remove_stopwords(syn), [remove_stopwords(r) for r in refs])]
print("B@1* without stop words", round(bleu(stripped, 1)[0].value, 3))
