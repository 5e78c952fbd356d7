"""Skip-gram word vectors trained from scratch, and the MEAN centroid metric.

Run: python demos/word_vectors.py [--save vectors.txt]
"""

import argparse

import numpy as np

from i2ce import toyworld
from i2ce.embeddings import SkipGramConfig, cosine, mean_metric, save_embeddings, train_skipgram
from i2ce.text import tokenize

parser = argparse.ArgumentParser()
parser.add_argument("--save", help="write the vectors in text format")
args = parser.parse_args()

# toy captions plus looser general sentences; synonyms appear in shared contexts
text = toyworld.caption_corpus(800, 11, synonym_rate=0.5) + toyworld.generic_corpus(1000, 12)
corpus = [tokenize(s) for s in text]
print(len(corpus), "sentences,", sum(map(len, corpus)), "tokens")

cfg = SkipGramConfig(dim=32, window=3, negatives=5, epochs=5, lr=0.05, seed=0)
table, history = train_skipgram(corpus, cfg, return_history=True)
print("negative objective per pair, by epoch:", " ".join(f"{h:.3f}" for h in history))

# nearest neighbours by cosine
def neighbours(word, k=4):
    known = [t for t in table.vocab.tokens if t in table and t != word]
    sims = np.array([cosine(table[word], table[t]) for t in known])
    return [known[i] for i in np.argsort(-sims)[:k]]

for word in ("cat", "couch", "street", "sleeping"):
    print(f"{word:9s} ->", ", ".join(neighbours(word)), f"(synonym: {toyworld.SYNONYMS[word]})")

# MEAN: cosine between stop-word-free centroids, averaged over references
refs = [tokenize("a black cat is sleeping on the couch"), tokenize("the cat sleeps on a sofa")]
for cand in ("a black kitten napping on the sofa", "couch the on sleeping cat black a",
             "a man riding a bike in the street"):
    print(f"MEAN {mean_metric(tokenize(cand), refs, table).value:.3f}  {cand}")

if args.save:
    save_embeddings(table, args.save)
    print("saved", args.save)
