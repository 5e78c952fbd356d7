"""Train the sentence auto-encoder in two stages and score with it.

Stage one reads generic sentences, stage two adapts to captions. The
embedding layer is the skip-gram table, frozen. Takes about a minute.

Run: python demos/train_i2ce.py [--out checkpoints/]
"""

import argparse
import time

from i2ce import toyworld
from i2ce.embeddings import mean_metric
from i2ce.metric import i2ce_pair, train_two_stage
from i2ce.neural import reconstruct
from i2ce.text import tokenize

parser = argparse.ArgumentParser()
parser.add_argument("--out", help="directory for the stage1/ and stage2/ checkpoints")
args = parser.parse_args()

start = time.perf_counter()
table = toyworld.desk_embeddings()
plan = toyworld.desk_training_plan(args.out)
result = train_two_stage(plan, table)
model = result.model
print(f"trained in {time.perf_counter() - start:.0f}s, vocabulary {len(model.vocab)}")
print(f"stage 1 loss {result.stage1_initial_loss:.3f} (untrained) -> {result.stage1_losses[-1]:.3f}")
print(f"stage 2 loss {result.stage2_initial_loss:.3f} (warm start) -> {result.stage2_losses[-1]:.3f}")

captions = plan.stage2_corpus
exact = sum(reconstruct(model, s) == s for s in captions)
print(f"greedy reconstruction: {exact}/{len(captions)} exact")
print("  in :", " ".join(captions[0]))
print("  out:", " ".join(reconstruct(model, captions[0])))

# the same words in another order: the centroid cannot tell, the encoder can
a = tokenize("a black cat is sleeping on the couch")
b = tokenize("the couch is sleeping on a black cat")
print(f"\nreordered pair: I2CE {i2ce_pair(model, a, b):.3f}, MEAN {mean_metric(a, [b], table).value:.3f}")
for other in ("a small black kitten is napping on the sofa", "a man riding in the street with a bike"):
    print(f"I2CE {i2ce_pair(model, a, tokenize(other)):.3f}  {other}")

for path in result.checkpoints:
    print("checkpoint:", path)
