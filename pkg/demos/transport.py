"""Word Mover's Distance with the exact transportation simplex.

Run: python demos/transport.py
"""

import itertools

import numpy as np

from i2ce import toyworld
from i2ce.transport import check_optimality, cost_matrix, solve_transport, wmd
from i2ce.text import tokenize

rng = np.random.default_rng(0)

# a 3x4 problem with uneven weights
cost = cost_matrix(rng.normal(size=(3, 2)), rng.normal(size=(4, 2)))
supply = np.array([0.5, 0.3, 0.2])
demand = np.array([0.1, 0.4, 0.25, 0.25])
plan = solve_transport(cost, supply, demand)
np.set_printoptions(precision=3, suppress=True)
print("flows\n", plan.flows)
print("objective", round(plan.objective, 6))
print("row sums", plan.flows.sum(axis=1), "col sums", plan.flows.sum(axis=0))
print("dual certificate holds:", check_optimality(plan, cost))

# with uniform weights on equal-size sides the optimum is an assignment
n = 5
cost = cost_matrix(rng.normal(size=(n, 3)), rng.normal(size=(n, 3)))
w = np.full(n, 1 / n)
best = min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))) / n
print("\nsimplex", solve_transport(cost, w, w).objective, "brute force", best)

# on captions, with the desk word vectors
table = toyworld.desk_embeddings()
ref = tokenize("a black cat is sleeping on the couch")
for cand in ("a black kitten is napping on the sofa", "a black cat is sleeping on the couch",
             "a man riding a bike in the street"):
    print(f"WMD {wmd(tokenize(cand), [ref], table).value:.3f}  {cand}")
