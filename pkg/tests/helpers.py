"""Shared test oracles."""

import itertools
import math

import numpy as np


def numeric_grad(f, x, h=1e-5):
    """Central differences of scalar ``f()`` with respect to array ``x``
    (perturbed in place and restored)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + h
        up = f()
        x[idx] = orig - h
        down = f()
        x[idx] = orig
        g[idx] = (up - down) / (2 * h)
    return g


def rel_error(analytic, numeric):
    """||a - n|| / (||a|| + ||n||) over one parameter array.

    Measured per array rather than per entry: entries whose true gradient is
    ~1e-9 sit at the roundoff floor of a central difference and would
    dominate an entrywise ratio without saying anything about correctness.
    """
    analytic, numeric = np.asarray(analytic, dtype=float), np.asarray(numeric, dtype=float)
    denom = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def brute_ngrams(seq, n):
    grams = [tuple(seq[i:i + n]) for i in range(len(seq) - n + 1)]
    return {g: grams.count(g) for g in set(grams)}


def oracle_bleu(corpus, max_n):
    """Per-order clipped precision times brevity penalty, written from the
    textbook definition with plain loops."""
    c_len = sum(len(c) for c, _ in corpus)
    r_len = 0
    for c, refs in corpus:
        best = None
        for r in refs:
            key = (abs(len(r) - len(c)), len(r))
            if best is None or key < best:
                best = key
        r_len += best[1]
    if c_len == 0:
        bp = 0.0
    elif c_len > r_len:
        bp = 1.0
    else:
        bp = math.exp(1 - r_len / c_len)
    out = []
    for n in range(1, max_n + 1):
        num = den = 0
        for c, refs in corpus:
            cg = brute_ngrams(c, n)
            ref_grams = [brute_ngrams(r, n) for r in refs]
            for g, k in cg.items():
                num += min(k, max(rg.get(g, 0) for rg in ref_grams))
                den += k
        out.append(bp * (num / den if den else 0.0))
    return out


def oracle_lcs(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[-1][-1]


def permutation_oracle(cost):
    n = cost.shape[0]
    return min(sum(cost[i, p[i]] for i in range(n)) for p in itertools.permutations(range(n))) / n


def random_feasible_plan(rng, a, b):
    """A vertex-or-interior feasible plan built by greedy filling along a
    random cell order."""
    ra, rb = a.copy(), b.copy()
    plan = np.zeros((len(a), len(b)))
    cells = [(i, j) for i in range(len(a)) for j in range(len(b))]
    for k in rng.permutation(len(cells)):
        i, j = cells[k]
        q = min(ra[i], rb[j]) * (rng.uniform(0.3, 1.0) if rng.random() < 0.5 else 1.0)
        plan[i, j] += q
        ra[i] -= q
        rb[j] -= q
    # finish with a northwest sweep so marginals hold exactly
    i = j = 0
    while i < len(a) and j < len(b):
        q = min(ra[i], rb[j])
        plan[i, j] += q
        ra[i] -= q
        rb[j] -= q
        if ra[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return plan


def records_to_dataset(records, name=None):
    from i2ce import harness

    items = [harness.Item(r["id"], r["candidate"], r["references"]) for r in records]
    return harness.EvaluationDataset(items, model_name=name)
