"""Word Mover's Distance via an exact transportation simplex."""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .classic import LOWER, MetricScore
from .embeddings import EmbeddingTable

_DENOM = 10**12


@dataclass
class TransportPlan:
    flows: np.ndarray       # (n, m), nonnegative
    objective: float
    row_potentials: np.ndarray
    col_potentials: np.ndarray


def word_weights(seq: Sequence[str], table: EmbeddingTable) -> tuple[list[str], np.ndarray]:
    """Distinct resolvable tokens (first-seen order) and their normalized
    frequencies."""
    kept, _ = table.lookup(seq)
    if not kept:
        return [], np.zeros(0)
    counts = Counter(kept)
    words = list(counts)
    w = np.array([counts[t] for t in words], dtype=np.float64)
    return words, w / w.sum()


def cost_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distances between the rows of ``a`` and ``b``."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _exact(weights: np.ndarray) -> list[Fraction]:
    w = [Fraction(float(x)).limit_denominator(_DENOM) for x in weights]
    if any(x < 0 for x in w):
        raise ValueError("weights must be nonnegative")
    total = sum(w)
    return [x / total for x in w]


def _northwest(a: list[Fraction], b: list[Fraction]) -> dict:
    basis = {}
    i = j = 0
    ra, rb = a[0], b[0]
    n, m = len(a), len(b)
    while True:
        q = min(ra, rb)
        basis[i, j] = q
        ra -= q
        rb -= q
        if i == n - 1 and j == m - 1:
            return basis
        if j == m - 1 or (ra == 0 and i < n - 1):
            i += 1
            ra = a[i]
        else:
            j += 1
            rb = b[j]


def _potentials(basis: dict, cost: np.ndarray):
    n, m = cost.shape
    u = np.full(n, np.nan)
    v = np.full(m, np.nan)
    rows: dict[int, list[int]] = {}
    cols: dict[int, list[int]] = {}
    for i, j in basis:
        rows.setdefault(i, []).append(j)
        cols.setdefault(j, []).append(i)
    u[0] = 0.0
    queue = deque([("r", 0)])
    while queue:
        kind, k = queue.popleft()
        if kind == "r":
            for j in rows.get(k, ()):
                if np.isnan(v[j]):
                    v[j] = cost[k, j] - u[k]
                    queue.append(("c", j))
        else:
            for i in cols.get(k, ()):
                if np.isnan(u[i]):
                    u[i] = cost[i, k] - v[k]
                    queue.append(("r", i))
    return u, v


def _tree_path(basis: dict, row: int, col: int) -> list[tuple[int, int]]:
    """Basis cells on the tree path from row node ``row`` to column node ``col``."""
    adj: dict[tuple, list[tuple]] = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    start, goal = ("r", row), ("c", col)
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for nxt in adj.get(node, ()):
            if nxt not in parent:
                parent[nxt] = node
                queue.append(nxt)
    cells = []
    node = goal
    while parent[node] is not None:
        prev = parent[node]
        a, b = (prev, node) if prev[0] == "r" else (node, prev)
        cells.append((a[1], b[1]))
        node = prev
    cells.reverse()
    return cells


def solve_transport(cost: np.ndarray, supply: np.ndarray, demand: np.ndarray,
                    max_iter: int = 100_000) -> TransportPlan:
    """Minimize sum(T * cost) subject to row sums = supply, column sums = demand.

    Flows are carried as exact fractions, so marginals hold exactly; entering
    and leaving cells follow Bland's rule, which rules out cycling on
    degenerate bases. The returned potentials certify optimality.
    """
    cost = np.asarray(cost, dtype=np.float64)
    supply = np.asarray(supply, dtype=np.float64)
    demand = np.asarray(demand, dtype=np.float64)
    if len(supply) == 0 or len(demand) == 0:
        raise ValueError("transport distance is undefined for an empty side")
    if cost.shape != (len(supply), len(demand)):
        raise ValueError(f"cost shape {cost.shape} does not match weights "
                         f"({len(supply)}, {len(demand)})")
    if not (abs(supply.sum() - 1) < 1e-9 and abs(demand.sum() - 1) < 1e-9):
        raise ValueError("supply and demand must each sum to 1")
    if not np.isfinite(cost).all() or (cost < 0).any():
        raise ValueError("costs must be finite and nonnegative")

    basis = _northwest(_exact(supply), _exact(demand))
    tol = 1e-12 * max(1.0, float(cost.max()))
    for _ in range(max_iter):
        u, v = _potentials(basis, cost)
        reduced = cost - u[:, None] - v[None, :]
        negative = np.argwhere(reduced < -tol)
        if len(negative) == 0:
            break
        i, j = map(int, negative[0])
        path = _tree_path(basis, i, j)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(basis[c] for c in minus)
        leaving = min(c for c in minus if basis[c] == theta)
        for c in minus:
            basis[c] -= theta
        for c in plus:
            basis[c] += theta
        del basis[leaving]
        basis[i, j] = theta
    else:
        raise RuntimeError("transportation simplex did not converge")

    flows = np.zeros(cost.shape)
    for (i, j), q in basis.items():
        flows[i, j] = float(q)
    objective = float(sum(q * Fraction(float(cost[c])) for c, q in basis.items()))
    return TransportPlan(flows, objective, u, v)


def check_optimality(plan: TransportPlan, cost: np.ndarray, tol: float = 1e-9) -> bool:
    """Complementary slackness: reduced costs are nonnegative everywhere and
    zero wherever flow is positive."""
    reduced = cost - plan.row_potentials[:, None] - plan.col_potentials[None, :]
    scale = max(1.0, float(np.abs(cost).max()))
    if (reduced < -tol * scale).any():
        return False
    return bool((np.abs(reduced[plan.flows > 0]) <= tol * scale).all())


def wmd_pair(a: Sequence[str], b: Sequence[str], table: EmbeddingTable) -> float | None:
    """Distance between two token sequences, or None if either side has no
    resolvable word."""
    wa, pa = word_weights(a, table)
    wb, pb = word_weights(b, table)
    if not wa or not wb:
        return None
    va = np.array([table[t] if t in table else np.zeros(table.dim) for t in wa])
    vb = np.array([table[t] if t in table else np.zeros(table.dim) for t in wb])
    return solve_transport(cost_matrix(va, vb), pa, pb).objective


def wmd(candidate: Sequence[str], refs: Sequence[Sequence[str]], table: EmbeddingTable) -> MetricScore:
    """Mean distance to the references (lower is better).

    References with no resolvable word are skipped; if no pair is defined the
    value is None (reported as missing).
    """
    dists = [d for d in (wmd_pair(candidate, r, table) for r in refs) if d is not None]
    value = sum(dists) / len(dists) if dists else None
    return MetricScore("WMD", value, LOWER)
