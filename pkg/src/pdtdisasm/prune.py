"""Pick a violation-free instruction set maximising total confidence.

Weights are pushed up the post-dominator forest (children before
parents), then a breadth-first pass from each virtual exit keeps
positive control-flow children and the single best fall-through-like
child of every kept node.

Two recurrences are available for the upward pass:

``faithful``
    ``w = max(0, w + sum of positive child weights)`` over all children.
``exact``
    Same, but only the best fall-through-like child counts, matching what
    the collection pass can actually keep. This makes the retained score
    the true optimum over all valid subsets.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .detect import FALSE, TRUE
from .errors import InputError
from .pdt import PostDomForest
from .supercfg import SupersetCFG

NEG = -1.0e9
# Positive score mass must stay far below |NEG| so an invalid node can never
# be pulled back above zero by its subtree.
MAX_POSITIVE_MASS = 1.0e8
MODES = ("faithful", "exact")


def assign_weights(scores, cfg: SupersetCFG, n_wcc: int = 0) -> np.ndarray:
    """Raw weights over all forest nodes: offsets, then ``n_wcc`` virtual exits."""
    scores = np.asarray(scores, dtype=np.float64)
    n = len(cfg)
    if len(scores) != n:
        raise InputError(f"{len(scores)} scores for a {n}-byte region")
    valid = ~cfg.invalid
    bad = np.flatnonzero(valid & ~np.isfinite(scores))
    if len(bad):
        raise InputError(f"non-finite score at offset {int(bad[0])}")
    w = np.zeros(n + n_wcc, dtype=np.float64)
    w[:n] = np.where(valid, scores, NEG)
    mass = w[:n][w[:n] > 0].sum()
    if mass >= MAX_POSITIVE_MASS:
        raise InputError(f"positive score mass {mass:g} too large (limit {MAX_POSITIVE_MASS:g})")
    return w


def propagate_weights(forest: PostDomForest, weights, cfg: SupersetCFG,
                      mode: str = "faithful") -> np.ndarray:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    n = forest.region_len
    w = np.asarray(weights, dtype=np.float64)
    if len(w) != forest.n_nodes:
        raise InputError(f"{len(w)} weights for {forest.n_nodes} forest nodes")
    out = w.tolist()
    ipdom = forest.ipdom.tolist()
    ncf = (cfg.fall_through_like | cfg.invalid).tolist()
    child_sum = [0.0] * forest.n_nodes
    best_ft = [0.0] * forest.n_nodes
    exact = mode == "exact"

    # reversed BFS order visits every child before its parent
    for v in reversed(forest.bfs_order.tolist()):
        wv = out[v] + child_sum[v] + best_ft[v]
        wv = wv if wv > 0 else 0.0
        out[v] = wv
        if wv > 0:
            p = ipdom[v]
            if exact and ncf[v]:
                if wv > best_ft[p]:
                    best_ft[p] = wv
            else:
                child_sum[p] += wv
    for root in range(n, forest.n_nodes):
        wv = out[root] + child_sum[root] + best_ft[root]
        out[root] = wv if wv > 0 else 0.0
    return np.asarray(out)


@dataclass(frozen=True, eq=False)
class PrunedResult:
    retained: np.ndarray
    total_raw_score: float
    mode: str = "faithful"

    def to_dict(self, base: int = 0) -> dict:
        return {
            "retained": [base + int(o) for o in self.retained],
            "total_raw_score": float(self.total_raw_score),
            "mode": self.mode,
        }

    def truth(self, region_len: int) -> np.ndarray:
        t = np.full(region_len, FALSE, dtype=np.int8)
        t[self.retained] = TRUE
        return t


def prune_forest(forest: PostDomForest, propagated, cfg: SupersetCFG,
                 scores=None, mode: str = "faithful") -> PrunedResult:
    """Collect the kept nodes. ``scores`` (raw) only feeds ``total_raw_score``."""
    n = forest.region_len
    w = np.asarray(propagated, dtype=np.float64).tolist()
    ncf = (cfg.fall_through_like | cfg.invalid).tolist()
    ptr = forest.child_ptr.tolist()
    idx = forest.child_idx.tolist()
    kept = []
    queue = deque(range(n, forest.n_nodes))
    while queue:
        node = queue.popleft()
        if not (w[node] > 0 or node >= n):
            continue
        best_w, best = 0.0, None
        for c in idx[ptr[node]:ptr[node + 1]]:
            if ncf[c]:
                if w[c] > best_w:
                    best_w, best = w[c], c
            elif w[c] > 0:
                kept.append(c)
                queue.append(c)
        if best is not None:
            kept.append(best)
            queue.append(best)
    retained = np.sort(np.asarray(kept, dtype=np.int64))
    total = 0.0 if scores is None else float(np.asarray(scores, dtype=np.float64)[retained].sum())
    return PrunedResult(retained, total, mode)


def prune(forest: PostDomForest, cfg: SupersetCFG, scores, mode: str = "faithful") -> PrunedResult:
    raw = assign_weights(scores, cfg, forest.n_wcc)
    prop = propagate_weights(forest, raw, cfg, mode)
    return prune_forest(forest, prop, cfg, scores=scores, mode=mode)


def prune_oracle(forest: PostDomForest, cfg: SupersetCFG, scores,
                 max_nodes: int = 20) -> tuple[float, tuple[int, ...]]:
    """Best valid subset by exhaustive enumeration.

    Valid means: closed under taking the immediate post-dominator (up to
    the exit), no invalid members, at most one fall-through-like child per
    parent. Every valid subset is enumerated by include/exclude
    backtracking over the decodable offsets, parents decided before their
    children. Returns ``(score, offsets)``; ties go to the
    lexicographically smallest offset tuple.
    """
    n = len(cfg)
    scores = np.asarray(scores, dtype=np.float64).tolist()
    ipdom = forest.ipdom.tolist()
    ft = cfg.fall_through_like.tolist()
    inv = cfg.invalid.tolist()
    if sum(1 for v in range(n) if not inv[v]) > max_nodes:
        raise ValueError(f"more than {max_nodes} decodable nodes")

    def depth(v):
        d = 0
        while v < n:
            v = ipdom[v]
            d += 1
        return d

    order = sorted(range(n), key=lambda v: (depth(v), v))
    chosen = set()
    ft_used = set()
    best = [0.0, ()]

    def visit(i, score):
        if i == len(order):
            key = tuple(sorted(chosen))
            if score > best[0] or (score == best[0] and key < best[1]):
                best[0], best[1] = score, key
            return
        v = order[i]
        p = ipdom[v]
        if not inv[v] and (p >= n or p in chosen) and not (ft[v] and p in ft_used):
            chosen.add(v)
            if ft[v]:
                ft_used.add(p)
            visit(i + 1, score + scores[v])
            chosen.discard(v)
            if ft[v]:
                ft_used.discard(p)
        visit(i + 1, score)

    visit(0, 0.0)
    return best[0], best[1]
