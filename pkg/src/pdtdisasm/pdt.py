"""Post-dominator forest over a superset CFG.

Each weakly connected component gets its own virtual exit. Nodes with no
successors, and the jump instructions of terminal strongly connected
components (loops nothing leaves), are linked to that exit. Immediate
post-dominators are then the immediate dominators of the reversed graph,
computed with Lengauer-Tarjan.

Node ids: offsets ``0..n-1`` are instructions, ``n + k`` is the virtual
exit of weak component ``k``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InputError, InvariantError
from .isa import JUMP_KIND
from .supercfg import NO_SUCC, SupersetCFG, scc_labels, wcc_labels

NO_PARENT = -1

# Below this many offsets a process pool costs more than it saves.
PARALLEL_MIN_NODES = 1 << 16


@dataclass(frozen=True)
class SCCInfo:
    scc_id: np.ndarray
    terminal: np.ndarray
    size: np.ndarray
    self_loop: np.ndarray

    @property
    def cyclic(self) -> np.ndarray:
        return (self.size > 1) | self.self_loop


def scc_info(cfg: SupersetCFG) -> SCCInfo:
    labels, count = scc_labels(cfg)
    src, dst = cfg.edges
    terminal = np.ones(count, dtype=bool)
    terminal[labels[src[labels[src] != labels[dst]]]] = False
    size = np.bincount(labels, minlength=count)
    self_loop = np.zeros(count, dtype=bool)
    self_loop[labels[src[src == dst]]] = True
    return SCCInfo(labels, terminal, size, self_loop)


def anchor_mask(cfg: SupersetCFG, info: SCCInfo | None = None) -> np.ndarray:
    """Offsets that get an edge to their component's virtual exit."""
    if info is None:
        info = scc_info(cfg)
    looping = (info.terminal & info.cyclic)[info.scc_id]
    anchors = (cfg.out_degree == 0) | (looping & JUMP_KIND[cfg.kind])
    covered = np.zeros(len(info.size), dtype=bool)
    covered[info.scc_id[anchors]] = True
    bad = np.flatnonzero(info.terminal & info.cyclic & ~covered)
    if len(bad):
        members = np.flatnonzero(info.scc_id == bad[0])
        raise InvariantError(
            f"terminal loop without a jump instruction: offsets {members.tolist()[:16]}")
    return anchors


def terminal_scc_anchors(cfg: SupersetCFG, wcc) -> np.ndarray:
    wcc = np.asarray(wcc, dtype=np.int64)
    return np.sort(wcc[anchor_mask(cfg)[wcc]])


@dataclass(frozen=True, eq=False)
class PostDomForest:
    """Immediate post-dominator forest, one tree per weak component.

    ``ipdom[o]`` is the parent of offset ``o``: another offset or a
    virtual exit id (``>= region_len``).
    """

    ipdom: np.ndarray
    wcc_of: np.ndarray
    n_wcc: int

    @property
    def region_len(self) -> int:
        return len(self.ipdom)

    @property
    def n_nodes(self) -> int:
        return len(self.ipdom) + self.n_wcc

    @property
    def virtual_exits(self) -> np.ndarray:
        n = self.region_len
        return np.arange(n, n + self.n_wcc, dtype=np.int64)

    def is_exit(self, node: int) -> bool:
        return node >= self.region_len

    def exit_of(self, offset: int) -> int:
        return self.region_len + int(self.wcc_of[offset])

    def parent(self, node: int) -> int:
        return NO_PARENT if node >= self.region_len else int(self.ipdom[node])

    @cached_property
    def _children_csr(self) -> tuple[np.ndarray, np.ndarray]:
        order = np.argsort(self.ipdom, kind="stable")
        counts = np.bincount(self.ipdom, minlength=self.n_nodes)
        ptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        return ptr, order

    @property
    def child_ptr(self) -> np.ndarray:
        return self._children_csr[0]

    @property
    def child_idx(self) -> np.ndarray:
        """Children of ``v`` are ``child_idx[child_ptr[v]:child_ptr[v+1]]``, ascending."""
        return self._children_csr[1]

    def children(self, node: int) -> np.ndarray:
        ptr, idx = self._children_csr
        return idx[ptr[node]:ptr[node + 1]]

    def ancestors(self, offset: int) -> list[int]:
        """Strict post-dominators of ``offset``, nearest first, ending at its exit."""
        out = []
        node = int(self.ipdom[offset])
        while node < self.region_len:
            out.append(node)
            node = int(self.ipdom[node])
        out.append(node)
        return out

    def postdominators(self, offset: int) -> set[int]:
        return {offset, *self.ancestors(offset)}

    @cached_property
    def bfs_order(self) -> np.ndarray:
        """All offsets in breadth-first order from the exits (parents first)."""
        ptr, idx = self._children_csr
        ptr = ptr.tolist()
        idx = idx.tolist()
        n = self.region_len
        order = []
        for root in range(n, n + self.n_wcc):
            order.extend(idx[ptr[root]:ptr[root + 1]])
        i = 0
        while i < len(order):
            v = order[i]
            order.extend(idx[ptr[v]:ptr[v + 1]])
            i += 1
        return np.asarray(order, dtype=np.int64)

    def dump(self, base: int = 0) -> str:
        n = self.region_len
        lines = []
        for o, p in enumerate(self.ipdom.tolist()):
            dest = f"exit{p - n}" if p >= n else str(base + p)
            lines.append(f"{base + o} -> {dest}")
        return "\n".join(lines) + ("\n" if lines else "")


def build_pdt(cfg: SupersetCFG, workers: int = 1) -> PostDomForest:
    n = len(cfg)
    wcc_of, n_wcc = wcc_labels(cfg)
    anchors = anchor_mask(cfg)
    if n == 0:
        return PostDomForest(np.zeros(0, dtype=np.int64), wcc_of, 0)

    if workers > 1 and n >= PARALLEL_MIN_NODES and n_wcc > 1:
        ipdom = np.empty(n, dtype=np.int64)
        chunks = _split_components(wcc_of, n_wcc, workers)
        jobs = [(cfg.succ[nodes], anchors[nodes], wcc_of[nodes], nodes, n) for nodes in chunks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for nodes, part in zip(chunks, pool.map(_ipdom_job, jobs)):
                ipdom[nodes] = part
    else:
        ipdom = _ipdom_chunk(cfg.succ, anchors, wcc_of, None, n)
    return PostDomForest(ipdom, wcc_of, n_wcc)


def default_workers() -> int:
    env = os.environ.get("PDT_DISASM_THREADS")
    if env:
        try:
            value = int(env)
        except ValueError:
            value = 0
        if value < 1:
            raise InputError(f"PDT_DISASM_THREADS={env!r} is not a positive integer")
        return value
    return os.cpu_count() or 1


def _split_components(wcc_of, n_wcc, parts):
    """Contiguous runs of whole components with roughly equal node counts."""
    sizes = np.bincount(wcc_of, minlength=n_wcc)
    cum = np.cumsum(sizes)
    cuts = np.searchsorted(cum, np.linspace(0, cum[-1], parts + 1)[1:-1], side="right")
    bounds = np.unique(np.concatenate([[0], cuts, [n_wcc]]))
    chunks = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        nodes = np.flatnonzero((wcc_of >= lo) & (wcc_of < hi))
        if len(nodes):
            chunks.append(nodes)
    return chunks


def _ipdom_job(args):
    return _ipdom_chunk(*args)


def _ipdom_chunk(succ, anchors, wcc_of, nodes, n_total):
    """Immediate post-dominators for a set of whole weak components.

    ``succ``/``anchors``/``wcc_of`` are restricted to ``nodes`` (sorted
    global offsets); ``nodes=None`` means the whole region. Returns global
    parent ids.
    """
    m = len(succ)
    if nodes is None:
        local_succ = succ
    else:
        local_succ = np.where(succ == NO_SUCC, NO_SUCC, np.searchsorted(nodes, succ))
    wccs, exit_idx = np.unique(wcc_of, return_inverse=True)
    k = len(wccs)
    exit_local = m + exit_idx
    root = m + k
    total = root + 1

    # reversed augmented graph: root -> exits, exit -> anchors, v -> u for u -> v
    src_u = np.repeat(np.arange(m, dtype=np.int64), 2)
    dst_v = local_succ.reshape(-1)
    keep = dst_v != NO_SUCC
    src_u, dst_v = src_u[keep], dst_v[keep]
    anc = np.flatnonzero(anchors)
    rev_from = np.concatenate([np.full(k, root), exit_local[anc], dst_v])
    rev_to = np.concatenate([np.arange(m, m + k), anc, src_u])

    order = np.argsort(rev_from, kind="stable")
    succ_ptr = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(np.bincount(rev_from, minlength=total), out=succ_ptr[1:])
    succ_idx = rev_to[order]

    order = np.argsort(rev_to, kind="stable")
    pred_ptr = np.zeros(total + 1, dtype=np.int64)
    np.cumsum(np.bincount(rev_to, minlength=total), out=pred_ptr[1:])
    pred_idx = rev_from[order]

    idom = lengauer_tarjan(total, root, succ_ptr.tolist(), succ_idx.tolist(),
                           pred_ptr.tolist(), pred_idx.tolist())
    parent = np.asarray(idom[:m], dtype=np.int64)
    if np.any(parent < 0):
        bad = int(np.flatnonzero(parent < 0)[0])
        raise InvariantError(f"offset {bad if nodes is None else int(nodes[bad])} cannot reach an exit")
    to_exit = parent >= m
    out = np.empty(m, dtype=np.int64)
    out[to_exit] = n_total + wccs[parent[to_exit] - m]
    inner = parent[~to_exit]
    out[~to_exit] = inner if nodes is None else nodes[inner]
    return out


def lengauer_tarjan(total, root, succ_ptr, succ_idx, pred_ptr, pred_idx):
    """Immediate dominators by Lengauer-Tarjan (path compression, simple link).

    Graph in CSR form over ``total`` nodes. Returns a list of idom node ids;
    the root and unreachable nodes get -1.
    """
    dfnum = [-1] * total
    vertex = []
    parent = []
    stack = [(root, -1)]
    while stack:
        v, p = stack.pop()
        if dfnum[v] >= 0:
            continue
        d = len(vertex)
        dfnum[v] = d
        vertex.append(v)
        parent.append(p)
        for i in range(succ_ptr[v + 1] - 1, succ_ptr[v] - 1, -1):
            w = succ_idx[i]
            if dfnum[w] < 0:
                stack.append((w, d))

    count = len(vertex)
    semi = list(range(count))
    label = list(range(count))
    ancestor = [-1] * count
    idom = [0] * count
    bucket_head = [-1] * count
    bucket_next = [-1] * count

    def evaluate(v):
        if ancestor[v] < 0:
            return v
        path = []
        u = v
        while ancestor[ancestor[u]] >= 0:
            path.append(u)
            u = ancestor[u]
        for x in reversed(path):
            a = ancestor[x]
            if semi[label[a]] < semi[label[x]]:
                label[x] = label[a]
            ancestor[x] = ancestor[a]
        return label[v]

    for w in range(count - 1, 0, -1):
        node = vertex[w]
        s = semi[w]
        for i in range(pred_ptr[node], pred_ptr[node + 1]):
            v = dfnum[pred_idx[i]]
            if v < 0:
                continue
            u = evaluate(v)
            if semi[u] < s:
                s = semi[u]
        semi[w] = s
        bucket_next[w] = bucket_head[s]
        bucket_head[s] = w
        p = parent[w]
        ancestor[w] = p
        v = bucket_head[p]
        while v >= 0:
            u = evaluate(v)
            idom[v] = u if semi[u] < semi[v] else p
            v = bucket_next[v]
        bucket_head[p] = -1

    for w in range(1, count):
        if idom[w] != semi[w]:
            idom[w] = idom[idom[w]]

    out = [-1] * total
    for w in range(1, count):
        out[vertex[w]] = vertex[idom[w]]
    return out


def brute_force_postdom(cfg: SupersetCFG) -> tuple[list[frozenset], np.ndarray]:
    """Post-dominator sets by iterative dataflow; a slow reference.

    Recomputes components, loops and anchors from scratch (union-find and
    explicit reachability) so that it shares nothing with :func:`build_pdt`
    beyond the CFG itself. Returns ``(pd_sets, ipdom)`` with the same node
    numbering as :class:`PostDomForest`.
    """
    n = len(cfg)
    if n > 4096:
        raise ValueError("brute force post-dominators limited to 4096 offsets")
    succ = [cfg.successors(v) for v in range(n)]

    uf = list(range(n))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for u in range(n):
        for v in succ[u]:
            ru, rv = find(u), find(v)
            if ru != rv:
                uf[max(ru, rv)] = min(ru, rv)
    comp_index = {}
    for v in range(n):
        comp_index.setdefault(find(v), len(comp_index))
    exit_of = [n + comp_index[find(v)] for v in range(n)]

    reach = []
    for v in range(n):
        seen = set()
        todo = list(succ[v])
        while todo:
            u = todo.pop()
            if u not in seen:
                seen.add(u)
                todo.extend(succ[u])
        reach.append(seen)

    aug = [list(s) for s in succ]
    for v in range(n):
        if not succ[v]:
            aug[v].append(exit_of[v])
            continue
        in_terminal_loop = v in reach[v] and all(v in reach[u] for u in reach[v])
        kind = cfg.kind_of(v)
        if in_terminal_loop and kind is not None and JUMP_KIND[kind]:
            aug[v].append(exit_of[v])

    members = {}
    for v in range(n):
        members.setdefault(exit_of[v], set()).add(v)
    pd = {}
    for e, vs in members.items():
        pd[e] = frozenset([e])
        everything = frozenset(vs | {e})
        for v in vs:
            pd[v] = everything
    changed = True
    while changed:
        changed = False
        for v in range(n - 1, -1, -1):
            new = frozenset.intersection(*(pd[s] for s in aug[v])) | {v}
            if new != pd[v]:
                pd[v] = new
                changed = True

    ipdom = np.empty(n, dtype=np.int64)
    for v in range(n):
        strict = pd[v] - {v}
        (ipdom[v],) = [d for d in strict if len(pd[d]) == len(strict)]
    return [pd[v] for v in range(n)], ipdom
