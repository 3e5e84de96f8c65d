"""Superset control-flow graph over every byte offset of a region.

Edge policy: calls keep only their fall-through edge, even when the call
target is known. Region bounds:

(a) a fall-through-like or conditional jump whose fall-through lands at or
    past the region end is reclassified invalid;
(b) a direct jump whose target leaves the region keeps its kind but loses
    the edge, so it acts as a region exit;
(c) a conditional jump whose target leaves the region keeps only its
    fall-through edge.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InvariantError
from .isa import (FALL_THROUGH_LIKE, HAS_FALL_THROUGH, INVALID, InstKind,
                  SupersetDecoding)

NO_SUCC = -1


@dataclass(frozen=True, eq=False)
class SupersetCFG:
    """Per-offset node classes plus successor slots.

    ``succ`` has shape ``(n, 2)``; the fall-through edge (if any) comes
    first, then the branch target, unused slots hold ``NO_SUCC``.
    """

    kind: np.ndarray
    length: np.ndarray
    succ: np.ndarray

    @property
    def region_len(self) -> int:
        return len(self.kind)

    def __len__(self) -> int:
        return len(self.kind)

    def successors(self, offset: int) -> list[int]:
        return [int(s) for s in self.succ[offset] if s != NO_SUCC]

    def is_invalid(self, offset: int) -> bool:
        return self.kind[offset] == INVALID

    def kind_of(self, offset: int) -> InstKind | None:
        code = int(self.kind[offset])
        return None if code == INVALID else InstKind(code)

    @cached_property
    def invalid(self) -> np.ndarray:
        return self.kind == INVALID

    @cached_property
    def fall_through_like(self) -> np.ndarray:
        """True for decodable fall-through-like nodes (invalid excluded)."""
        return FALL_THROUGH_LIKE[self.kind] & ~self.invalid

    @cached_property
    def out_degree(self) -> np.ndarray:
        return (self.succ != NO_SUCC).sum(axis=1)

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """``(src, dst)`` arrays, ordered by source then slot."""
        src = np.repeat(np.arange(len(self), dtype=np.int64), 2)
        dst = self.succ.reshape(-1)
        keep = dst != NO_SUCC
        return src[keep], dst[keep]

    @classmethod
    def from_successors(cls, kinds, lengths, successors) -> SupersetCFG:
        """Build a CFG directly from per-node lists; handy for hand-made graphs.

        ``kinds`` entries are :class:`InstKind` or ``None`` for invalid nodes.
        """
        n = len(kinds)
        kind = np.array([INVALID if k is None else int(k) for k in kinds], dtype=np.int8)
        length = np.asarray(lengths, dtype=np.int32)
        succ = np.full((n, 2), NO_SUCC, dtype=np.int64)
        for i, ss in enumerate(successors):
            if len(ss) > 2:
                raise ValueError(f"node {i} has {len(ss)} successors")
            succ[i, :len(ss)] = ss
        cfg = cls(kind, length, succ)
        check_cfg(cfg)
        return cfg


def build_cfg(decoded: SupersetDecoding, region_len: int | None = None) -> SupersetCFG:
    n = len(decoded)
    if region_len is not None and region_len != n:
        raise ValueError(f"decoding covers {n} offsets, region has {region_len}")
    offsets = np.arange(n, dtype=np.int64)
    kind = decoded.kind.copy()
    length = decoded.length.astype(np.int32, copy=True)

    fall = offsets + length
    runs_off = HAS_FALL_THROUGH[kind] & (kind != INVALID) & (fall >= n)
    kind[runs_off] = INVALID
    length[runs_off] = 0

    valid = kind != INVALID
    has_ft = HAS_FALL_THROUGH[kind] & valid
    is_jmp = (kind == InstKind.DIRECT_JUMP)
    is_jcc = (kind == InstKind.COND_JUMP)
    target_ok = (decoded.target >= 0) & (decoded.target < n)

    succ = np.full((n, 2), NO_SUCC, dtype=np.int64)
    succ[has_ft, 0] = fall[has_ft]
    jmp = is_jmp & target_ok
    succ[jmp, 0] = decoded.target[jmp]
    jcc = is_jcc & target_ok
    succ[jcc, 1] = decoded.target[jcc]

    cfg = SupersetCFG(kind, length, succ)
    check_cfg(cfg)
    return cfg


def check_cfg(cfg: SupersetCFG) -> None:
    n = len(cfg)
    s = cfg.succ
    used = s != NO_SUCC
    if np.any(used & ((s < 0) | (s >= n))):
        raise InvariantError("successor outside region")
    if np.any(cfg.invalid[:, None] & used):
        raise InvariantError("invalid node with successors")
    src, _ = cfg.edges
    if len(src) > 2 * n:
        raise InvariantError(f"{len(src)} edges for {n} nodes")


def _adjacency(cfg: SupersetCFG) -> csr_matrix:
    src, dst = cfg.edges
    n = len(cfg)
    return csr_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))


def wcc_labels(cfg: SupersetCFG) -> tuple[np.ndarray, int]:
    """Weak component index per offset, numbered by smallest member offset."""
    n = len(cfg)
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    count, labels = connected_components(_adjacency(cfg), directed=True, connection="weak")
    _, first = np.unique(labels, return_index=True)
    # renumber components in order of their first offset
    order = np.argsort(first, kind="stable")
    remap = np.empty(count, dtype=np.int64)
    remap[order] = np.arange(count)
    return remap[labels], count


def wcc_partition(cfg: SupersetCFG) -> list[np.ndarray]:
    labels, count = wcc_labels(cfg)
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(count + 1))
    return [order[bounds[k]:bounds[k + 1]] for k in range(count)]


def scc_labels(cfg: SupersetCFG) -> tuple[np.ndarray, int]:
    n = len(cfg)
    if n == 0:
        return np.zeros(0, dtype=np.int64), 0
    count, labels = connected_components(_adjacency(cfg), directed=True, connection="strong")
    return labels.astype(np.int64), count
