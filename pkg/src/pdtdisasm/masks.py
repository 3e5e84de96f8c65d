"""Deterministic per-offset features for a downstream learner.

* reachability mask: within a window of radius ``w``, offsets on the same
  straight-line execution trace (symmetric);
* overlap mask: offsets whose byte spans intersect;
* global adjacency: must / may / next connections, four slots per offset.

Binary export: a 16-byte header (4-byte magic, then ``region_len``,
``w`` and ``max_steps`` as little-endian uint32) followed by row-major
bitset rows, each packed little-endian and padded to whole bytes. The
adjacency file reuses the header (``w`` = 4 slots, ``max_steps`` = 0)
followed by little-endian int64 rows.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .isa import INVALID, InstKind
from .supercfg import NO_SUCC, SupersetCFG

DEFAULT_WINDOW = 64
DEFAULT_MAX_STEPS = 64
CHUNK = 8192

REACH_MAGIC = b"PDTR"
OVERLAP_MAGIC = b"PDTO"
GLOBAL_MAGIC = b"PDTG"
_HEADER = struct.Struct("<4sIII")


def _stop_nodes(cfg: SupersetCFG) -> np.ndarray:
    k = cfg.kind
    stop_kind = ((k == InstKind.COND_JUMP) | (k == InstKind.TERMINATOR)
                 | (k == InstKind.INDIRECT_JUMP) | (k == INVALID))
    return stop_kind | (cfg.out_degree != 1)


def reachability_sets(cfg: SupersetCFG, max_steps: int) -> list[list[int]]:
    """Follow the unique successor from every offset.

    Each chain includes its start, ends at the first multi- or
    zero-successor instruction (inclusive) and has at most ``max_steps``
    hops.
    """
    if max_steps < 0:
        raise ValueError("max_steps must be non-negative")
    stop = _stop_nodes(cfg).tolist()
    nxt = cfg.succ[:, 0].tolist()
    out = []
    for i in range(len(cfg)):
        chain = [i]
        seen = {i}
        v = i
        for _ in range(max_steps):
            if stop[v]:
                break
            v = nxt[v]
            if v in seen:
                break
            seen.add(v)
            chain.append(v)
        out.append(chain)
    return out


@dataclass(frozen=True, eq=False)
class WindowMask:
    """Row ``i`` covers offsets ``i - radius .. i + radius``."""

    radius: int
    rows: np.ndarray
    max_steps: int = 0

    def allowed(self, i: int, j: int) -> bool:
        d = j - i
        if abs(d) > self.radius or not 0 <= j < len(self.rows):
            return False
        return bool(self.rows[i, d + self.radius])

    def neighbours(self, i: int) -> list[int]:
        return [i + int(d) - self.radius for d in np.flatnonzero(self.rows[i])]


def _empty_mask(n: int, w: int) -> np.ndarray:
    if w < 1:
        raise ValueError("window radius must be at least 1")
    rows = np.zeros((n, 2 * w + 1), dtype=bool)
    rows[:, w] = True
    return rows


def reachability_mask(cfg: SupersetCFG, w: int = DEFAULT_WINDOW,
                      max_steps: int = DEFAULT_MAX_STEPS) -> WindowMask:
    n = len(cfg)
    rows = _empty_mask(n, w)
    stop = _stop_nodes(cfg)
    nxt = np.where(stop, NO_SUCC, cfg.succ[:, 0])
    start = np.arange(n, dtype=np.int64)
    cur = start.copy()
    live = np.ones(n, dtype=bool)
    # revisiting a node on a cycle adds nothing new to the set, so no
    # visited bookkeeping is needed once the hop count is bounded
    for _ in range(max_steps):
        cur = np.where(live, nxt[np.where(live, cur, 0)], NO_SUCC)
        live = cur != NO_SUCC
        if not live.any():
            break
        i = start[live]
        j = cur[live]
        near = np.abs(j - i) <= w
        i, j = i[near], j[near]
        rows[i, j - i + w] = True
        rows[j, i - j + w] = True
    return WindowMask(w, rows, max_steps)


def overlap_mask(cfg: SupersetCFG, w: int = DEFAULT_WINDOW) -> WindowMask:
    n = len(cfg)
    rows = _empty_mask(n, w)
    span = np.where(cfg.invalid, 1, cfg.length).astype(np.int64)
    for d in range(1, min(w, int(span.max(initial=1)) - 1) + 1):
        i = np.flatnonzero(span[:max(n - d, 0)] > d)
        rows[i, w + d] = True
        rows[i + d, w - d] = True
    return WindowMask(w, rows, 0)


def global_connections(cfg: SupersetCFG) -> np.ndarray:
    """``(n, 4)`` int64: must, may (two slots), next; -1 where absent."""
    n = len(cfg)
    out = np.full((n, 4), NO_SUCC, dtype=np.int64)
    jcc = cfg.kind == InstKind.COND_JUMP
    single = (cfg.out_degree == 1) & ~jcc
    out[single, 0] = cfg.succ[single, 0]
    out[jcc, 1:3] = cfg.succ[jcc]
    nxt = np.arange(n, dtype=np.int64) + cfg.length
    has_next = ~cfg.invalid & (nxt < n)
    out[has_next, 3] = nxt[has_next]
    return out


def write_mask(path, mask: WindowMask, magic: bytes) -> None:
    n = len(mask.rows)
    header = _HEADER.pack(magic, n, mask.radius, mask.max_steps)
    body = np.packbits(mask.rows, axis=1, bitorder="little").tobytes()
    Path(path).write_bytes(header + body)


def read_mask(path) -> tuple[bytes, WindowMask]:
    data = Path(path).read_bytes()
    magic, n, w, steps = _HEADER.unpack_from(data)
    width = 2 * w + 1
    packed = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size).reshape(n, -1)
    rows = np.unpackbits(packed, axis=1, count=width, bitorder="little").astype(bool)
    return magic, WindowMask(w, rows, steps)


def write_global(path, adjacency: np.ndarray) -> None:
    header = _HEADER.pack(GLOBAL_MAGIC, len(adjacency), 4, 0)
    Path(path).write_bytes(header + np.asarray(adjacency, dtype="<i8").tobytes())


def read_global(path) -> np.ndarray:
    data = Path(path).read_bytes()
    magic, n, slots, _ = _HEADER.unpack_from(data)
    if magic != GLOBAL_MAGIC:
        raise ValueError(f"{path}: not an adjacency file")
    return np.frombuffer(data, dtype="<i8", offset=_HEADER.size).reshape(n, slots).copy()
