"""Structural violation detection over the post-dominator forest.

A consistent disassembly keeps all true nodes in one connected subtree
hanging off each virtual exit, and no node has two true fall-through-like
children. Violations:

* ``M`` missing post-dominator: a true node under a non-true ancestor;
* ``N`` the same, when that nearest non-true ancestor is a NOP;
* ``D`` dead-end sequence: a true node post-dominated by an invalid node;
* ``O`` overlapping instructions: extra true fall-through-like children.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError
from .isa import InstKind
from .pdt import PostDomForest
from .supercfg import SupersetCFG

TRUE = 1
FALSE = 0
IGNORE = -1

MIB = 1 << 20
CATEGORIES = ("M", "N", "D", "O")


def truth_from_scores(scores, cfg: SupersetCFG | None = None) -> np.ndarray:
    """Tri-state truth vector: ``TRUE`` where score > 0, else ``FALSE``.

    With a CFG, invalid offsets are forced non-true and may hold any value.
    """
    scores = np.asarray(scores, dtype=np.float64)
    check = np.ones(len(scores), dtype=bool) if cfg is None else ~cfg.invalid
    if cfg is not None and len(cfg) != len(scores):
        raise InputError(f"{len(scores)} scores for a {len(cfg)}-byte region")
    bad = np.flatnonzero(check & ~np.isfinite(scores))
    if len(bad):
        raise InputError(f"non-finite score at offset {int(bad[0])}")
    with np.errstate(invalid="ignore"):
        truth = np.where(scores > 0, TRUE, FALSE).astype(np.int8)
    if cfg is not None:
        truth[cfg.invalid] = FALSE
    return truth


@dataclass(frozen=True, eq=False)
class ViolationReport:
    region_len: int
    M: np.ndarray
    N: np.ndarray
    D: np.ndarray
    O: np.ndarray  # noqa: E741

    @property
    def total(self) -> int:
        return len(self.M) + len(self.N) + len(self.D) + len(self.O)

    def counts(self) -> dict[str, int]:
        return {c: len(getattr(self, c)) for c in CATEGORIES}

    def to_dict(self, base: int = 0) -> dict:
        out = {c: [base + int(o) for o in getattr(self, c)] for c in CATEGORIES}
        out["region_len"] = self.region_len
        out["total"] = self.total
        return out


def detect_violations(forest: PostDomForest, cfg: SupersetCFG, truth) -> ViolationReport:
    report, _ = _detect(forest, cfg, truth)
    return report


def _detect(forest, cfg, truth):
    """Detection plus the number of queue insertions (for the single-pass check)."""
    n = len(cfg)
    truth = np.asarray(truth)
    if len(truth) != n or forest.region_len != n:
        raise InputError(f"truth vector has {len(truth)} entries for a {n}-byte region")
    is_true = (truth == TRUE).tolist()
    ncf = (cfg.fall_through_like | cfg.invalid).tolist()
    ptr = forest.child_ptr.tolist()
    idx = forest.child_idx.tolist()

    visited = [False] * n
    dead, overlap = [], []
    queue = deque()
    enqueued = 0

    def dead_end(c):
        stack = [c]
        while stack:
            v = stack.pop()
            visited[v] = True
            if is_true[v]:
                dead.append(v)
            stack.extend(idx[ptr[v]:ptr[v + 1]])

    for root in range(n, n + forest.n_wcc):
        for c in idx[ptr[root]:ptr[root + 1]]:
            visited[c] = True
            if ncf[c]:
                dead_end(c)
            elif is_true[c]:
                queue.append(c)
                enqueued += 1
        while queue:
            node = queue.popleft()
            seen_ft = False
            for c in idx[ptr[node]:ptr[node + 1]]:
                if visited[c]:
                    continue
                visited[c] = True
                if not is_true[c]:
                    continue
                if ncf[c]:
                    if seen_ft:
                        overlap.append(c)
                    seen_ft = True
                queue.append(c)
                enqueued += 1

    truth_np = np.asarray(is_true, dtype=bool)
    missing = np.flatnonzero(truth_np & ~np.asarray(visited, dtype=bool))
    mpd, nop = [], []
    ipdom = forest.ipdom
    for v in missing.tolist():
        a = int(ipdom[v])
        while a < n and is_true[a]:
            a = int(ipdom[a])
        (nop if a < n and cfg.kind[a] == InstKind.NOP else mpd).append(v)

    report = ViolationReport(
        region_len=n,
        M=np.asarray(mpd, dtype=np.int64),
        N=np.asarray(nop, dtype=np.int64),
        D=np.sort(np.asarray(dead, dtype=np.int64)),
        O=np.sort(np.asarray(overlap, dtype=np.int64)),
    )
    return report, enqueued


@dataclass(frozen=True)
class RateSummary:
    files: int
    dirty_files: int
    total_bytes: int
    counts: dict
    file_error_rate: Fraction
    errors_per_mib: dict

    def to_dict(self) -> dict:
        out = dict(self.counts)
        out["total"] = sum(self.counts.values())
        out["files"] = self.files
        out["region_len"] = self.total_bytes
        out["file_error_rate"] = float(self.file_error_rate)
        out["errors_per_mib"] = {k: float(v) for k, v in self.errors_per_mib.items()}
        return out


def aggregate_rates(reports) -> RateSummary:
    reports = list(reports)
    if not reports:
        raise InputError("no reports to aggregate")
    total_bytes = sum(r.region_len for r in reports)
    if total_bytes == 0:
        raise InputError("aggregate over zero bytes of code")
    counts = {c: sum(len(getattr(r, c)) for r in reports) for c in CATEGORIES}
    dirty = sum(1 for r in reports if r.total > 0)
    per_mib = {c: Fraction(counts[c] * MIB, total_bytes) for c in CATEGORIES}
    per_mib["total"] = Fraction(sum(counts.values()) * MIB, total_bytes)
    return RateSummary(
        files=len(reports),
        dirty_files=dirty,
        total_bytes=total_bytes,
        counts=counts,
        file_error_rate=Fraction(dirty, len(reports)),
        errors_per_mib=per_mib,
    )
