"""Label and score files, score conventions and accuracy metrics.

File formats (one entry per byte offset of the region):

* labels: signed bytes, 1 = instruction, 0 = not, -1 = ignore;
* scores: little-endian float32.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .detect import FALSE, IGNORE, TRUE
from .errors import InputError

PROB_EPS = 1e-7


def load_labels(path, region_len: int | None = None) -> np.ndarray:
    raw = np.fromfile(path, dtype=np.int8)
    if region_len is not None and len(raw) != region_len:
        raise InputError(f"{path}: {len(raw)} labels for a {region_len}-byte region")
    bad = np.flatnonzero((raw < IGNORE) | (raw > TRUE))
    if len(bad):
        o = int(bad[0])
        raise InputError(f"{path}: label {int(raw[o])} at offset {o} not in {{-1, 0, 1}}")
    return raw


def write_labels(path, truth) -> None:
    truth = np.asarray(truth, dtype=np.int8)
    Path(path).write_bytes(truth.tobytes())


def load_scores(path, region_len: int | None = None, probabilities: bool = False) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) % 4:
        raise InputError(f"{path}: size {len(data)} is not a multiple of 4")
    raw = np.frombuffer(data, dtype="<f4")
    if region_len is not None and len(raw) != region_len:
        raise InputError(f"{path}: {len(raw)} scores for a {region_len}-byte region")
    bad = np.flatnonzero(~np.isfinite(raw))
    if len(bad):
        raise InputError(f"{path}: non-finite score at offset {int(bad[0])}")
    scores = raw.astype(np.float64)
    if probabilities:
        if np.any((scores < 0) | (scores > 1)):
            o = int(np.flatnonzero((scores < 0) | (scores > 1))[0])
            raise InputError(f"{path}: probability {scores[o]} at offset {o} outside [0, 1]")
        scores = logit_from_probability(scores)
    return scores


def write_scores(path, scores) -> None:
    Path(path).write_bytes(np.asarray(scores, dtype="<f4").tobytes())


def labels_to_scores(truth) -> np.ndarray:
    """+1 for instructions, -1 for everything else (ignore included)."""
    truth = np.asarray(truth)
    return np.where(truth == TRUE, 1.0, -1.0)


def logit_from_probability(p):
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_EPS, 1 - PROB_EPS)
    out = np.log(p / (1 - p))
    return float(out) if out.ndim == 0 else out


def sigmoid(x):
    out = 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=np.float64)))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


def evaluate(pred, labels) -> EvalResult:
    """Instruction-start precision/recall; ignore offsets count for nothing.

    ``pred`` is an iterable of offsets. 0/0 ratios are reported as 0.
    """
    labels = np.asarray(labels)
    mask = np.zeros(len(labels), dtype=bool)
    pred = np.asarray(list(pred) if not isinstance(pred, np.ndarray) else pred, dtype=np.int64)
    if len(pred) and (pred.min() < 0 or pred.max() >= len(labels)):
        raise InputError("predicted offset outside the labelled region")
    mask[pred] = True
    tp = int(np.sum(mask & (labels == TRUE)))
    fp = int(np.sum(mask & (labels == FALSE)))
    fn = int(np.sum(~mask & (labels == TRUE)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalResult(precision, recall, f1, tp, fp, fn)
