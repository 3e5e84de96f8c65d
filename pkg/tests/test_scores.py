import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdtdisasm import (FALSE, IGNORE, TRUE, InputError, evaluate, labels_to_scores, load_labels,
                       load_scores, logit_from_probability, sigmoid, truth_from_scores,
                       write_labels, write_scores)


def test_label_bytes(tmp_path):
    p = tmp_path / "l.i8"
    p.write_bytes(bytes([1, 0, 0xFF]))
    assert load_labels(p).tolist() == [TRUE, FALSE, IGNORE]


def test_label_errors(tmp_path):
    p = tmp_path / "l.i8"
    p.write_bytes(bytes([1, 0, 2]))
    with pytest.raises(InputError, match="offset 2"):
        load_labels(p)
    p.write_bytes(bytes([1, 0]))
    with pytest.raises(InputError):
        load_labels(p, region_len=3)


def test_score_float_bits(tmp_path):
    p = tmp_path / "s.f32"
    p.write_bytes(struct.pack("<I", 0x3F800000))
    assert load_scores(p).tolist() == [1.0]


def test_score_errors(tmp_path):
    p = tmp_path / "s.f32"
    p.write_bytes(struct.pack("<ff", 1.0, math.inf))
    with pytest.raises(InputError, match="offset 1"):
        load_scores(p)
    p.write_bytes(struct.pack("<f", math.nan))
    with pytest.raises(InputError):
        load_scores(p)
    p.write_bytes(b"\x00" * 6)
    with pytest.raises(InputError):
        load_scores(p)
    p.write_bytes(struct.pack("<ff", 1.0, 2.0))
    with pytest.raises(InputError):
        load_scores(p, region_len=3)


def test_probability_scores(tmp_path):
    p = tmp_path / "s.f32"
    write_scores(p, [0.5, 0.9, 0.0])
    scores = load_scores(p, probabilities=True)
    assert scores[0] == 0.0
    assert scores[1] == pytest.approx(math.log(9), abs=1e-6)
    assert scores[2] == pytest.approx(math.log(1e-7 / (1 - 1e-7)))
    write_scores(p, [1.5])
    with pytest.raises(InputError):
        load_scores(p, probabilities=True)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from([-1, 0, 1]), max_size=200))
def test_label_round_trip(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("l") / "x.i8"
    write_labels(p, values)
    assert load_labels(p, len(values)).tolist() == values


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=32), max_size=200))
def test_score_round_trip(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("s") / "x.f32"
    write_scores(p, values)
    assert load_scores(p, len(values)).tolist() == values


def test_labels_to_scores():
    assert labels_to_scores([TRUE, FALSE, IGNORE]).tolist() == [1.0, -1.0, -1.0]
    assert labels_to_scores([IGNORE] * 3).tolist() == [-1.0] * 3
    rng = np.random.default_rng(1)
    t = rng.choice([TRUE, FALSE, IGNORE], size=500)
    assert labels_to_scores(t).tolist() == [1.0 if v == 1 else -1.0 for v in t]


def test_scores_and_truth_compose():
    rng = np.random.default_rng(2)
    t = rng.choice([TRUE, FALSE], size=500).astype(np.int8)
    assert np.array_equal(truth_from_scores(labels_to_scores(t)), t)


def test_logit_values():
    assert logit_from_probability(0.5) == 0.0
    assert logit_from_probability(0.9) == pytest.approx(2.19722, abs=1e-5)
    assert logit_from_probability(1.0) == pytest.approx(math.log((1 - 1e-7) / 1e-7))


def test_sigmoid_round_trip():
    p = np.arange(1, 100) / 100
    assert np.max(np.abs(sigmoid(logit_from_probability(p)) - p)) <= 1e-6


def test_evaluate_exact_match():
    labels = [1, 0, 1, -1]
    r = evaluate([0, 2], labels)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_evaluate_empty_prediction():
    r = evaluate([], [1, 0, 1])
    assert (r.precision, r.recall, r.f1, r.tp, r.fp, r.fn) == (0.0, 0.0, 0.0, 0, 0, 2)


def test_evaluate_ignore_only():
    r = evaluate([1, 2], [-1, -1, -1, 0])
    assert r.to_dict() == {"precision": 0.0, "recall": 0.0, "f1": 0.0, "tp": 0, "fp": 0, "fn": 0}


def test_evaluate_hand_counts():
    # tp at 0, fp at 1, fn at 3, ignore at 2 predicted
    r = evaluate([0, 1, 2], [1, 0, -1, 1])
    assert (r.tp, r.fp, r.fn) == (1, 1, 1)
    assert r.precision == 0.5 and r.recall == 0.5 and r.f1 == 0.5


def test_evaluate_ignores_ignore_predictions():
    rng = np.random.default_rng(3)
    labels = rng.choice([1, 0, -1], size=300)
    pred = np.flatnonzero(rng.random(300) < 0.5)
    ign = np.flatnonzero(labels == -1)
    assert evaluate(pred, labels) == evaluate(np.union1d(pred, ign), labels)
    assert evaluate(pred, labels) == evaluate(np.setdiff1d(pred, ign), labels)


def test_evaluate_rejects_out_of_range():
    with pytest.raises(InputError):
        evaluate([5], [1, 0])
