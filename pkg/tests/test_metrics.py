import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from scenesynth.errors import DimensionError, SceneSynthError
from scenesynth.frame_store import LabelMask, Roi
from scenesynth.metrics import EvalCounts, accumulate, f_measure, report, total


def test_perfect_prediction(rng):
    labels = rng.choice([0, 50, 85, 170, 255], size=(10, 10)).astype(np.uint8)
    c = accumulate(labels == 255, LabelMask(labels))
    assert c.fp == 0 and c.fn == 0


def test_hand_counted_4x4():
    gt = np.zeros((4, 4), np.uint8)
    gt[0, 0:4] = 255
    pred = np.zeros((4, 4), bool)
    pred[0, 0:2] = True
    pred[3, 3] = True
    c = accumulate(pred, gt)
    assert (c.tp, c.fp, c.fn, c.tn) == (2, 1, 2, 11)


def test_all_unknown_excluded():
    c = accumulate(np.ones((5, 5), bool), np.full((5, 5), 170, np.uint8))
    assert c == EvalCounts(0, 0, 0, 0)


def test_roi_and_shadow_rules():
    gt = np.array([[255, 50, 85], [0, 255, 170]], np.uint8)
    pred = np.array([[True, True, True], [True, False, True]])
    roi = Roi(np.array([[True, True, True], [True, False, True]]), (1, 1))
    c = accumulate(pred, gt, roi)
    assert (c.tp, c.fp, c.fn, c.tn) == (1, 2, 0, 0)


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        accumulate(np.zeros((2, 2), bool), np.zeros((2, 3), np.uint8))


def test_f_measure_values():
    assert f_measure(EvalCounts(tp=5)) == 1.0
    assert f_measure(EvalCounts(tp=2, fp=1, fn=2)) == 4 / 7
    assert f_measure(EvalCounts()) == 1.0
    assert f_measure(EvalCounts(tn=100)) == 1.0


def test_additivity(rng):
    frames = [(rng.random((8, 8)) < 0.5, rng.choice([0, 50, 85, 170, 255], size=(8, 8)).astype(np.uint8))
              for _ in range(6)]
    per_frame = total(accumulate(p, g) for p, g in frames)
    stacked = accumulate(np.concatenate([p for p, _ in frames]), np.concatenate([g for _, g in frames]))
    assert per_frame == stacked


@given(st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 1000))
def test_f_bounds_and_monotone(tp, fp, fn):
    f = f_measure(EvalCounts(tp, fp, fn))
    assert 0.0 <= f <= 1.0
    if fp + fn > 0:
        assert f_measure(EvalCounts(tp + 1, fp, fn)) > f


def test_excluded_flip_invariance(rng):
    labels = rng.choice([0, 50, 85, 170, 255], size=(20, 20)).astype(np.uint8)
    pred = rng.random((20, 20)) < 0.5
    base = accumulate(pred, labels)
    excluded = np.argwhere((labels == 85) | (labels == 170))
    for _ in range(200):
        y, x = excluded[rng.integers(len(excluded))]
        pred[y, x] = ~pred[y, x]
        assert accumulate(pred, labels) == base


def test_report_means():
    rep = report([("a", EvalCounts(tp=9, fp=1, fn=1)), ("b", EvalCounts(tp=5))],
                 {"a": "baseline", "b": "baseline"})
    assert rep.categories["baseline"] == pytest.approx((0.9 + 1.0) / 2)
    rep = report([("a", EvalCounts(tp=9, fp=1, fn=1))], {"a": "shadow"})
    assert rep.categories == {"shadow": pytest.approx(0.9)}
    assert "shadow" in rep.table()


def test_report_empty_category_omitted(caplog):
    rep = report([("a", EvalCounts(tp=1))], {"a": "baseline"}, categories=["baseline", "dynamic"])
    assert list(rep.categories) == ["baseline"]
    assert "dynamic" in caplog.text


def test_report_unassigned_video():
    with pytest.raises(SceneSynthError):
        report([("a", EvalCounts())], {})
