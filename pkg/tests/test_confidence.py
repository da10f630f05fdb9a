import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import cls, matrix, row
from vqa_nsr.confidence import (
    MAX_WEIGHT,
    ScoreStats,
    candidate_sets,
    confidence_threshold,
    score_statistics,
    weight,
)
from vqa_nsr.scene_model import NUM_CLASSES, BoundingBox, PredictionRow


def test_statistics_two_rows():
    m = matrix("a", row({"large red metal cylinder": 0.9}), row({"small blue rubber cube": 0.5}))
    s = score_statistics([m])
    assert s.mu == pytest.approx(0.7) and s.sigma == pytest.approx(0.2) and s.count == 2
    assert confidence_threshold(s, 1.0) == pytest.approx(0.5)
    assert confidence_threshold(s, 4.0) == 0.0


def test_statistics_need_rows():
    with pytest.raises(ValueError):
        score_statistics([matrix("a")])
    with pytest.raises(ValueError):
        confidence_threshold(ScoreStats(0.5, 0.1), -1)


def test_weight_values():
    assert weight(1.0) == 0
    assert weight(0.5) == 693
    assert weight(0.1) == 2303
    assert weight(1e-300) == MAX_WEIGHT
    for bad in (-0.1, 1.1, math.nan):
        with pytest.raises(ValueError):
            weight(bad)


def test_weight_rounds_half_away_from_zero():
    s = math.exp(-0.0005)  # -1000 ln s = 0.5 up to float error
    assert weight(s) in (0, 1)
    assert weight(math.exp(-2.5)) == 2500


@given(st.floats(0, 1), st.floats(0, 1))
def test_weight_monotone(a, b):
    lo, hi = sorted((a, b))
    assert weight(lo) >= weight(hi)
    assert 0 <= weight(lo) <= MAX_WEIGHT


RED_CYL = cls("large red metal cylinder")
BLUE_CYL = cls("large blue metal cylinder")


def test_candidate_sets_threshold_and_order():
    m = matrix("x", row({"large blue metal cylinder": 0.6, "large red metal cylinder": 0.3, "small red metal cube": 0.05}))
    (cs,) = candidate_sets(m, 0.25)
    assert [c.cls for c in cs.candidates] == [BLUE_CYL, RED_CYL]
    assert [c.weight for c in cs.candidates] == [weight(0.6), weight(0.3)]
    (det,) = candidate_sets(m, 0.0, deterministic=True)
    assert det.classes() == {BLUE_CYL}


def test_candidate_sets_fallback_top_k():
    m = matrix("x", row({"large blue metal cylinder": 0.3, "large red metal cylinder": 0.2, "small red metal cube": 0.1}))
    (cs,) = candidate_sets(m, 0.9, k=2)
    assert [c.cls for c in cs.candidates] == [BLUE_CYL, RED_CYL]
    with pytest.raises(ValueError):
        candidate_sets(m, 0.5, k=0)


def test_candidate_ties_broken_by_class_index():
    m = matrix("x", row({"large red metal cylinder": 0.4, "small red metal cube": 0.4}))
    (cs,) = candidate_sets(m, 0.99, k=1)
    assert cs.candidates[0].cls == cls("small red metal cube")


def test_theta_zero_includes_everything():
    m = matrix("x", row({"large red metal cylinder": 1.0}))
    (cs,) = candidate_sets(m, 0.0)
    assert len(cs) == NUM_CLASSES


scores = st.lists(st.floats(0, 1), min_size=NUM_CLASSES, max_size=NUM_CLASSES)


@given(scores, st.floats(0, 1), st.floats(0, 1))
def test_lower_theta_gives_superset(vec, t1, t2):
    m = matrix("x", PredictionRow(tuple(vec), BoundingBox(0, 0, 1, 1), 1.0))
    lo, hi = sorted((t1, t2))
    (a,), (b,) = candidate_sets(m, hi), candidate_sets(m, lo)
    assert a.classes() <= b.classes()
    (d,) = candidate_sets(m, lo, deterministic=True)
    assert d.classes() <= a.classes()
    assert len(d) == 1
