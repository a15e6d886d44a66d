import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from croprow.anglemetric import circular_span, evaluate_pair, pair_and_score
from croprow.rowcluster import PipelineConfig
from croprow.synthgen import RowSpec, SceneSpec, perturb_spec, render_mask
from oracles import literal_angle_error

angles = st.floats(-89.9, 90, allow_nan=False)


def test_identical_single_angle():
    r = pair_and_score([0.0], [0.0])
    assert r.k == 1 and r.mean_error == 0.0 and r.mixed_origin_k == 1


def test_two_pairs():
    r = pair_and_score([10, -10], [12, -11], eps2=5)
    assert r.k == 2
    assert sorted(r.cluster_spans) == [1.0, 2.0]
    assert r.mean_error == pytest.approx(1.5)


def test_missed_row_is_absent_not_zero():
    r = pair_and_score([10], [])
    assert r.k == 0 and r.mean_error is None and r.unmatched_gt == 1


def test_span_uses_extremes_for_larger_clusters():
    r = pair_and_score([0, 1], [3], eps2=5)
    assert r.k == 1 and r.cluster_spans == [3.0]


def test_same_origin_cluster_counts_but_not_as_mixed():
    r = pair_and_score([4, 6], [40], eps2=5)
    assert r.k == 1 and r.mixed_origin_k == 0 and r.unmatched_pred == 1


def test_wrap_cluster_span():
    assert circular_span([89.5, -89.5]) == pytest.approx(1.0)
    r = pair_and_score([89.5], [-89.5])
    assert r.k == 1 and r.mean_error == pytest.approx(1.0)


@settings(max_examples=300, deadline=None)
@given(st.lists(angles, max_size=4), st.lists(angles, max_size=4), st.sampled_from([2.0, 5.0, 10.0]))
def test_matches_literal_oracle(gt, pred, eps):
    r = pair_and_score(gt, pred, eps)
    spans, mean = literal_angle_error(gt, pred, eps, 1)
    assert r.k == len(spans)
    assert sorted(r.cluster_spans) == pytest.approx(sorted(spans), abs=1e-9)
    if mean is None:
        assert r.mean_error is None
    else:
        assert r.mean_error == pytest.approx(mean, abs=1e-9)


@given(st.lists(angles, max_size=6), st.lists(angles, max_size=6))
def test_symmetric(gt, pred):
    a, b = pair_and_score(gt, pred), pair_and_score(pred, gt)
    assert a.k == b.k
    assert sorted(a.cluster_spans) == sorted(b.cluster_spans)
    assert a.mean_error == b.mean_error
    assert (a.unmatched_gt, a.unmatched_pred) == (b.unmatched_pred, b.unmatched_gt)


@given(st.lists(st.floats(-60, 60, allow_nan=False), max_size=6),
       st.lists(st.floats(-60, 60, allow_nan=False), max_size=6),
       st.floats(-5, 5, allow_nan=False))
def test_shift_coherence(gt, pred, delta):
    base = pair_and_score(gt, pred)
    moved = pair_and_score([a + delta for a in gt], [a + delta for a in pred])
    assert base.k == moved.k
    assert sorted(moved.cluster_spans) == pytest.approx(sorted(base.cluster_spans), abs=1e-9)


@given(st.lists(angles, max_size=6), st.lists(angles, max_size=6))
def test_k_bound_and_non_negative(gt, pred):
    r = pair_and_score(gt, pred)
    assert r.k <= (len(gt) + len(pred)) // 2
    assert all(s >= 0 for s in r.cluster_spans)
    if r.k:
        assert (r.mean_error == 0) == all(s == 0 for s in r.cluster_spans)


def _spec(*rows):
    return SceneSpec(rows=rows)


def test_identical_masks_end_to_end():
    spec = _spec(RowSpec.through(8, 200, 256, 3), RowSpec.through(-20, 330, 256, 4))
    m = render_mask(spec)
    ev = evaluate_pair(m, m)
    assert ev.angle.mean_error == 0.0
    assert ev.scores.iou == 1.0 and ev.scores.accuracy == 1.0


def test_known_angular_offset():
    spec = _spec(RowSpec.through(5, 256, 256, 3))
    pred = perturb_spec(spec, [2.0])
    ev = evaluate_pair(render_mask(spec), render_mask(pred))
    assert ev.angle.k == 1
    assert ev.angle.mean_error == pytest.approx(2.0, abs=0.5)


def test_short_spurious_segment_is_ignored():
    spec = _spec(RowSpec.through(6, 180, 256, 3), RowSpec.through(-12, 340, 256, 3))
    gt = render_mask(spec)
    pred = gt.copy()
    pred[40, 60:100] = True  # 40 px, below the 100-vote threshold
    clean = evaluate_pair(gt, gt)
    dirty = evaluate_pair(gt, pred)
    assert dirty.angle == clean.angle
    assert dirty.pred_row_count == clean.pred_row_count


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        evaluate_pair(np.zeros((10, 10), bool), np.zeros((10, 12), bool))
