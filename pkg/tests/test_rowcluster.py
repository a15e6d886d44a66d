import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from croprow.hough import LineRT
from croprow.rowcluster import (
    NOISE,
    PipelineConfig,
    circular_distance,
    dbscan_circular,
    detect_rows,
    select_candidate,
)
from croprow.synthgen import RowSpec, SceneSpec, render_mask
from oracles import brute_dbscan


def _partition(labeling):
    return {frozenset(c) for c in labeling.clusters()}


def _noise(labeling):
    return {i for i, lab in enumerate(labeling.labels) if lab == NOISE}


def _scene(*rows, size=(512, 512)):
    return render_mask(SceneSpec(size=size, rows=rows))


def test_dbscan_empty():
    lab = dbscan_circular([], 2.0)
    assert lab.cluster_count == 0 and lab.labels == []


def test_dbscan_simple_groups():
    lab = dbscan_circular([1, 2, 3, 50], 2.0, 1)
    assert _partition(lab) == {frozenset({0, 1, 2}), frozenset({3})}


def test_dbscan_wraps_at_ninety():
    lab = dbscan_circular([89, -89], 3.0, 1)
    assert lab.cluster_count == 1


def test_dbscan_noise_with_min_pts():
    lab = dbscan_circular([0, 1, 40], 2.0, 2)
    assert _partition(lab) == {frozenset({0, 1})}
    assert _noise(lab) == {2}


def test_dbscan_rejects_bad_parameters():
    with pytest.raises(ValueError):
        dbscan_circular([1], 0.0)
    with pytest.raises(ValueError):
        dbscan_circular([1], 1.0, 0)


def test_circular_distance():
    assert circular_distance(89.0, -89.0) == pytest.approx(2.0)
    assert circular_distance(10.0, 190.0) == pytest.approx(0.0)


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-90, 90, allow_nan=False), max_size=40),
    st.sampled_from([0.5, 2.0, 5.0, 10.0]),
    st.integers(1, 4),
)
def test_dbscan_matches_oracle(values, eps, min_pts):
    lab = dbscan_circular(values, eps, min_pts)
    expected = brute_dbscan(values, eps, min_pts)
    assert _partition(lab) == {frozenset(c) for c in expected}


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-90, 90, allow_nan=False), min_size=1, max_size=30), st.randoms())
def test_dbscan_permutation_invariant_with_min_pts_one(values, rnd):
    # with min_pts=1 every point is core, so the partition is order free
    perm = list(range(len(values)))
    rnd.shuffle(perm)
    a = _partition(dbscan_circular(values, 3.0, 1))
    b = {frozenset(perm[i] for i in c) for c in _partition(dbscan_circular([values[p] for p in perm], 3.0, 1))}
    assert a == b


def _members(*angles):
    return [(a, LineRT(float(i), a % 180.0, 100)) for i, a in enumerate(angles)]


def test_select_candidate_closest_to_vertical():
    assert select_candidate(_members(2, 5, 9)).angle == 2


def test_select_candidate_tie_prefers_positive():
    assert select_candidate(_members(-3, 3)).angle == 3


def test_select_candidate_single():
    row = select_candidate(_members(7))
    assert row.angle == 7 and row.member_count == 1


@given(st.lists(st.floats(-90, 90, allow_nan=False), min_size=1, max_size=8))
def test_select_candidate_is_a_member(angles):
    members = _members(*angles)
    row = select_candidate(members)
    assert any(row.angle == a and row.rho == line.rho for a, line in members)


def test_select_candidate_empty():
    with pytest.raises(ValueError):
        select_candidate([])


def test_config_round_trip_and_validation():
    cfg = PipelineConfig(vote_threshold=80, nms_radius=(1, 4))
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        PipelineConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        PipelineConfig(eps1=0)


def test_detect_rows_empty():
    assert detect_rows(np.zeros((64, 64), dtype=bool)) == []


def test_detect_two_crossing_rows():
    mask = _scene(RowSpec.through(10, 200, 256, 3), RowSpec.through(-10, 312, 256, 3))
    rows = detect_rows(mask)
    assert len(rows) == 2
    got = sorted(r.angle for r in rows)
    assert got[0] == pytest.approx(-10, abs=0.5)
    assert got[1] == pytest.approx(10, abs=0.5)


def test_detect_row_with_gaps():
    mask = _scene(RowSpec.through(12, 256, 256, 3, gaps=((0.2, 0.35), (0.6, 0.75))))
    rows = detect_rows(mask)
    assert len(rows) == 1
    assert rows[0].angle == pytest.approx(12, abs=0.5)


def test_detect_rows_deterministic():
    mask = _scene(RowSpec.through(20, 150, 256, 5), RowSpec.through(-30, 350, 256, 2))
    assert detect_rows(mask) == detect_rows(mask.copy())


@pytest.mark.parametrize("angle", [-37.3, -8.0, 0.0, 4.2, 25.0])
def test_width_and_gap_invariance(angle):
    base = None
    for width in range(1, 16):
        rows = detect_rows(_scene(RowSpec.through(angle, 256, 256, width)))
        assert len(rows) == 1
        base = rows[0].angle if base is None else base
        assert abs(rows[0].angle - base) <= 0.5
    rng = random.Random(7)
    for total in (0.1, 0.2, 0.3, 0.4):
        n = 4
        gaps = []
        for i in range(n):
            start = i / n + rng.uniform(0, 1 / n - total / n)
            gaps.append((start, start + total / n))
        rows = detect_rows(_scene(RowSpec.through(angle, 256, 256, 3, tuple(gaps))))
        assert len(rows) == 1
        assert abs(rows[0].angle - base) <= 0.5
