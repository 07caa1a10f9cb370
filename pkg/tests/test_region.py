"""Region algebra: normalization, membership, dilation, serialization."""

import numpy as np
import pytest

from causal_lab.region import Region


def test_interval_basic_membership():
    r = Region.interval(-1.0, 2.0)
    assert r.dim == 1
    assert r.contains((0.0,))
    assert r.contains((-1.0,)) and r.contains((2.0,))  # closed boundaries
    assert not r.contains((2.0000001,))


def test_from_boxes_merges_overlaps_1d():
    r = Region.from_boxes([((0.0,), (1.0,)), ((0.5,), (2.0,)), ((3.0,), (4.0,))])
    assert len(r.boxes) == 2
    assert r.contains((1.5,)) and r.contains((3.5,))
    assert not r.contains((2.5,))


def test_adjacent_intervals_merge():
    r = Region.from_boxes([((0.0,), (1.0,)), ((1.0,), (2.0,))])
    assert len(r.boxes) == 1
    assert r.bounding_box() == ((0.0,), (2.0,))


def test_disjointify_2d_overlap():
    r = Region.from_boxes([((0.0, 0.0), (2.0, 2.0)), ((1.0, 1.0), (3.0, 3.0))])
    # total area must count the overlap once
    area = sum((b[1][0] - b[0][0]) * (b[1][1] - b[0][1]) for b in r.boxes)
    assert area == pytest.approx(7.0)
    assert r.contains((2.5, 2.5)) and r.contains((0.5, 0.5))
    assert not r.contains((0.5, 2.5))


def test_degenerate_point_boxes():
    r = Region.point_boxes([(0.0,), (1.5,)])
    assert r.contains((0.0,)) and r.contains((1.5,))
    assert not r.contains((0.7,))


def test_empty_region():
    r = Region.empty(2)
    assert r.is_empty
    assert not r.contains((0.0, 0.0))
    assert r.union(Region.from_boxes([((0.0, 0.0), (1.0, 1.0))])).contains((0.5, 0.5))


def test_contains_points_matches_scalar():
    rng = np.random.default_rng(5)
    r = Region.from_boxes([((-1.0, -1.0), (0.5, 0.5)), ((1.0, 1.0), (2.0, 2.0))])
    pts = rng.uniform(-2, 3, size=(200, 2))
    mask = r.contains_points(pts)
    for p, m in zip(pts, mask):
        assert m == r.contains(tuple(p))


def test_expand_interval_exact():
    r = Region.interval(-1.0, 1.0).expand(0.25)
    assert r.bounding_box() == ((-1.25,), (1.25,))


def test_expand_merges_nearby_boxes():
    r = Region.from_boxes([((0.0,), (1.0,)), ((1.5,), (2.0,))]).expand(0.3)
    assert len(r.boxes) == 1


def test_expand_zero_is_identity():
    r = Region.from_boxes([((0.0, 0.0), (1.0, 2.0))])
    assert r.expand(0.0).equals(r)


def test_sup_distance():
    r = Region.from_boxes([((0.0, 0.0), (1.0, 1.0))])
    assert r.sup_distance((0.5, 0.5)) == 0.0
    assert r.sup_distance((2.0, 0.5)) == pytest.approx(1.0)
    assert r.sup_distance((2.0, 3.0)) == pytest.approx(2.0)


def test_union_and_covers():
    a = Region.interval(0.0, 1.0)
    b = Region.interval(2.0, 3.0)
    u = a.union(b)
    assert u.covers(a) and u.covers(b)
    assert not a.covers(u)
    assert u.equals(b.union(a))


def test_covers_needs_full_containment():
    outer = Region.interval(0.0, 10.0)
    inner = Region.from_boxes([((1.0,), (2.0,)), ((8.0,), (9.0,))])
    straddle = Region.interval(9.0, 11.0)
    assert outer.covers(inner)
    assert not outer.covers(straddle)


@pytest.mark.parametrize("seed", range(4))
def test_sample_points_inside_and_dense(seed):
    rng = np.random.default_rng(seed)
    lo = rng.uniform(-3, 0, size=2)
    hi = lo + rng.uniform(0.5, 2.0, size=2)
    r = Region.from_boxes([(tuple(lo), tuple(hi))])
    res = 0.2
    pts = r.sample_points(res)
    assert len(pts) > 0
    assert r.contains_points(pts).all()
    # every corner has a sample within one resolution step in sup norm
    for corner in (lo, hi, (lo[0], hi[1]), (hi[0], lo[1])):
        gap = np.abs(pts - np.asarray(corner)).max(axis=1).min()
        assert gap <= res + 1e-12


def test_json_round_trip():
    r = Region.from_boxes([((0.0, -1.0), (1.0, 1.0)), ((2.0, 2.0), (3.0, 4.0))])
    again = Region.from_json(r.to_json())
    assert again.equals(r)


def test_from_json_rejects_mixed_dims():
    with pytest.raises(ValueError):
        Region.from_json([[[0.0], [1.0]], [[0.0, 0.0], [1.0, 1.0]]])


def test_inverted_box_rejected():
    with pytest.raises(ValueError):
        Region.from_boxes([((1.0,), (0.0,))])
