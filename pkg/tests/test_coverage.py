import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavcrew.coverage import CoverageModel, count_served, footprint_radius, overlap_area

from oracles import exhaustive_rule, greedy_served, lens_equal, lens_numeric

coords = st.floats(0.0, 300.0, allow_nan=False)
users_st = st.lists(st.tuples(coords, coords), min_size=0, max_size=12)
uavs_st = st.lists(st.tuples(coords, coords, st.floats(20.0, 150.0)), min_size=1, max_size=4)


def test_footprint_at_60_degrees():
    assert footprint_radius(100.0, CoverageModel(aperture_deg=60.0)) == pytest.approx(57.735, abs=1e-3)


def test_footprint_rejects_bad_altitude():
    with pytest.raises(ValueError):
        footprint_radius(0.0, CoverageModel())


@pytest.mark.parametrize("kw", [{"aperture_deg": 0.0}, {"aperture_deg": 180.0}, {"capacity": 0}])
def test_model_validation(kw):
    with pytest.raises(ValueError):
        CoverageModel(**kw)


def test_empty_inputs():
    m = CoverageModel()
    assert count_served(np.zeros((0, 2)), [(0, 0, 100)], m).total == 0
    r = count_served([(1.0, 1.0)], np.zeros((0, 3)), m)
    assert r.total == 0 and list(r.assignment) == [-1]


def test_capacity_binds():
    users = [(0.0, float(i)) for i in range(5)]
    assert count_served(users, [(0.0, 0.0, 100.0)], CoverageModel(capacity=3)).total == 3


def test_equal_distance_goes_to_lower_index():
    r = count_served([(0.0, 0.0)], [(10.0, 0.0, 100.0), (-10.0, 0.0, 100.0)], CoverageModel())
    assert r.assignment[0] == 0


def test_overflow_moves_to_next_nearest():
    users = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]
    uavs = [(0.0, 0.0, 100.0), (50.0, 0.0, 100.0)]
    r = count_served(users, uavs, CoverageModel(capacity=2))
    assert list(r.assignment) == [0, 0, 1]
    assert list(r.per_uav) == [2, 1]


@given(users_st, uavs_st, st.integers(1, 5), st.sampled_from([60.0, 90.0, 120.0]))
@settings(max_examples=200, deadline=None)
def test_matches_greedy_oracle(users, uavs, cap, ap):
    m = CoverageModel(aperture_deg=ap, capacity=cap)
    r = count_served(users, uavs, m)
    total, assignment = greedy_served(users, uavs, math.radians(ap), cap)
    assert r.total == total
    assert list(r.assignment) == assignment


@given(st.lists(st.tuples(coords, coords), max_size=6),
       st.lists(st.tuples(coords, coords, st.floats(20.0, 150.0)), min_size=1, max_size=3),
       st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_matches_exhaustive_rule(users, uavs, cap):
    m = CoverageModel(capacity=cap)
    assert count_served(users, uavs, m).total == exhaustive_rule(users, uavs, m.aperture, cap)


@given(users_st, uavs_st, st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_per_uav_respects_capacity(users, uavs, cap):
    r = count_served(users, uavs, CoverageModel(capacity=cap))
    assert r.per_uav.max(initial=0) <= cap
    assert r.total == int((r.assignment >= 0).sum()) == int(r.per_uav.sum())


@given(users_st, uavs_st, st.tuples(coords, coords, st.floats(20.0, 150.0)))
@settings(max_examples=150, deadline=None)
def test_adding_uav_never_reduces_total(users, uavs, extra):
    m = CoverageModel(capacity=3)
    assert count_served(users, uavs + [extra], m).total >= count_served(users, uavs, m).total


@given(users_st, uavs_st)
@settings(max_examples=100, deadline=None)
def test_uncapacitated_total_is_union_cover(users, uavs):
    m = CoverageModel(capacity=10_000)
    expect = sum(any(math.hypot(u[0] - x, u[1] - y) <= footprint_radius(z, m) for x, y, z in uavs) for u in users)
    assert count_served(users, uavs, m).total == expect


def test_overlap_reference_value():
    assert overlap_area((0, 0), 50.0, (50, 0), 50.0) == pytest.approx(3070.924, abs=1e-3)
    assert overlap_area((0, 0), 50.0, (50, 0), 50.0) == pytest.approx(lens_equal(50.0, 50.0), rel=1e-12)


def test_overlap_edge_cases():
    assert overlap_area((0, 0), 5.0, (10, 0), 5.0) == 0.0
    assert overlap_area((0, 0), 10.0, (1, 0), 2.0) == pytest.approx(math.pi * 4)
    assert overlap_area((3, 4), 7.0, (3, 4), 7.0) == pytest.approx(math.pi * 49)
    with pytest.raises(ValueError):
        overlap_area((0, 0), -1.0, (0, 0), 1.0)


@given(st.floats(1.0, 100.0), st.floats(0.0, 250.0))
@settings(max_examples=100, deadline=None)
def test_overlap_equal_radii_closed_form(r, d):
    assert overlap_area((0.0, 0.0), r, (d, 0.0), r) == pytest.approx(lens_equal(r, d), rel=1e-9, abs=1e-9)


@given(st.floats(5.0, 60.0), st.floats(5.0, 60.0), st.floats(0.0, 130.0))
@settings(max_examples=25, deadline=None)
def test_overlap_matches_grid_estimate(r1, r2, d):
    est = lens_numeric((0.0, 0.0), r1, (d, 0.0), r2)
    assert overlap_area((0.0, 0.0), r1, (d, 0.0), r2) == pytest.approx(est, abs=2e-3 * math.pi * max(r1, r2) ** 2)


@given(st.floats(1.0, 50.0), st.floats(1.0, 50.0), st.floats(0.0, 120.0))
@settings(max_examples=100, deadline=None)
def test_overlap_bounded_and_symmetric(r1, r2, d):
    a = overlap_area((0.0, 0.0), r1, (d, 0.0), r2)
    assert 0.0 <= a <= math.pi * min(r1, r2) ** 2 + 1e-9
    assert a == pytest.approx(overlap_area((d, 0.0), r2, (0.0, 0.0), r1), abs=1e-9)
