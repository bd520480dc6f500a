import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import place_leader, place_pair_midpoint
from swarmsim.dynamics import AgentState
from swarmsim.geometry import wrap_angle
from swarmsim.vision import (
    REFLECTION, BlobObservation, LedLayout, VisionError, VisionParams, estimate_distance, estimate_heading,
    group_blobs, in_blind_spot, merge_blobs, observe, parse_all, parse_blobs,
)

L = LedLayout()
CLEAN = VisionParams(noise_sigma=0.0)


@pytest.mark.parametrize("d", [150.0, 200.0, 500.0, 2000.0])
def test_distance_of_symmetric_pair_matches_closed_form(d):
    gamma = 2 * math.atan(0.5 * L.baseline / d)
    lo = BlobObservation(0.0, 0.5 * gamma, 1)
    hi = BlobObservation(0.0, -0.5 * gamma, 1)
    assert estimate_distance(lo, hi, L.baseline) == pytest.approx(L.baseline / (2 * math.tan(gamma / 2)))
    assert estimate_distance(lo, hi, L.baseline) == pytest.approx(d)


def test_distance_rejects_flat_pair():
    b = BlobObservation(0.0, 0.1, 1)
    with pytest.raises(VisionError):
        estimate_distance(b, b, L.baseline)


def test_observe_sees_three_blobs_of_a_leader_ahead(observer):
    leader = place_leader(0.3, 0.1, 800.0, 1.0)
    blobs = observe(0, [observer, leader], L, CLEAN)
    assert len(blobs) == 3
    assert all(b.source == 1 for b in blobs)


def test_dark_robots_are_invisible(observer):
    dark = AgentState(500, 0, -1000, 0.0, leds_on=False)
    assert observe(0, [observer, dark], L, CLEAN) == []


def test_out_of_range_is_invisible(observer):
    far = place_leader(0.0, 0.0, CLEAN.max_range + 100.0, 0.0)
    assert observe(0, [observer, far], L, CLEAN) == []


@pytest.mark.parametrize("bearing_deg", [177.6, 179.0, 180.0, 181.0, 182.4])
def test_blind_spot(observer, bearing_deg):
    leader = place_leader(math.radians(bearing_deg), 0.0, 600.0, 0.0)
    assert observe(0, [observer, leader], L, CLEAN) == []


@pytest.mark.parametrize("az, inside", [(math.pi, True), (-math.pi + 0.01, True), (math.pi - 0.05, False), (0.0, False)])
def test_in_blind_spot(az, inside):
    assert in_blind_spot(az, CLEAN) is inside


def test_occlusion_by_third_body(observer):
    leader = place_leader(0.0, 0.0, 1000.0, 0.5)
    blocker = AgentState(500, 0, -1000, 0.0)
    assert observe(0, [observer, leader, blocker], L, CLEAN) == []
    side = AgentState(500, 300, -1000, 0.0)
    assert len(observe(0, [observer, leader, side], L, CLEAN)) == 3


def test_merge_collapses_close_blobs():
    blobs = [BlobObservation(0.0, 0.0, 1), BlobObservation(1e-4, 0.0, 1), BlobObservation(0.5, 0.0, 1)]
    merged = merge_blobs(blobs, math.radians(1.0))
    assert len(merged) == 2
    assert merged[0].azimuth == pytest.approx(5e-5)


def test_merge_threshold_zero_is_identity():
    blobs = [BlobObservation(0.0, 0.0, 1), BlobObservation(0.0, 0.0, 2)]
    assert merge_blobs(blobs, 0.0) == blobs


def test_noise_is_reproducible_from_rng(observer):
    leader = place_leader(0.3, 0.05, 700.0, 2.0)
    a = observe(0, [observer, leader], L, VisionParams(), np.random.default_rng(5))
    b = observe(0, [observer, leader], L, VisionParams(), np.random.default_rng(5))
    c = observe(0, [observer, leader], L, VisionParams(), np.random.default_rng(6))
    assert a == b and a != c


def test_reflection_is_mirror_image_above(observer):
    leader = place_leader(0.2, 0.0, 900.0, 1.0)
    params = VisionParams(noise_sigma=0.0, reflection_rate=1.0)
    blobs = observe(0, [observer, leader], L, params, np.random.default_rng(0))
    refl = [b for b in blobs if b.source == REFLECTION]
    assert len(refl) == 1
    real = [b for b in blobs if b.source != REFLECTION]
    assert refl[0].elevation < min(b.elevation for b in real)
    assert parse_blobs(blobs, L, params) == parse_blobs(real, L, params)


@settings(max_examples=1000)
@given(st.floats(-math.pi, math.pi), st.floats(-0.6, 0.6), st.floats(300.0, 2000.0), st.floats(-math.pi, math.pi))
def test_parse_recovers_truth_from_clean_blobs(bearing, pitch, dist, yaw):
    observer = AgentState(0.0, 0.0, -1000.0, 0.0)
    leader = place_pair_midpoint(bearing, pitch, dist, yaw)
    blobs = observe(0, [observer, leader], L, CLEAN)
    if len(blobs) < 3:
        return  # merged or blind-spot geometry
    est = parse_blobs(blobs, L, CLEAN)
    assert abs(wrap_angle(est.bearing - bearing)) < 1e-6
    assert abs(est.pitch - pitch) < 1e-6
    assert est.distance == pytest.approx(dist, rel=1e-6)
    anterior_pitch = math.atan2(-(leader.z + L.anterior.z + 1000.0),
                                math.hypot(leader.x + math.cos(yaw) * L.anterior.x,
                                           leader.y + math.sin(yaw) * L.anterior.x))
    if abs(anterior_pitch - pitch) < CLEAN.pitch_match_threshold:
        assert est.heading_valid
        h = math.atan2(est.heading.y, est.heading.x)
        assert abs(wrap_angle(h - yaw)) < math.radians(0.01)


def test_parse_needs_two_blobs():
    assert parse_blobs([BlobObservation(0.0, 0.0, 1)], L, CLEAN) is None
    assert parse_blobs([], L, CLEAN) is None


def test_two_blobs_give_position_without_heading(observer):
    leader = place_pair_midpoint(0.4, 0.0, 600.0, 0.0)
    blobs = observe(0, [observer, leader], L, CLEAN)
    est = parse_blobs(blobs[:2], L, CLEAN)  # bottom and top LED, anterior dropped
    assert est.distance == pytest.approx(600.0, rel=1e-9)
    assert not est.heading_valid and est.heading is None


def test_heading_ambiguity_uses_previous_heading():
    # leader level with the observer and broadside: elevations cannot tell the roots apart
    pair_est = parse_blobs([BlobObservation(0.0, math.atan(25 / 500), 1), BlobObservation(0.0, -math.atan(25 / 500), 1)],
                           LedLayout(anterior_height=0.0), CLEAN)
    anterior = BlobObservation(math.atan2(20.0, 480.0), 0.0, 1)
    flat = LedLayout(anterior_height=0.0)
    h1, ok1 = estimate_heading(anterior, pair_est, flat, prev_heading=(1.0, 0.0))
    h2, ok2 = estimate_heading(anterior, pair_est, flat, prev_heading=(-1.0, 0.0))
    assert ok1 and ok2
    assert h1.x > 0 > h2.x


def test_heading_invalid_when_sight_line_misses():
    pair = [BlobObservation(0.0, math.atan(25 / 500), 1), BlobObservation(0.0, -math.atan(25 / 500), 1)]
    est = parse_blobs(pair, L, CLEAN)
    h, ok = estimate_heading(BlobObservation(0.5, 0.0, 1), est, L)
    assert h is None and not ok


def test_group_blobs_splits_by_source_and_shares_reflections():
    blobs = [BlobObservation(0, 0, 2), BlobObservation(0, 0, 1), BlobObservation(0, -1, REFLECTION)]
    g = group_blobs(blobs)
    assert list(g) == [1, 2]
    assert all(any(b.source == REFLECTION for b in v) for v in g.values())


def test_parse_all_one_estimate_per_leader(observer):
    a = place_leader(0.5, 0.0, 700.0, 0.0)
    b = place_leader(-0.5, 0.1, 1200.0, 2.0)
    ests = parse_all(observe(0, [observer, a, b], L, CLEAN), L, CLEAN)
    assert [e.source for e in ests] == [1, 2]
    assert ests[0].distance < ests[1].distance


@pytest.mark.parametrize("kw", [dict(baseline=0.0), dict(longitudinal_offset=-1.0)])
def test_layout_validation(kw):
    with pytest.raises(ValueError):
        LedLayout(**kw)


@pytest.mark.parametrize("kw", [dict(noise_sigma=-0.1), dict(reflection_rate=1.5), dict(max_range=math.nan)])
def test_vision_params_validation(kw):
    with pytest.raises(ValueError):
        VisionParams(**kw)
