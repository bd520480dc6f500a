"""Synthetic LED-blob perception and the blob parser.

:func:`observe` projects the lit LEDs of every other robot into one robot's
camera frame, applying the rear blind spot, range and elevation limits,
occlusion by other bodies, merging of nearly coincident blobs, angular
noise and optional surface reflections.  :func:`parse_blobs` turns the blobs
of one robot back into bearing, pitch, distance and heading.

Each robot carries three LEDs: a vertically stacked posterior pair and an
anterior LED slightly above the pair's midpoint.  Blob angles are
``azimuth`` (positive left) and ``elevation`` (positive down), matching
:mod:`swarmsim.geometry`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .dynamics import AgentState
from .geometry import TWO_PI, PqrPoint, Vec3, angle_between, direction_from_angles, wrap_angle

REFLECTION = "reflection"

# numerical slack on the anterior LED elevation when ranking candidate pairs
ANTERIOR_FIT_TOL = 1e-6


class VisionError(ValueError):
    """Degenerate blob geometry (e.g. a zero-height posterior pair)."""


@dataclass(frozen=True)
class LedLayout:
    """Body-frame LED placement relative to the robot's reference point.

    The posterior pair sits ``longitudinal_offset / 2`` behind the reference
    point, ``baseline`` apart vertically.  The anterior LED sits the same
    distance ahead, ``anterior_height`` above the pair's midpoint.
    """

    baseline: float = 50.0
    longitudinal_offset: float = 65.0
    anterior_height: float = 15.0

    def __post_init__(self):
        if not self.baseline > 0:
            raise ValueError("led.baseline must be positive")
        if not self.longitudinal_offset > 0:
            raise ValueError("led.longitudinal_offset must be positive")

    @property
    def posterior_top(self) -> Vec3:
        return Vec3(-0.5 * self.longitudinal_offset, 0.0, 0.5 * self.baseline)

    @property
    def posterior_bottom(self) -> Vec3:
        return Vec3(-0.5 * self.longitudinal_offset, 0.0, -0.5 * self.baseline)

    @property
    def pair_midpoint(self) -> Vec3:
        return Vec3(-0.5 * self.longitudinal_offset, 0.0, 0.0)

    @property
    def anterior(self) -> Vec3:
        return Vec3(0.5 * self.longitudinal_offset, 0.0, self.anterior_height)

    def offsets(self) -> Tuple[Vec3, Vec3, Vec3]:
        """LED offsets in the order bottom (LED 1), top (LED 2), anterior (LED 3)."""
        return self.posterior_bottom, self.posterior_top, self.anterior


@dataclass(frozen=True)
class VisionParams:
    blind_spot_half_angle: float = math.radians(2.5)
    fov_limit: float = 0.5 * math.pi
    merge_threshold: float = math.radians(1.0)
    stack_tolerance: float = math.radians(1.5)
    pitch_match_threshold: float = math.radians(6.0)
    noise_sigma: float = math.radians(0.2)
    reflection_rate: float = 0.0
    max_range: float = 3000.0
    occluder_radius: float = 25.0
    surface_z: float = 0.0

    def __post_init__(self):
        for name in (
            "blind_spot_half_angle", "fov_limit", "merge_threshold", "stack_tolerance",
            "pitch_match_threshold", "noise_sigma", "reflection_rate", "max_range",
            "occluder_radius",
        ):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"vision.{name} must be nonnegative, got {v!r}")
        if self.reflection_rate > 1.0:
            raise ValueError("vision.reflection_rate is a probability")


class BlobObservation(NamedTuple):
    azimuth: float
    elevation: float
    source: Union[int, str]


@dataclass(frozen=True)
class LeaderEstimate:
    """What a follower extracts about one lit robot in one camera frame.

    ``leader_position`` is the posterior pair midpoint in the follower's body
    frame (x forward, y left, z up); ``heading`` is a unit horizontal vector
    in the same frame, or ``None`` when the anterior LED was not usable.
    """

    bearing: float
    pitch: float
    distance: float
    leader_position: Vec3
    heading: Optional[Vec3] = None
    heading_valid: bool = False
    source: Union[int, str, None] = None


def led_world_positions(agent: AgentState, layout: LedLayout) -> List[Vec3]:
    c, s = math.cos(agent.yaw), math.sin(agent.yaw)
    out = []
    for off in layout.offsets():
        out.append(Vec3(agent.x + c * off.x - s * off.y, agent.y + s * off.x + c * off.y, agent.z + off.z))
    return out


def pair_midpoint_world(agent: AgentState, layout: LedLayout) -> Vec3:
    off = layout.pair_midpoint
    c, s = math.cos(agent.yaw), math.sin(agent.yaw)
    return Vec3(agent.x + c * off.x - s * off.y, agent.y + s * off.x + c * off.y, agent.z + off.z)


def in_blind_spot(azimuth: float, params: VisionParams) -> bool:
    return abs(wrap_angle(azimuth - math.pi)) < params.blind_spot_half_angle


def _segment_blocked(ox, oy, oz, dx, dy, dz, cx, cy, cz, radius) -> bool:
    # closest approach of the open segment o -> o+d to the sphere centre c
    len2 = dx * dx + dy * dy + dz * dz
    if len2 == 0.0:
        return False
    t = ((cx - ox) * dx + (cy - oy) * dy + (cz - oz) * dz) / len2
    if t <= 0.0 or t >= 1.0:
        return False
    px = ox + t * dx - cx
    py = oy + t * dy - cy
    pz = oz + t * dz - cz
    return px * px + py * py + pz * pz < radius * radius


def _angles_to(observer: AgentState, target, params: VisionParams):
    """Return (azimuth, elevation, range) of a world point, or None if out of view."""
    dx = target[0] - observer.x
    dy = target[1] - observer.y
    dz = target[2] - observer.z
    c, s = math.cos(observer.yaw), math.sin(observer.yaw)
    p = c * dx + s * dy
    q = -s * dx + c * dy
    horiz = math.hypot(p, q)
    rng = math.hypot(horiz, dz)
    if rng > params.max_range or horiz == 0.0:
        return None
    az = math.atan2(q, p)
    if az >= math.pi:
        az -= TWO_PI
    if in_blind_spot(az, params):
        return None
    el = math.atan2(-dz, horiz)
    if abs(el) > params.fov_limit:
        return None
    return az, el, rng


def merge_blobs(blobs: List[BlobObservation], threshold: float) -> List[BlobObservation]:
    """Collapse blob pairs closer than ``threshold`` to their angular midpoint.

    Pairs are merged closest-first until no pair is below the threshold.  A
    merged blob keeps the source of the first blob of the pair.
    """
    blobs = list(blobs)
    if threshold <= 0.0:
        return blobs
    while len(blobs) > 1:
        dirs = [direction_from_angles(b.azimuth, b.elevation) for b in blobs]
        best = None
        for i in range(len(blobs)):
            for j in range(i + 1, len(blobs)):
                g = angle_between(dirs[i], dirs[j])
                if g < threshold and (best is None or g < best[0]):
                    best = (g, i, j)
        if best is None:
            break
        _, i, j = best
        a, b = dirs[i], dirs[j]
        m = PqrPoint(a[0] + b[0], a[1] + b[1], a[2] + b[2])
        merged = BlobObservation(wrap_angle(math.atan2(m.q, m.p)), math.atan2(m.r, math.hypot(m.p, m.q)), blobs[i].source)
        blobs = [bl for k, bl in enumerate(blobs) if k not in (i, j)]
        blobs.insert(i, merged)
    return blobs


def observe(
    follower: Union[int, AgentState],
    world: Sequence[AgentState],
    layout: LedLayout,
    params: VisionParams,
    rng: Optional[np.random.Generator] = None,
) -> List[BlobObservation]:
    """Blobs seen by ``follower`` (an index into ``world`` or the state itself).

    ``source`` of each blob is the index of the emitting robot in ``world``,
    or :data:`REFLECTION` for a surface mirror image.  Randomness (noise and
    reflections) is drawn from ``rng`` only; ``rng=None`` gives a noise-free
    frame.
    """
    if isinstance(follower, int):
        me = follower
    else:
        me = next(i for i, a in enumerate(world) if a is follower)
    obs = world[me]
    ox, oy, oz = obs.x, obs.y, obs.z
    radius = params.occluder_radius

    blobs: List[BlobObservation] = []
    visible_leds: List[Vec3] = []
    for j, agent in enumerate(world):
        if j == me or not agent.leds_on:
            continue
        # a robot whose body sits in the blind spot is not seen at all
        dx, dy = agent.x - ox, agent.y - oy
        if dx != 0.0 or dy != 0.0:
            c, s = math.cos(obs.yaw), math.sin(obs.yaw)
            if in_blind_spot(math.atan2(-s * dx + c * dy, c * dx + s * dy), params):
                continue
        for led in led_world_positions(agent, layout):
            ang = _angles_to(obs, led, params)
            if ang is None:
                continue
            dx, dy, dz = led[0] - ox, led[1] - oy, led[2] - oz
            blocked = False
            for k, other in enumerate(world):
                if k == me or k == j:
                    continue
                if _segment_blocked(ox, oy, oz, dx, dy, dz, other.x, other.y, other.z, radius):
                    blocked = True
                    break
            if blocked:
                continue
            blobs.append(BlobObservation(ang[0], ang[1], j))
            visible_leds.append(led)

    blobs = merge_blobs(blobs, params.merge_threshold)

    if rng is None:
        return blobs

    if params.reflection_rate > 0.0 and visible_leds:
        draw = rng.random()
        pick = int(rng.integers(len(visible_leds)))
        if draw < params.reflection_rate:
            led = visible_leds[pick]
            mirror = (led[0], led[1], 2.0 * params.surface_z - led[2])
            ang = _angles_to(obs, mirror, params)
            if ang is not None:
                blobs.append(BlobObservation(ang[0], ang[1], REFLECTION))

    if params.noise_sigma > 0.0 and blobs:
        noise = rng.normal(0.0, params.noise_sigma, size=(len(blobs), 2))
        blobs = [
            BlobObservation(wrap_angle(b.azimuth + float(n[0])),
                            min(max(b.elevation + float(n[1]), -0.5 * math.pi + 1e-9), 0.5 * math.pi - 1e-9),
                            b.source)
            for b, n in zip(blobs, noise)
        ]
    return blobs


def estimate_distance(b_low: BlobObservation, b_high: BlobObservation, baseline: float) -> float:
    """Distance (mm) to the midpoint of a vertically stacked LED pair.

    A vertical segment of length ``baseline`` at horizontal range ``rho``
    shows up at elevations with ``tan(e_low) - tan(e_high) = baseline / rho``.
    Solving for ``rho`` and lifting to the midpoint's slant range gives the
    distance; for a pair seen symmetrically about the horizon this is
    exactly ``baseline / (2 tan(gamma / 2))`` with ``gamma`` the angle
    between the two blobs.
    """
    spread = math.tan(b_low.elevation) - math.tan(b_high.elevation)
    if not spread > 1e-12:
        raise VisionError("posterior pair has no vertical separation; distance is unbounded")
    rho = baseline / spread
    t_mid = 0.5 * (math.tan(b_low.elevation) + math.tan(b_high.elevation))
    return rho * math.sqrt(1.0 + t_mid * t_mid)


def _pair_estimate(b_low: BlobObservation, b_high: BlobObservation, layout: LedLayout, source) -> LeaderEstimate:
    d = estimate_distance(b_low, b_high, layout.baseline)
    t_mid = 0.5 * (math.tan(b_low.elevation) + math.tan(b_high.elevation))
    pitch = math.atan(t_mid)
    bearing = math.atan2(math.sin(b_low.azimuth) + math.sin(b_high.azimuth),
                         math.cos(b_low.azimuth) + math.cos(b_high.azimuth))
    bearing = wrap_angle(bearing)
    rho = d / math.sqrt(1.0 + t_mid * t_mid)
    pos = Vec3(rho * math.cos(bearing), rho * math.sin(bearing), -rho * t_mid)
    return LeaderEstimate(bearing, pitch, d, pos, None, False, source)


def estimate_heading(
    anterior: BlobObservation,
    pair_estimate: LeaderEstimate,
    layout: LedLayout,
    prev_heading: Optional[Sequence[float]] = None,
    elevation_margin: float = 1e-9,
) -> Tuple[Optional[Vec3], bool]:
    """Leader heading from the anterior blob.

    The anterior LED lies on the blob's horizontal sight line at horizontal
    distance ``longitudinal_offset`` from the posterior pair, so it is one of
    at most two circle/line intersections.  The candidate is picked by, in
    order: agreement of the blob's elevation with the LED's known height
    (when the two candidates differ by more than ``elevation_margin``), the
    previous heading, and finally the nearer intersection.

    Returns ``(heading, valid)``; ``valid`` is False when the sight line
    misses the circle.
    """
    ts = _anterior_ranges(anterior, pair_estimate, layout)
    if not ts:
        return None, False
    ux, uy = math.cos(anterior.azimuth), math.sin(anterior.azimuth)
    px, py = pair_estimate.leader_position.x, pair_estimate.leader_position.y

    def heading_at(t):
        hx, hy = t * ux - px, t * uy - py
        n = math.hypot(hx, hy)
        return Vec3(hx / n, hy / n, 0.0)

    if len(ts) == 1 or ts[0] == ts[1]:
        return heading_at(ts[0]), True

    resid = _elevation_residuals(anterior, pair_estimate, layout, ts)
    if abs(resid[0] - resid[1]) > elevation_margin:
        return heading_at(ts[0] if resid[0] < resid[1] else ts[1]), True
    cands = [heading_at(t) for t in ts]
    if prev_heading is not None:
        dots = [c.x * prev_heading[0] + c.y * prev_heading[1] for c in cands]
        return (cands[0] if dots[0] >= dots[1] else cands[1]), True
    return cands[0], True


def _anterior_ranges(anterior: BlobObservation, pair_estimate: LeaderEstimate, layout: LedLayout) -> List[float]:
    """Horizontal ranges where the anterior sight line meets the heading circle."""
    s = layout.longitudinal_offset
    px, py = pair_estimate.leader_position.x, pair_estimate.leader_position.y
    ux, uy = math.cos(anterior.azimuth), math.sin(anterior.azimuth)
    b = ux * px + uy * py
    disc = b * b - (px * px + py * py - s * s)
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    return [t for t in (b - root, b + root) if t > 0.0]


def _elevation_residuals(anterior, pair_estimate, layout, ts) -> List[float]:
    # anterior LED height relative to the observer, z up
    z3 = pair_estimate.leader_position.z + layout.anterior_height
    return [abs(math.atan2(-z3, t) - anterior.elevation) for t in ts]


def _stacked_candidates(blobs: Sequence[BlobObservation], params: VisionParams) -> List[Tuple[int, int]]:
    """Possible posterior pairs as ``(lower, upper)`` index tuples.

    Every two blobs sharing an azimuth qualify, ordered so that the pair
    containing the lowest blob and the blob just above it comes first.
    Falls back to the two lowest blobs when no blobs are stacked.
    """
    order = sorted(range(len(blobs)), key=lambda i: -blobs[i].elevation)
    out = []
    for a, i in enumerate(order):
        for j in order[a + 1:]:
            if abs(wrap_angle(blobs[j].azimuth - blobs[i].azimuth)) <= params.stack_tolerance:
                out.append((i, j))
    return out or [(order[0], order[1])]


def _pick_pair(blobs, candidates, layout, params, source):
    """Estimate from the stacked candidate that best explains the other blobs.

    With the leader nearly in line of sight all three LEDs stack at one
    azimuth, and seen steeply from below the anterior LED can even appear
    lowest.  A leftover blob is explained either as the anterior LED (its
    elevation fits one of the two heading solutions within
    ``ANTERIOR_FIT_TOL`` plus five noise sigmas) or as a reflection (at least
    ``pitch_match_threshold`` above the candidate's pitch).  Candidates are
    ranked by unexplained blobs, then by the anterior fit; ties keep the
    earlier candidate.
    """
    tol = ANTERIOR_FIT_TOL + 5.0 * params.noise_sigma
    best = None
    for lo, hi in candidates:
        try:
            est = _pair_estimate(blobs[lo], blobs[hi], layout, source)
        except VisionError:
            continue
        if len(candidates) == 1:
            return lo, hi, est
        fit, fit_k = math.inf, None
        for k, bl in enumerate(blobs):
            if k in (lo, hi):
                continue
            ts = _anterior_ranges(bl, est, layout)
            if ts:
                r = min(_elevation_residuals(bl, est, layout, ts))
                if r <= tol and r < fit:
                    fit, fit_k = r, k
        unexplained = sum(
            1 for k, bl in enumerate(blobs)
            if k not in (lo, hi, fit_k) and est.pitch - bl.elevation < params.pitch_match_threshold - 1e-9
        )
        key = (unexplained, fit)
        if best is None or key < best[0]:
            best = (key, lo, hi, est)
    if best is None:
        return None
    return best[1:]


def parse_blobs(
    blobs: Sequence[BlobObservation],
    layout: LedLayout,
    params: VisionParams,
    prev_heading: Optional[Sequence[float]] = None,
) -> Optional[LeaderEstimate]:
    """Turn the blobs of one robot into a :class:`LeaderEstimate`.

    The posterior pair is chosen among blob pairs sharing an azimuth: the
    one that best explains a leftover blob as the anterior LED wins, and the
    two lowest blobs are the fallback when nothing is stacked.  Of the
    remaining blobs, the one closest in elevation to the pair's pitch is
    taken as the anterior LED if it lies within ``pitch_match_threshold``;
    everything else is treated as a reflection.  Returns ``None`` when
    fewer than two blobs are available or the pair is degenerate.
    """
    if len(blobs) < 2:
        return None
    candidates = _stacked_candidates(blobs, params)
    picked = _pick_pair(blobs, candidates, layout, params, blobs[candidates[0][0]].source)
    if picked is None:
        return None
    lo, hi, est = picked
    source = est.source

    best = None
    for k, bl in enumerate(blobs):
        if k == lo or k == hi:
            continue
        gap = abs(bl.elevation - est.pitch)
        if gap < params.pitch_match_threshold - 1e-9 and (best is None or gap < best[0]):
            best = (gap, bl)
    if best is None:
        return est
    margin = max(3.0 * params.noise_sigma, 1e-9)
    heading, valid = estimate_heading(best[1], est, layout, prev_heading, margin)
    if not valid:
        return est
    return LeaderEstimate(est.bearing, est.pitch, est.distance, est.leader_position, heading, True, source)


def group_blobs(blobs: Iterable[BlobObservation]) -> Dict[int, List[BlobObservation]]:
    """Split blobs by emitting robot; reflections join every group."""
    groups: Dict[int, List[BlobObservation]] = {}
    stray = []
    for b in blobs:
        if b.source == REFLECTION:
            stray.append(b)
        else:
            groups.setdefault(b.source, []).append(b)
    for g in groups.values():
        g.extend(stray)
    return dict(sorted(groups.items()))


def parse_all(
    blobs: Sequence[BlobObservation],
    layout: LedLayout,
    params: VisionParams,
    prev_headings: Optional[Dict[int, Sequence[float]]] = None,
) -> List[LeaderEstimate]:
    """Parse every lit robot in view; estimates ordered by source index."""
    prev_headings = prev_headings or {}
    out = []
    for src, group in group_blobs(blobs).items():
        est = parse_blobs(group, layout, params, prev_headings.get(src))
        if est is not None:
            out.append(est)
    return out
