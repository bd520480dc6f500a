"""Follower and leader controllers.

Followers are purely reactive: every perception tick they turn the current
:class:`~swarmsim.vision.LeaderEstimate` (or its absence) into a
:class:`~swarmsim.dynamics.FinCommand`.  Two speed laws are provided:

* zonal: approach at full speed beyond ``approach_threshold``, a linear
  speed ramp in the follow zone, fins off (except dorsal) in the dead zone;
* tanh: caudal frequency ``f_cap * tanh(distance_to_target / length_scale)``
  with the same dead-zone cutoff.

Both steer with a proportional law on the bearing to the target, and both
hold depth by switching the dorsal fin on a pitch band.

Controllers are pure: they take a :class:`FollowerMemory` and return the
command together with the updated memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .dynamics import AgentState, FinCommand
from .geometry import Vec3, rotate_z, wrap_angle
from .vision import BlobObservation, LeaderEstimate, LedLayout, VisionParams, parse_all

APPROACH = "approach"
FOLLOW = "follow"
DEAD = "dead"


class HeadingUnavailable(ValueError):
    """The estimate carries no usable leader heading."""


@dataclass(frozen=True)
class ZoneParams:
    approach_threshold: float = 500.0
    dead_radius: float = 120.0
    follow_distance: float = 200.0
    follow_angle: float = 0.5 * math.pi
    pitch_band: Tuple[float, float] = (math.radians(-1.0), math.radians(1.0))
    v_min_frac: float = 0.2
    v_max_frac: float = 1.0
    f_max: float = 3.0
    turn_gain: Optional[float] = None
    turn_deadband: float = math.radians(2.0)
    lost_hold: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.dead_radius < self.approach_threshold:
            raise ValueError("zone: need 0 <= dead_radius < approach_threshold")
        lo, hi = self.pitch_band
        if not lo < hi:
            raise ValueError("zone: pitch_band must satisfy lo < hi")
        if not 0.0 <= self.v_min_frac < self.v_max_frac <= 1.0:
            raise ValueError("zone: need 0 <= v_min_frac < v_max_frac <= 1")
        if not self.follow_distance >= 0.0:
            raise ValueError("zone: follow_distance must be nonnegative")
        if self.turn_gain is None:
            object.__setattr__(self, "turn_gain", self.f_max / (0.5 * math.pi))

    @property
    def desired_pitch(self) -> float:
        return 0.5 * (self.pitch_band[0] + self.pitch_band[1])


@dataclass(frozen=True)
class TanhParams:
    length_scale: float = 300.0
    f_cap: float = 3.0

    def __post_init__(self):
        if not self.length_scale > 0:
            raise ValueError("tanh: length_scale must be positive")
        if not self.f_cap >= 0:
            raise ValueError("tanh: f_cap must be nonnegative")


@dataclass(frozen=True)
class FollowerMemory:
    """What a follower remembers between perception ticks.

    Bearings and headings are kept in the world frame (the follower knows
    its own yaw) so they stay meaningful while it turns.
    """

    last_estimate: Optional[LeaderEstimate] = None
    last_seen_time: float = -math.inf
    last_command: FinCommand = FinCommand()
    dorsal_state: bool = False
    last_bearing_world: Optional[float] = None
    last_heading_world: Optional[Vec3] = None
    last_source: object = None


@dataclass(frozen=True)
class LeaderProgram:
    kind: str = "straight"
    caudal_freq: float = 1.0
    pectoral_bias: float = 0.0
    depth_setpoint: float = 500.0
    segments: Tuple[Tuple[float, float, float], ...] = ()
    depth_hysteresis: float = 10.0
    f_max: float = 3.0

    def __post_init__(self):
        if self.kind not in ("straight", "circle", "piecewise"):
            raise ValueError(f"program.kind must be straight, circle or piecewise, got {self.kind!r}")
        freqs = [self.caudal_freq, abs(self.pectoral_bias)]
        for seg in self.segments:
            if len(seg) != 3 or not seg[0] > 0:
                raise ValueError("program.segments entries are (duration > 0, caudal, bias)")
            freqs += [seg[1], abs(seg[2])]
        if any(not 0.0 <= f <= self.f_max for f in freqs):
            raise ValueError("program frequencies must lie in [0, f_max]")
        if self.kind == "piecewise" and not self.segments:
            raise ValueError("piecewise program needs at least one segment")


def target_pose(estimate: LeaderEstimate, l: float, alpha: float) -> Vec3:
    """Formation slot in the follower's body frame.

    The leader's heading rotated by ``alpha`` (counterclockwise, so positive
    angles put the slot on the leader's left) and scaled to ``l``, added to
    the leader's position.  The slot keeps the leader's height; depth is
    controlled separately.
    """
    if not estimate.heading_valid or estimate.heading is None:
        raise HeadingUnavailable("leader heading not available in this frame")
    off = rotate_z(estimate.heading, alpha)
    p = estimate.leader_position
    return Vec3(p.x + l * off.x, p.y + l * off.y, p.z)


def classify_zone(d: float, zp: ZoneParams) -> str:
    if d > zp.approach_threshold:
        return APPROACH
    if d < zp.dead_radius:
        return DEAD
    return FOLLOW


def depth_command(theta_obs: float, band: Sequence[float], prev: bool) -> bool:
    """Dorsal fin state: on above the band (leader lower), off below it."""
    lo, hi = band
    if theta_obs > hi:
        return True
    if theta_obs < lo:
        return False
    return prev


def select_leader(estimates: Sequence[LeaderEstimate]) -> int:
    """Index of the nearest estimate; ties go to the lowest index."""
    if not estimates:
        raise ValueError("select_leader needs at least one estimate")
    best = 0
    for i in range(1, len(estimates)):
        if estimates[i].distance < estimates[best].distance:
            best = i
    return best


def _steer(bearing_error: float, zp: ZoneParams) -> Tuple[float, float]:
    """(left, right) pectoral frequencies for a bearing error (positive left)."""
    if abs(bearing_error) < zp.turn_deadband:
        return 0.0, 0.0
    diff = min(max(zp.turn_gain * bearing_error, -zp.f_max), zp.f_max)
    if diff > 0.0:
        return 0.0, diff
    return -diff, 0.0


def _goal(estimate: LeaderEstimate, zp: ZoneParams) -> Vec3:
    if estimate.heading_valid:
        return target_pose(estimate, zp.follow_distance, zp.follow_angle)
    return estimate.leader_position


def _remember(mem: FollowerMemory, est: LeaderEstimate, cmd: FinCommand, t: float, yaw: float) -> FollowerMemory:
    heading = mem.last_heading_world if est.source == mem.last_source else None
    if est.heading_valid:
        heading = rotate_z(est.heading, yaw)
    return FollowerMemory(est, t, cmd, cmd.dorsal_on, wrap_angle(est.bearing + yaw), heading, est.source)


def lost_leader_policy(mem: FollowerMemory, t: float, zp: ZoneParams = ZoneParams(), yaw: float = 0.0) -> FinCommand:
    """Command used when no leader is seen this tick.

    Within ``zp.lost_hold`` seconds of the last sighting the last command is
    replayed.  Later the follower swims slowly and turns toward the last
    known bearing; a follower that never saw a leader turns in place.
    """
    f_slow = zp.v_min_frac * zp.f_max
    if mem.last_estimate is None:
        return FinCommand(0.0, 0.0, f_slow, mem.dorsal_state)
    if t - mem.last_seen_time <= zp.lost_hold:
        return mem.last_command
    bearing = wrap_angle(mem.last_bearing_world - yaw) if mem.last_bearing_world is not None else 0.0
    left, right = _steer(bearing, zp)
    return FinCommand(f_slow, left, right, mem.dorsal_state)


def follower_command_zonal(
    estimate: Optional[LeaderEstimate],
    zp: ZoneParams,
    mem: FollowerMemory,
    t: float,
    yaw: float = 0.0,
) -> Tuple[FinCommand, FollowerMemory]:
    if estimate is None:
        return lost_leader_policy(mem, t, zp, yaw), mem
    dorsal = depth_command(estimate.pitch, zp.pitch_band, mem.dorsal_state)
    d = estimate.distance
    zone = classify_zone(d, zp)
    if zone == DEAD:
        cmd = FinCommand(0.0, 0.0, 0.0, dorsal)
    else:
        if zone == APPROACH:
            goal = estimate.leader_position
            caudal = zp.f_max
        else:
            goal = _goal(estimate, zp)
            frac = (d - zp.dead_radius) / (zp.approach_threshold - zp.dead_radius)
            caudal = zp.f_max * (zp.v_min_frac + (zp.v_max_frac - zp.v_min_frac) * frac)
        left, right = _steer(math.atan2(goal.y, goal.x), zp)
        cmd = FinCommand(caudal, left, right, dorsal)
    return cmd, _remember(mem, estimate, cmd, t, yaw)


def follower_command_tanh(
    estimate: Optional[LeaderEstimate],
    zp: ZoneParams,
    tp: TanhParams,
    mem: FollowerMemory,
    t: float,
    yaw: float = 0.0,
) -> Tuple[FinCommand, FollowerMemory]:
    """Smooth speed law on the horizontal distance to the formation slot."""
    if estimate is None:
        return lost_leader_policy(mem, t, zp, yaw), mem
    dorsal = depth_command(estimate.pitch, zp.pitch_band, mem.dorsal_state)
    if estimate.distance < zp.dead_radius:
        cmd = FinCommand(0.0, 0.0, 0.0, dorsal)
    else:
        goal = _goal(estimate, zp)
        caudal = tp.f_cap * math.tanh(math.hypot(goal.x, goal.y) / tp.length_scale)
        left, right = _steer(math.atan2(goal.y, goal.x), zp)
        cmd = FinCommand(caudal, left, right, dorsal)
    return cmd, _remember(mem, estimate, cmd, t, yaw)


def leader_command(program: LeaderProgram, state: AgentState, t: float) -> FinCommand:
    """Open-loop swimming program with a bang-bang depth hold."""
    if program.kind == "piecewise":
        start = 0.0
        caudal, bias = program.segments[-1][1], program.segments[-1][2]
        for dur, c, b in program.segments:
            if t < start + dur:
                caudal, bias = c, b
                break
            start += dur
    elif program.kind == "circle":
        caudal, bias = program.caudal_freq, program.pectoral_bias
    else:
        caudal, bias = program.caudal_freq, 0.0
    depth = -state.z
    if depth < program.depth_setpoint - program.depth_hysteresis:
        dorsal = True
    elif depth > program.depth_setpoint + program.depth_hysteresis:
        dorsal = False
    else:
        dorsal = state.fins.dorsal_on
    return FinCommand(caudal, max(-bias, 0.0), max(bias, 0.0), dorsal)


@dataclass(frozen=True)
class FollowerController:
    """Everything a follower needs to go from blobs to a fin command."""

    zone: ZoneParams = ZoneParams()
    tanh: TanhParams = TanhParams()
    variant: str = "zonal"
    layout: LedLayout = LedLayout()
    vision: VisionParams = VisionParams()

    def __post_init__(self):
        if self.variant not in ("zonal", "tanh"):
            raise ValueError(f"controller variant must be zonal or tanh, got {self.variant!r}")


@dataclass(frozen=True)
class FollowerTick:
    """Per-tick bookkeeping returned alongside the command (for logging)."""

    estimates: List[LeaderEstimate] = field(default_factory=list)
    selected: Optional[int] = None
    zone: Optional[str] = None
    goal: Optional[Vec3] = None


def follower_step(
    blobs: Sequence[BlobObservation],
    own: AgentState,
    ctrl: FollowerController,
    mem: FollowerMemory,
    t: float,
) -> Tuple[FinCommand, FollowerMemory, FollowerTick]:
    """Perception plus control for one follower and one tick.

    The follower sees only its blobs and its own state.
    """
    prev = None
    if mem.last_heading_world is not None:
        prev = {mem.last_source: rotate_z(mem.last_heading_world, -own.yaw)}
    estimates = parse_all(blobs, ctrl.layout, ctrl.vision, prev)
    if not estimates:
        est = None
        sel = None
    else:
        sel = select_leader(estimates)
        est = estimates[sel]
    if ctrl.variant == "tanh":
        cmd, new_mem = follower_command_tanh(est, ctrl.zone, ctrl.tanh, mem, t, own.yaw)
    else:
        cmd, new_mem = follower_command_zonal(est, ctrl.zone, mem, t, own.yaw)
    zone = goal = None
    if est is not None:
        zone = classify_zone(est.distance, ctrl.zone)
        if ctrl.variant == "zonal" and zone == APPROACH:
            goal = est.leader_position
        else:
            goal = _goal(est, ctrl.zone)
    return cmd, new_mem, FollowerTick(estimates, sel, zone, goal)
