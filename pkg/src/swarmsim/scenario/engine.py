"""Synchronous 5 Hz perception / 100 Hz physics loop."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..control import APPROACH, DEAD, FOLLOW, FollowerController, FollowerMemory, follower_step, leader_command
from ..dynamics import AgentState, FinCommand, advance
from ..vision import observe
from .config import CONTROL_PERIOD, PHYSICS_DT, SUBSTEPS, ScenarioConfig, ScenarioError

ZONE_CODES = {None: -1, APPROACH: 0, FOLLOW: 1, DEAD: 2}
ZONE_NAMES = {v: k for k, v in ZONE_CODES.items()}

# rng stream tags for SeedSequence spawn keys
_INIT_STREAM = 0
_VISION_STREAM = 1


def agent_rng(cfg: ScenarioConfig, seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator per (run seed, purpose, agent).

    Keyed on the agent's index, so adding agents never perturbs the streams
    of existing ones.
    """
    ss = np.random.SeedSequence([cfg.seed_base, int(seed)], spawn_key=(stream, index))
    return np.random.default_rng(ss)


def sample_initial_conditions(cfg: ScenarioConfig, seed: int) -> List[AgentState]:
    """Initial states: fixed poses as given, others uniform in their region.

    Headings without a fixed value are uniform in ``[-pi, pi)``.  Velocities
    start at zero and the fins are off.
    """
    states = []
    for i, a in enumerate(cfg.agents):
        rng = agent_rng(cfg, seed, _INIT_STREAM, i)
        if a.init.pose is not None:
            x, y, z = a.init.pose
        else:
            (x0, x1), (y0, y1), (z0, z1) = a.init.region
            corners_ok = all(cfg.tank.contains(cx, cy, cz) for cx in (x0, x1) for cy in (y0, y1) for cz in (z0, z1))
            if not corners_ok:
                raise ScenarioError(f"agent {a.id!r}: sampling region extends outside the tank")
            x, y, z = (float(v) for v in rng.uniform((x0, y0, z0), (x1, y1, z1)))
        yaw = a.init.yaw if a.init.yaw is not None else float(rng.uniform(-math.pi, math.pi))
        states.append(AgentState(x, y, z, yaw, leds_on=a.leds_on))
    return states


@dataclass
class TrajectoryLog:
    """Per-tick record of ground truth, commands and follower estimates.

    Arrays are indexed ``[tick, agent]``.  Estimate fields are NaN (and
    ``has_estimate`` False) for leaders and for ticks where a follower saw
    no leader.  ``est_d_by_source[tick, agent, k]`` holds the distance
    estimate of the ``k``-th leader (in ``leader_indices`` order).
    """

    t: np.ndarray
    agent_ids: List[str]
    roles: List[str]
    pos: np.ndarray
    yaw: np.ndarray
    u: np.ndarray
    yaw_rate: np.ndarray
    w: np.ndarray
    cmd: np.ndarray
    has_estimate: np.ndarray
    est_d: np.ndarray
    est_bearing: np.ndarray
    est_pitch: np.ndarray
    est_heading: np.ndarray
    heading_valid: np.ndarray
    zone: np.ndarray
    selected: np.ndarray
    target: np.ndarray
    est_d_by_source: np.ndarray
    leader_indices: List[int]

    @property
    def n_ticks(self) -> int:
        return len(self.t)


def _empty_log(cfg: ScenarioConfig) -> TrajectoryLog:
    T = cfg.n_ticks + 1
    N = len(cfg.agents)
    L = len(cfg.leader_indices())
    nan = np.full((T, N), np.nan)
    return TrajectoryLog(
        t=np.round(np.arange(T) * CONTROL_PERIOD, 10),
        agent_ids=[a.id for a in cfg.agents],
        roles=[a.role for a in cfg.agents],
        pos=np.zeros((T, N, 3)),
        yaw=np.zeros((T, N)),
        u=np.zeros((T, N)),
        yaw_rate=np.zeros((T, N)),
        w=np.zeros((T, N)),
        cmd=np.zeros((T, N, 4)),
        has_estimate=np.zeros((T, N), dtype=bool),
        est_d=nan.copy(),
        est_bearing=nan.copy(),
        est_pitch=nan.copy(),
        est_heading=nan.copy(),
        heading_valid=np.zeros((T, N), dtype=bool),
        zone=np.full((T, N), -1, dtype=np.int8),
        selected=np.full((T, N), -1, dtype=np.int16),
        target=np.full((T, N, 3), np.nan),
        est_d_by_source=np.full((T, N, L), np.nan),
        leader_indices=cfg.leader_indices(),
    )


def controllers_for(cfg: ScenarioConfig) -> List[Optional[FollowerController]]:
    out = []
    for a in cfg.agents:
        if a.role == "follower":
            out.append(FollowerController(a.zone, cfg.tanh, cfg.controller_variant, cfg.led, cfg.vision))
        else:
            out.append(None)
    return out


def run(cfg: ScenarioConfig, seed: int) -> TrajectoryLog:
    """Simulate one scenario; identical ``(cfg, seed)`` gives identical logs.

    Each tick: freeze the world, let every robot decide its command from the
    frozen snapshot (followers only through their own blobs), log, then
    integrate everyone for ``SUBSTEPS`` physics steps under held commands.
    """
    states = sample_initial_conditions(cfg, seed)
    N = len(states)
    ctrls = controllers_for(cfg)
    vision_rngs = [agent_rng(cfg, seed, _VISION_STREAM, i) for i in range(N)]
    mems = [FollowerMemory() for _ in range(N)]
    leader_slot = {src: k for k, src in enumerate(cfg.leader_indices())}
    log = _empty_log(cfg)
    agents = cfg.agents
    dyn, tank, layout, vision = cfg.dynamics, cfg.tank, cfg.led, cfg.vision
    n_ticks = cfg.n_ticks

    for k in range(n_ticks + 1):
        t = k * CONTROL_PERIOD
        snapshot = tuple(states)
        cmds: List[FinCommand] = []
        for i, a in enumerate(agents):
            s = snapshot[i]
            if a.role == "leader":
                cmd = leader_command(a.program, s, t)
            else:
                blobs = observe(i, snapshot, layout, vision, vision_rngs[i])
                cmd, mems[i], info = follower_step(blobs, s, ctrls[i], mems[i], t)
                if info.selected is not None:
                    est = info.estimates[info.selected]
                    log.has_estimate[k, i] = True
                    log.est_d[k, i] = est.distance
                    log.est_bearing[k, i] = est.bearing
                    log.est_pitch[k, i] = est.pitch
                    log.heading_valid[k, i] = est.heading_valid
                    if est.heading_valid:
                        log.est_heading[k, i] = math.atan2(est.heading.y, est.heading.x)
                    log.zone[k, i] = ZONE_CODES[info.zone]
                    log.selected[k, i] = est.source
                    g = info.goal
                    c, sn = math.cos(s.yaw), math.sin(s.yaw)
                    log.target[k, i] = (s.x + c * g.x - sn * g.y, s.y + sn * g.x + c * g.y, s.z + g.z)
                    for e in info.estimates:
                        slot = leader_slot.get(e.source)
                        if slot is not None:
                            log.est_d_by_source[k, i, slot] = e.distance
            cmds.append(cmd)
            log.pos[k, i] = (s.x, s.y, s.z)
            log.yaw[k, i] = s.yaw
            log.u[k, i] = s.u
            log.yaw_rate[k, i] = s.yaw_rate
            log.w[k, i] = s.w
            log.cmd[k, i] = (cmd.caudal_freq, cmd.pectoral_left_freq, cmd.pectoral_right_freq, float(cmd.dorsal_on))
        if k < n_ticks:
            states = [advance(s, c, PHYSICS_DT, SUBSTEPS, dyn, tank) for s, c in zip(snapshot, cmds)]
    return log
