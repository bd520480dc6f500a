"""Formation metrics computed from ground truth.

The reference point of a leader is its posterior LED pair midpoint, the
same point a follower's vision estimates.  A follower's formation slot is
recomputed from the true leader pose: ``follow_distance`` along the leader
heading rotated by ``follow_angle``, and a vertical offset that realises the
middle of the follower's pitch band at that horizontal range.  With several
leaders the nearest one (in truth) is the reference at each tick.
"""

from __future__ import annotations

import math
from typing import Any, Dict, Optional

import numpy as np

from ..vision import LedLayout
from .config import CONTROL_PERIOD, ScenarioConfig
from .engine import TrajectoryLog

SETTLE_BAND = 50.0
SETTLE_HOLD = 10.0


def leader_reference_points(pos: np.ndarray, yaw: np.ndarray, layout: LedLayout) -> np.ndarray:
    """World position of the posterior pair midpoint; ``pos`` is ``(..., 3)``."""
    off = layout.pair_midpoint
    out = np.array(pos, dtype=float, copy=True)
    out[..., 0] += np.cos(yaw) * off.x - np.sin(yaw) * off.y
    out[..., 1] += np.sin(yaw) * off.x + np.cos(yaw) * off.y
    out[..., 2] += off.z
    return out


def settling_time(err: np.ndarray, t: np.ndarray, band: float = SETTLE_BAND, hold: float = SETTLE_HOLD) -> Optional[float]:
    """First time after which ``err <= band`` holds for ``hold`` seconds.

    ``None`` if that never happens inside the record.
    """
    n_hold = int(round(hold / CONTROL_PERIOD))
    inside = err <= band
    run_len = 0
    # count consecutive in-band ticks backwards so each start knows its run
    runs = np.zeros(len(err), dtype=int)
    for k in range(len(err) - 1, -1, -1):
        run_len = run_len + 1 if inside[k] else 0
        runs[k] = run_len
    ok = np.nonzero(runs >= n_hold + 1)[0]
    if len(ok) == 0:
        return None
    return float(t[ok[0]])


def follower_series(log: TrajectoryLog, cfg: ScenarioConfig, i: int) -> Dict[str, np.ndarray]:
    """Distance to the reference leader and to the formation slot over time."""
    zone = cfg.agents[i].zone
    lead = log.leader_indices
    ref = leader_reference_points(log.pos[:, lead], log.yaw[:, lead], cfg.led)
    me = log.pos[:, i]
    dists = np.linalg.norm(ref - me[:, None, :], axis=2)
    which = np.argmin(dists, axis=1)
    rows = np.arange(len(which))
    L = ref[rows, which]
    lyaw = log.yaw[rows, np.asarray(lead)[which]]
    ang = lyaw + zone.follow_angle
    dz = zone.follow_distance * math.tan(zone.desired_pitch)
    target = np.stack([L[:, 0] + zone.follow_distance * np.cos(ang),
                       L[:, 1] + zone.follow_distance * np.sin(ang),
                       L[:, 2] + dz], axis=1)
    return {
        "distance_to_leader": dists[rows, which],
        "distance_to_target": np.linalg.norm(me - target, axis=1),
        "depth_error": me[:, 2] - target[:, 2],
        "leader": np.asarray(lead)[which],
    }


def steady_window(t: np.ndarray, settle: Optional[float]) -> np.ndarray:
    """Post-settling ticks, or the second half of the run if never settled."""
    start = settle if settle is not None else 0.5 * t[-1]
    return t >= start - 1e-9


def compute_metrics(log: TrajectoryLog, cfg: ScenarioConfig) -> Dict[str, Dict[str, Any]]:
    """Metrics for every follower, keyed by agent id."""
    out: Dict[str, Dict[str, Any]] = {}
    bl = cfg.dynamics.body_length
    for i in cfg.follower_indices():
        zone = cfg.agents[i].zone
        ser = follower_series(log, cfg, i)
        err = ser["distance_to_target"]
        settle = settling_time(err, log.t)
        win = steady_window(log.t, settle)
        d_lead = ser["distance_to_leader"][win]
        target_distance = zone.follow_distance / math.cos(zone.desired_pitch)
        out[cfg.agents[i].id] = {
            "target_distance": target_distance,
            "settling_time": settle,
            "steady_rms_error": float(np.sqrt(np.mean(err[win] ** 2))),
            "depth_deviation_max": float(np.max(np.abs(ser["depth_error"][win])) / bl),
            "visibility_fraction": float(np.mean(log.has_estimate[:, i])),
            "heading_valid_fraction": float(np.mean(log.heading_valid[:, i])),
            "mean_distance_to_leader": float(np.mean(d_lead)),
            "median_distance_to_leader": float(np.median(d_lead)),
            "mean_abs_distance_offset": float(np.mean(np.abs(d_lead - target_distance))),
            "mean_caudal_freq": float(np.mean(log.cmd[win, i, 0])),
            "distance_to_leader": ser["distance_to_leader"],
            "distance_to_target": err,
        }
    return out


SCALARS = ("target_distance", "settling_time", "steady_rms_error", "depth_deviation_max", "visibility_fraction",
           "heading_valid_fraction", "mean_distance_to_leader", "median_distance_to_leader",
           "mean_abs_distance_offset", "mean_caudal_freq")


def summarize(per_seed: Dict[int, Dict[str, Dict[str, Any]]]) -> Dict[str, Any]:
    """Aggregate per-seed metrics: mean/median/percentiles per follower and scalar."""
    agents = sorted({a for m in per_seed.values() for a in m})
    out: Dict[str, Any] = {"seeds": sorted(per_seed), "agents": {}}
    for a in agents:
        stats: Dict[str, Any] = {}
        runs = [per_seed[s][a] for s in sorted(per_seed) if a in per_seed[s]]
        for key in SCALARS:
            vals = np.array([r[key] for r in runs if r[key] is not None], dtype=float)
            entry: Dict[str, Any] = {"count": int(len(vals))}
            if len(vals):
                p = np.percentile(vals, [5, 25, 50, 75, 95])
                entry.update(mean=float(vals.mean()), median=float(p[2]), min=float(vals.min()),
                             max=float(vals.max()), p05=float(p[0]), p25=float(p[1]),
                             p75=float(p[3]), p95=float(p[4]))
            stats[key] = entry
        stats["settled_fraction"] = float(np.mean([r["settling_time"] is not None for r in runs]))
        out["agents"][a] = stats
    return out
