"""Trajectory CSV and metrics JSON, written and read back.

Both formats are stable: fixed field order, floats at 6 significant digits
and ``\\n`` line endings, so identical runs produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Dict, Mapping

import numpy as np

from .config import CONTROL_PERIOD, ScenarioConfig
from .engine import ZONE_CODES, ZONE_NAMES, TrajectoryLog, _empty_log

COLUMNS = (
    "t", "agent_id", "role", "x", "y", "z", "yaw_deg", "u", "w",
    "caudal", "pect_l", "pect_r", "dorsal",
    "est_d", "est_bearing_deg", "est_pitch_deg", "est_heading_deg", "heading_valid", "zone",
)


class LogFormatError(ValueError):
    """A trajectory or metrics file that cannot be interpreted."""


def fmt(v: float) -> str:
    """6 significant digits; NaN (absent) becomes an empty field."""
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    s = f"{float(v):.6g}"
    return "0" if s == "-0" else s


def trajectory_csv(log: TrajectoryLog) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    yaw_deg = np.degrees(log.yaw)
    bearing, pitch, heading = (np.degrees(a) for a in (log.est_bearing, log.est_pitch, log.est_heading))
    for k in range(log.n_ticks):
        for i, aid in enumerate(log.agent_ids):
            follower = log.roles[i] == "follower"
            seen = follower and bool(log.has_estimate[k, i])
            row = [fmt(log.t[k]), aid, log.roles[i]]
            row += [fmt(v) for v in log.pos[k, i]]
            row += [fmt(yaw_deg[k, i]), fmt(log.u[k, i]), fmt(log.w[k, i])]
            row += [fmt(v) for v in log.cmd[k, i, :3]] + [str(int(log.cmd[k, i, 3]))]
            if seen:
                row += [fmt(log.est_d[k, i]), fmt(bearing[k, i]), fmt(pitch[k, i]), fmt(heading[k, i]),
                        str(int(log.heading_valid[k, i])), ZONE_NAMES[int(log.zone[k, i])]]
            else:
                row += [""] * 6
            w.writerow(row)
    return buf.getvalue()


def write_trajectory(path, log: TrajectoryLog) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(trajectory_csv(log))


def _float(s: str) -> float:
    return float(s) if s != "" else math.nan


def read_trajectory(path, cfg: ScenarioConfig) -> TrajectoryLog:
    """Rebuild a log from CSV.

    Only the fields the CSV carries are restored (estimates per source, the
    selected leader and the slot are not); values carry the 6-digit rounding.
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise LogFormatError(f"{path}: not a text file ({exc})") from None
    if not rows or tuple(rows[0]) != COLUMNS:
        raise LogFormatError(f"{path}: header does not match the trajectory format")
    body = rows[1:]
    ids = [a.id for a in cfg.agents]
    n = len(ids)
    if len(body) == 0 or len(body) % n:
        raise LogFormatError(f"{path}: {len(body)} data rows is not a whole number of ticks for {n} agents")
    log = _empty_log(cfg.with_duration(round((len(body) // n - 1) * CONTROL_PERIOD, 9)))
    try:
        for r, row in enumerate(body):
            k, i = divmod(r, n)
            if len(row) != len(COLUMNS) or row[1] != ids[i]:
                raise LogFormatError(f"{path}: row {r + 2} does not match agent {ids[i]!r}")
            v = dict(zip(COLUMNS, row))
            log.pos[k, i] = (float(v["x"]), float(v["y"]), float(v["z"]))
            log.yaw[k, i] = math.radians(float(v["yaw_deg"]))
            log.u[k, i] = float(v["u"])
            log.w[k, i] = float(v["w"])
            log.cmd[k, i] = (float(v["caudal"]), float(v["pect_l"]), float(v["pect_r"]), float(v["dorsal"]))
            if v["est_d"] != "":
                log.has_estimate[k, i] = True
                log.est_d[k, i] = float(v["est_d"])
                log.est_bearing[k, i] = math.radians(float(v["est_bearing_deg"]))
                log.est_pitch[k, i] = math.radians(float(v["est_pitch_deg"]))
                log.est_heading[k, i] = math.radians(_float(v["est_heading_deg"]))
                log.heading_valid[k, i] = v["heading_valid"] == "1"
                log.zone[k, i] = ZONE_CODES[v["zone"]]
    except (ValueError, KeyError) as exc:
        if isinstance(exc, LogFormatError):
            raise
        raise LogFormatError(f"{path}: malformed value ({exc})") from None
    return log


def _jsonable(v: Any) -> Any:
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        if not math.isfinite(v):
            return None
        return float(f"{float(v):.6g}")
    return v


def metrics_document(metrics: Dict[str, Dict[str, Any]]) -> Dict[str, Any]:
    """Scalar metrics only; the per-tick series live in the trajectory."""
    return {aid: {k: v for k, v in m.items() if not isinstance(v, np.ndarray)} for aid, m in metrics.items()}


def dumps_json(doc: Any) -> str:
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def write_json(path, doc: Any) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(dumps_json(doc))


def read_json(path) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise LogFormatError(f"{path}: invalid JSON ({exc})") from None

