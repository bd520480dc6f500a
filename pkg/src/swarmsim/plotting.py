"""Static SVG figures of runs and batches.

Plain SVG text is built by hand: no plotting backend is needed and the
output is diffable.  Leaders are drawn in blue and followers in warm
colours.  Along trajectories the stroke darkens as time advances.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

from .scenario.config import ScenarioConfig
from .scenario.engine import TrajectoryLog
from .scenario.metrics import SETTLE_BAND, follower_series

KINDS = ("topview", "sideview", "distance", "depth")

LEADER_HUE = 215.0
FOLLOWER_HUES = (25.0, 5.0, 45.0, 340.0, 15.0, 35.0, 355.0, 55.0)

WIDTH, HEIGHT = 720, 520
MARGIN = (70, 30, 40, 55)  # left, right, top, bottom
TIME_CHUNKS = 24


def _hsl(h: float, s: float, l: float) -> str:
    return f"hsl({h:.0f},{s:.0f}%,{l:.0f}%)"


def nice_ticks(lo: float, hi: float, n: int = 6) -> List[float]:
    """Round-numbered ticks covering ``[lo, hi]``."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 10))
        v += step
    return out


class Axes:
    """Linear data-to-pixel mapping plus the SVG elements drawn so far."""

    def __init__(self, xlim, ylim, title: str, xlabel: str, ylabel: str, equal: bool = False):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        left, right, top, bottom = MARGIN
        self.px0, self.px1 = left, WIDTH - right
        self.py0, self.py1 = HEIGHT - bottom, top
        if equal:
            # shrink one pixel span so both axes share a scale
            sx = (self.px1 - self.px0) / (self.x1 - self.x0)
            sy = (self.py0 - self.py1) / (self.y1 - self.y0)
            s = min(sx, sy)
            cx, cy = 0.5 * (self.px0 + self.px1), 0.5 * (self.py0 + self.py1)
            hw, hh = 0.5 * s * (self.x1 - self.x0), 0.5 * s * (self.y1 - self.y0)
            self.px0, self.px1, self.py0, self.py1 = cx - hw, cx + hw, cy + hh, cy - hh
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.items: List[str] = []
        self.legend: List[Tuple[str, str]] = []

    def X(self, x):
        return self.px0 + (np.asarray(x, float) - self.x0) * (self.px1 - self.px0) / (self.x1 - self.x0)

    def Y(self, y):
        return self.py0 + (np.asarray(y, float) - self.y0) * (self.py1 - self.py0) / (self.y1 - self.y0)

    def polyline(self, x, y, colour: str, width: float = 1.5, dash: Optional[str] = None, opacity: float = 1.0):
        px, py = self.X(x), self.Y(y)
        ok = np.isfinite(px) & np.isfinite(py)
        # break the line at gaps so missing samples are not bridged
        runs, cur = [], []
        for a, b, good in zip(px, py, ok):
            if good:
                cur.append(f"{a:.1f},{b:.1f}")
            elif cur:
                runs.append(cur)
                cur = []
        if cur:
            runs.append(cur)
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        if opacity < 1.0:
            extra += f' stroke-opacity="{opacity:.2f}"'
        for pts in runs:
            if len(pts) > 1:
                self.items.append(f'<polyline fill="none" stroke="{colour}" stroke-width="{width}"{extra} '
                                  f'points="{" ".join(pts)}"/>')

    def timed_path(self, x, y, hue: float, width: float = 1.5, opacity: float = 1.0):
        """Trajectory whose lightness falls from 75 % to 25 % over time."""
        n = len(x)
        edges = np.linspace(0, n - 1, min(TIME_CHUNKS, max(n - 1, 1)) + 1).round().astype(int)
        for c, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
            frac = c / max(len(edges) - 2, 1)
            self.polyline(x[a:b + 1], y[a:b + 1], _hsl(hue, 80, 75 - 50 * frac), width, opacity=opacity)

    def hline(self, y: float, colour: str, dash: str = "6,4"):
        self.polyline([self.x0, self.x1], [y, y], colour, 1.0, dash)

    def band(self, lo: float, hi: float, colour: str):
        ya, yb = float(self.Y(hi)), float(self.Y(lo))
        self.items.append(f'<rect x="{self.px0:.1f}" y="{ya:.1f}" width="{self.px1 - self.px0:.1f}" '
                          f'height="{yb - ya:.1f}" fill="{colour}" fill-opacity="0.15"/>')

    def outline(self, x, y, colour: str = "#888"):
        self.polyline(x, y, colour, 1.0, "3,3")

    def add_legend(self, label: str, colour: str):
        self.legend.append((label, colour))

    def svg(self) -> str:
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
               f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
        x_lo, x_hi = sorted((self.px0, self.px1))
        y_lo, y_hi = sorted((self.py0, self.py1))
        for v in nice_ticks(self.x0, self.x1):
            p = float(self.X(v))
            out.append(f'<line x1="{p:.1f}" y1="{y_lo:.1f}" x2="{p:.1f}" y2="{y_hi:.1f}" stroke="#eee"/>')
            out.append(f'<text x="{p:.1f}" y="{y_hi + 14:.1f}" text-anchor="middle">{v:g}</text>')
        for v in nice_ticks(self.y0, self.y1):
            p = float(self.Y(v))
            out.append(f'<line x1="{x_lo:.1f}" y1="{p:.1f}" x2="{x_hi:.1f}" y2="{p:.1f}" stroke="#eee"/>')
            out.append(f'<text x="{x_lo - 5:.1f}" y="{p + 4:.1f}" text-anchor="end">{v:g}</text>')
        out.append(f'<rect x="{x_lo:.1f}" y="{y_lo:.1f}" width="{x_hi - x_lo:.1f}" height="{y_hi - y_lo:.1f}" '
                   f'fill="none" stroke="#444"/>')
        out.append(f'<clipPath id="plot"><rect x="{x_lo:.1f}" y="{y_lo:.1f}" width="{x_hi - x_lo:.1f}" '
                   f'height="{y_hi - y_lo:.1f}"/></clipPath>')
        out.append('<g clip-path="url(#plot)">')
        out.extend(self.items)
        out.append("</g>")
        out.append(f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{escape(self.title)}</text>')
        out.append(f'<text x="{0.5 * (x_lo + x_hi):.1f}" y="{HEIGHT - 12}" text-anchor="middle">'
                   f'{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{0.5 * (y_lo + y_hi):.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {0.5 * (y_lo + y_hi):.1f})">{escape(self.ylabel)}</text>')
        for j, (label, colour) in enumerate(self.legend):
            ly = y_lo + 14 + 15 * j
            out.append(f'<line x1="{x_hi - 120:.1f}" y1="{ly - 4:.1f}" x2="{x_hi - 100:.1f}" y2="{ly - 4:.1f}" '
                       f'stroke="{colour}" stroke-width="3"/>')
            out.append(f'<text x="{x_hi - 95:.1f}" y="{ly:.1f}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _hues(log: TrajectoryLog) -> List[float]:
    hues, j = [], 0
    for role in log.roles:
        if role == "leader":
            hues.append(LEADER_HUE)
        else:
            hues.append(FOLLOWER_HUES[j % len(FOLLOWER_HUES)])
            j += 1
    return hues


def _padded(lo: float, hi: float, frac: float = 0.05) -> Tuple[float, float]:
    if not hi > lo:
        lo, hi = lo - 1.0, hi + 1.0
    pad = frac * (hi - lo)
    return lo - pad, hi + pad


def _tank_outline(cfg: ScenarioConfig, ax: Axes, side: bool) -> None:
    tank = cfg.tank
    half = 0.5 * (tank.size_x if tank.shape == "box" else tank.diameter)
    if side:
        ax.outline([-half, half, half, -half, -half], [0, 0, -tank.depth, -tank.depth, 0])
    elif tank.shape == "box":
        hy = 0.5 * tank.size_y
        ax.outline([-half, half, half, -half, -half], [-hy, -hy, hy, hy, -hy])
    else:
        a = np.linspace(0, 2 * math.pi, 121)
        ax.outline(half * np.cos(a), half * np.sin(a))


def _paths(logs: Sequence[TrajectoryLog], cfg: ScenarioConfig, side: bool) -> Axes:
    col = 2 if side else 1
    xs = np.concatenate([lg.pos[..., 0].ravel() for lg in logs])
    ys = np.concatenate([lg.pos[..., col].ravel() for lg in logs])
    name = cfg.name + (f" ({len(logs)} seeds)" if len(logs) > 1 else "")
    ax = Axes(_padded(xs.min(), xs.max()), _padded(ys.min(), ys.max()),
              f"{name}: {'side' if side else 'top'} view", "x (mm)", "z (mm)" if side else "y (mm)", equal=True)
    opacity = 1.0 if len(logs) == 1 else max(0.25, 1.0 / math.sqrt(len(logs)))
    for lg in logs:
        for i, hue in enumerate(_hues(lg)):
            ax.timed_path(lg.pos[:, i, 0], lg.pos[:, i, col], hue, opacity=opacity)
    for i, hue in enumerate(_hues(logs[0])):
        ax.add_legend(logs[0].agent_ids[i], _hsl(hue, 80, 45))
    return ax


def _distance(logs: Sequence[TrajectoryLog], cfg: ScenarioConfig) -> Axes:
    series: List[Tuple[int, Dict[str, np.ndarray], np.ndarray]] = []
    targets = []
    for lg in logs:
        for i in cfg.follower_indices():
            series.append((i, follower_series(lg, cfg, i), lg.t))
            z = cfg.agents[i].zone
            targets.append(z.follow_distance / math.cos(z.desired_pitch))
    hi = max(max(float(np.nanmax(s["distance_to_leader"])) for _, s, _ in series), max(targets) + SETTLE_BAND)
    t_end = max(float(lg.t[-1]) for lg in logs)
    ax = Axes((0.0, max(t_end, 1e-6)), (0.0, 1.05 * hi), f"{cfg.name}: distances", "t (s)", "distance (mm)")
    for tgt in sorted(set(round(v, 6) for v in targets)):
        ax.band(tgt - SETTLE_BAND, tgt + SETTLE_BAND, "#2a9d2a")
        ax.hline(tgt, "#2a9d2a")
    opacity = 1.0 if len(logs) == 1 else max(0.25, 1.0 / math.sqrt(len(logs)))
    hues = _hues(logs[0])
    for i, s, t in series:
        ax.polyline(t, s["distance_to_leader"], _hsl(hues[i], 80, 40), opacity=opacity)
        ax.polyline(t, s["distance_to_target"], _hsl(hues[i], 60, 65), dash="4,3", opacity=opacity)
    for i in cfg.follower_indices():
        ax.add_legend(f"{logs[0].agent_ids[i]} to leader", _hsl(hues[i], 80, 40))
        ax.add_legend(f"{logs[0].agent_ids[i]} to target", _hsl(hues[i], 60, 65))
    ax.add_legend("target distance", "#2a9d2a")
    return ax


def _depth(logs: Sequence[TrajectoryLog], cfg: ScenarioConfig) -> Axes:
    zs = np.concatenate([lg.pos[..., 2].ravel() for lg in logs])
    t_end = max(float(lg.t[-1]) for lg in logs)
    ax = Axes((0.0, max(t_end, 1e-6)), _padded(zs.min(), zs.max()), f"{cfg.name}: depth", "t (s)", "z (mm)")
    opacity = 1.0 if len(logs) == 1 else max(0.25, 1.0 / math.sqrt(len(logs)))
    hues = _hues(logs[0])
    for lg in logs:
        for i, hue in enumerate(hues):
            ax.polyline(lg.t, lg.pos[:, i, 2], _hsl(hue, 80, 45), opacity=opacity)
    for i, hue in enumerate(hues):
        ax.add_legend(logs[0].agent_ids[i], _hsl(hue, 80, 45))
    return ax


def render(logs: Sequence[TrajectoryLog], cfg: ScenarioConfig, kind: str) -> str:
    """SVG text for one run, or several runs of the same scenario overlaid."""
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; choose from {', '.join(KINDS)}")
    if not logs:
        raise ValueError("nothing to plot")
    if kind == "topview":
        ax = _paths(logs, cfg, side=False)
        _tank_outline(cfg, ax, side=False)
    elif kind == "sideview":
        ax = _paths(logs, cfg, side=True)
        _tank_outline(cfg, ax, side=True)
    elif kind == "distance":
        ax = _distance(logs, cfg)
    else:
        ax = _depth(logs, cfg)
    return ax.svg()
