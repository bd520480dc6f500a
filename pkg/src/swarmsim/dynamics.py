"""Surge / yaw / heave model of a single fin-driven robot.

Fin thrust is proportional to flapping frequency and the water pushes back
with drag proportional to velocity squared.  The caudal fin only pushes
forward, the pectoral pair only produces a yaw torque, and the dorsal fin is
an on/off downthrust working against constant positive buoyancy.

Units: lengths mm, time s, mass kg, forces N, torques N*mm, inertia kg*mm^2.
Drag coefficients take velocities in mm/s (or rad/s for yaw), so that
``F = c * v * |v|`` comes out in N (N*mm for yaw).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

from .geometry import PoseYaw, Vec3, wrap_angle

# mm/s^2 per (N/kg)
_ACCEL = 1000.0


@dataclass(frozen=True, slots=True)
class FinCommand:
    caudal_freq: float = 0.0
    pectoral_left_freq: float = 0.0
    pectoral_right_freq: float = 0.0
    dorsal_on: bool = False

    @property
    def pectoral_differential(self) -> float:
        """Right minus left frequency; positive turns counterclockwise."""
        return self.pectoral_right_freq - self.pectoral_left_freq

    def clipped(self, f_max: float) -> "FinCommand":
        return FinCommand(
            min(max(self.caudal_freq, 0.0), f_max),
            min(max(self.pectoral_left_freq, 0.0), f_max),
            min(max(self.pectoral_right_freq, 0.0), f_max),
            self.dorsal_on,
        )


OFF = FinCommand()


@dataclass(frozen=True, slots=True)
class AgentState:
    """Ground-truth state of one robot in the world frame.

    ``u`` is surge speed along the body axis, ``yaw_rate`` is in rad/s and
    ``w`` is the vertical (world z) velocity.
    """

    x: float
    y: float
    z: float
    yaw: float = 0.0
    u: float = 0.0
    yaw_rate: float = 0.0
    w: float = 0.0
    fins: FinCommand = OFF
    leds_on: bool = False

    @property
    def position(self) -> Vec3:
        return Vec3(self.x, self.y, self.z)

    @property
    def pose(self) -> PoseYaw:
        return PoseYaw(Vec3(self.x, self.y, self.z), self.yaw)


@dataclass(frozen=True)
class DynamicsParams:
    """Physical constants of one robot.

    The defaults are a calibration, not a measurement: top speed is one body
    length per second at full caudal frequency and the robot coasts for tens
    of seconds once the caudal fin stops.
    """

    mass: float = 0.2
    yaw_inertia: float = 30.0
    k_caudal: float = 0.005
    k_pectoral: float = 0.002
    k_dorsal: float = 0.01
    pectoral_arm: float = 30.0
    buoyancy: float = 0.015
    c_surge: float = 0.015 / 130.0**2
    c_yaw: float = 1.125
    c_heave: float = 0.015 / 20.0**2
    f_max: float = 3.0
    body_length: float = 130.0
    body_radius: float = 25.0

    def __post_init__(self):
        for name in (
            "mass", "yaw_inertia", "k_caudal", "k_pectoral", "k_dorsal",
            "pectoral_arm", "buoyancy", "c_surge", "c_yaw", "c_heave",
            "f_max", "body_length", "body_radius",
        ):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"dynamics.{name} must be positive and finite, got {v!r}")


@dataclass(frozen=True)
class Tank:
    """Water volume.  Horizontally centred on the origin; surface at z = 0.

    ``shape`` is ``"box"`` (``size_x`` by ``size_y``) or ``"cylinder"``
    (``diameter``).  ``depth`` is the water depth, so z spans ``[-depth, 0]``.
    """

    shape: str = "cylinder"
    depth: float = 2400.0
    diameter: float = 6400.0
    size_x: float = 0.0
    size_y: float = 0.0

    def __post_init__(self):
        if self.shape not in ("box", "cylinder"):
            raise ValueError(f"tank.shape must be 'box' or 'cylinder', got {self.shape!r}")
        if not self.depth > 0:
            raise ValueError("tank.depth must be positive")
        if self.shape == "box" and not (self.size_x > 0 and self.size_y > 0):
            raise ValueError("box tank needs positive size_x and size_y")
        if self.shape == "cylinder" and not self.diameter > 0:
            raise ValueError("cylinder tank needs a positive diameter")

    def contains(self, x: float, y: float, z: float) -> bool:
        if not (-self.depth <= z <= 0.0):
            return False
        if self.shape == "box":
            return abs(x) <= 0.5 * self.size_x and abs(y) <= 0.5 * self.size_y
        return math.hypot(x, y) <= 0.5 * self.diameter

    def clamp_horizontal(self, x: float, y: float) -> Tuple[float, float, float, float]:
        """Return clamped ``(x, y)`` plus the outward wall normal (zero if inside)."""
        if self.shape == "box":
            hx, hy = 0.5 * self.size_x, 0.5 * self.size_y
            nx = ny = 0.0
            if x > hx:
                x, nx = hx, 1.0
            elif x < -hx:
                x, nx = -hx, -1.0
            if y > hy:
                y, ny = hy, 1.0
            elif y < -hy:
                y, ny = -hy, -1.0
            return x, y, nx, ny
        rad = 0.5 * self.diameter
        rr = math.hypot(x, y)
        if rr <= rad:
            return x, y, 0.0, 0.0
        nx, ny = x / rr, y / rr
        return rad * nx, rad * ny, nx, ny


def net_forces(state: AgentState, cmd: FinCommand, params: DynamicsParams) -> Tuple[float, float, float]:
    """Surge force (N), yaw torque (N*mm) and vertical force (N, up positive)."""
    u, r, w = state.u, state.yaw_rate, state.w
    f_surge = params.k_caudal * cmd.caudal_freq - params.c_surge * u * abs(u)
    torque = (
        params.k_pectoral * (cmd.pectoral_right_freq - cmd.pectoral_left_freq) * params.pectoral_arm
        - params.c_yaw * r * abs(r)
    )
    f_dorsal = params.f_max if cmd.dorsal_on else 0.0
    f_z = params.buoyancy - params.k_dorsal * f_dorsal - params.c_heave * w * abs(w)
    return f_surge, torque, f_z


def terminal_speed(params: DynamicsParams) -> float:
    """Steady surge speed (mm/s) at full caudal frequency."""
    return math.sqrt(params.k_caudal * params.f_max / params.c_surge)


def advance(
    state: AgentState,
    cmd: FinCommand,
    dt: float,
    n_steps: int,
    params: DynamicsParams,
    tank: Optional[Tank] = None,
) -> AgentState:
    """Apply ``n_steps`` integration steps of length ``dt`` under a held command.

    Semi-implicit Euler: velocities first, then positions from the new
    velocities.  Drag is taken implicitly in its linearised form
    ``v' = (v + dt*a) / (1 + dt*k*|v|)``, which has the same fixed point as
    the explicit update but can never flip the sign of a coasting velocity.
    """
    if not 0.0 < dt <= 0.05:
        raise ValueError(f"dt must lie in (0, 0.05] s, got {dt}")
    m = params.mass
    a_surge = dt * _ACCEL * params.k_caudal * cmd.caudal_freq / m
    k_surge = dt * _ACCEL * params.c_surge / m
    a_yaw = dt * _ACCEL * params.k_pectoral * cmd.pectoral_differential * params.pectoral_arm / params.yaw_inertia
    k_yaw = dt * _ACCEL * params.c_yaw / params.yaw_inertia
    f_dorsal = params.f_max if cmd.dorsal_on else 0.0
    a_heave = dt * _ACCEL * (params.buoyancy - params.k_dorsal * f_dorsal) / m
    k_heave = dt * _ACCEL * params.c_heave / m

    x, y, z, yaw = state.x, state.y, state.z, state.yaw
    u, r, w = state.u, state.yaw_rate, state.w
    cos, sin = math.cos, math.sin
    for _ in range(n_steps):
        u = (u + a_surge) / (1.0 + k_surge * abs(u))
        r = (r + a_yaw) / (1.0 + k_yaw * abs(r))
        w = (w + a_heave) / (1.0 + k_heave * abs(w))
        yaw = wrap_angle(yaw + dt * r)
        x += dt * u * cos(yaw)
        y += dt * u * sin(yaw)
        z += dt * w
        if tank is not None:
            x, y, nx, ny = tank.clamp_horizontal(x, y)
            if (nx != 0.0 or ny != 0.0) and u * (nx * cos(yaw) + ny * sin(yaw)) > 0.0:
                u = 0.0
            if z > 0.0:
                z = 0.0
                if w > 0.0:
                    w = 0.0
            elif z < -tank.depth:
                z = -tank.depth
                if w < 0.0:
                    w = 0.0
    return AgentState(x, y, z, yaw, u, r, w, cmd, state.leds_on)


def step(
    state: AgentState,
    cmd: FinCommand,
    dt: float,
    params: DynamicsParams,
    tank: Optional[Tank] = None,
) -> AgentState:
    """One integration step; identical to ``advance(..., n_steps=1)``."""
    return advance(state, cmd, dt, 1, params, tank)
