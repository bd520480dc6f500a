"""Scenario documents: YAML text <-> :class:`ScenarioConfig`.

Lengths are millimetres, times seconds and every angle is given in degrees
(keys end in ``_deg``).  Unknown keys are rejected so that typos fail loudly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace
from importlib import resources
from typing import Any, Dict, List, Optional, Tuple

import yaml

from ..control import LeaderProgram, TanhParams, ZoneParams
from ..dynamics import DynamicsParams, Tank
from ..vision import LedLayout, VisionParams

CONTROL_PERIOD = 0.2
PHYSICS_DT = 0.01
SUBSTEPS = 20


class ScenarioError(ValueError):
    """A scenario document failed to parse or validate."""


@dataclass(frozen=True)
class InitSpec:
    """Fixed pose (``pose``) or a sampling box (``region``) plus yaw.

    ``yaw`` is in radians; ``None`` means a uniformly random heading.
    """

    pose: Optional[Tuple[float, float, float]] = None
    region: Optional[Tuple[Tuple[float, float], Tuple[float, float], Tuple[float, float]]] = None
    yaw: Optional[float] = None


@dataclass(frozen=True)
class AgentSpec:
    id: str
    role: str
    leds_on: bool
    init: InitSpec
    program: Optional[LeaderProgram] = None
    zone: Optional[ZoneParams] = None


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    duration: float
    agents: Tuple[AgentSpec, ...]
    tank: Tank = Tank()
    vision: VisionParams = VisionParams()
    dynamics: DynamicsParams = DynamicsParams()
    led: LedLayout = LedLayout()
    tanh: TanhParams = TanhParams()
    seed_base: int = 0
    controller_variant: str = "zonal"
    description: str = ""

    @property
    def n_ticks(self) -> int:
        return int(round(self.duration / CONTROL_PERIOD))

    def leader_indices(self) -> List[int]:
        return [i for i, a in enumerate(self.agents) if a.role == "leader"]

    def follower_indices(self) -> List[int]:
        return [i for i, a in enumerate(self.agents) if a.role == "follower"]

    def with_variant(self, variant: str) -> "ScenarioConfig":
        if variant not in ("zonal", "tanh"):
            raise ScenarioError(f"controller_variant: expected zonal or tanh, got {variant!r}")
        return replace(self, controller_variant=variant)

    def with_duration(self, duration: float) -> "ScenarioConfig":
        return replace(self, duration=float(duration))


# config key -> (field name, is_angle)
_VISION_KEYS = {
    "blind_spot_half_angle_deg": ("blind_spot_half_angle", True),
    "fov_limit_deg": ("fov_limit", True),
    "merge_threshold_deg": ("merge_threshold", True),
    "stack_tolerance_deg": ("stack_tolerance", True),
    "pitch_match_threshold_deg": ("pitch_match_threshold", True),
    "noise_sigma_deg": ("noise_sigma", True),
    "reflection_rate": ("reflection_rate", False),
    "max_range": ("max_range", False),
    "occluder_radius": ("occluder_radius", False),
    "surface_z": ("surface_z", False),
}
_ZONE_KEYS = {
    "approach_threshold": ("approach_threshold", False),
    "dead_radius": ("dead_radius", False),
    "follow_distance": ("follow_distance", False),
    "follow_angle_deg": ("follow_angle", True),
    "v_min_frac": ("v_min_frac", False),
    "v_max_frac": ("v_max_frac", False),
    "turn_deadband_deg": ("turn_deadband", True),
    "lost_hold": ("lost_hold", False),
}
_DYN_KEYS = {f.name: (f.name, False) for f in fields(DynamicsParams)}
_LED_KEYS = {f.name: (f.name, False) for f in fields(LedLayout)}
_TANK_KEYS = {"shape": ("shape", False), "depth": ("depth", False), "diameter": ("diameter", False),
              "size_x": ("size_x", False), "size_y": ("size_y", False)}
_TOP_KEYS = {"name", "description", "duration", "seed_base", "controller_variant", "tank", "vision",
             "dynamics", "led", "tanh", "follower_defaults", "agents"}


def _num(path: str, v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ScenarioError(f"{path}: must be finite")
    return v


def _mapping(path: str, v: Any) -> Dict[str, Any]:
    if v is None:
        return {}
    if not isinstance(v, dict):
        raise ScenarioError(f"{path}: expected a mapping, got {type(v).__name__}")
    return v


def _check_keys(path: str, d: Dict[str, Any], allowed) -> None:
    for k in d:
        if k not in allowed:
            raise ScenarioError(f"{path}.{k}: unknown key (allowed: {', '.join(sorted(allowed))})")


def _section(path: str, raw: Any, keys: Dict[str, Tuple[str, bool]]) -> Dict[str, Any]:
    d = _mapping(path, raw)
    _check_keys(path, d, keys)
    out = {}
    for k, v in d.items():
        name, angle = keys[k]
        if name == "shape":
            out[name] = v
            continue
        x = _num(f"{path}.{k}", v)
        out[name] = math.radians(x) if angle else x
    return out


def _build(path: str, cls, kwargs):
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _zone_kwargs(path: str, raw: Any) -> Dict[str, Any]:
    d = dict(_mapping(path, raw))
    band = d.pop("pitch_band_deg", None)
    out = _section(path, d, _ZONE_KEYS)
    if band is not None:
        if not (isinstance(band, (list, tuple)) and len(band) == 2):
            raise ScenarioError(f"{path}.pitch_band_deg: expected [lo, hi]")
        lo, hi = sorted(_num(f"{path}.pitch_band_deg", b) for b in band)
        out["pitch_band"] = (math.radians(lo), math.radians(hi))
    return out


def _range2(path: str, v: Any) -> Tuple[float, float]:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ScenarioError(f"{path}: expected [min, max]")
    a, b = (_num(path, x) for x in v)
    if a > b:
        raise ScenarioError(f"{path}: min exceeds max")
    return a, b


def _init(path: str, raw: Any) -> InitSpec:
    d = _mapping(path, raw)
    _check_keys(path, d, {"x", "y", "z", "yaw_deg", "region"})
    yaw_raw = d.get("yaw_deg", "random")
    if yaw_raw == "random":
        yaw = None
    else:
        yaw = math.radians(_num(f"{path}.yaw_deg", yaw_raw))
    has_pose = any(k in d for k in ("x", "y", "z"))
    if has_pose and "region" in d:
        raise ScenarioError(f"{path}: give either x/y/z or region, not both")
    if has_pose:
        if not all(k in d for k in ("x", "y", "z")):
            raise ScenarioError(f"{path}: fixed pose needs x, y and z")
        return InitSpec(pose=tuple(_num(f"{path}.{k}", d[k]) for k in ("x", "y", "z")), yaw=yaw)
    if "region" not in d:
        raise ScenarioError(f"{path}: needs a fixed pose (x, y, z) or a region")
    reg = _mapping(f"{path}.region", d["region"])
    _check_keys(f"{path}.region", reg, {"x", "y", "z"})
    if set(reg) != {"x", "y", "z"}:
        raise ScenarioError(f"{path}.region: needs x, y and z ranges")
    return InitSpec(region=tuple(_range2(f"{path}.region.{k}", reg[k]) for k in ("x", "y", "z")), yaw=yaw)


def _program(path: str, raw: Any, f_max: float) -> LeaderProgram:
    d = dict(_mapping(path, raw))
    _check_keys(path, d, {"kind", "caudal_freq", "pectoral_bias", "depth_setpoint", "segments",
                          "depth_hysteresis"})
    kw: Dict[str, Any] = {"f_max": f_max}
    if "kind" in d:
        kw["kind"] = d["kind"]
    for k in ("caudal_freq", "pectoral_bias", "depth_setpoint", "depth_hysteresis"):
        if k in d:
            kw[k] = _num(f"{path}.{k}", d[k])
    if "segments" in d:
        segs = d["segments"]
        if not isinstance(segs, list):
            raise ScenarioError(f"{path}.segments: expected a list of [duration, caudal, bias]")
        out = []
        for i, s in enumerate(segs):
            if not (isinstance(s, (list, tuple)) and len(s) == 3):
                raise ScenarioError(f"{path}.segments[{i}]: expected [duration, caudal, bias]")
            out.append(tuple(_num(f"{path}.segments[{i}]", x) for x in s))
        kw["segments"] = tuple(out)
    return _build(path, LeaderProgram, kw)


def scenario_from_dict(doc: Any) -> ScenarioConfig:
    """Validate a parsed document and resolve every default."""
    doc = _mapping("<root>", doc)
    _check_keys("<root>", doc, _TOP_KEYS)
    for req in ("name", "duration", "agents"):
        if req not in doc:
            raise ScenarioError(f"{req}: required key missing")
    name = str(doc["name"])
    duration = _num("duration", doc["duration"])
    if not duration > 0:
        raise ScenarioError("duration: must be positive")
    if abs(duration / CONTROL_PERIOD - round(duration / CONTROL_PERIOD)) > 1e-9:
        raise ScenarioError(f"duration: must be a multiple of the {CONTROL_PERIOD} s control period")
    seed_base = doc.get("seed_base", 0)
    if isinstance(seed_base, bool) or not isinstance(seed_base, int) or seed_base < 0:
        raise ScenarioError("seed_base: expected a nonnegative integer")
    variant = doc.get("controller_variant", "zonal")
    if variant not in ("zonal", "tanh"):
        raise ScenarioError(f"controller_variant: expected zonal or tanh, got {variant!r}")

    tank = _build("tank", Tank, _section("tank", doc.get("tank"), _TANK_KEYS))
    vision = _build("vision", VisionParams, _section("vision", doc.get("vision"), _VISION_KEYS))
    dyn = _build("dynamics", DynamicsParams, _section("dynamics", doc.get("dynamics"), _DYN_KEYS))
    led = _build("led", LedLayout, _section("led", doc.get("led"), _LED_KEYS))
    tanh_kw = _section("tanh", doc.get("tanh"), {"length_scale": ("length_scale", False),
                                                 "f_cap": ("f_cap", False)})
    tanh_kw.setdefault("f_cap", dyn.f_max)
    tanh = _build("tanh", TanhParams, tanh_kw)
    if tanh.f_cap > dyn.f_max:
        raise ScenarioError("tanh.f_cap: must not exceed dynamics.f_max")
    zone_defaults = _zone_kwargs("follower_defaults", doc.get("follower_defaults"))

    raw_agents = doc["agents"]
    if not isinstance(raw_agents, list) or not raw_agents:
        raise ScenarioError("agents: expected a nonempty list")
    agents = []
    seen = set()
    for i, ra in enumerate(raw_agents):
        path = f"agents[{i}]"
        ra = _mapping(path, ra)
        _check_keys(path, ra, {"id", "role", "leds_on", "init", "program", "controller"})
        aid = str(ra.get("id", f"agent{i}"))
        if aid in seen:
            raise ScenarioError(f"{path}.id: duplicate id {aid!r}")
        seen.add(aid)
        role = ra.get("role")
        if role not in ("leader", "follower"):
            raise ScenarioError(f"{path}.role: expected leader or follower, got {role!r}")
        leds = ra.get("leds_on", role == "leader")
        if not isinstance(leds, bool):
            raise ScenarioError(f"{path}.leds_on: expected true or false")
        init = _init(f"{path}.init", ra.get("init"))
        program = zone = None
        if role == "leader":
            if "controller" in ra:
                raise ScenarioError(f"{path}.controller: leaders run a program, not a controller")
            program = _program(f"{path}.program", ra.get("program"), dyn.f_max)
        else:
            if "program" in ra:
                raise ScenarioError(f"{path}.program: followers run a controller, not a program")
            kw = dict(zone_defaults)
            kw.update(_zone_kwargs(f"{path}.controller", ra.get("controller")))
            kw["f_max"] = dyn.f_max
            zone = _build(f"{path}.controller", ZoneParams, kw)
        agents.append(AgentSpec(aid, role, leds, init, program, zone))

    leaders = [a for a in agents if a.role == "leader"]
    if not any(a.leds_on for a in leaders):
        raise ScenarioError("agents: at least one leader with leds_on is required")
    if len(leaders) == 1:
        for a in agents:
            if a.role == "follower" and a.leds_on:
                raise ScenarioError(
                    f"agents: follower {a.id!r} has leds_on in a single-leader scenario; followers must be dark")

    cfg = ScenarioConfig(name, duration, tuple(agents), tank, vision, dyn, led, tanh, seed_base, variant,
                         str(doc.get("description", "")))
    for a in agents:
        _check_init_in_tank(a, tank)
    return cfg


def _check_init_in_tank(a: AgentSpec, tank: Tank) -> None:
    if a.init.pose is not None:
        if not tank.contains(*a.init.pose):
            raise ScenarioError(f"agent {a.id!r}: initial pose lies outside the tank")
        return
    (x0, x1), (y0, y1), (z0, z1) = a.init.region
    for x in (x0, x1):
        for y in (y0, y1):
            for z in (z0, z1):
                if not tank.contains(x, y, z):
                    raise ScenarioError(f"agent {a.id!r}: sampling region extends outside the tank")


def load_scenario(text: str) -> ScenarioConfig:
    """Parse and validate a YAML scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark is not None else "unknown position"
        raise ScenarioError(f"parse error at {where}: {exc.problem}") from None
    except yaml.YAMLError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return scenario_from_dict(doc)


def _deg(x: float) -> float:
    return float(f"{math.degrees(x):.12g}")


def _clean(x: float) -> float:
    return float(x)


def scenario_to_dict(cfg: ScenarioConfig) -> Dict[str, Any]:
    """Fully-defaulted document; ``scenario_from_dict`` inverts it."""

    def section(obj, keys):
        out = {}
        for k, (name, angle) in keys.items():
            v = getattr(obj, name)
            out[k] = v if isinstance(v, str) else (_deg(v) if angle else _clean(v))
        return out

    agents = []
    for a in cfg.agents:
        init: Dict[str, Any] = {}
        if a.init.pose is not None:
            init.update(zip(("x", "y", "z"), (_clean(v) for v in a.init.pose)))
        else:
            init["region"] = {k: [_clean(r[0]), _clean(r[1])] for k, r in zip(("x", "y", "z"), a.init.region)}
        init["yaw_deg"] = "random" if a.init.yaw is None else _deg(a.init.yaw)
        ad: Dict[str, Any] = {"id": a.id, "role": a.role, "leds_on": a.leds_on, "init": init}
        if a.program is not None:
            p = a.program
            ad["program"] = {
                "kind": p.kind,
                "caudal_freq": _clean(p.caudal_freq),
                "pectoral_bias": _clean(p.pectoral_bias),
                "depth_setpoint": _clean(p.depth_setpoint),
                "depth_hysteresis": _clean(p.depth_hysteresis),
                "segments": [[_clean(v) for v in s] for s in p.segments],
            }
        if a.zone is not None:
            c = section(a.zone, _ZONE_KEYS)
            c["pitch_band_deg"] = [_deg(a.zone.pitch_band[0]), _deg(a.zone.pitch_band[1])]
            ad["controller"] = c
        agents.append(ad)
    return {
        "name": cfg.name,
        "description": cfg.description,
        "duration": _clean(cfg.duration),
        "seed_base": cfg.seed_base,
        "controller_variant": cfg.controller_variant,
        "tank": section(cfg.tank, _TANK_KEYS),
        "vision": section(cfg.vision, _VISION_KEYS),
        "dynamics": section(cfg.dynamics, _DYN_KEYS),
        "led": section(cfg.led, _LED_KEYS),
        "tanh": {"length_scale": _clean(cfg.tanh.length_scale), "f_cap": _clean(cfg.tanh.f_cap)},
        "agents": agents,
    }


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(cfg), sort_keys=False, default_flow_style=None)


def builtin_names() -> List[str]:
    root = resources.files(__package__).joinpath("builtins")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def builtin_text(name: str) -> str:
    if name not in builtin_names():
        raise ScenarioError(f"unknown built-in scenario {name!r} (try: {', '.join(builtin_names())})")
    return resources.files(__package__).joinpath("builtins", f"{name}.yaml").read_text()


def builtin(name: str) -> ScenarioConfig:
    return load_scenario(builtin_text(name))


def resolve(scenario: str) -> ScenarioConfig:
    """A built-in name or a path to a scenario file."""
    if scenario in builtin_names():
        return builtin(scenario)
    if os.path.exists(scenario):
        with open(scenario) as fh:
            return load_scenario(fh.read())
    raise ScenarioError(f"unknown scenario {scenario!r}: neither a built-in name nor a file")
