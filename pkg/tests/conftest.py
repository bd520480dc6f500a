import math

import pytest
from hypothesis import settings

from swarmsim.dynamics import AgentState
from swarmsim.vision import LedLayout

settings.register_profile("default", deadline=None)
settings.load_profile("default")


def place_leader(bearing, pitch, dist, yaw, observer_z=-1000.0):
    """Leader whose body centre sits at (bearing, pitch, dist) from an observer at the origin facing +x."""
    return AgentState(
        dist * math.cos(pitch) * math.cos(bearing),
        dist * math.cos(pitch) * math.sin(bearing),
        observer_z - dist * math.sin(pitch),
        yaw,
        leds_on=True,
    )


def place_pair_midpoint(bearing, pitch, dist, yaw, layout=LedLayout(), observer_z=-1000.0):
    """Leader whose posterior pair midpoint sits at (bearing, pitch, dist) from the observer."""
    off = layout.pair_midpoint
    mx = dist * math.cos(pitch) * math.cos(bearing)
    my = dist * math.cos(pitch) * math.sin(bearing)
    return AgentState(mx - math.cos(yaw) * off.x, my - math.sin(yaw) * off.x, observer_z - dist * math.sin(pitch),
                      yaw, leds_on=True)


@pytest.fixture
def observer():
    return AgentState(0.0, 0.0, -1000.0, 0.0)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config._acceptance_lines

    def _report(number, title, ok, detail=""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        lines.append(line)
        print(line)
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
