import xml.etree.ElementTree as ET

import pytest

from swarmsim.plotting import KINDS, nice_ticks, render
from swarmsim.scenario import builtin, run

SVG_NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def logs():
    cfg = builtin("sec41_straight").with_duration(10.0)
    return cfg, [run(cfg, s) for s in (0, 1)]


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n_runs", [1, 2])
def test_every_kind_is_well_formed_svg(logs, kind, n_runs):
    cfg, runs = logs
    root = ET.fromstring(render(runs[:n_runs], cfg, kind))
    assert root.tag == SVG_NS + "svg"
    assert root.findall(f".//{SVG_NS}polyline") or root.findall(f".//{SVG_NS}path")


def test_distance_plot_has_target_line(logs):
    cfg, runs = logs
    svg = render(runs[:1], cfg, "distance")
    assert "target" in svg


def test_unknown_kind_raises(logs):
    cfg, runs = logs
    with pytest.raises(ValueError):
        render(runs, cfg, "topveiw")
    with pytest.raises(ValueError):
        render([], cfg, "depth")


@pytest.mark.parametrize("lo, hi", [(0, 1), (-1234, 987), (0.001, 0.0013), (5, 5), (-60, 0)])
def test_nice_ticks_cover_range(lo, hi):
    ticks = nice_ticks(lo, hi)
    assert ticks == sorted(ticks)
    assert all(lo - 1e-9 <= t <= hi + 1e-9 for t in ticks) or lo == hi
