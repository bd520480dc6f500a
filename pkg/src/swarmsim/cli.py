"""``swarmsim`` command line: run, batch, metrics, plot and scenario."""

from __future__ import annotations

import argparse
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .plotting import KINDS, render
from .scenario import ScenarioConfig, ScenarioError, builtin_names, builtin_text, dump_scenario, load_scenario, resolve
from .scenario import run as simulate
from .scenario.io import LogFormatError, dumps_json, metrics_document, read_trajectory, write_json, write_trajectory
from .scenario.metrics import compute_metrics, summarize

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 1, 2

TRAJECTORY = "trajectory.csv"
METRICS = "metrics.json"
RESOLVED = "scenario.resolved"
SUMMARY = "summary.json"


class UsageError(Exception):
    pass


def _colour(code: str, text: str) -> str:
    if os.environ.get("SWARMSIM_NO_COLOR") or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _info(msg: str) -> None:
    print(_colour("32", "ok") + " " + msg, file=sys.stderr)


def _error(msg: str) -> None:
    print(_colour("31", "error:") + " " + msg, file=sys.stderr)


def parse_seeds(text: str) -> range:
    """``A..B`` (inclusive) or a single integer."""
    m = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?", text)
    if not m:
        raise UsageError(f"--seeds: expected A..B, got {text!r}")
    a = int(m.group(1))
    b = int(m.group(2)) if m.group(2) is not None else a
    if b < a:
        raise UsageError(f"--seeds: empty range {text!r}")
    return range(a, b + 1)


def _load(scenario: str, variant: Optional[str]) -> ScenarioConfig:
    cfg = resolve(scenario)
    return cfg.with_variant(variant) if variant else cfg


def write_run(cfg: ScenarioConfig, seed: int, out_dir: str) -> Dict[str, Any]:
    """Simulate and write the three run files; returns the scalar metrics."""
    os.makedirs(out_dir, exist_ok=True)
    log = simulate(cfg, seed)
    doc = metrics_document(compute_metrics(log, cfg))
    write_trajectory(os.path.join(out_dir, TRAJECTORY), log)
    write_json(os.path.join(out_dir, METRICS), doc)
    with open(os.path.join(out_dir, RESOLVED), "w", newline="") as fh:
        fh.write(dump_scenario(cfg))
    return doc


def cmd_run(args) -> int:
    cfg = _load(args.scenario, args.variant)
    write_run(cfg, args.seed, args.out)
    _info(f"{cfg.name} seed {args.seed} -> {args.out}")
    return EXIT_OK


def _batch_job(job: Tuple[ScenarioConfig, int, str]) -> Tuple[int, int, Any]:
    cfg, seed, out_dir = job
    try:
        return seed, EXIT_OK, write_run(cfg, seed, out_dir)
    except OSError as exc:
        return seed, EXIT_IO, str(exc)
    except (ScenarioError, ValueError) as exc:
        return seed, EXIT_CONFIG, str(exc)


def seed_dir(out: str, seed: int) -> str:
    return os.path.join(out, f"seed_{seed:04d}")


def cmd_batch(args) -> int:
    seeds = parse_seeds(args.seeds)
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    cfg = _load(args.scenario, args.variant)
    os.makedirs(args.out, exist_ok=True)
    jobs = [(cfg, s, seed_dir(args.out, s)) for s in seeds]
    if args.jobs == 1:
        results = [_batch_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_job, jobs))
    worst = EXIT_OK
    per_seed = {}
    for seed, code, payload in results:
        if code != EXIT_OK:
            _error(f"seed {seed}: {payload}")
            worst = max(worst, code)
        else:
            per_seed[seed] = payload
    if per_seed:
        summary = {"scenario": cfg.name, "controller_variant": cfg.controller_variant, **summarize(per_seed)}
        write_json(os.path.join(args.out, SUMMARY), summary)
        with open(os.path.join(args.out, RESOLVED), "w", newline="") as fh:
            fh.write(dump_scenario(cfg))
    _info(f"{cfg.name}: {len(per_seed)}/{len(jobs)} runs -> {args.out}")
    return worst


def _run_dirs(path: str) -> List[str]:
    """The run directory itself, or the seed directories of a batch."""
    if os.path.isfile(os.path.join(path, TRAJECTORY)):
        return [path]
    if not os.path.isdir(path):
        raise LogFormatError(f"{path}: no such directory")
    subs = sorted(d for d in os.listdir(path) if d.startswith("seed_")
                  and os.path.isfile(os.path.join(path, d, TRAJECTORY)))
    if not subs:
        raise LogFormatError(f"{path}: no {TRAJECTORY} found (not a run or batch directory)")
    return [os.path.join(path, d) for d in subs]


def _read_run(run_dir: str):
    try:
        with open(os.path.join(run_dir, RESOLVED)) as fh:
            cfg = load_scenario(fh.read())
    except FileNotFoundError:
        raise LogFormatError(f"{run_dir}: missing {RESOLVED}") from None
    except ScenarioError as exc:
        raise LogFormatError(f"{run_dir}/{RESOLVED}: {exc}") from None
    return cfg, read_trajectory(os.path.join(run_dir, TRAJECTORY), cfg)


def cmd_metrics(args) -> int:
    """Recompute metrics from logs and print them (or a batch summary) as JSON."""
    dirs = _run_dirs(args.path)
    if len(dirs) == 1 and dirs[0] == args.path:
        cfg, log = _read_run(args.path)
        doc = metrics_document(compute_metrics(log, cfg))
    else:
        per_seed = {}
        for d in dirs:
            cfg, log = _read_run(d)
            per_seed[int(os.path.basename(d)[5:])] = metrics_document(compute_metrics(log, cfg))
        doc = {"scenario": cfg.name, "controller_variant": cfg.controller_variant, **summarize(per_seed)}
    text = dumps_json(doc)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_plot(args) -> int:
    dirs = _run_dirs(args.path)
    runs = [_read_run(d) for d in dirs]
    cfg = runs[0][0]
    svg = render([log for _, log in runs], cfg, args.kind)
    out = os.path.join(args.path, f"plot_{args.kind}.svg")
    with open(out, "w", newline="") as fh:
        fh.write(svg)
    _info(f"wrote {out}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.action == "list":
        for name in builtin_names():
            print(name)
        return EXIT_OK
    if not args.name:
        raise UsageError("scenario show needs a name")
    if args.resolved:
        sys.stdout.write(dump_scenario(resolve(args.name)))
    else:
        sys.stdout.write(builtin_text(args.name))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        _error(message)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="swarmsim", description="Vision-based leader-follower simulations of fin-driven robots.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def scenario_opts(sp):
        sp.add_argument("--scenario", required=True, help="built-in name or path to a YAML file")
        sp.add_argument("--variant", choices=("zonal", "tanh"), help="override the controller variant")
        sp.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("run", help="simulate one seed")
    scenario_opts(r)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("batch", help="simulate a range of seeds")
    scenario_opts(b)
    b.add_argument("--seeds", required=True, help="inclusive range A..B")
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    b.set_defaults(func=cmd_batch)

    m = sub.add_parser("metrics", help="recompute metrics from a run or batch directory")
    m.add_argument("path")
    m.add_argument("--out", help="write JSON here instead of stdout")
    m.set_defaults(func=cmd_metrics)

    pl = sub.add_parser("plot", help="write plot_<kind>.svg into a run or batch directory")
    pl.add_argument("path")
    pl.add_argument("--kind", required=True, choices=KINDS)
    pl.set_defaults(func=cmd_plot)

    s = sub.add_parser("scenario", help="list or print built-in scenarios")
    s.add_argument("action", choices=("list", "show"))
    s.add_argument("name", nargs="?")
    s.add_argument("--resolved", action="store_true", help="print with every default filled in")
    s.set_defaults(func=cmd_scenario)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ScenarioError, LogFormatError) as exc:
        _error(str(exc))
        return EXIT_CONFIG
    except OSError as exc:
        _error(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
