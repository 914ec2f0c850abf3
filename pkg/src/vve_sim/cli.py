"""``vve-sim`` command line: run, replay, sweep and validate.

Exit codes: 0 success, 1 bad input, 2 scenario ran but ended in a collision.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional, Sequence

from .bridge import PoseLogError, calibrate, ingest_pose_log, map_pose, write_pose_log
from .geometry import Pose2, Vec2
from .scenario import (
    CANONICAL_SCENARIOS,
    Outcome,
    ScenarioError,
    config_from_dict,
    config_to_dict,
    fmt,
    load_config,
    run,
    scenario_path,
    summary_json,
    with_overrides,
    write_trace,
)

EXIT_OK, EXIT_ERROR, EXIT_COLLISION = 0, 1, 2

PARAM_ALIASES = {
    "T_s": "risk.ttz_diff_threshold",
    "ttz_diff_threshold": "risk.ttz_diff_threshold",
    "severity_1_2_threshold": "risk.severity_1_2_threshold",
    "severity_2_3_threshold": "risk.severity_2_3_threshold",
    "zone_half_extent": "risk.zone_half_extent",
    "engagement_horizon": "risk.engagement_horizon",
    "latency": "channel.latency_mean",
    "latency_mean": "channel.latency_mean",
    "latency_jitter": "channel.latency_jitter",
    "drop_probability": "channel.drop_probability",
    "broadcast_period": "channel.broadcast_period",
    "ped_start_delay": "pedestrians.0.profile.0.start_time",
    "ped_speed": "pedestrians.0.profile.0.speed",
    "cruise_speed": "vehicle.cruise_speed",
}

OUTCOME_COLUMNS = ["collided", "stopped", "min_separation", "max_severity", "first_brake_time", "stop_time"]


class UsageError(ValueError):
    pass


def _err(msg: str) -> None:
    print(f"vve-sim: error: {msg}", file=sys.stderr)


def resolve_scenario(path: str) -> Path:
    """A file path, or the name of a shipped scenario (with or without ``.json``)."""
    p = Path(path)
    if p.is_file():
        return p
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if p.parent == Path(".") and name in CANONICAL_SCENARIOS:
        return scenario_path(name)
    raise UsageError(f"scenario file not found: {path}")


def _read_doc(path: Path) -> dict:
    # round-trip through load_config so parse errors carry a location
    load_config(path)
    return json.loads(path.read_text(encoding="utf-8"))


def parse_param(text: str) -> tuple[str, list[float]]:
    """Parse ``name=start:stop:step`` (stop inclusive) or ``name=v1,v2,...``."""
    if "=" not in text:
        raise UsageError(f"--param {text!r}: expected name=start:stop:step")
    name, rng = text.split("=", 1)
    name = PARAM_ALIASES.get(name.strip(), name.strip())
    try:
        if ":" in rng:
            parts = [float(x) for x in rng.split(":")]
            if len(parts) != 3:
                raise UsageError(f"--param {text!r}: expected start:stop:step")
            start, stop, step = parts
            if step <= 0.0 or stop < start:
                raise UsageError(f"--param {text!r}: empty range")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            values = [round(start + i * step, 12) for i in range(n)]
        else:
            values = [float(x) for x in rng.split(",") if x.strip()]
    except ValueError as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"--param {text!r}: {exc}") from None
    if not values:
        raise UsageError(f"--param {text!r}: empty range")
    return name, values


def _outcome_row(o: Outcome) -> list[str]:
    def cell(v: Any) -> str:
        if v is None:
            return ""
        if isinstance(v, bool):
            return str(int(v))
        if isinstance(v, float):
            return fmt(v)
        return str(v)

    return [cell(getattr(o, c)) for c in OUTCOME_COLUMNS]


def _run_cell(doc: dict) -> Outcome:
    _, outcome = run(config_from_dict(doc))
    return outcome


def cmd_run(args: argparse.Namespace) -> int:
    doc = _read_doc(resolve_scenario(args.scenario))
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = config_from_dict(doc)
    records, outcome = run(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trace(records, out / "trace.csv")
    (out / "summary.json").write_text(summary_json(outcome), encoding="utf-8")
    if not args.quiet:
        print(summary_json(outcome), end="")
    return EXIT_COLLISION if outcome.collided else EXIT_OK


def _parse_origin(text: Optional[str], flag: str) -> Pose2:
    if text is None:
        return Pose2.at(0.0, 0.0, 0.0)
    try:
        x, y, hdg = (float(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"{flag} expects x,y,heading_deg, got {text!r}") from None
    return Pose2(Vec2(x, y), math.radians(hdg))


def cmd_replay(args: argparse.Namespace) -> int:
    cal = calibrate(
        _parse_origin(args.real_origin, "--real-origin"),
        _parse_origin(args.virtual_origin, "--virtual-origin"),
    )
    log_path = Path(args.log)
    if not log_path.is_file():
        raise UsageError(f"pose log not found: {args.log}")
    with log_path.open(encoding="utf-8", newline="") as fh:
        samples = ingest_pose_log(fh)
    mapped = [(s.t, map_pose(cal, s.pose)) for s in samples]
    if args.out in (None, "-"):
        write_pose_log(mapped, sys.stdout)
    else:
        out = Path(args.out)
        if out.is_dir():
            out = out / "virtual_poses.csv"
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="") as fh:
            write_pose_log(mapped, fh)
        if not args.quiet:
            print(f"wrote {len(mapped)} poses to {out}")
    return EXIT_OK


def sweep(base: dict, params: Sequence[tuple[str, list[float]]], workers: int = 1) -> list[list[str]]:
    """Run the cross product of ``params`` over ``base``; rows in product order."""
    names = [n for n, _ in params]
    cells = list(itertools.product(*(vals for _, vals in params)))
    docs = [with_overrides(base, dict(zip(names, combo))) for combo in cells]
    for d in docs:
        config_from_dict(d)  # fail fast on invalid cells
    if workers > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_cell, docs))
    else:
        outcomes = [_run_cell(d) for d in docs]
    rows = [names + OUTCOME_COLUMNS]
    for combo, o in zip(cells, outcomes):
        rows.append([fmt(v) for v in combo] + _outcome_row(o))
    return rows


def cmd_sweep(args: argparse.Namespace) -> int:
    if not args.param:
        raise UsageError("sweep needs at least one --param")
    path = resolve_scenario(args.scenario)
    base = _read_doc(path)
    if args.seed is not None:
        base["seed"] = args.seed
    params = [parse_param(p) for p in args.param]
    try:
        rows = sweep(base, params, workers=args.workers)
    except (KeyError, IndexError, TypeError) as exc:
        raise UsageError(f"bad parameter path: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "sweep.csv").open("w", encoding="utf-8", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    if not args.quiet:
        print(f"wrote {len(rows) - 1} rows to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = load_config(resolve_scenario(args.scenario))
    if not args.quiet:
        print(json.dumps(config_to_dict(cfg), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vve-sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="suppress informational output")

    p = sub.add_parser("run", parents=[common], help="run one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="results")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", parents=[common], help="map a real-lot pose log into the virtual frame")
    p.add_argument("--log", required=True)
    p.add_argument("--real-origin", help="x,y,heading_deg of the lot reference pose")
    p.add_argument("--virtual-origin", help="x,y,heading_deg of the matching virtual pose")
    p.add_argument("--out", help="output CSV (or directory); stdout if omitted")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("sweep", parents=[common], help="cross-product parameter sweep")
    p.add_argument("--scenario", required=True)
    p.add_argument("--param", action="append", default=[], help="name=start:stop:step (repeatable)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="results")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", parents=[common], help="check a scenario and print its effective config")
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    seed = getattr(args, "seed", None)
    if seed is not None and not 0 <= seed < 2**64:
        _err("--seed must be a 64-bit unsigned integer")
        return EXIT_ERROR
    try:
        return args.func(args)
    except (UsageError, ScenarioError, PoseLogError, OSError) as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
