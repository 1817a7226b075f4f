"""Command-line front end.

Four subcommands: ``gen-data`` and ``gen-traj`` materialize reproducible
inputs, ``query`` answers a single obfuscated request against a points CSV,
``experiment`` drives a full sweep from a config file.  Exit codes: 0 on
success, 1 for usage/config errors, 2 for runtime failures.

Config files are flat ``key = value`` lines ('#' starts a comment); list
values are comma-separated.  Command-line flags override config values.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .geometry import ConfidenceParams, Rect
from .rtree import build_index
from .server import QueryRequest, clappinq, naive_baseline
from .simulation import (
    DATA_SPACE,
    DataSpec,
    SweepConfig,
    TrajectorySpec,
    gen_data,
    gen_trajectories,
    read_points_csv,
    sweep,
    write_points_csv,
    write_results_csv,
    write_trajectories_csv,
)

__all__ = ["main", "console_entry", "parse_config"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage -> 1
        raise UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    p = _Parser(prog="pmknn", description="private moving kNN toolkit")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen-data", parents=[], help="write a points CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--kind", default="uniform", choices=["uniform", "zipf", "csv"])
    g.add_argument("--n", type=int, default=20_000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--zipf-exponent", type=float, default=1.0)
    g.add_argument("--path", help="source CSV for --kind csv")
    g.add_argument("--rescale", action="store_true", help="min-max rescale csv input into the data space")

    t = sub.add_parser("gen-traj", help="write a trajectories CSV")
    t.add_argument("--out", required=True)
    t.add_argument("--n", type=int, default=20)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--length", type=float, default=5000.0)
    t.add_argument("--seg-min", type=float, default=1.0)
    t.add_argument("--seg-max", type=float, default=10.0)

    q = sub.add_parser("query", help="answer one obfuscated request")
    q.add_argument("--data", required=True, help="points CSV")
    q.add_argument("--rect", required=True, help="x0,y0,x1,y1")
    q.add_argument("--cl", type=float, default=1.0)
    q.add_argument("--k", type=int, default=1)
    q.add_argument("--dump", action="store_true", help="print the candidate set")
    q.add_argument("--baseline", help="also run the per-point baseline, e.g. grid=20")

    e = sub.add_parser("experiment", help="run a sweep from a config file")
    e.add_argument("--config", required=True)
    e.add_argument("--out", help="results CSV (overrides config 'out')")
    e.add_argument("--attack", help="comma list: overlap,mmb,combined")
    e.add_argument("--repeats", type=int)
    e.add_argument("--trajectories", type=int)
    e.add_argument("--threads", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--timing", action="store_true", help="record wall clock in the CSV (breaks byte-reproducibility)")
    return p


def _parse_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_list(v: str, conv):
    return tuple(conv(x.strip()) for x in v.split(",") if x.strip())


# key -> (section, field, converter); lists are profile axes
_CONFIG_KEYS = {
    "seed": ("sweep", "seed", int),
    "repeats": ("sweep", "repeats", int),
    "threads": ("sweep", "threads", int),
    "timing": ("sweep", "timing", _parse_bool),
    "audit_fraction": ("sweep", "audit_fraction", float),
    "step": ("sweep", "step", float),
    "speed": ("sweep", "speed", float),
    "max_speed": ("sweep", "max_speed", float),
    "mc_samples": ("sweep", "area_samples", int),
    "out": ("misc", "out", str),
    "area_pct": ("sweep", "areas", lambda v: _parse_list(v, float)),
    "ratio": ("sweep", "ratios", lambda v: _parse_list(v, float)),
    "cl": ("sweep", "cls", lambda v: _parse_list(v, float)),
    "cl_r": ("sweep", "cl_rs", lambda v: _parse_list(v, float)),
    "k": ("sweep", "ks", lambda v: _parse_list(v, int)),
    "k_r": ("sweep", "k_rs", lambda v: _parse_list(v, int)),
    "delta": ("sweep", "deltas", lambda v: _parse_list(v, float)),
    "attack": ("sweep", "attacks", lambda v: _parse_list(v, str)),
    "data.kind": ("data", "kind", str),
    "data.n": ("data", "n", int),
    "data.seed": ("data", "seed", int),
    "data.zipf_exponent": ("data", "zipf_exponent", float),
    "data.path": ("data", "path", str),
    "data.rescale": ("data", "rescale", _parse_bool),
    "traj.count": ("traj", "count", int),
    "traj.length": ("traj", "total_length", float),
    "traj.seg_min": ("traj", "seg_min", float),
    "traj.seg_max": ("traj", "seg_max", float),
    "traj.seed": ("traj", "seed", int),
}


def parse_config(path) -> tuple[SweepConfig, dict]:
    """Read a sweep config; raises UsageError listing every problem at once."""
    errors: list[str] = []
    sections = {"sweep": {}, "data": {}, "traj": {}, "misc": {}}
    try:
        lines = open(path, "r", encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value'")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        section, field_name, conv = _CONFIG_KEYS[key]
        try:
            sections[section][field_name] = conv(value)
        except (ValueError, TypeError) as exc:
            errors.append(f"line {lineno}: bad value for {key}: {exc}")
    if errors:
        raise UsageError("config errors:\n  " + "\n  ".join(errors))
    try:
        config = SweepConfig(
            data=DataSpec(**sections["data"]),
            traj=TrajectorySpec(**sections["traj"]),
            **sections["sweep"],
        )
    except (ValueError, TypeError) as exc:
        raise UsageError(f"config error: {exc}") from None
    problems = config.validate()
    if problems:
        raise UsageError("config errors:\n  " + "\n  ".join(problems))
    return config, sections["misc"]


def _cmd_gen_data(args) -> int:
    spec = DataSpec(
        kind=args.kind,
        n=args.n,
        seed=args.seed,
        zipf_exponent=args.zipf_exponent,
        path=args.path,
        rescale=args.rescale,
    )
    ids, coords = gen_data(spec)
    write_points_csv(args.out, ids, coords)
    print(f"wrote {len(ids)} points to {args.out}")
    return 0


def _cmd_gen_traj(args) -> int:
    spec = TrajectorySpec(
        count=args.n,
        total_length=args.length,
        seg_min=args.seg_min,
        seg_max=args.seg_max,
        seed=args.seed,
    )
    trajs = gen_trajectories(spec)
    write_trajectories_csv(args.out, trajs)
    print(f"wrote {len(trajs)} trajectories to {args.out}")
    return 0


def _parse_rect(text: str) -> Rect:
    parts = text.split(",")
    if len(parts) != 4:
        raise UsageError("--rect needs x0,y0,x1,y1")
    try:
        x0, y0, x1, y1 = (float(v) for v in parts)
    except ValueError:
        raise UsageError("--rect needs numeric x0,y0,x1,y1") from None
    return Rect(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))


def _cmd_query(args) -> int:
    try:
        params = ConfidenceParams(args.cl, args.k)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rect = _parse_rect(args.rect)
    ids, coords = read_points_csv(args.data)
    index = build_index(coords, ids=ids, bounds=DATA_SPACE if DATA_SPACE.contains_many(coords).all() else None)
    resp = clappinq(index, QueryRequest(rect, params))
    o = resp.known_region.center
    print(f"candidates: {len(resp)}")
    print(f"known region: center ({o.x:.3f}, {o.y:.3f}) radius {resp.known_region.radius:.3f}")
    print(f"page reads: {resp.stats.io_reads}")
    print(f"elapsed: {resp.stats.elapsed_s:.6f} s")
    if resp.stats.exhausted:
        print("note: dataset exhausted before corner coverage; answer covers every object")
    if args.dump:
        for oid, (x, y) in zip(resp.ids, resp.points):
            print(f"{int(oid)},{x!r},{y!r}")
    if args.baseline:
        spec = args.baseline.strip()
        if not spec.startswith("grid="):
            raise UsageError("--baseline expects grid=N")
        try:
            grid = int(spec[5:])
        except ValueError:
            raise UsageError("--baseline expects grid=N") from None
        base = naive_baseline(index, QueryRequest(rect, params), grid=grid)
        print(f"baseline candidates: {len(base)}")
        print(f"baseline page reads: {base.stats.io_reads}")
        print(f"baseline elapsed: {base.stats.elapsed_s:.6f} s")
        if base.stats.io_reads and resp.stats.io_reads:
            print(f"io speedup: {base.stats.io_reads / resp.stats.io_reads:.2f}x")
    return 0


def _cmd_experiment(args) -> int:
    config, misc = parse_config(args.config)
    updates = {}
    if args.attack:
        updates["attacks"] = _parse_list(args.attack, str)
    if args.repeats is not None:
        updates["repeats"] = args.repeats
    if args.threads is not None:
        updates["threads"] = args.threads
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.timing:
        updates["timing"] = True
    if args.trajectories is not None:
        updates["traj"] = replace(config.traj, count=args.trajectories)
    if updates:
        config = replace(config, **updates)
    problems = config.validate()
    if problems:
        raise UsageError("config errors:\n  " + "\n  ".join(problems))
    out = args.out or misc.get("out")
    if not out:
        raise UsageError("no output path: pass --out or set 'out' in the config")
    records = sweep(config)
    write_results_csv(records, out, timing=config.timing)
    print(f"wrote {len(records)} records to {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.cmd == "gen-data":
            if args.kind == "csv" and not args.path:
                raise UsageError("--kind csv requires --path")
            return _cmd_gen_data(args)
        if args.cmd == "gen-traj":
            return _cmd_gen_traj(args)
        if args.cmd == "query":
            return _cmd_query(args)
        if args.cmd == "experiment":
            return _cmd_experiment(args)
        raise UsageError(f"unknown command {args.cmd!r}")
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
