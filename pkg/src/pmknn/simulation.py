"""Reproducible experiment harness: data, trajectories, runs, sweeps.

Everything here is driven by explicit seeds and produces byte-identical
CSV output for identical (seed, config) pairs — wall-clock timings are the
one nondeterministic quantity and are therefore kept out of the results
CSV unless explicitly enabled.

The synthetic world follows the evaluation setup the defaults encode: a
10^4 x 10^4 unit data space (1 unit = 63.25 m), 20k objects, clients moving
at 60 km/h along random polylines of total length 5000 units, location
updates at every polyline vertex plus 1-unit arc-length steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

import numpy as np

from .adversary import AdversaryView, Observation, trajectory_area
from .client import (
    DEFAULT_SPEED,
    ClientState,
    PrivacyProfile,
    RequestEvent,
    current_answers,
    exit_mask,
    initiate,
    request_now,
)
from .geometry import Point, Rect
from .rtree import Index, build_index
from .server import Server

__all__ = [
    "DATA_SPACE",
    "DataSpec",
    "TrajectorySpec",
    "ExperimentRecord",
    "RunResult",
    "SweepConfig",
    "gen_data",
    "gen_trajectories",
    "sample_schedule",
    "run_pmknn",
    "run_naive",
    "view_from_events",
    "sweep",
    "write_points_csv",
    "read_points_csv",
    "write_trajectories_csv",
    "read_trajectories_csv",
    "write_results_csv",
    "read_results_csv",
    "RESULT_COLUMNS",
]

DATA_SPACE = Rect(0.0, 0.0, 10_000.0, 10_000.0)
ZIPF_GRID = 100  # zipf data lives on a ZIPF_GRID x ZIPF_GRID cell lattice


@dataclass(frozen=True)
class DataSpec:
    """How to obtain the object set."""

    kind: str = "uniform"  # uniform | zipf | csv
    n: int = 20_000
    seed: int = 0
    zipf_exponent: float = 1.0
    path: str | None = None
    rescale: bool = False

    def __post_init__(self):
        if self.kind not in ("uniform", "zipf", "csv"):
            raise ValueError(f"unknown data kind: {self.kind!r}")
        if self.kind != "csv" and self.n < 0:
            raise ValueError("n must be >= 0")
        if self.kind == "csv" and not self.path:
            raise ValueError("csv data needs a path")

    @property
    def label(self) -> str:
        if self.kind == "csv":
            return Path(self.path).stem
        return f"{self.kind}-{self.n}"


def gen_data(spec: DataSpec, space: Rect = DATA_SPACE) -> tuple[np.ndarray, np.ndarray]:
    """Materialize the object set as (ids, (n, 2) coords) inside ``space``."""
    if spec.kind == "csv":
        ids, coords = read_points_csv(spec.path)
        if spec.rescale and len(coords):
            lo = coords.min(axis=0)
            span = coords.max(axis=0) - lo
            if (span == 0).any():
                raise ValueError("cannot rescale: degenerate extent on one axis")
            coords = (coords - lo) / span
            coords = np.column_stack(
                (
                    space.min_x + coords[:, 0] * space.width,
                    space.min_y + coords[:, 1] * space.height,
                )
            )
        elif len(coords) and not space.contains_many(coords).all():
            bad = int(np.flatnonzero(~space.contains_many(coords))[0])
            raise ValueError(
                f"point id {int(ids[bad])} lies outside the data space "
                "(pass rescale to normalize)"
            )
        return ids, coords

    rng = np.random.default_rng(spec.seed)
    n = spec.n
    ids = np.arange(n, dtype=np.int64)
    if spec.kind == "uniform":
        xs = rng.uniform(space.min_x, space.max_x, n)
        ys = rng.uniform(space.min_y, space.max_y, n)
        return ids, np.column_stack((xs, ys))

    # zipf: rank the lattice cells by a seeded shuffle, weight by rank^-s,
    # then place points uniformly inside their drawn cell
    cells = ZIPF_GRID * ZIPF_GRID
    ranks = rng.permutation(cells) + 1
    weights = ranks.astype(float) ** (-spec.zipf_exponent)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    chosen = np.searchsorted(cdf, rng.random(n), side="right")
    row, col = chosen // ZIPF_GRID, chosen % ZIPF_GRID
    cw = space.width / ZIPF_GRID
    ch = space.height / ZIPF_GRID
    xs = space.min_x + (col + rng.random(n)) * cw
    ys = space.min_y + (row + rng.random(n)) * ch
    return ids, np.column_stack((xs, ys))


@dataclass(frozen=True)
class TrajectorySpec:
    """Random-walk polylines: uniform heading and segment length, reflected
    at the data-space borders (the wall contact point becomes a vertex, so
    segment lengths are preserved exactly)."""

    count: int = 20
    total_length: float = 5000.0
    seg_min: float = 1.0
    seg_max: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not (0 < self.seg_min <= self.seg_max):
            raise ValueError("need 0 < seg_min <= seg_max")
        if self.total_length <= 0:
            raise ValueError("total_length must be positive")


def _reflect_walk(x: float, y: float, dx: float, dy: float, space: Rect):
    """Advance by (dx, dy) with mirror reflection; yields the visited vertices."""
    out = []
    for _ in range(16):  # a <=10-unit step cannot fold more than a few times
        nx, ny = x + dx, y + dy
        t_hit = 1.0
        axis = None
        if dx > 0 and nx > space.max_x:
            t = (space.max_x - x) / dx
            if t < t_hit:
                t_hit, axis = t, "x"
        if dx < 0 and nx < space.min_x:
            t = (space.min_x - x) / dx
            if t < t_hit:
                t_hit, axis = t, "x"
        if dy > 0 and ny > space.max_y:
            t = (space.max_y - y) / dy
            if t < t_hit:
                t_hit, axis = t, "y"
        if dy < 0 and ny < space.min_y:
            t = (space.min_y - y) / dy
            if t < t_hit:
                t_hit, axis = t, "y"
        if axis is None:
            out.append((nx, ny))
            return out
        # land exactly on the wall: the product form can round a few ulp past
        # the border, and downstream placement requires positions in-space
        x = min(max(x + t_hit * dx, space.min_x), space.max_x)
        y = min(max(y + t_hit * dy, space.min_y), space.max_y)
        out.append((x, y))
        rest = 1.0 - t_hit
        dx, dy = dx * rest, dy * rest
        if axis == "x":
            dx = -dx
        else:
            dy = -dy
    out.append((min(max(x, space.min_x), space.max_x), min(max(y, space.min_y), space.max_y)))
    return out


def gen_trajectories(spec: TrajectorySpec, space: Rect = DATA_SPACE) -> list[np.ndarray]:
    """Generate ``spec.count`` polylines as (m_i, 2) vertex arrays."""
    rng = np.random.default_rng(spec.seed)
    trajs = []
    for _ in range(spec.count):
        x = rng.uniform(space.min_x, space.max_x)
        y = rng.uniform(space.min_y, space.max_y)
        vertices = [(x, y)]
        acc = 0.0
        while acc < spec.total_length:
            seg = rng.uniform(spec.seg_min, spec.seg_max)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            pieces = _reflect_walk(x, y, seg * math.cos(theta), seg * math.sin(theta), space)
            vertices.extend(pieces)
            x, y = pieces[-1]
            acc += seg
        trajs.append(np.array(vertices))
    return trajs


def sample_schedule(traj: np.ndarray, step: float = 1.0):
    """Client update schedule: every vertex plus ``step``-unit arc positions.

    Returns (s, x, y): arc-length offsets (sorted, deduplicated) and the
    interpolated positions along the polyline.
    """
    seg = np.hypot(np.diff(traj[:, 0]), np.diff(traj[:, 1]))
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = float(cum[-1])
    s = np.unique(np.concatenate((np.arange(0.0, total, step), cum)))
    return s, np.interp(s, cum, traj[:, 0]), np.interp(s, cum, traj[:, 1])


@dataclass
class ExperimentRecord:
    """One results row: the sweep cell and its aggregate metrics.

    Aggregates are means of per-run totals over trajectories x repeats,
    except the audit fields, which are summed counts.  elapsed_s is wall
    clock and deliberately excluded from CSV output by default.
    """

    area_pct: float
    ratio: float
    cl: float
    cl_r: float
    k: int
    k_r: int
    delta: float
    attack: str
    dataset: str
    trajectories: int
    repeats: int
    frequency: float
    trajectory_area_pct: float
    answer_size: float
    page_ios: float
    audit_checks: int
    audit_violations: int
    elapsed_s: float


@dataclass
class RunResult:
    record: ExperimentRecord
    view: AdversaryView
    events: list[RequestEvent]


def view_from_events(
    events, cl: float, k: int, space: Rect, max_speed: float | None
) -> AdversaryView:
    return AdversaryView(
        observations=tuple(Observation(e.rect, e.known, e.t) for e in events),
        cl=cl,
        k=k,
        data_space=space,
        max_speed=max_speed,
    )


def _as_index(data, space: Rect):
    if isinstance(data, Index):
        return data, None
    if isinstance(data, tuple) and len(data) == 2:
        ids, coords = data
        return build_index(coords, ids=ids, bounds=space), np.asarray(coords, float)
    coords = np.asarray(data, float)
    return build_index(coords, bounds=space), coords


def run_pmknn(
    data,
    trajectory: np.ndarray,
    profile: PrivacyProfile,
    attack: str = "overlap",
    seed=0,
    *,
    speed: float = DEFAULT_SPEED,
    max_speed: float | None = None,
    step: float = 1.0,
    audit_fraction: float = 0.0,
    audit_coords: np.ndarray | None = None,
    area_samples: int = 100_000,
    space: Rect = DATA_SPACE,
    chunk: int = 256,
) -> RunResult:
    """Walk one trajectory under the private scheduler and score it.

    ``data`` may be an Index, an (ids, coords) pair, or bare coordinates.
    The walk evaluates the client's exit predicate over sample chunks (the
    predicate function is shared with on_move, so the two walks agree
    request-for-request); positions sampled for the accuracy audit are
    checked against a full-scan oracle over the dataset coordinates
    (``audit_coords`` overrides the set dumped from the index).
    """
    index, coords = _as_index(data, space)
    if audit_fraction > 0.0:
        if audit_coords is not None:
            coords = np.asarray(audit_coords, float)
        if coords is None:
            coords = index.all_points()[1]
    max_speed = speed if max_speed is None else max_speed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    client_ss, audit_ss, metric_ss = ss.spawn(3)

    s, xs, ys = sample_schedule(trajectory, step)
    ts = s / speed
    n = len(s)
    server = Server(index)
    state = initiate(
        server,
        Point(float(xs[0]), float(ys[0])),
        profile,
        rng=np.random.default_rng(client_ss),
        data_space=space,
        t=float(ts[0]),
        use_movement_bound=attack in ("mmb", "combined"),
        max_speed=max_speed,
    )
    audit_mask = (
        np.random.default_rng(audit_ss).random(n) < audit_fraction
        if audit_fraction > 0.0
        else np.zeros(n, dtype=bool)
    )
    checks = violations = 0

    def audit_at(j: int) -> None:
        nonlocal checks, violations
        q = Point(float(xs[j]), float(ys[j]))
        _, dists = current_answers(state, q)
        d_true = np.hypot(coords[:, 0] - q.x, coords[:, 1] - q.y)
        k_r = profile.k_r
        d_star = float(np.partition(d_true, k_r - 1)[k_r - 1])
        checks += 1
        if dists[-1] > d_star / profile.cl_r + 1e-9:
            violations += 1

    if audit_mask[0]:
        audit_at(0)
    i = 1
    while i < n:
        j_end = min(i + chunk, n)
        mask = exit_mask(
            state.known,
            state.pts,
            profile.cl_r,
            profile.k_r,
            profile.delta,
            xs[i:j_end],
            ys[i:j_end],
        )
        hits = np.flatnonzero(mask)
        j_trigger = i + int(hits[0]) if len(hits) else j_end
        for j in np.flatnonzero(audit_mask[i:j_trigger]):
            audit_at(i + int(j))
        if j_trigger == j_end and not len(hits):
            i = j_end
            continue
        request_now(state, Point(float(xs[j_trigger]), float(ys[j_trigger])), float(ts[j_trigger]))
        if audit_mask[j_trigger]:
            audit_at(j_trigger)
        i = j_trigger + 1

    events = state.events
    view = view_from_events(
        events,
        profile.cl,
        profile.k,
        space,
        None if attack == "overlap" else max_speed,
    )
    record = ExperimentRecord(
        area_pct=profile.area_pct,
        ratio=profile.ratio,
        cl=profile.cl,
        cl_r=profile.cl_r,
        k=profile.k,
        k_r=profile.k_r,
        delta=profile.delta,
        attack=attack,
        dataset="",
        trajectories=1,
        repeats=1,
        frequency=float(len(events)),
        trajectory_area_pct=trajectory_area(view, samples=area_samples, seed=metric_ss),
        answer_size=float(sum(e.n_candidates for e in events)),
        page_ios=float(sum(e.io_reads for e in events)),
        audit_checks=checks,
        audit_violations=violations,
        elapsed_s=float(sum(e.elapsed_s for e in events)),
    )
    return RunResult(record=record, view=view, events=events)


def _exit_fraction(rect: Rect, x0: float, y0: float, x1: float, y1: float) -> float:
    """Fraction along p0 -> p1 where the path leaves the closed rectangle.

    p0 is assumed inside; the result is pulled a hair back inside so the
    crossing point still tests as contained under closed predicates.
    """
    dx, dy = x1 - x0, y1 - y0
    u = 1.0
    if dx > 0:
        u = min(u, (rect.max_x - x0) / dx)
    elif dx < 0:
        u = min(u, (rect.min_x - x0) / dx)
    if dy > 0:
        u = min(u, (rect.max_y - y0) / dy)
    elif dy < 0:
        u = min(u, (rect.min_y - y0) / dy)
    return max(0.0, u * (1.0 - 1e-12))


def run_naive(
    data,
    trajectory: np.ndarray,
    profile: PrivacyProfile,
    seed=0,
    *,
    speed: float = DEFAULT_SPEED,
    step: float = 1.0,
    space: Rect = DATA_SPACE,
) -> RunResult:
    """Boundary-triggered baseline scheduler (the premise overlap attacks rely on).

    A fresh rectangle is requested the instant the position reaches the
    border of the current one (interpolated between samples), so the send
    position lies in both the old and the new rectangle and consecutive
    rectangles always overlap — the behavior the overlap attack exploits.
    """
    index, _ = _as_index(data, space)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    client_ss, metric_ss = ss.spawn(2)
    s, xs, ys = sample_schedule(trajectory, step)
    ts = s / speed
    server = Server(index)

    state = ClientState(
        profile=profile,
        server=server,
        rng=np.random.default_rng(client_ss),
        data_space=space,
    )
    request_now(state, Point(float(xs[0]), float(ys[0])), float(ts[0]))
    for j in range(1, len(s)):
        # walk the straight sub-segment between consecutive samples, firing
        # a request at every rectangle-border crossing along it
        x0, y0, t0 = float(xs[j - 1]), float(ys[j - 1]), float(ts[j - 1])
        x1, y1, t1 = float(xs[j]), float(ys[j]), float(ts[j])
        for _ in range(64):  # each new rect is far wider than one step
            rect = state.rect
            if rect.min_x < x1 < rect.max_x and rect.min_y < y1 < rect.max_y:
                break
            u = _exit_fraction(rect, x0, y0, x1, y1)
            cx, cy = x0 + u * (x1 - x0), y0 + u * (y1 - y0)
            ct = t0 + u * (t1 - t0)
            if ct <= state.t_sent:  # keep event times strictly increasing
                ct = state.t_sent + 1e-9
            state.known = None  # no containment constraint for this scheduler
            request_now(state, Point(cx, cy), ct)
            x0, y0, t0 = cx, cy, ct
    events = state.events
    view = view_from_events(events, profile.cl, profile.k, space, speed)
    record = ExperimentRecord(
        area_pct=profile.area_pct,
        ratio=profile.ratio,
        cl=profile.cl,
        cl_r=profile.cl_r,
        k=profile.k,
        k_r=profile.k_r,
        delta=profile.delta,
        attack="overlap",
        dataset="",
        trajectories=1,
        repeats=1,
        frequency=float(len(events)),
        trajectory_area_pct=trajectory_area(view, samples=100_000, seed=metric_ss),
        answer_size=float(sum(e.n_candidates for e in events)),
        page_ios=float(sum(e.io_reads for e in events)),
        audit_checks=0,
        audit_violations=0,
        elapsed_s=float(sum(e.elapsed_s for e in events)),
    )
    return RunResult(record=record, view=view, events=events)


@dataclass(frozen=True)
class SweepConfig:
    """Cartesian sweep: list-valued profile axes x attack modes.

    Every (cl, cl_r, k, k_r) combination in the product must be a valid
    profile; validation rejects the whole config otherwise.
    """

    data: DataSpec = field(default_factory=DataSpec)
    traj: TrajectorySpec = field(default_factory=TrajectorySpec)
    areas: tuple = (0.005,)
    ratios: tuple = (1.0,)
    cls: tuple = (1.0,)
    cl_rs: tuple = (1.0,)
    ks: tuple = (1,)
    k_rs: tuple = (1,)
    deltas: tuple = (10.0,)
    attacks: tuple = ("overlap",)
    repeats: int = 25
    seed: int = 0
    speed: float = DEFAULT_SPEED
    max_speed: float | None = None
    step: float = 1.0
    audit_fraction: float = 0.0
    area_samples: int = 100_000
    threads: int = 1
    timing: bool = False

    def cells(self):
        return list(
            product(
                self.areas,
                self.ratios,
                self.cls,
                self.cl_rs,
                self.ks,
                self.k_rs,
                self.deltas,
                self.attacks,
            )
        )

    def validate(self) -> list[str]:
        """All problems at once, empty when runnable."""
        errors = []
        import warnings as _warnings

        for cell in self.cells():
            area, ratio, cl, cl_r, k, k_r, delta, attack = cell
            if attack not in ("overlap", "mmb", "combined"):
                errors.append(f"unknown attack mode {attack!r}")
                continue
            try:
                with _warnings.catch_warnings():
                    _warnings.simplefilter("ignore")
                    PrivacyProfile(
                        cl=cl, cl_r=cl_r, k=k, k_r=k_r,
                        delta=delta, area_pct=area, ratio=ratio,
                    )
            except (ValueError, TypeError) as exc:
                errors.append(f"invalid cell {cell}: {exc}")
        if self.repeats < 1:
            errors.append("repeats must be >= 1")
        if self.threads < 1:
            errors.append("threads must be >= 1")
        if not (0.0 <= self.audit_fraction <= 1.0):
            errors.append("audit_fraction must be in [0, 1]")
        return sorted(set(errors))


def sweep(config: SweepConfig, sink=None) -> list[ExperimentRecord]:
    """Run the full Cartesian sweep and return one record per cell.

    ``sink(cell_index, traj_index, repeat, result)`` is called for every
    run when provided (acceptance checks consume the raw views/events this
    way).  Execution order and aggregation order are fixed regardless of
    thread count, so output is deterministic.
    """
    errors = config.validate()
    if errors:
        raise ValueError("invalid sweep config: " + "; ".join(errors))
    ids, coords = gen_data(config.data)
    index = build_index(coords, ids=ids, bounds=DATA_SPACE)
    trajs = gen_trajectories(config.traj)
    cells = config.cells()

    tasks = [
        (ci, ti, rep)
        for ci in range(len(cells))
        for ti in range(len(trajs))
        for rep in range(config.repeats)
    ]

    def one(task):
        ci, ti, rep = task
        area, ratio, cl, cl_r, k, k_r, delta, attack = cells[ci]
        import warnings as _warnings

        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore", UserWarning)
            prof = PrivacyProfile(
                cl=cl, cl_r=cl_r, k=k, k_r=k_r,
                delta=delta, area_pct=area, ratio=ratio,
            )
        return run_pmknn(
            index,
            trajs[ti],
            prof,
            attack=attack,
            seed=np.random.SeedSequence((config.seed, ci, ti, rep)),
            speed=config.speed,
            max_speed=config.max_speed,
            step=config.step,
            audit_fraction=config.audit_fraction,
            audit_coords=coords,
            area_samples=config.area_samples,
        )

    if config.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]

    records = []
    per_cell = len(trajs) * config.repeats
    for ci, cell in enumerate(cells):
        area, ratio, cl, cl_r, k, k_r, delta, attack = cell
        slice_ = results[ci * per_cell : (ci + 1) * per_cell]
        if sink is not None:
            for offset, res in enumerate(slice_):
                sink(ci, offset // config.repeats, offset % config.repeats, res)
        recs = [r.record for r in slice_]
        records.append(
            ExperimentRecord(
                area_pct=area,
                ratio=ratio,
                cl=cl,
                cl_r=cl_r,
                k=k,
                k_r=k_r,
                delta=delta,
                attack=attack,
                dataset=config.data.label,
                trajectories=len(trajs),
                repeats=config.repeats,
                frequency=float(np.mean([r.frequency for r in recs])) if recs else 0.0,
                trajectory_area_pct=float(np.mean([r.trajectory_area_pct for r in recs])) if recs else 0.0,
                answer_size=float(np.mean([r.answer_size for r in recs])) if recs else 0.0,
                page_ios=float(np.mean([r.page_ios for r in recs])) if recs else 0.0,
                audit_checks=int(sum(r.audit_checks for r in recs)),
                audit_violations=int(sum(r.audit_violations for r in recs)),
                elapsed_s=float(sum(r.elapsed_s for r in recs)),
            )
        )
    return records


# ---------------------------------------------------------------------------
# CSV formats.  All of them are plain comma-separated with a header line;
# the results format carries a schema marker comment so downstream tooling
# can detect version drift.

POINT_COLUMNS = "id,x,y"
TRAJ_COLUMNS = "traj_id,seq,x,y"
RESULT_COLUMNS = (
    "area_pct,ratio,cl,cl_r,k,k_r,delta,attack,dataset,trajectories,repeats,"
    "frequency,trajectory_area_pct,answer_size,page_ios,"
    "audit_checks,audit_violations,elapsed_s"
)
RESULT_SCHEMA = "# schema=1"


def _fmt(v: float) -> str:
    return repr(float(v))


def write_points_csv(path, ids, coords) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(POINT_COLUMNS + "\n")
        for i, (x, y) in zip(ids, coords):
            f.write(f"{int(i)},{_fmt(x)},{_fmt(y)}\n")


def read_points_csv(path) -> tuple[np.ndarray, np.ndarray]:
    ids, xs, ys = [], [], []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != POINT_COLUMNS:
            raise ValueError(f"{path}: expected header '{POINT_COLUMNS}', got {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) != 3:
                    raise ValueError("expected 3 fields")
                ids.append(int(parts[0]))
                xs.append(float(parts[1]))
                ys.append(float(parts[2]))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad point row ({exc})") from None
    id_arr = np.array(ids, dtype=np.int64)
    if len(np.unique(id_arr)) != len(id_arr):
        raise ValueError(f"{path}: duplicate point ids")
    return id_arr, np.column_stack((xs, ys)) if ids else np.empty((0, 2))


def write_trajectories_csv(path, trajs) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(TRAJ_COLUMNS + "\n")
        for tid, traj in enumerate(trajs):
            for seq, (x, y) in enumerate(traj):
                f.write(f"{tid},{seq},{_fmt(x)},{_fmt(y)}\n")


def read_trajectories_csv(path) -> list[np.ndarray]:
    rows: dict[int, list] = {}
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != TRAJ_COLUMNS:
            raise ValueError(f"{path}: expected header '{TRAJ_COLUMNS}', got {header!r}")
        for lineno, line in enumerate(f, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                if len(parts) != 4:
                    raise ValueError("expected 4 fields")
                tid, seq = int(parts[0]), int(parts[1])
                x, y = float(parts[2]), float(parts[3])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad trajectory row ({exc})") from None
            rows.setdefault(tid, []).append((seq, x, y))
    trajs = []
    for tid in sorted(rows):
        pts = sorted(rows[tid])
        if [p[0] for p in pts] != list(range(len(pts))):
            raise ValueError(f"{path}: trajectory {tid} has gaps in seq")
        trajs.append(np.array([(x, y) for _, x, y in pts]))
    return trajs


def write_results_csv(records, path, timing: bool = False) -> None:
    """Row-buffered write: the file is a valid CSV prefix after every row."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(RESULT_SCHEMA + "\n")
        f.write(RESULT_COLUMNS + "\n")
        f.flush()
        for r in records:
            elapsed = _fmt(r.elapsed_s) if timing else ""
            f.write(
                ",".join(
                    [
                        _fmt(r.area_pct),
                        _fmt(r.ratio),
                        _fmt(r.cl),
                        _fmt(r.cl_r),
                        str(int(r.k)),
                        str(int(r.k_r)),
                        _fmt(r.delta),
                        r.attack,
                        r.dataset,
                        str(int(r.trajectories)),
                        str(int(r.repeats)),
                        _fmt(r.frequency),
                        _fmt(r.trajectory_area_pct),
                        _fmt(r.answer_size),
                        _fmt(r.page_ios),
                        str(int(r.audit_checks)),
                        str(int(r.audit_violations)),
                        elapsed,
                    ]
                )
                + "\n"
            )
            f.flush()


def read_results_csv(path) -> list[ExperimentRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as f:
        schema = f.readline().strip()
        if schema != RESULT_SCHEMA:
            raise ValueError(f"{path}: missing schema marker {RESULT_SCHEMA!r}")
        header = f.readline().strip()
        if header != RESULT_COLUMNS:
            raise ValueError(f"{path}: unexpected results header")
        for lineno, line in enumerate(f, start=3):
            line = line.rstrip("\n")
            if not line:
                continue
            p = line.split(",")
            if len(p) != 18:
                raise ValueError(f"{path}:{lineno}: expected 18 fields")
            records.append(
                ExperimentRecord(
                    area_pct=float(p[0]),
                    ratio=float(p[1]),
                    cl=float(p[2]),
                    cl_r=float(p[3]),
                    k=int(p[4]),
                    k_r=int(p[5]),
                    delta=float(p[6]),
                    attack=p[7],
                    dataset=p[8],
                    trajectories=int(p[9]),
                    repeats=int(p[10]),
                    frequency=float(p[11]),
                    trajectory_area_pct=float(p[12]),
                    answer_size=float(p[13]),
                    page_ios=float(p[14]),
                    audit_checks=int(p[15]),
                    audit_violations=int(p[16]),
                    elapsed_s=float(p[17]) if p[17] else 0.0,
                )
            )
    return records
