"""Server-side candidate search for obfuscated moving kNN queries.

The server never sees the client's position, only an obfuscation rectangle
and the pair (cl, k).  It must return a candidate set P and a disk (the
known region) such that, for *every* possible position inside the
rectangle, the k nearest members of P carry confidence >= cl.  ``clappinq``
does this with a single best-first traversal of the R-tree centred on the
rectangle's center:

  1. grow the search radius until each rectangle corner has k candidates at
     confidence cl (corner counts);
  2. from the corner candidate sets, bound the radius that also covers the
     four edge midpoints (``update_status`` returns that target radius);
  3. keep consuming the stream until the frontier passes the target.

Checking corners and edge midpoints suffices: confidence along the segment
between a corner and an adjacent edge midpoint is bounded below by the
confidence at its endpoints, and likewise along any segment from the center
to the boundary, so the guarantee extends from those eight points to the
whole rectangle.

``naive_baseline`` is the comparison point: independent kNN queries on a
grid of probe positions, one stream each.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .geometry import Circle, ConfidenceParams, Point, Rect, as_points_array, dist
from .rtree import Index

__all__ = [
    "SearchStatus",
    "QueryRequest",
    "ResponseStats",
    "CandidateResponse",
    "update_status",
    "clappinq",
    "naive_baseline",
    "brute_force_knn",
    "Server",
]


@dataclass(frozen=True)
class SearchStatus:
    """State of the known-region search.

    Encoded the way the search loop uses it: 0 while still hunting for
    corner coverage ("searching"), a positive target radius once coverage is
    reached but the known region must still grow, -1 when the current radius
    already suffices ("done").
    """

    value: float

    @classmethod
    def searching(cls) -> "SearchStatus":
        return cls(0.0)

    @classmethod
    def target(cls, radius: float) -> "SearchStatus":
        if radius <= 0:
            raise ValueError("target radius must be positive")
        return cls(radius)

    @classmethod
    def done(cls) -> "SearchStatus":
        return cls(-1.0)

    @property
    def is_searching(self) -> bool:
        return self.value == 0.0

    @property
    def is_done(self) -> bool:
        return self.value < 0.0

    @property
    def target_radius(self) -> float:
        if self.value <= 0.0:
            raise ValueError("status carries no target radius")
        return self.value


@dataclass(frozen=True)
class QueryRequest:
    """What the client actually sends: a rectangle and the (cl, k) pair."""

    rect: Rect
    params: ConfidenceParams


@dataclass
class ResponseStats:
    io_reads: int = 0
    elapsed_s: float = 0.0
    exhausted: bool = False  # stream ran dry before corner coverage


@dataclass
class CandidateResponse:
    """Answer to one request: candidate objects plus the known region.

    Every data object inside ``known_region`` (closed) is present in the
    candidate arrays — that completeness is what lets the client answer
    moving queries locally until it leaves the guaranteed region.
    """

    request: QueryRequest
    known_region: Circle
    ids: np.ndarray  # (m,) int64, in emission (distance) order
    points: np.ndarray  # (m, 2)
    stats: ResponseStats = field(default_factory=ResponseStats)

    @property
    def objects(self) -> list[tuple[int, Point]]:
        return [
            (int(i), Point(float(x), float(y)))
            for i, (x, y) in zip(self.ids, self.points)
        ]

    def __len__(self) -> int:
        return len(self.ids)


def _corner_arrays(rect: Rect):
    corners = rect.corners()
    cx = np.array([c.x for c in corners])
    cy = np.array([c.y for c in corners])
    return cx, cy


def update_status(rect: Rect, params: ConfidenceParams, objects, r: float) -> SearchStatus:
    """Decide whether radius ``r`` with candidates ``objects`` covers the rect.

    Returns searching() while some corner still lacks k candidates at
    confidence cl.  Once all corners qualify, bounds the k-th candidate
    distance seen from each edge midpoint through its two corner candidate
    sets (d_max) against the slack of the largest inscribed midpoint disk
    (d_safe = r - half the longer side): if cl * d_max exceeds d_safe the
    search must continue to radius r + cl * d_max - d_safe, otherwise it can
    stop at r.
    """
    pts = as_points_array(objects)
    o = rect.center
    cx, cy = _corner_arrays(rect)
    d_oc = np.hypot(cx - o.x, cy - o.y)
    cl, k = params.cl, params.k

    if len(pts) == 0:
        return SearchStatus.searching()

    # corner c covers object p at confidence cl iff r >= cl*dist(c,p) + dist(o,c)
    thr = cl * np.hypot(pts[:, 0, None] - cx[None, :], pts[:, 1, None] - cy[None, :]) + d_oc[None, :]
    qual = thr <= r
    if int(qual.sum(axis=0).min()) < k:
        return SearchStatus.searching()

    mids = rect.middles()
    d_max = 0.0
    for e in range(4):
        m = mids[e]
        for c in (e, (e + 1) % 4):
            sel = pts[qual[:, c]]
            dm = np.hypot(sel[:, 0] - m.x, sel[:, 1] - m.y)
            dk = float(np.partition(dm, k - 1)[k - 1]) if k > 1 else float(dm.min())
            if dk > d_max:
                d_max = dk
    d_safe = r - 0.5 * max(rect.width, rect.height)
    if cl * d_max > d_safe:
        return SearchStatus.target(r + cl * d_max - d_safe)
    return SearchStatus.done()


def clappinq(index: Index, req: QueryRequest) -> CandidateResponse:
    """Single-traversal candidate search for an obfuscation rectangle.

    One best-first stream from the rectangle center; corner coverage counts
    are maintained incrementally (each candidate contributes a fixed
    qualification threshold per corner, compared against the growing search
    radius), and the midpoint bound is evaluated once, at the transition out
    of the searching state — which is exactly when ``update_status`` would
    first leave it.

    The triggering stream entry beyond the target radius is never read into
    the answer; objects at distance exactly equal to the final radius are
    all included, so ``range_count(known_region) == len(response)`` holds
    even under distance ties.
    """
    t0 = time.perf_counter()
    rect = req.rect
    cl, k = req.params.cl, req.params.k
    if k > index.size:
        raise ValueError(f"k={k} exceeds dataset size {index.size}")

    o = rect.center
    cx, cy = _corner_arrays(rect)
    d_oc = [math.hypot(cx[t] - o.x, cy[t] - o.y) for t in range(4)]
    half_side = 0.5 * max(rect.width, rect.height)

    stream = index.nn_stream(o)
    ids: list[int] = []
    xs: list[float] = []
    ys: list[float] = []
    thr_store: list[list[float]] = [[], [], [], []]
    thr_heaps: list[list[float]] = [[], [], [], []]
    counts = [0, 0, 0, 0]
    searching = True
    exhausted = False
    limit = math.inf
    r = 0.0

    while True:
        hit = stream.next_within(limit)
        if hit is None:
            if searching:
                exhausted = True
            break
        oid, x, y, d = hit
        ids.append(oid)
        xs.append(x)
        ys.append(y)
        r = d
        if not searching:
            continue
        for t in range(4):
            thr = cl * math.hypot(x - cx[t], y - cy[t]) + d_oc[t]
            thr_store[t].append(thr)
            heapq.heappush(thr_heaps[t], thr)
        for t in range(4):
            h = thr_heaps[t]
            while h and h[0] <= r:
                heapq.heappop(h)
                counts[t] += 1
        if min(counts) < k:
            continue
        # corner coverage reached: bound the midpoint coverage radius
        searching = False
        pts = np.column_stack((np.array(xs), np.array(ys)))
        mids = rect.middles()
        d_max = 0.0
        for e in range(4):
            m = mids[e]
            for c in (e, (e + 1) % 4):
                sel = pts[np.asarray(thr_store[c]) <= r]
                dm = np.hypot(sel[:, 0] - m.x, sel[:, 1] - m.y)
                dk = float(np.partition(dm, k - 1)[k - 1]) if k > 1 else float(dm.min())
                if dk > d_max:
                    d_max = dk
        d_safe = r - half_side
        if cl * d_max > d_safe:
            limit = r + cl * d_max - d_safe
        else:
            limit = r  # already covered; keep draining distance ties at r

    if exhausted:
        # Dataset ran out before corner coverage: fall back to a disk wide
        # enough to cover both the whole data space and every point the
        # rectangle could need (all objects are in the answer anyway).
        b = index.bounds
        far = max(
            math.hypot(xc - o.x, yc - o.y)
            for xc in (b.min_x, b.max_x)
            for yc in (b.min_y, b.max_y)
        )
        diag = math.hypot(rect.width, rect.height)
        radius = max(far, r) + diag
    else:
        radius = limit

    stats = ResponseStats(
        io_reads=stream.io_reads,
        elapsed_s=time.perf_counter() - t0,
        exhausted=exhausted,
    )
    return CandidateResponse(
        request=req,
        known_region=Circle(o, radius),
        ids=np.array(ids, dtype=np.int64),
        points=np.column_stack((np.array(xs), np.array(ys))) if ids else np.empty((0, 2)),
        stats=stats,
    )


def naive_baseline(index: Index, req: QueryRequest, grid: int = 20) -> CandidateResponse:
    """Per-point baseline: an independent kNN query at each grid position.

    Probes a grid x grid lattice over the rectangle (corners included) with
    one fresh best-first stream per position and unions the k nearest
    objects of each.  The returned disk merely covers the union — unlike a
    clappinq known region it carries no completeness guarantee, so this
    response only supports comparisons, not a moving client.
    """
    if grid < 1:
        raise ValueError("grid must be >= 1")
    t0 = time.perf_counter()
    rect = req.rect
    k = req.params.k
    if k > index.size:
        raise ValueError(f"k={k} exceeds dataset size {index.size}")
    if grid == 1:
        gx = np.array([(rect.min_x + rect.max_x) / 2.0])
        gy = np.array([(rect.min_y + rect.max_y) / 2.0])
    else:
        gx = np.linspace(rect.min_x, rect.max_x, grid)
        gy = np.linspace(rect.min_y, rect.max_y, grid)
    found: dict[int, tuple[float, float]] = {}
    io_total = 0
    for x in gx:
        for y in gy:
            stream = index.nn_stream(Point(float(x), float(y)))
            for _ in range(k):
                hit = stream.next_within(math.inf)
                if hit is None:
                    break
                oid, ox, oy, _ = hit
                found[oid] = (ox, oy)
            io_total += stream.io_reads
    o = rect.center
    ids = np.array(sorted(found), dtype=np.int64)
    pts = np.array([found[i] for i in ids], dtype=float) if len(ids) else np.empty((0, 2))
    radius = float(np.hypot(pts[:, 0] - o.x, pts[:, 1] - o.y).max()) if len(ids) else 0.0
    stats = ResponseStats(io_reads=io_total, elapsed_s=time.perf_counter() - t0)
    return CandidateResponse(
        request=req,
        known_region=Circle(o, radius),
        ids=ids,
        points=pts,
        stats=stats,
    )


def brute_force_knn(objects, q: Point, k: int, ids=None):
    """Reference oracle: exact k nearest by full scan.

    Returns (ids, dists) sorted by (distance, id).  ``objects`` is anything
    ``as_points_array`` accepts.
    """
    pts = as_points_array(objects)
    n = len(pts)
    if not 1 <= k <= n:
        raise ValueError("k out of range")
    id_arr = np.arange(n, dtype=np.int64) if ids is None else np.asarray(ids, dtype=np.int64)
    d = np.hypot(pts[:, 0] - q.x, pts[:, 1] - q.y)
    order = np.lexsort((id_arr, d))[:k]
    return id_arr[order], d[order]


class Server:
    """In-process stand-in for the location service provider."""

    def __init__(self, index: Index):
        self.index = index

    def query(self, rect: Rect, cl: float, k: int) -> CandidateResponse:
        return clappinq(self.index, QueryRequest(rect, ConfidenceParams(cl, k)))
