"""Client-side agent for private moving kNN queries.

The client never reveals its position.  It sends an obfuscation rectangle,
receives a candidate set P plus the known region C(o, r), and then answers
its own moving kNN query locally — the k_r nearest members of P — while it
can still prove the accuracy bound.  A new (differently parameterized)
rectangle is sent only when

  * the requested confidence can no longer be met from P:
        r <= cl_r * dist(p_k, q) + dist(o, q)
    with p_k the k_r-th nearest candidate, or
  * the position comes within ``delta`` of the known-region boundary.

Privacy comes from requesting more than needed: the server sees (cl, k),
the user actually consumes (cl_r, k_r) with cl_r <= cl and k_r <= k, so an
observer cannot tell where inside the guaranteed region the requests were
triggered.  Consecutive rectangles therefore need not overlap at the send
position, which is what defeats overlap-based trajectory attacks.

Distance unit: 1 unit = 63.25 m (a 10^4 x 10^4 grid ~ 400 sq miles); speeds
are units/second.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .geometry import Circle, Point, Rect, RoundedRect

__all__ = [
    "UNIT_METERS",
    "DEFAULT_SPEED",
    "PrivacyProfile",
    "GeneratedRect",
    "generate_rectangle",
    "movement_bound",
    "RequestEvent",
    "ClientState",
    "MoveResult",
    "initiate",
    "on_move",
    "current_answers",
    "exit_mask",
    "request_now",
]

UNIT_METERS = 63.25
DEFAULT_SPEED = 60_000.0 / 3600.0 / UNIT_METERS  # 60 km/h in units per second
DEFAULT_DELTA = 10.0


@dataclass(frozen=True)
class PrivacyProfile:
    """What the user wants (cl_r, k_r) versus what the server is told (cl, k).

    delta is the boundary-proximity trigger in distance units; area_pct the
    obfuscation rectangle area as a percentage of the data space; ratio the
    requested side ratio (>= 1, orientation randomized).
    """

    cl: float
    cl_r: float
    k: int
    k_r: int
    delta: float = DEFAULT_DELTA
    area_pct: float = 0.005
    ratio: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.cl_r <= self.cl <= 1.0):
            raise ValueError("need 0 < cl_r <= cl <= 1")
        if not (1 <= self.k_r <= self.k):
            raise ValueError("need 1 <= k_r <= k")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.area_pct <= 0:
            raise ValueError("rectangle area must be positive")
        if self.ratio < 1.0:
            raise ValueError("side ratio is normalized to >= 1")
        if self.cl == self.cl_r and self.k == self.k_r:
            warnings.warn(
                "profile requests exactly what it consumes (cl == cl_r, k == k_r); "
                "request times become predictable and trajectory privacy degrades",
                UserWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class GeneratedRect:
    """Output of generate_rectangle; area may be below the request."""

    rect: Rect
    degraded: bool
    area: float
    ratio: float


def movement_bound(base: Rect, max_speed: float, elapsed: float) -> RoundedRect:
    """Region reachable from ``base`` within ``elapsed`` at ``max_speed``."""
    if max_speed <= 0:
        raise ValueError("max_speed must be positive")
    if elapsed < 0:
        raise ValueError("elapsed time must be >= 0")
    return RoundedRect(base, max_speed * elapsed)


_AREA_STEPS = tuple(0.8**i for i in range(11)) + (0.1,)  # 1.0 .. ~0.107, then the floor
_RATIO_MULTS = (1.0, 2.0, 0.5, 4.0, 0.25, 8.0, 16.0, 32.0)
# fallback q offsets inside the rectangle: corners, then edge midpoints, center
_ANCHORS = (
    (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0),
    (0.5, 0.0), (0.0, 0.5), (1.0, 0.5), (0.5, 1.0), (0.5, 0.5),
)


def _rect_fits(rect: Rect, regions: Sequence) -> bool:
    # all containers are convex, so corner membership decides
    return all(
        all(reg.contains_xy(c.x, c.y) for c in rect.corners()) for reg in regions
    )


def _rect_covering(x0: float, y0: float, w: float, h: float, q: Point) -> Rect:
    # (q.x - w) + w can round an ulp short of q.x, and the sent rectangle
    # must contain the sender; pull the far edges onto q when that happens
    return Rect(min(x0, q.x), min(y0, q.y), max(x0 + w, q.x), max(y0 + h, q.y))


def generate_rectangle(
    q: Point,
    area: float,
    ratio: float,
    containers: Sequence = (),
    rng: np.random.Generator | None = None,
    tries: int = 24,
) -> GeneratedRect:
    """Place a rectangle of the requested area around ``q`` inside containers.

    The offset of q inside the rectangle is uniform over the feasible
    placements.  If no rectangle of the requested shape fits, the side ratio
    is adjusted first (both orientations, progressively further from the
    request), then the area is shrunk as a last resort; anything below 10%
    of the requested area raises "privacy constraints unsatisfiable".

    Containers must be convex and expose contains_xy (Rect, Circle,
    RoundedRect); q itself must be inside all of them.
    """
    if area <= 0:
        raise ValueError("area must be positive")
    if ratio < 1.0:
        raise ValueError("side ratio is normalized to >= 1")
    rng = np.random.default_rng() if rng is None else rng
    if not all(reg.contains_xy(q.x, q.y) for reg in containers):
        raise ValueError("privacy constraints unsatisfiable: position outside container")

    boxes = [reg for reg in containers if isinstance(reg, Rect)]
    others = [reg for reg in containers if not isinstance(reg, Rect)]

    ratios = []
    for mult in _RATIO_MULTS:
        cand = max(1.0, ratio * mult)
        if cand not in ratios:
            ratios.append(cand)

    for step in _AREA_STEPS:
        a = area * step
        for cand in ratios:
            long_side = math.sqrt(a * cand)
            short_side = math.sqrt(a / cand)
            shapes = [(long_side, short_side), (short_side, long_side)]
            if rng.random() < 0.5:
                shapes.reverse()
            for w, h in shapes:
                # feasible min-corner window from the box containers and q
                lo_x, hi_x = q.x - w, q.x
                lo_y, hi_y = q.y - h, q.y
                for b in boxes:
                    lo_x = max(lo_x, b.min_x)
                    hi_x = min(hi_x, b.max_x - w)
                    lo_y = max(lo_y, b.min_y)
                    hi_y = min(hi_y, b.max_y - h)
                if lo_x > hi_x or lo_y > hi_y:
                    continue
                for _ in range(tries):
                    x0 = rng.uniform(lo_x, hi_x) if hi_x > lo_x else lo_x
                    y0 = rng.uniform(lo_y, hi_y) if hi_y > lo_y else lo_y
                    rect = _rect_covering(x0, y0, w, h, q)
                    if _rect_fits(rect, others):
                        return GeneratedRect(
                            rect=rect,
                            degraded=step < 1.0,
                            area=a,
                            ratio=max(w, h) / min(w, h) if min(w, h) > 0 else math.inf,
                        )
                # Rejection sampling cannot hit a measure-zero placement set,
                # which is exactly the situation when q sits on a container
                # boundary (e.g. traveling at max speed puts it on the
                # movement bound).  Fall back to anchored placements: q at a
                # corner, edge midpoint, or the center of the rectangle.
                for ax, ay in _ANCHORS:
                    x0 = min(max(q.x - ax * w, lo_x), hi_x)
                    y0 = min(max(q.y - ay * h, lo_y), hi_y)
                    rect = _rect_covering(x0, y0, w, h, q)
                    if _rect_fits(rect, others):
                        return GeneratedRect(
                            rect=rect,
                            degraded=step < 1.0,
                            area=a,
                            ratio=max(w, h) / min(w, h) if min(w, h) > 0 else math.inf,
                        )
    raise ValueError("privacy constraints unsatisfiable: no admissible rectangle")


@dataclass
class RequestEvent:
    """One server contact, as both the client and an observer would log it."""

    w: int  # request ordinal, 1-based
    t: float  # send time, seconds
    q: Point  # true position at send time (ground truth, never transmitted)
    rect: Rect
    known: Circle
    n_candidates: int
    io_reads: int
    elapsed_s: float
    degraded: bool
    exhausted: bool


@dataclass
class ClientState:
    """Everything the client holds between location updates."""

    profile: PrivacyProfile
    server: object  # anything with .query(rect, cl, k) -> CandidateResponse
    rng: np.random.Generator
    data_space: Rect
    use_movement_bound: bool = False
    max_speed: float = DEFAULT_SPEED
    w: int = 0
    rect: Rect | None = None
    t_sent: float = 0.0
    known: Circle | None = None
    ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    pts: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    events: list[RequestEvent] = field(default_factory=list)

    @property
    def o(self) -> Point:
        return self.known.center

    @property
    def r(self) -> float:
        return self.known.radius


class MoveResult(NamedTuple):
    ids: np.ndarray
    dists: np.ndarray
    requested: bool


def request_now(state: ClientState, q: Point, t: float) -> None:
    """Send a rectangle around q immediately, bypassing the trigger test."""
    prof = state.profile
    containers: list = [state.data_space]
    if state.known is not None:
        containers.append(state.known)
        if state.use_movement_bound:
            # hair of slack: straight-line travel at exactly max_speed puts q
            # on the bound, and float rounding must not reject it
            mb = movement_bound(state.rect, state.max_speed, t - state.t_sent)
            containers.append(RoundedRect(mb.base, mb.radius + 1e-7))
    area = prof.area_pct / 100.0 * state.data_space.area
    gen = generate_rectangle(q, area, prof.ratio, containers, state.rng)
    resp = state.server.query(gen.rect, prof.cl, prof.k)
    state.w += 1
    state.rect = gen.rect
    state.t_sent = t
    state.known = resp.known_region
    state.ids = resp.ids
    state.pts = resp.points
    state.events.append(
        RequestEvent(
            w=state.w,
            t=t,
            q=q,
            rect=gen.rect,
            known=resp.known_region,
            n_candidates=len(resp.ids),
            io_reads=resp.stats.io_reads,
            elapsed_s=resp.stats.elapsed_s,
            degraded=gen.degraded,
            exhausted=resp.stats.exhausted,
        )
    )


def initiate(
    server,
    q: Point,
    profile: PrivacyProfile,
    *,
    rng: np.random.Generator,
    data_space: Rect,
    t: float = 0.0,
    use_movement_bound: bool = False,
    max_speed: float = DEFAULT_SPEED,
) -> ClientState:
    """First contact: an unconstrained rectangle around the start position."""
    if not data_space.contains(q):
        raise ValueError("start position outside the data space")
    state = ClientState(
        profile=profile,
        server=server,
        rng=rng,
        data_space=data_space,
        use_movement_bound=use_movement_bound,
        max_speed=max_speed,
    )
    request_now(state, q, t)
    return state


def exit_mask(
    known: Circle,
    pts: np.ndarray,
    cl_r: float,
    k_r: int,
    delta: float,
    x: np.ndarray,
    y: np.ndarray,
) -> np.ndarray:
    """Vectorized request trigger over candidate positions.

    True where a new rectangle must be sent: either the k_r-th candidate no
    longer meets confidence cl_r, or the position is within delta of the
    known-region boundary.  Shared by on_move and the batched trajectory
    harness so both walk identically.
    """
    dq = np.hypot(x - known.center.x, y - known.center.y)
    dmat = np.hypot(x[:, None] - pts[None, :, 0], y[:, None] - pts[None, :, 1])
    if k_r == 1:
        dk = dmat.min(axis=1)
    else:
        dk = np.partition(dmat, k_r - 1, axis=1)[:, k_r - 1]
    return (known.radius <= cl_r * dk + dq) | (known.radius - dq <= delta)


def current_answers(state: ClientState, q: Point) -> tuple[np.ndarray, np.ndarray]:
    """The k_r nearest candidates from q, ties broken by id."""
    d = np.hypot(state.pts[:, 0] - q.x, state.pts[:, 1] - q.y)
    order = np.lexsort((state.ids, d))[: state.profile.k_r]
    return state.ids[order], d[order]


def on_move(state: ClientState, q: Point, t: float) -> MoveResult:
    """Location update: maybe contact the server, then answer locally.

    ``t`` is the update timestamp in seconds (movement bounds and adversary
    observations are time-based).  Returns the k_r current answers and
    whether a request was sent.
    """
    prof = state.profile
    need = bool(
        exit_mask(
            state.known,
            state.pts,
            prof.cl_r,
            prof.k_r,
            prof.delta,
            np.array([q.x]),
            np.array([q.y]),
        )[0]
    )
    if need:
        request_now(state, q, t)
    ids, dists = current_answers(state, q)
    return MoveResult(ids, dists, need)
