"""Planar primitives for location-obfuscated nearest-neighbor queries.

A mobile client hides its position inside an axis-aligned *obfuscation
rectangle*; the server answers with every object inside a disk centred on
that rectangle (the *known region*).  The accuracy guarantee attached to an
answer is its *confidence level*: 1 means the reported neighbor is provably
the true one, cl < 1 bounds the detour by a factor 1/cl.  This module holds
the point/rect/disk types and the confidence predicates; everything above
(index, server, client, attacks) is written against these.

Conventions: all point-in-region predicates are closed (boundary counts as
inside), distances are Euclidean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Point",
    "Rect",
    "Circle",
    "RoundedRect",
    "ConfidenceParams",
    "GcrQuery",
    "dist",
    "min_dist",
    "confidence_level",
    "in_gr",
    "in_gcr",
    "intersect_rects",
]


@dataclass(frozen=True)
class Point:
    """A location in the plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [min_x, max_x] x [min_y, max_y].

    Degenerate extents (zero width/height) are allowed; obfuscation
    rectangles produced by the client always have positive area, but the
    server algorithms are well defined down to a single point.
    """

    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        for v in (self.min_x, self.min_y, self.max_x, self.max_y):
            if not math.isfinite(v):
                raise ValueError("rectangle bounds must be finite")
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError("rectangle has negative extent")

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return Point((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)

    def corners(self) -> tuple[Point, Point, Point, Point]:
        """Corner points counter-clockwise from (min_x, min_y)."""
        return (
            Point(self.min_x, self.min_y),
            Point(self.max_x, self.min_y),
            Point(self.max_x, self.max_y),
            Point(self.min_x, self.max_y),
        )

    def middles(self) -> tuple[Point, Point, Point, Point]:
        """Edge midpoints, one per corner pair, in corner order.

        middles()[i] is the midpoint of the edge joining corners()[i] and
        corners()[(i + 1) % 4]; the server's search-status test works on
        these eight boundary points only.
        """
        cx = (self.min_x + self.max_x) / 2.0
        cy = (self.min_y + self.max_y) / 2.0
        return (
            Point(cx, self.min_y),
            Point(self.max_x, cy),
            Point(cx, self.max_y),
            Point(self.min_x, cy),
        )

    def contains(self, p: Point) -> bool:
        return self.contains_xy(p.x, p.y)

    def contains_xy(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y

    def contains_many(self, xy: np.ndarray) -> np.ndarray:
        """Vectorized closed containment for an (n, 2) coordinate array."""
        return (
            (xy[:, 0] >= self.min_x)
            & (xy[:, 0] <= self.max_x)
            & (xy[:, 1] >= self.min_y)
            & (xy[:, 1] <= self.max_y)
        )

    def contains_rect(self, other: "Rect") -> bool:
        return (
            other.min_x >= self.min_x
            and other.max_x <= self.max_x
            and other.min_y >= self.min_y
            and other.max_y <= self.max_y
        )


@dataclass(frozen=True)
class Circle:
    """Closed disk; the server's known region is one of these."""

    center: Point
    radius: float

    def __post_init__(self):
        if not math.isfinite(self.radius) or self.radius < 0:
            raise ValueError("circle radius must be finite and >= 0")

    def contains(self, p: Point) -> bool:
        return dist(self.center, p) <= self.radius

    def contains_xy(self, x: float, y: float) -> bool:
        return math.hypot(x - self.center.x, y - self.center.y) <= self.radius

    def contains_many(self, xy: np.ndarray) -> np.ndarray:
        d = np.hypot(xy[:, 0] - self.center.x, xy[:, 1] - self.center.y)
        return d <= self.radius

    def contains_rect(self, rect: Rect) -> bool:
        # a disk is convex, so corner containment suffices
        return all(self.contains(c) for c in rect.corners())


@dataclass(frozen=True)
class RoundedRect:
    """Minkowski expansion of a rectangle by a disk of given radius.

    Models a maximum movement bound: every location reachable from somewhere
    in ``base`` without exceeding speed * elapsed.  Membership is analytic
    (clamp to the rectangle, compare the residual distance), no polygon
    approximation involved.
    """

    base: Rect
    radius: float

    def __post_init__(self):
        if not math.isfinite(self.radius) or self.radius < 0:
            raise ValueError("expansion radius must be finite and >= 0")

    @property
    def area(self) -> float:
        b = self.base
        return b.area + 2.0 * (b.width + b.height) * self.radius + math.pi * self.radius**2

    def contains_xy(self, x: float, y: float) -> bool:
        return dist_to_rect_xy(x, y, self.base) <= self.radius

    def contains(self, p: Point) -> bool:
        return self.contains_xy(p.x, p.y)

    def contains_many(self, xy: np.ndarray) -> np.ndarray:
        return dist_to_rect_many(xy, self.base) <= self.radius

    def contains_rect(self, rect: Rect) -> bool:
        # Minkowski expansion of a convex set is convex
        return all(self.contains(c) for c in rect.corners())


def dist(a: Point, b: Point) -> float:
    """Euclidean distance between two points."""
    return math.hypot(a.x - b.x, a.y - b.y)


def dist_to_rect_xy(x: float, y: float, rect: Rect) -> float:
    dx = max(rect.min_x - x, 0.0, x - rect.max_x)
    dy = max(rect.min_y - y, 0.0, y - rect.max_y)
    return math.hypot(dx, dy)


def dist_to_rect_many(xy: np.ndarray, rect: Rect) -> np.ndarray:
    dx = np.maximum(np.maximum(rect.min_x - xy[:, 0], 0.0), xy[:, 0] - rect.max_x)
    dy = np.maximum(np.maximum(rect.min_y - xy[:, 1], 0.0), xy[:, 1] - rect.max_y)
    return np.hypot(dx, dy)


def min_dist(p: Point, rect: Rect) -> float:
    """Smallest distance from ``p`` to any point of ``rect`` (0 if inside).

    This is the R-tree pruning bound: no object stored under a node whose
    rectangle is ``rect`` can be closer to ``p`` than this.
    """
    return dist_to_rect_xy(p.x, p.y, rect)


def intersect_rects(a: Rect, b: Rect) -> Rect | None:
    """Intersection of two rectangles, or None when they are disjoint."""
    lo_x, hi_x = max(a.min_x, b.min_x), min(a.max_x, b.max_x)
    lo_y, hi_y = max(a.min_y, b.min_y), min(a.max_y, b.max_y)
    if lo_x > hi_x or lo_y > hi_y:
        return None
    return Rect(lo_x, lo_y, hi_x, hi_y)


@dataclass(frozen=True)
class ConfidenceParams:
    """Accuracy/answer-size knob of a query: confidence level and k.

    cl in (0, 1]: an answer set at confidence cl guarantees that traveling
    to the reported j-th neighbor costs at most 1/cl times the distance to
    the true j-th neighbor.  k >= 1 is how many neighbors the guarantee
    covers.
    """

    cl: float
    k: int

    def __post_init__(self):
        if not (0.0 < self.cl <= 1.0):
            raise ValueError("confidence level must be in (0, 1]")
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ValueError("k must be an integer >= 1")


def confidence_level(q: Point, p: Point, known: Circle) -> float:
    """Confidence that object ``p`` is a true neighbor rank for position ``q``.

    r' = known.radius - dist(known.center, q) is the radius of the largest
    disk around q that stays inside the known region; every object in that
    disk is known.  Then:

      * q outside the known region        -> 0
      * dist(q, p) <= r'                  -> 1   (no unknown object can beat p)
      * otherwise                         -> r' / dist(q, p)

    p must itself lie inside the known region (that is what "known" means);
    violating that is a contract error.
    """
    if known.radius <= 0.0:
        raise ValueError("known region must have positive radius")
    dcp = dist(known.center, p)
    if dcp > known.radius * (1.0 + 1e-12):
        raise ValueError("object lies outside the known region")
    r_prime = known.radius - dist(known.center, q)
    if r_prime < 0.0:
        return 0.0
    d = dist(q, p)
    if d <= r_prime:
        return 1.0
    return r_prime / d


def in_gr(q: Point, p: Point, known: Circle, cl: float) -> bool:
    """Is q inside the guaranteed region of object p at confidence cl?"""
    if not (0.0 < cl <= 1.0):
        raise ValueError("confidence level must be in (0, 1]")
    return confidence_level(q, p, known) >= cl


@dataclass(frozen=True)
class GcrQuery:
    """A known region plus its candidate objects, queried for GCR membership.

    The guaranteed confidence region GCR(cl, k) is the locus of positions
    whose k nearest candidates all carry confidence >= cl.  While the client
    stays inside it, the current answer set keeps satisfying the accuracy
    bound and no server contact is needed.
    """

    known: Circle
    objects: np.ndarray  # (m, 2) coordinates
    params: ConfidenceParams

    def __post_init__(self):
        pts = np.asarray(self.objects, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            pts = np.atleast_2d(pts)
            if pts.shape[1] != 2:
                raise ValueError("objects must be an (m, 2) coordinate array")
        object.__setattr__(self, "objects", pts)
        if self.known.radius <= 0.0:
            raise ValueError("known region must have positive radius")
        d = np.hypot(pts[:, 0] - self.known.center.x, pts[:, 1] - self.known.center.y)
        if pts.size and float(d.max()) > self.known.radius * (1.0 + 1e-12):
            raise ValueError("objects must lie inside the known region")


def _kth_dist(q: Point, pts: np.ndarray, k: int) -> float:
    d = np.hypot(pts[:, 0] - q.x, pts[:, 1] - q.y)
    if k == 1:
        return float(d.min())
    return float(np.partition(d, k - 1)[k - 1])


def in_gcr(q: Point, query: GcrQuery, method: str = "radius") -> bool:
    """Closed membership test for the guaranteed confidence region.

    Two equivalent routes are kept deliberately and cross-checked in tests:

      * "radius": known.radius >= cl * d_k(q) + dist(center, q), where d_k is
        the k-th smallest distance from q to the candidates.  It suffices to
        look at the k nearest candidates: if any k candidates reach
        confidence cl at q, the k nearest do too.
      * "count": literally count candidates whose guaranteed region contains
        q and compare against k.
    """
    params = query.params
    if len(query.objects) < params.k:
        raise ValueError("insufficient candidates for k")
    if method == "radius":
        dk = _kth_dist(q, query.objects, params.k)
        return query.known.radius >= params.cl * dk + dist(query.known.center, q)
    if method == "count":
        hits = 0
        for x, y in query.objects:
            if in_gr(q, Point(float(x), float(y)), query.known, params.cl):
                hits += 1
        return hits >= params.k
    raise ValueError(f"unknown method: {method!r}")


def gcr_membership_many(
    xy: np.ndarray, known: Circle, objects: np.ndarray, cl: float, k: int
) -> np.ndarray:
    """Vectorized radius-form GCR test for an (n, 2) array of positions."""
    pts = np.asarray(objects, dtype=float)
    if len(pts) < k:
        raise ValueError("insufficient candidates for k")
    dmat = np.hypot(
        xy[:, 0, None] - pts[None, :, 0], xy[:, 1, None] - pts[None, :, 1]
    )
    dk = np.partition(dmat, k - 1, axis=1)[:, k - 1]
    dq = np.hypot(xy[:, 0] - known.center.x, xy[:, 1] - known.center.y)
    return known.radius >= cl * dk + dq


def as_points_array(points: Iterable[Point] | Sequence | np.ndarray) -> np.ndarray:
    """Normalize Point sequences / coordinate pairs to an (n, 2) float array."""
    if isinstance(points, np.ndarray):
        arr = points.astype(float, copy=False)
    else:
        rows = []
        for p in points:
            if isinstance(p, Point):
                rows.append((p.x, p.y))
            else:
                rows.append((float(p[0]), float(p[1])))
        arr = np.array(rows, dtype=float) if rows else np.empty((0, 2))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("expected an (n, 2) coordinate array")
    return arr
