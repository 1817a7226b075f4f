"""Bulk-loaded R-tree with an incremental best-first neighbor stream.

The tree is packed once with sort-tile-recursive loading (no inserts) and
models disk pages: one node = one page, default capacity 50 entries.  Query
cost is reported as the number of nodes expanded, which is the page-read
count a disk-resident tree would incur.

``NnStream`` enumerates objects strictly by distance from a query point and
can be stopped, resumed, and peeked; the server's known-region search drives
it with a moving radius cutoff instead of a fixed k.
"""

from __future__ import annotations

import heapq
import math
from typing import Iterator, NamedTuple

import numpy as np

from .geometry import Circle, Point, Rect, as_points_array

__all__ = ["Index", "NnStream", "NnHit", "build_index"]

DEFAULT_CAPACITY = 50  # entries per node; one node ~ one 1 KB page


class _Node:
    __slots__ = ("node_id", "level", "rect", "children", "child_rects", "ids", "coords")

    def __init__(self, node_id: int, level: int):
        self.node_id = node_id
        self.level = level  # 0 = leaf
        self.rect: Rect | None = None
        self.children: list["_Node"] | None = None
        self.child_rects: np.ndarray | None = None  # (c, 4) min_x,min_y,max_x,max_y
        self.ids: np.ndarray | None = None
        self.coords: np.ndarray | None = None


def _str_tile(order: np.ndarray, keys_x: np.ndarray, keys_y: np.ndarray, cap: int) -> list[np.ndarray]:
    """Sort-tile-recursive partition: returns index chunks of size <= cap."""
    n = len(order)
    n_groups = math.ceil(n / cap)
    n_slabs = math.ceil(math.sqrt(n_groups))
    slab_size = math.ceil(n / n_slabs)
    by_x = order[np.argsort(keys_x[order], kind="stable")]
    chunks: list[np.ndarray] = []
    for s in range(0, n, slab_size):
        slab = by_x[s : s + slab_size]
        slab = slab[np.argsort(keys_y[slab], kind="stable")]
        for t in range(0, len(slab), cap):
            chunks.append(slab[t : t + cap])
    return chunks


class Index:
    """Read-only spatial index over point objects with integer ids."""

    def __init__(self, root: _Node, capacity: int, size: int, height: int, node_count: int, bounds: Rect):
        self.root = root
        self.capacity = capacity
        self.size = size
        self.height = height
        self.node_count = node_count
        self.bounds = bounds

    def nn_stream(self, q: Point) -> "NnStream":
        return NnStream(self, q)

    def range_count(self, region: Circle) -> int:
        """Exact count of objects inside the closed disk."""
        cx, cy, r = region.center.x, region.center.y, region.radius
        total = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.level == 0:
                if node.coords is None or not len(node.coords):
                    continue
                d = np.hypot(node.coords[:, 0] - cx, node.coords[:, 1] - cy)
                total += int(np.count_nonzero(d <= r))
            else:
                rects = node.child_rects
                dx = np.maximum(np.maximum(rects[:, 0] - cx, 0.0), cx - rects[:, 2])
                dy = np.maximum(np.maximum(rects[:, 1] - cy, 0.0), cy - rects[:, 3])
                near = np.hypot(dx, dy) <= r
                for child, keep in zip(node.children, near):
                    if keep:
                        stack.append(child)
        return total

    def all_points(self) -> tuple[np.ndarray, np.ndarray]:
        """Dump every stored object as (ids, coords) in leaf order."""
        ids, coords = [], []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.level == 0:
                ids.append(node.ids)
                coords.append(node.coords)
            else:
                stack.extend(node.children)
        return np.concatenate(ids), np.concatenate(coords, axis=0)


def build_index(
    points,
    ids=None,
    capacity: int = DEFAULT_CAPACITY,
    bounds: Rect | None = None,
) -> Index:
    """Pack points into an STR-loaded R-tree.

    Args:
        points: (n, 2) coordinates or a sequence of Point.
        ids: optional integer ids, unique; defaults to 0..n-1.
        capacity: max entries per node (leaf objects or child nodes).
        bounds: data-space extent carried along for degenerate fallbacks;
            defaults to the bounding box of the data.

    Raises ValueError on an empty dataset, duplicate ids, or capacity < 2.
    """
    coords = as_points_array(points)
    n = len(coords)
    if n == 0:
        raise ValueError("cannot build an index over an empty dataset")
    if capacity < 2:
        raise ValueError("node capacity must be >= 2")
    if ids is None:
        id_arr = np.arange(n, dtype=np.int64)
    else:
        id_arr = np.asarray(ids, dtype=np.int64)
        if id_arr.shape != (n,):
            raise ValueError("ids must be one per point")
        if len(np.unique(id_arr)) != n:
            raise ValueError("object ids must be unique")

    counter = 0

    def new_node(level: int) -> _Node:
        nonlocal counter
        node = _Node(counter, level)
        counter += 1
        return node

    # leaves
    chunks = _str_tile(np.arange(n), coords[:, 0], coords[:, 1], capacity)
    level_nodes: list[_Node] = []
    for chunk in chunks:
        leaf = new_node(0)
        leaf.ids = id_arr[chunk]
        leaf.coords = coords[chunk]
        leaf.rect = Rect(
            float(leaf.coords[:, 0].min()),
            float(leaf.coords[:, 1].min()),
            float(leaf.coords[:, 0].max()),
            float(leaf.coords[:, 1].max()),
        )
        level_nodes.append(leaf)

    level = 0
    while len(level_nodes) > 1:
        level += 1
        rects = np.array(
            [[nd.rect.min_x, nd.rect.min_y, nd.rect.max_x, nd.rect.max_y] for nd in level_nodes]
        )
        centers_x = (rects[:, 0] + rects[:, 2]) / 2.0
        centers_y = (rects[:, 1] + rects[:, 3]) / 2.0
        chunks = _str_tile(np.arange(len(level_nodes)), centers_x, centers_y, capacity)
        parents: list[_Node] = []
        for chunk in chunks:
            parent = new_node(level)
            parent.children = [level_nodes[i] for i in chunk]
            parent.child_rects = rects[chunk]
            parent.rect = Rect(
                float(parent.child_rects[:, 0].min()),
                float(parent.child_rects[:, 1].min()),
                float(parent.child_rects[:, 2].max()),
                float(parent.child_rects[:, 3].max()),
            )
            parents.append(parent)
        level_nodes = parents

    root = level_nodes[0]
    if bounds is None:
        bounds = root.rect
    return Index(root, capacity, n, root.level, counter, bounds)


class NnHit(NamedTuple):
    id: int
    point: Point
    dist: float


class NnStream:
    """Best-first enumeration of objects by distance from a fixed point.

    Entries are ordered by (distance, entry kind, id); objects sort before
    nodes at equal key and node ids come from the deterministic build order,
    so two identical queries expand the exact same pages in the exact same
    order.  ``io_reads`` counts node expansions (page reads).
    """

    def __init__(self, index: Index, q: Point):
        self.q = q
        self.io_reads = 0
        root = index.root
        d0 = _rect_min_dist(q.x, q.y, root.rect)
        # heap item: (dist, kind, id, payload); kind 0 = object, 1 = node
        self._heap: list[tuple] = [(d0, 1, root.node_id, root)]

    def peek_min_dist(self) -> float:
        """Lower bound on the distance of everything not yet emitted."""
        return self._heap[0][0] if self._heap else math.inf

    def next_within(self, limit: float):
        """Emit the next object, or None once the frontier exceeds ``limit``.

        Returns a raw (id, x, y, dist) tuple; no node whose minimum distance
        exceeds ``limit`` is expanded, which is what keeps the page-read
        count of a radius-bounded search minimal.
        """
        heap = self._heap
        qx, qy = self.q.x, self.q.y
        while heap and heap[0][0] <= limit:
            d, kind, ident, payload = heapq.heappop(heap)
            if kind == 0:
                return (ident, payload[0], payload[1], d)
            self.io_reads += 1
            node: _Node = payload
            if node.level == 0:
                xs = node.coords[:, 0]
                ds = np.hypot(xs - qx, node.coords[:, 1] - qy)
                for oid, x, y, od in zip(node.ids, xs, node.coords[:, 1], ds):
                    heapq.heappush(heap, (float(od), 0, int(oid), (float(x), float(y))))
            else:
                rects = node.child_rects
                dx = np.maximum(np.maximum(rects[:, 0] - qx, 0.0), qx - rects[:, 2])
                dy = np.maximum(np.maximum(rects[:, 1] - qy, 0.0), qy - rects[:, 3])
                ds = np.hypot(dx, dy)
                for child, cd in zip(node.children, ds):
                    heapq.heappush(heap, (float(cd), 1, child.node_id, child))
        return None

    def __iter__(self) -> Iterator[NnHit]:
        return self

    def __next__(self) -> NnHit:
        hit = self.next_within(math.inf)
        if hit is None:
            raise StopIteration
        oid, x, y, d = hit
        return NnHit(oid, Point(x, y), d)


def _rect_min_dist(x: float, y: float, rect: Rect) -> float:
    dx = max(rect.min_x - x, 0.0, x - rect.max_x)
    dy = max(rect.min_y - y, 0.0, y - rect.max_y)
    return math.hypot(dx, dy)
