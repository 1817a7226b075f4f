"""
Known regions, confidence levels, and guaranteed regions
========================================================

A walk through the geometric vocabulary: query a small world with one
obfuscation rectangle, then probe the response's confidence guarantees.
"""

import numpy as np

from pmknn import (
    ConfidenceParams,
    Point,
    QueryRequest,
    Rect,
    build_index,
    clappinq,
    confidence_level,
    gcr_membership_many,
)

rng = np.random.default_rng(7)
coords = rng.uniform(0.0, 1000.0, size=(2000, 2))
index = build_index(coords)

# the client hides somewhere in this rectangle and asks for 5 neighbors
# at confidence level 0.8
rect = Rect(450.0, 430.0, 530.0, 510.0)
resp = clappinq(index, QueryRequest(rect, ConfidenceParams(0.8, 5)))
known = resp.known_region

print(f"candidates |P| = {len(resp)}")
print(f"known region: center ({known.center.x:.1f}, {known.center.y:.1f}), "
      f"radius {known.radius:.1f}")
print(f"page reads: {resp.stats.io_reads}")

# completeness: the server retrieved *everything* inside the known region,
# so the client can re-rank locally as it moves
inside = np.hypot(coords[:, 0] - known.center.x, coords[:, 1] - known.center.y)
print(f"objects inside known region (brute force): {np.count_nonzero(inside <= known.radius)}")

# confidence level of the nearest candidate, seen from a few positions
nearest = Point(float(resp.points[0, 0]), float(resp.points[0, 1]))
for q in (rect.center, Point(rect.min_x, rect.min_y), Point(rect.max_x, rect.max_y)):
    cl = confidence_level(q, nearest, known)
    print(f"CL from ({q.x:.0f}, {q.y:.0f}) to nearest candidate: {cl:.3f}")

# the guaranteed confidence region: while the client stays inside GCR(cl, k)
# it provably holds k neighbors at confidence >= cl -- no server contact.
# sample the known region's bounding box and count membership at the
# specified knobs versus the weaker requirement the client actually needs.
samples = np.column_stack((
    rng.uniform(known.center.x - known.radius, known.center.x + known.radius, 50_000),
    rng.uniform(known.center.y - known.radius, known.center.y + known.radius, 50_000),
))
for cl, k in ((0.8, 5), (0.6, 3), (0.4, 1)):
    frac = gcr_membership_many(samples, known, resp.points, cl, k).mean()
    print(f"GCR(cl={cl}, k={k}) covers {100 * frac:.1f}% of the sampled box")
