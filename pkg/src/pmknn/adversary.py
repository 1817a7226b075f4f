"""What the service provider can infer from a stream of requests.

The observer is the server itself: it sees every obfuscation rectangle R_i,
the known region C_i it answered with, the send timestamps, and (if it
knows the road speed limit) a maximum speed.  Three refinement modes are
modeled, from weakest to strongest assumption:

  * overlap  — assumes the user sends a new rectangle the moment it leaves
    the old one, so consecutive rectangles overlap at the send position:
    A_1 = R_1, A_{i+1} = R_{i+1} & R_i.
  * mmb      — intersects each rectangle with the maximum movement bound of
    the previous rectangle: A_{i+1} = R_{i+1} & MMB(R_i, dt).
  * combined — chains the refinements: A_{i+1} = R_{i+1} & MMB(A_i, dt).

An empty refined region proves the attack premise wrong.  The Minkowski
expansion of a composite region has no closed form, so combined-mode
regions are evaluated by seeded forward reachability on witness point
clouds — membership tests plus Monte Carlo, never explicit polygons.  The
witness representation under-approximates, hence the chain
combined <= mmb <= R_i holds by construction.

``trajectory_area`` is the privacy metric: the fraction of the data space
an observer cannot exclude the trajectory from, estimated by uniform
sampling over the union of per-observation regions (known region, clipped
by the movement bound where velocity is known).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Circle,
    Rect,
    RoundedRect,
    dist_to_rect_many,
    intersect_rects,
)

__all__ = [
    "Observation",
    "AdversaryView",
    "RefinedRegion",
    "refine",
    "trajectory_area",
    "frequency",
]

MODES = ("overlap", "mmb", "combined")
DEFAULT_WITNESS = 4096
DEFAULT_AREA_SAMPLES = 1_000_000


@dataclass(frozen=True)
class Observation:
    """One request as logged by the server: rectangle, answer disk, time."""

    rect: Rect
    known: Circle
    t: float


@dataclass(frozen=True)
class AdversaryView:
    """Everything the observer holds about one user's session."""

    observations: tuple
    cl: float
    k: int
    data_space: Rect
    max_speed: float | None = None  # units/second; None = velocity unknown

    def __post_init__(self):
        obs = tuple(self.observations)
        object.__setattr__(self, "observations", obs)
        times = [ob.t for ob in obs]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("observation timestamps must be strictly increasing")


class _WitnessDisc:
    """Minkowski expansion of a witness cloud: within ``radius`` of a witness."""

    def __init__(self, pts: np.ndarray, radius: float):
        self.pts = pts
        self.radius = radius

    def contains_many(self, xy: np.ndarray) -> np.ndarray:
        out = np.zeros(len(xy), dtype=bool)
        if not len(self.pts):
            return out
        r2 = self.radius * self.radius
        for s in range(0, len(xy), 512):
            chunk = xy[s : s + 512]
            d2 = (chunk[:, None, 0] - self.pts[None, :, 0]) ** 2 + (
                chunk[:, None, 1] - self.pts[None, :, 1]
            ) ** 2
            out[s : s + 512] = d2.min(axis=1) <= r2
        return out

    def contains_xy(self, x: float, y: float) -> bool:
        return bool(self.contains_many(np.array([[x, y]]))[0])


@dataclass
class RefinedRegion:
    """Where the observer believes the user was when rectangle i was sent."""

    index: int  # 0-based observation index
    mode: str
    parts: tuple = ()  # convex membership-testable pieces, intersected
    is_empty: bool = False
    witness: np.ndarray | None = field(default=None, repr=False)

    def contains_xy(self, x: float, y: float) -> bool:
        if self.is_empty:
            return False
        return all(p.contains_xy(x, y) for p in self.parts)

    def contains_many(self, xy: np.ndarray) -> np.ndarray:
        if self.is_empty:
            return np.zeros(len(xy), dtype=bool)
        keep = np.ones(len(xy), dtype=bool)
        for p in self.parts:
            keep &= p.contains_many(xy)
        return keep


def _rect_gap(a: Rect, b: Rect) -> float:
    dx = max(a.min_x - b.max_x, b.min_x - a.max_x, 0.0)
    dy = max(a.min_y - b.max_y, b.min_y - a.max_y, 0.0)
    return float(np.hypot(dx, dy))


def _sample_rect(rect: Rect, n: int, rng: np.random.Generator) -> np.ndarray:
    xs = rng.uniform(rect.min_x, rect.max_x, n)
    ys = rng.uniform(rect.min_y, rect.max_y, n)
    return np.column_stack((xs, ys))


def refine(
    view: AdversaryView,
    mode: str,
    witness: int = DEFAULT_WITNESS,
    seed: int = 0,
) -> list[RefinedRegion]:
    """Refined send-position regions A_1..A_n for the chosen attack mode."""
    if mode not in MODES:
        raise ValueError(f"unknown refinement mode: {mode!r}")
    if mode in ("mmb", "combined") and view.max_speed is None:
        raise ValueError(f"{mode} refinement requires a known max speed")
    obs = view.observations
    if not obs:
        return []
    rng = np.random.default_rng(seed)
    out = [RefinedRegion(index=0, mode=mode, parts=(obs[0].rect,))]

    cloud = np.empty((0, 2))  # combined-mode witness set for the latest region
    for i in range(1, len(obs)):
        cur, prev = obs[i], obs[i - 1]
        if mode == "overlap":
            both = intersect_rects(cur.rect, prev.rect)
            if both is None:
                out.append(RefinedRegion(index=i, mode=mode, is_empty=True))
            else:
                out.append(RefinedRegion(index=i, mode=mode, parts=(both,)))
            continue
        rho = view.max_speed * (cur.t - prev.t)
        if mode == "mmb":
            bound = RoundedRect(prev.rect, rho)
            empty = _rect_gap(cur.rect, prev.rect) > rho
            out.append(
                RefinedRegion(index=i, mode=mode, parts=(cur.rect, bound), is_empty=empty)
            )
            continue
        # combined: expand the previous refined region
        prev_region = out[-1]
        if prev_region.is_empty:
            out.append(RefinedRegion(index=i, mode=mode, is_empty=True))
            continue
        if i == 1:
            grown = RoundedRect(prev.rect, rho)  # MMB of A_1 = R_1 is exact
        else:
            grown = _WitnessDisc(cloud, rho)
        region = RefinedRegion(index=i, mode=mode, parts=(cur.rect, grown))
        cand = _sample_rect(cur.rect, witness, rng)
        keep = grown.contains_many(cand)
        cloud = cand[keep]
        region.witness = cloud
        region.is_empty = not len(cloud)
        out.append(region)
    return out


def trajectory_area(
    view: AdversaryView,
    samples: int = DEFAULT_AREA_SAMPLES,
    seed: int = 0,
) -> float:
    """Monte Carlo percent of the data space the trajectory may occupy.

    With velocity knowledge the region is the union over observations i < n
    of C_i clipped to the movement bound of R_i for the gap to the next
    request, plus the last known region whole; without velocity it is just
    the union of the known regions.
    """
    if samples < 10_000:
        raise ValueError("need at least 1e4 samples for a stable estimate")
    obs = view.observations
    if not obs:
        return 0.0
    rng = np.random.default_rng(seed)
    pts = _sample_rect(view.data_space, samples, rng)
    covered = np.zeros(samples, dtype=bool)
    for i, ob in enumerate(obs):
        todo = ~covered
        if not todo.any():
            break
        sub = pts[todo]
        inside = ob.known.contains_many(sub)
        if view.max_speed is not None and i + 1 < len(obs):
            dt = obs[i + 1].t - ob.t
            inside &= dist_to_rect_many(sub, ob.rect) <= view.max_speed * dt
        covered[todo] |= inside
    return 100.0 * float(covered.mean())


def frequency(view: AdversaryView) -> int:
    """Number of requests the observer saw — the exposure count."""
    return len(view.observations)
