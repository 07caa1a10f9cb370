"""Events, causal order and Lorentz boosts on flat spacetime.

Spatial slices are labelled by coordinate time.  The causal order between
point events uses the exact Euclidean cone; region-valued cone operations
dilate boxes per axis, which over-approximates the Euclidean cone for
d >= 2 (they agree in d = 1).  Conservative direction: a larger future can
only make causality checks pass more easily, never flag a spurious
violation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .region import Region

# absolute slack, in time units, on the cone inequality dt >= |dx|/c
EPS_CAUSAL = 1e-12


@dataclass(frozen=True)
class CausalStructure:
    """Flat spacetime with `dim` spatial dimensions and signal speed c."""

    dim: int = 1
    c: float = 1.0

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError("spatial dimension must be 1, 2 or 3")
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError("signal speed must be positive and finite")


@dataclass(frozen=True)
class Event:
    t: float
    x: tuple[float, ...]

    def __post_init__(self) -> None:
        if not math.isfinite(self.t) or not all(math.isfinite(v) for v in self.x):
            raise ValueError("event coordinates must be finite")

    @staticmethod
    def of(t: float, *coords: float) -> "Event":
        return Event(float(t), tuple(float(c) for c in coords))


@dataclass(frozen=True)
class BoostedFrame:
    """Inertial frame moving with velocity v along the given spatial axis."""

    v: float
    axis: int = 0


def _check_dims(a: Event, b: Event, cs: CausalStructure) -> None:
    if len(a.x) != cs.dim or len(b.x) != cs.dim:
        raise ValueError("event dimension does not match causal structure")


def _spatial_distance(a: Event, b: Event) -> float:
    return math.dist(a.x, b.x)


def causally_precedes(a: Event, b: Event, cs: CausalStructure) -> bool:
    """Closed-cone order: b is reachable from a at speed <= c."""
    _check_dims(a, b, cs)
    dt = b.t - a.t
    return dt >= _spatial_distance(a, b) / cs.c - EPS_CAUSAL


def chronologically_precedes(a: Event, b: Event, cs: CausalStructure) -> bool:
    """Open-cone order: b is reachable from a strictly slower than c."""
    _check_dims(a, b, cs)
    dt = b.t - a.t
    return dt > _spatial_distance(a, b) / cs.c + EPS_CAUSAL


def spacelike_separated(a: Event, b: Event, cs: CausalStructure) -> bool:
    return not causally_precedes(a, b, cs) and not causally_precedes(b, a, cs)


def causal_future_on_slice(region: Region, dt: float, cs: CausalStructure) -> Region:
    """Intersection of the causal future of a slice region with time + dt.

    Boxes dilate by c*dt along every axis.  Exact in d = 1; a conservative
    over-approximation of the Euclidean cone union for d >= 2.
    """
    if region.dim != cs.dim:
        raise ValueError("region dimension does not match causal structure")
    if dt < 0:
        raise ValueError("slice separation must be nonnegative")
    return region.expand(cs.c * dt)


def point_cone_membership(sources: np.ndarray, dt: float, cs: CausalStructure,
                          targets: np.ndarray) -> np.ndarray:
    """Exact Euclidean cone test for point sources.

    Returns a boolean mask over `targets` marking points within distance
    c*(dt + slack) of at least one source.  `sources` is (k, d), `targets`
    is (n, d).
    """
    if dt < 0:
        raise ValueError("slice separation must be nonnegative")
    src = np.atleast_2d(np.asarray(sources, dtype=float))
    tgt = np.atleast_2d(np.asarray(targets, dtype=float))
    if src.shape[0] == 0:
        return np.zeros(tgt.shape[0], dtype=bool)
    reach = cs.c * (dt + EPS_CAUSAL)
    diff = tgt[None, :, :] - src[:, None, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    return np.any(dist2 <= reach * reach, axis=0)


def region_precedes_event(region: Region, slice_time: float, e: Event,
                          cs: CausalStructure) -> bool:
    """True if `e` lies in the (box-dilated) causal future of the region."""
    if region.dim != cs.dim or len(e.x) != cs.dim:
        raise ValueError("dimension mismatch")
    dt = e.t - slice_time
    if dt < -EPS_CAUSAL:
        return False
    return region.sup_distance(e.x) <= cs.c * (max(dt, 0.0) + EPS_CAUSAL)


def boost(e: Event, frame: BoostedFrame, cs: CausalStructure) -> Event:
    """Standard Lorentz boost of an event along the frame's axis."""
    if len(e.x) != cs.dim:
        raise ValueError("event dimension does not match causal structure")
    if not 0 <= frame.axis < cs.dim:
        raise ValueError("boost axis out of range")
    v, c = frame.v, cs.c
    if abs(v) >= c:
        raise ValueError("boost speed must satisfy |v| < c")
    gamma = 1.0 / math.sqrt(1.0 - (v / c) ** 2)
    xa = e.x[frame.axis]
    t_new = gamma * (e.t - v * xa / (c * c))
    xa_new = gamma * (xa - v * e.t)
    coords = list(e.x)
    coords[frame.axis] = xa_new
    return Event(t_new, tuple(coords))


def inverse(frame: BoostedFrame) -> BoostedFrame:
    return BoostedFrame(-frame.v, frame.axis)


def interval_squared(a: Event, b: Event, cs: CausalStructure) -> float:
    """Invariant interval c^2 dt^2 - |dx|^2 between two events."""
    _check_dims(a, b, cs)
    dt = b.t - a.t
    return (cs.c * dt) ** 2 - _spatial_distance(a, b) ** 2
