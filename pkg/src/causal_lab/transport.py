"""Deciding whether mass can flow causally between two slices.

The ordering condition under test: every compact set K in the support of
the earlier measure must satisfy mu(K) <= nu(future cone of K).  By the
marriage theorem this holds for all K iff a bipartite flow saturating the
earlier measure exists, so the decision procedure is a max-flow on the
atom/cell cone graph; the min cut names a worst offending set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .maxflow import dinic_max_flow
from .measure import SliceMeasure, Weight
from .region import Region
from .spacetime import EPS_CAUSAL, CausalStructure, point_cone_membership

EPS_FLOW = 1e-9
MAX_BRUTEFORCE_ATOMS = 20


@dataclass(frozen=True)
class CeVerdict:
    holds: bool
    deficit: Weight
    worst_set: Region | None
    method: str

    def __post_init__(self) -> None:
        if self.deficit < 0:
            raise ValueError("deficit is clamped at zero")
        if not self.holds and self.worst_set is None:
            raise ValueError("failing verdict requires a worst set")


@dataclass(frozen=True)
class FlowNetwork:
    """Bipartite cone graph: source -> left (mu) -> right (nu) -> sink."""

    left_points: np.ndarray
    right_points: np.ndarray
    left_caps: tuple
    right_caps: tuple
    edge_indptr: np.ndarray   # CSR over left nodes
    edge_indices: np.ndarray  # right-node targets
    left_is_grid: bool
    right_is_grid: bool
    left_cell: float | None
    right_cell: float | None

    @property
    def num_left(self) -> int:
        return len(self.left_caps)

    @property
    def num_right(self) -> int:
        return len(self.right_caps)

    @property
    def num_edges(self) -> int:
        return int(self.edge_indptr[-1]) if len(self.edge_indptr) else 0


def _cone_edges(left_pts: np.ndarray, right_pts: np.ndarray, reach: float,
                right_grid_1d: tuple[float, float, int] | None):
    """CSR adjacency from each left point to right points within `reach`."""
    n = len(left_pts)
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.empty(0, dtype=np.int64)
    if right_grid_1d is not None:
        origin, cell, m = right_grid_1d
        x = left_pts[:, 0]
        lo = np.ceil((x - reach - origin) / cell - 0.5).astype(np.int64)
        hi = np.floor((x + reach - origin) / cell - 0.5).astype(np.int64)
        lo = np.clip(lo, 0, m)
        hi = np.clip(hi, -1, m - 1)
        counts = np.maximum(hi - lo + 1, 0)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        indices = np.concatenate(
            [np.arange(a, b + 1, dtype=np.int64) for a, b, k in
             zip(lo, hi, counts) if k > 0]) if indptr[-1] else np.empty(0, dtype=np.int64)
        return indptr, indices
    chunks = []
    counts = np.zeros(n, dtype=np.int64)
    step = max(1, int(4e6 // max(len(right_pts), 1)))
    r2 = reach * reach
    for start in range(0, n, step):
        block = left_pts[start:start + step]
        diff = right_pts[None, :, :] - block[:, None, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        hit = d2 <= r2
        counts[start:start + step] = hit.sum(axis=1)
        chunks.append(np.nonzero(hit)[1].astype(np.int64))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    indices = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.int64)
    return indptr, indices


def build_flow_network(mu: SliceMeasure, nu: SliceMeasure,
                       cs: CausalStructure) -> FlowNetwork:
    """Cone graph between the supports of mu and nu."""
    if mu.dim != cs.dim or nu.dim != cs.dim:
        raise ValueError("measure dimension does not match causal structure")
    dt = nu.time - mu.time
    if dt < 0:
        raise ValueError("nu must live on the later slice")
    reach = cs.c * (dt + EPS_CAUSAL)

    def support(m: SliceMeasure):
        pts = m.positions
        if m.is_atomic:
            caps = tuple(w for _, w in m.atoms)
            keep = [i for i, c in enumerate(caps) if c > 0]
            return pts[keep], tuple(caps[i] for i in keep)
        w = m.weights_flat
        keep = np.nonzero(w > 0)[0]
        return pts[keep], tuple(float(v) for v in w[keep])

    left_pts, left_caps = support(mu)
    right_pts, right_caps = support(nu)

    # window arithmetic only applies while support indices align with cells
    right_grid_1d = None
    if nu.is_grid and cs.dim == 1 and len(right_caps) == len(nu.weights_flat):
        right_grid_1d = (nu.grid_origin[0], nu.grid_cell,
                         len(nu.weights_flat))
    indptr, indices = _cone_edges(left_pts, right_pts, reach, right_grid_1d)
    return FlowNetwork(left_points=left_pts, right_points=right_pts,
                       left_caps=left_caps, right_caps=right_caps,
                       edge_indptr=indptr, edge_indices=indices,
                       left_is_grid=mu.is_grid, right_is_grid=nu.is_grid,
                       left_cell=mu.grid_cell, right_cell=nu.grid_cell)


def _common_denominator(caps) -> int:
    den = 1
    for c in caps:
        f = c if isinstance(c, Fraction) else Fraction(c)
        den = den * f.denominator // math.gcd(den, f.denominator)
    return den


def _solve_dinic(net: FlowNetwork) -> tuple[Fraction, list[int]]:
    """Max-flow deficit and min-cut left side, computed exactly.

    Capacities lift to integers over a common denominator (floats are
    dyadic rationals, so the lift is lossless), which keeps the flow
    decision free of rounding and overflow regardless of magnitude.
    """
    nl, nr = net.num_left, net.num_right
    n = nl + nr + 2
    src, snk = 0, n - 1
    den = _common_denominator(net.left_caps + net.right_caps)
    lint = [int(Fraction(c) * den) for c in net.left_caps]
    rint = [int(Fraction(c) * den) for c in net.right_caps]
    total = sum(lint)
    big = total + 1  # middle edges may never enter a minimum cut
    edges: list[tuple[int, int, int]] = []
    edges.extend((src, 1 + i, c) for i, c in enumerate(lint))
    for i in range(nl):
        for k in range(net.edge_indptr[i], net.edge_indptr[i + 1]):
            edges.append((1 + i, 1 + nl + int(net.edge_indices[k]), big))
    edges.extend((1 + nl + j, snk, c) for j, c in enumerate(rint))
    flow, _, side = dinic_max_flow(n, edges, src, snk)
    left_side = [i for i in range(nl) if (1 + i) in side]
    return Fraction(total - flow, den), left_side


def _worst_region(net: FlowNetwork, left_side: Sequence[int]) -> Region:
    pts = net.left_points[list(left_side)]
    dim = pts.shape[1] if pts.size else (net.left_points.shape[1] or 1)
    if net.left_is_grid and net.left_cell is not None:
        return Region.point_boxes(pts, dim, halfwidth=net.left_cell / 2)
    return Region.point_boxes(pts, dim)


def check_ce_maxflow(mu: SliceMeasure, nu: SliceMeasure, cs: CausalStructure,
                     exact: bool | None = None) -> CeVerdict:
    """Flow-based ordering check; min cut names the worst offending set.

    The solver itself is exact for any input; the eps_flow slack on float
    verdicts only absorbs noise already present in the given weights.
    """
    net = build_flow_network(mu, nu, cs)
    if exact is None:
        exact = mu.exact and nu.exact
    zero = Fraction(0) if exact else 0.0
    if net.num_left == 0:
        return CeVerdict(True, zero, None, "maxflow")
    deficit, left_side = _solve_dinic(net)
    if deficit <= (0 if exact else EPS_FLOW):
        return CeVerdict(True, zero, None, "maxflow")
    worst = _worst_region(net, left_side)
    return CeVerdict(False, deficit if exact else float(deficit),
                     worst, "maxflow")


def check_ce_bruteforce(mu: SliceMeasure, nu: SliceMeasure,
                        cs: CausalStructure) -> CeVerdict:
    """Exhaustive subset scan over mu's atoms (capped at 20 atoms)."""
    if not mu.is_atomic:
        raise ValueError("bruteforce check requires an atomic mu")
    if mu.dim != cs.dim or nu.dim != cs.dim:
        raise ValueError("measure dimension does not match causal structure")
    dt = nu.time - mu.time
    if dt < 0:
        raise ValueError("nu must live on the later slice")
    atoms = [(p, w) for p, w in mu.atoms if w > 0]
    n = len(atoms)
    if n > MAX_BRUTEFORCE_ATOMS:
        raise ValueError(f"bruteforce capped at {MAX_BRUTEFORCE_ATOMS} atoms")
    exact = mu.exact and nu.exact
    zero = Fraction(0) if exact else 0.0
    if n == 0:
        return CeVerdict(True, zero, None, "bruteforce")

    nu_pts = nu.positions
    if nu.is_atomic:
        nu_w = [w for _, w in nu.atoms]
    else:
        nu_w = [float(v) for v in nu.weights_flat]
    mu_pts = np.array([p for p, _ in atoms], dtype=float)
    reach_mask = [point_cone_membership(mu_pts[i:i + 1], dt, cs, nu_pts)
                  for i in range(n)]
    cone_bits = []
    for mask in reach_mask:
        bits = 0
        for j in np.nonzero(mask)[0]:
            bits |= 1 << int(j)
        cone_bits.append(bits)

    nu_mass_cache: dict[int, Weight] = {0: zero}

    def nu_mass(bits: int) -> Weight:
        got = nu_mass_cache.get(bits)
        if got is not None:
            return got
        low = bits & -bits
        rest = nu_mass(bits ^ low)
        val = rest + nu_w[low.bit_length() - 1]
        nu_mass_cache[bits] = val
        return val

    best = None
    best_subset = 1
    mu_sum = [zero] * (1 << n)
    or_bits = [0] * (1 << n)
    for s in range(1, 1 << n):
        low = s & -s
        i = low.bit_length() - 1
        mu_sum[s] = mu_sum[s ^ low] + atoms[i][1]
        or_bits[s] = or_bits[s ^ low] | cone_bits[i]
        d = mu_sum[s] - nu_mass(or_bits[s])
        if best is None or d > best:
            best = d
            best_subset = s
    tol = 0 if exact else EPS_FLOW
    worst = Region.point_boxes(
        [atoms[i][0] for i in range(n) if best_subset >> i & 1], mu.dim)
    deficit = best if best > 0 else zero
    return CeVerdict(best <= tol, deficit, worst, "bruteforce")


def recompute_deficit(mu: SliceMeasure, nu: SliceMeasure, worst: Region,
                      cs: CausalStructure) -> Weight:
    """Re-derive mu(W) - nu(cone(W)) from first principles for a worst set.

    Point sources inside W use the exact Euclidean cone, matching the edge
    rule of the flow network in every dimension.
    """
    dt = nu.time - mu.time
    mu_in = mu.restricted(worst)
    src_pts = (mu_in.positions[mu_in.weights_flat > 0]
               if mu_in.is_grid else mu_in.positions)
    if len(src_pts) == 0:
        return Fraction(0) if (mu.exact and nu.exact) else 0.0
    mask = point_cone_membership(src_pts, dt, cs, nu.positions)
    if nu.is_atomic:
        nu_cov = sum((w for (_, w), hit in zip(nu.atoms, mask) if hit),
                     Fraction(0) if nu.exact else 0.0)
    else:
        nu_cov = float(nu.weights_flat[mask].sum())
    return mu_in.total - nu_cov
