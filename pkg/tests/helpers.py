"""Seeded scenario generators shared across the test modules."""

import numpy as np

from causal_lab.conditions import MeasurementScenario
from causal_lab.measure import SliceMeasure, mixture
from causal_lab.region import Region
from causal_lab.spacetime import CausalStructure, causal_future_on_slice

# fixed 1D grid geometry: K and its future land exactly on cell edges
GRID_N = 28
GRID_H = 0.25
GRID_ORIGIN = -3.5
GRID_S, GRID_T = 0.0, 1.0
GRID_REACH_CELLS = 4  # c * (t - s) / h
GRID_K = Region.interval(-0.75, 0.75)
GRID_CS = CausalStructure(dim=1, c=1.0)
GRID_JK = causal_future_on_slice(GRID_K, GRID_T - GRID_S, GRID_CS)

ABC_MODES = ("uniform", "ns", "a1", "a2", "all", "corner")
GRID_MODES = ("generic", "ns", "a1", "a2", "three", "break")

_CORNER_TRIPLES = (
    (1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0), (2 / 3, 1 / 3, 1.0),
    (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 1.0, 1.0), (1.0, 0.5, 0.5),
    (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.5, 1.0, 0.0), (0.75, 1.0, 0.5),
)


def random_abc_triple(rng: np.random.Generator, mode: str = "uniform"):
    """One (a, b, c) sample; engineered modes pin chosen conditions true."""
    if mode == "uniform":
        return tuple(rng.random(3))
    if mode == "ns":
        while True:
            a, b = rng.random(2)
            c = 2 * a - b
            if 0.0 <= c <= 1.0:
                return a, b, c
    if mode == "a1":
        a, c = rng.random(2)
        return a, 1.0, c
    if mode == "a2":
        a = 0.5 + 0.5 * rng.random()
        return a, rng.random(), 2 * a - 1
    if mode == "all":
        a = 0.5 + 0.5 * rng.random()
        return a, 1.0, 2 * a - 1
    if mode == "corner":
        return _CORNER_TRIPLES[rng.integers(len(_CORNER_TRIPLES))]
    raise ValueError(f"unknown mode {mode!r}")


def predicted_abc_flags(a, b, c, tol: float = 1e-9):
    """(ce, ns, a1, a2) from the family algebra; valid off knife edges."""
    ns = abs(2 * a - (b + c)) <= tol
    a1 = abs(b - 1) <= tol
    a2 = abs(2 * a - (1 + c)) <= tol
    ce = 2 * a >= 1 - 2 * tol
    return ce, ns, a1, a2


def _grid_measure(time: float, weights: np.ndarray) -> SliceMeasure:
    return SliceMeasure.from_grid(time, (GRID_ORIGIN,), GRID_H,
                                  np.asarray(weights, dtype=float))


def _grid_cell_index(x: float) -> int:
    return int((x - GRID_ORIGIN) // GRID_H)


def _inside_masks():
    centers = GRID_ORIGIN + (np.arange(GRID_N) + 0.5) * GRID_H
    pts = centers.reshape(-1, 1)
    return GRID_K.contains_points(pts), GRID_JK.contains_points(pts)


_IN_K, _IN_JK = _inside_masks()


def _causal_push(rng: np.random.Generator, w_mu: np.ndarray) -> np.ndarray:
    """Pushforward moving each cell's mass at most GRID_REACH_CELLS cells."""
    w = np.zeros(GRID_N)
    for i, m in enumerate(w_mu):
        if m == 0:
            continue
        lo = max(0, i - GRID_REACH_CELLS)
        hi = min(GRID_N - 1, i + GRID_REACH_CELLS)
        split = rng.random()
        w[rng.integers(lo, hi + 1)] += m * split
        w[rng.integers(lo, hi + 1)] += m * (1 - split)
    return w


def _random_dist(rng: np.random.Generator, mask=None) -> np.ndarray:
    w = rng.random(GRID_N) + 0.02
    if mask is not None:
        w = w * mask
    return w / w.sum()


def random_grid_scenario(rng: np.random.Generator, mode: str = "generic"):
    """Valid grid scenario; engineered modes pin chosen conditions true.

    Returns (scenario, expected) where expected maps condition names to
    booleans the construction guarantees (other outcomes are left free).
    """
    if mode not in GRID_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    w_mu = _random_dist(rng)
    p = float(w_mu[_IN_K].sum())
    w_nu0 = _causal_push(rng, w_mu)
    expected = {"ce": True}

    if mode == "break":
        # drain the detector future to defeat the ordering condition
        donors = np.nonzero(_IN_JK & (w_nu0 > 0))[0]
        sink = _grid_cell_index(3.4)
        moved = float(w_nu0[donors].sum())
        w_nu0[donors] = 0.0
        w_nu0[sink] += moved
        expected = {"ce": False}

    out_mass = float(w_nu0[~_IN_JK].sum())
    if mode == "ns":
        # split nu0 into outcome branches that recombine to it exactly
        bump = np.zeros(GRID_N)
        jk_cells = np.nonzero(_IN_JK)[0]
        gi, gj = rng.choice(jk_cells, size=2, replace=False)
        eps = 0.25 * min(p, 1 - p) * min(w_nu0[gi] + 0.01, 0.05)
        bump[gi], bump[gj] = eps, -eps
        w_plus = w_nu0 + bump / p
        w_minus = w_nu0 - bump / (1 - p)
        if w_plus.min() < 0 or w_minus.min() < 0:
            w_plus, w_minus = w_nu0.copy(), w_nu0.copy()
        expected.update({"ns": True})
    elif mode == "a1":
        w_plus = _random_dist(rng, _IN_JK)
        w_minus = _random_dist(rng)
        expected.update({"a1": True})
    elif mode in ("a2", "three"):
        w_minus = np.where(_IN_JK, 0.0, w_nu0) / (1 - p)
        remainder = 1.0 - float(w_minus.sum())
        w_minus = w_minus + remainder * _random_dist(rng, _IN_JK)
        w_plus = (_random_dist(rng, _IN_JK) if mode == "three"
                  else _random_dist(rng))
        expected.update({"a2": True})
        if mode == "three":
            expected.update({"ns": True, "a1": True})
    else:
        w_plus = _random_dist(rng)
        w_minus = _random_dist(rng)

    if mode == "a2":
        # an unconfined positive branch must leak outside the future
        if float(w_plus[~_IN_JK].sum()) < 1e-3 or out_mass < 1e-3:
            return random_grid_scenario(rng, mode)

    mu = _grid_measure(GRID_S, w_mu)
    nu0 = _grid_measure(GRID_T, w_nu0)
    nu_plus = _grid_measure(GRID_T, w_plus)
    nu_minus = _grid_measure(GRID_T, w_minus)
    nu1 = mixture(p, nu_plus, nu_minus)
    sc = MeasurementScenario(cs=GRID_CS, K=GRID_K, mu=mu, nu0=nu0, nu1=nu1,
                             nu_plus=nu_plus, nu_minus=nu_minus, p_plus=p)
    return sc, expected


def random_atomic_pair(rng: np.random.Generator, max_atoms: int = 12):
    """Random atomic (mu, nu, cs, dt) pair for ordering-check cross-tests."""
    dim = int(rng.integers(1, 3))
    cs = CausalStructure(dim=dim, c=float(rng.uniform(0.5, 2.0)))
    nl = int(rng.integers(1, max_atoms + 1))
    nr = int(rng.integers(1, max_atoms + 1))
    span = 3.0
    mu_pts = rng.uniform(-span, span, (nl, dim))
    nu_pts = rng.uniform(-span, span, (nr, dim))
    regime = rng.integers(3)
    dt = (0.0, float(rng.uniform(0.2, 1.5)), float(rng.uniform(3.0, 8.0)))[regime]
    mu_w = rng.random(nl) + 1e-3
    mu_w /= mu_w.sum()
    nu_w = rng.random(nr) + 1e-3
    nu_w /= nu_w.sum()
    mu = SliceMeasure.from_atoms(0.0, list(zip(map(tuple, mu_pts), mu_w)))
    nu = SliceMeasure.from_atoms(dt, list(zip(map(tuple, nu_pts), nu_w)))
    return mu, nu, cs
