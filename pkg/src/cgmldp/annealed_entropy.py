"""Entropy link between the annealed and quenched rate functions.

Above the shape value the annealed rate splits into a quenched rate under
reweighted parameter laws plus the relative-entropy cost of the reweighting.
The optimal reweighting tilts ``alpha`` by ``(a+z*+lam*)/(a+z*)`` and ``beta``
by ``(b-z*)/(b-z*-lam*)``, where ``(lam*, z*)`` is the maximizing pair of the
annealed conjugate problem.

Below the shape value, reweightings that lower the shape function give an
upper bound on the annealed left-tail rate; ``left_tail_bound`` computes it
for finitely supported laws by a simplex grid search plus local refinement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import param_laws as pl
from .errors import DomainError
from .rate import annealed_J, quenched_I
from .shape import as_direction, shape_function

__all__ = [
    "TiltPair",
    "optimal_tilts",
    "decomposition_objective",
    "entropy_decomposition_residual",
    "left_tail_bound",
    "mean_tilt_comparison",
]

CONSTRAINT_MARGIN = 1e-12
GRID_RESOLUTION = 1e-3
MAX_GRID_POINTS = 300_000


@dataclass(frozen=True)
class TiltPair:
    nu1: pl.ParameterLaw
    nu2: pl.ParameterLaw
    H1: float
    H2: float
    lambda_star: float
    z_star: float


def optimal_tilts(alpha, beta, direction, r: float) -> TiltPair:
    """Optimal reweighting of ``(alpha, beta)`` for the annealed rate at ``r > g``."""
    ev = annealed_J(alpha, beta, direction, r)
    if ev.lambda_star <= 0:
        raise DomainError(f"r={r!r} is not above the shape value")
    lam, z = ev.lambda_star, ev.z_star
    nu1 = pl.tilt_ratio(alpha, z, lam)
    nu2 = pl.tilt_ratio(beta, -z - lam, lam)
    return TiltPair(nu1, nu2, pl.relative_entropy(nu1, alpha),
                    pl.relative_entropy(nu2, beta), lam, z)


def decomposition_objective(alpha, beta, nu1, nu2, direction, r: float) -> float:
    """``I^{nu1,nu2}(r) + s H(nu1|alpha) + t H(nu2|beta)``."""
    s, t = as_direction(direction)
    h1 = pl.relative_entropy(nu1, alpha)
    h2 = pl.relative_entropy(nu2, beta)
    if math.isinf(h1) or math.isinf(h2):
        return math.inf
    return quenched_I(nu1, nu2, direction, r) + s * h1 + t * h2


def entropy_decomposition_residual(alpha, beta, direction, r: float) -> float:
    """Gap between the annealed rate and the objective at the optimal tilts."""
    pair = optimal_tilts(alpha, beta, direction, r)
    lhs = annealed_J(alpha, beta, direction, r).value
    rhs = decomposition_objective(alpha, beta, pair.nu1, pair.nu2, direction, r)
    return abs(lhs - rhs)


# -- left tail -----------------------------------------------------------------


def _compositions(parts: int, total: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    # stars and bars: choose bar positions among total + parts - 1 slots
    slots = total + parts - 1
    bars = np.array(list(itertools.combinations(range(slots), parts - 1)), dtype=np.int64)
    edges = np.concatenate([np.full((len(bars), 1), -1), bars,
                            np.full((len(bars), 1), slots)], axis=1)
    return np.diff(edges, axis=1) - 1


def _grid_count(parts: int, total: int) -> int:
    return math.comb(total + parts - 1, parts - 1)


def _grid_size(n1: int, n2: int) -> int:
    """Largest per-coordinate resolution 1/N keeping the product grid bounded."""
    size = int(round(1.0 / GRID_RESOLUTION))
    while size > 1 and _grid_count(n1, size) * _grid_count(n2, size) > MAX_GRID_POINTS:
        size = int(size * 0.8)
    return size


def _entropy_rows(p: np.ndarray, base: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p / base), 0.0)
    return terms.sum(axis=1)


def _shape_rows(x: np.ndarray, p: np.ndarray, y: np.ndarray, q: np.ndarray,
                s: float, t: float) -> np.ndarray:
    """Shape function for many discrete law pairs sharing the same atoms.

    Rows with equal lowest charged atoms share the z-interval; the lowest
    atoms always carry mass, so the minimizer is interior and a vectorized
    bisection on the increasing z-derivative finds it.
    """
    out = np.empty(len(p))
    lo_a = np.argmax(p > 0, axis=1)
    lo_b = np.argmax(q > 0, axis=1)
    for ia in np.unique(lo_a):
        for ib in np.unique(lo_b[lo_a == ia]):
            rows = np.flatnonzero((lo_a == ia) & (lo_b == ib))
            pr, qr = p[rows], q[rows]
            lo = np.full(len(rows), -x[ia])
            hi = np.full(len(rows), y[ib])
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                with np.errstate(divide="ignore", invalid="ignore"):
                    da = np.where(pr > 0, pr / (x[None, :] + mid[:, None]) ** 2, 0.0).sum(1)
                    db = np.where(qr > 0, qr / (y[None, :] - mid[:, None]) ** 2, 0.0).sum(1)
                up = -s * da + t * db > 0
                hi = np.where(up, mid, hi)
                lo = np.where(up, lo, mid)
            z = 0.5 * (lo + hi)
            with np.errstate(divide="ignore", invalid="ignore"):
                ga = np.where(pr > 0, pr / (x[None, :] + z[:, None]), 0.0).sum(1)
                gb = np.where(qr > 0, qr / (y[None, :] - z[:, None]), 0.0).sum(1)
            out[rows] = s * ga + t * gb
    return out


def _atomic(law, name):
    if not isinstance(law, (pl.PointMass, pl.FiniteDiscrete)):
        raise DomainError(f"{name} must be finitely supported for the left-tail bound")
    return np.asarray(law.atoms, dtype=float), np.asarray(law.probs, dtype=float)


def left_tail_bound(alpha, beta, direction, x: float, y: float) -> float:
    """Smallest ``s H(nu1|alpha) + t H(nu2|beta)`` with ``g_{nu1,nu2}(s,t)`` in ``(x, y)``.

    Returns ``inf`` when no reweighting reaches the open interval.
    """
    if not x < y:
        raise DomainError(f"need x < y, got ({x!r}, {y!r})")
    s, t = as_direction(direction)
    xa, pa = _atomic(alpha, "alpha")
    xb, pb = _atomic(beta, "beta")
    n1, n2 = len(xa), len(xb)
    size = _grid_size(n1, n2)
    ga = _compositions(n1, size) / size
    gb = _compositions(n2, size) / size
    idx_a, idx_b = np.meshgrid(np.arange(len(ga)), np.arange(len(gb)), indexing="ij")
    P, Q = ga[idx_a.ravel()], gb[idx_b.ravel()]
    g = _shape_rows(xa, P, xb, Q, s, t)
    cost = s * _entropy_rows(P, pa) + t * _entropy_rows(Q, pb)
    feasible = (g > x + CONSTRAINT_MARGIN) & (g < y - CONSTRAINT_MARGIN)
    if not feasible.any():
        return math.inf
    best = int(np.flatnonzero(feasible)[np.argmin(cost[feasible])])
    best_cost = float(cost[best])
    refined = _refine(xa, pa, xb, pb, P[best], Q[best], s, t, x, y)
    # relative entropy is nonnegative; clip rounding below zero
    return max(min(best_cost, refined), 0.0)


def _refine(xa, pa, xb, pb, p0, q0, s, t, x, y) -> float:
    """Nelder-Mead over softmax logits within the face of the grid optimum."""
    sa, sb = np.flatnonzero(p0 > 0), np.flatnonzero(q0 > 0)
    dim = (len(sa) - 1) + (len(sb) - 1)
    if dim == 0:
        return math.inf

    def unpack(v):
        la = np.concatenate([[0.0], v[: len(sa) - 1]])
        lb = np.concatenate([[0.0], v[len(sa) - 1:]])
        p = np.zeros_like(pa)
        q = np.zeros_like(pb)
        p[sa] = np.exp(la - la.max()) / np.exp(la - la.max()).sum()
        q[sb] = np.exp(lb - lb.max()) / np.exp(lb - lb.max()).sum()
        return p, q

    def objective(v):
        p, q = unpack(v)
        g = _shape_rows(xa, p[None, :], xb, q[None, :], s, t)[0]
        if not (x + CONSTRAINT_MARGIN < g < y - CONSTRAINT_MARGIN):
            return 1e6
        return float(s * _entropy_rows(p[None, :], pa)[0] + t * _entropy_rows(q[None, :], pb)[0])

    v0 = np.concatenate([np.log(p0[sa][1:] / p0[sa][0]), np.log(q0[sb][1:] / q0[sb][0])])
    res = minimize(objective, v0, method="Nelder-Mead",
                   options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 2000 * dim})
    return float(res.fun) if res.fun < 1e6 else math.inf


def mean_tilt_comparison(alpha, beta, direction):
    """Size-biased ``alpha`` and the shape values with and without it."""
    if pl.is_degenerate(alpha):
        raise DomainError("alpha must be nondegenerate")
    nu1 = pl.tilt_mean(alpha)
    g_tilt = shape_function(nu1, beta, direction).g
    g_base = shape_function(alpha, beta, direction).g
    return nu1, g_tilt, g_base
