"""Seeded Monte Carlo for the inhomogeneous exponential corner growth model.

Random streams are keyed by ``(seed, stream, replica)`` through numpy's
``SeedSequence`` spawn keys and fed to the counter-based Philox generator.
Every replica therefore owns an independent stream and results do not depend
on how replicas are split across worker threads.

Last-passage times are computed by an antidiagonal wavefront, vectorized over
the cells of a diagonal and over a batch of replicas.
"""

from __future__ import annotations

import csv
import enum
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import param_laws as pl
from .errors import DomainError
from .shape import as_direction

__all__ = [
    "Mode",
    "EnvSample",
    "WeightGrid",
    "PassageTable",
    "BurkeReport",
    "TasepPositions",
    "sample_law",
    "sample_env",
    "sample_weights",
    "sample_weights_stationary",
    "passage_times",
    "stationary_passage_times",
    "burke_check",
    "tasep_positions",
    "mc_passage_samples",
    "mc_shape_estimate",
    "mc_lyapunov_estimate",
    "mc_tail_estimate",
    "write_replicates_csv",
    "worker_count",
]

STREAM_A, STREAM_B, STREAM_BULK, STREAM_BOUNDARY = 0, 1, 2, 3
CHUNK_CELLS = 4_000_000


class Mode(str, enum.Enum):
    QUENCHED = "quenched"
    ANNEALED = "annealed"


@dataclass(frozen=True)
class EnvSample:
    a: np.ndarray
    b: np.ndarray
    seed: int
    mode: Mode
    replica: int = 0


@dataclass(frozen=True)
class WeightGrid:
    """Bulk weights ``W[i-1, j-1] = W(i, j)``; the stationary variant adds
    ``w_i0[i-1] = W(i, 0)`` and ``w_0j[j-1] = W(0, j)`` with ``W(0, 0) = 0``."""

    W: np.ndarray
    env: EnvSample
    w_i0: np.ndarray | None = None
    w_0j: np.ndarray | None = None
    z: float | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return self.W.shape


@dataclass(frozen=True)
class PassageTable:
    """``G[i, j]`` for ``0 <= i <= m``, ``0 <= j <= n``. Row and column 0 hold the
    boundary (zero for the bulk model)."""

    G: np.ndarray
    grid: WeightGrid
    stationary: bool = False


@dataclass(frozen=True)
class BurkeReport:
    z: float
    corner: tuple[int, int]
    I_mean: np.ndarray
    I_var: np.ndarray
    I_expected: np.ndarray
    J_mean: np.ndarray
    J_var: np.ndarray
    J_expected: np.ndarray
    mean_stat: float
    corr_stat: float
    means_pass: bool
    corr_pass: bool

    @property
    def passed(self) -> bool:
        return self.means_pass and self.corr_pass


@dataclass(frozen=True)
class TasepPositions:
    positions: np.ndarray
    unreliable: np.ndarray


def worker_count() -> int:
    raw = os.environ.get("CGMLDP_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return os.cpu_count() or 1


def _rng(seed: int, stream: int, index: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(ss))


def _uniform_open_closed(rng: np.random.Generator, size) -> np.ndarray:
    # U in (0, 1]
    return 1.0 - rng.random(size)


def sample_law(law, size: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draws from one of the closed law variants."""
    u = rng.random(size)
    if isinstance(law, (pl.PointMass, pl.FiniteDiscrete)):
        atoms = np.asarray(law.atoms)
        cdf = np.cumsum(law.probs)
        idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(atoms) - 1)
        return atoms[idx]
    if isinstance(law, pl.UniformInterval):
        return law.lo + (law.hi - law.lo) * u
    if isinstance(law, pl.PolyInterval):
        return law.lo + (law.hi - law.lo) * u ** (1.0 / (law.k + 1))
    raise DomainError(f"cannot sample from {type(law).__name__}")


def sample_env(alpha, beta, m: int, n: int, seed: int, mode=Mode.QUENCHED,
               replica: int = 0) -> EnvSample:
    """Row rates ``a_1..a_m`` and column rates ``b_1..b_n``.

    In quenched mode every replica shares the environment of index 0.
    """
    if m < 1 or n < 1:
        raise DomainError("m and n must be at least 1")
    mode = Mode(mode)
    index = 0 if mode is Mode.QUENCHED else int(replica)
    a = sample_law(alpha, m, _rng(seed, STREAM_A, index))
    b = sample_law(beta, n, _rng(seed, STREAM_B, index))
    return EnvSample(a, b, int(seed), mode, index)


def _bulk(env: EnvSample, replica: int) -> np.ndarray:
    u = _uniform_open_closed(_rng(env.seed, STREAM_BULK, replica), (len(env.a), len(env.b)))
    return -np.log(u) / (env.a[:, None] + env.b[None, :])


def sample_weights(env: EnvSample, replica: int = 0) -> WeightGrid:
    return WeightGrid(_bulk(env, replica), env)


def sample_weights_stationary(env: EnvSample, z: float, replica: int = 0) -> WeightGrid:
    if not -env.a.min() < z < env.b.min():
        raise DomainError(f"z={z!r} outside ({-env.a.min()!r}, {env.b.min()!r})")
    rng = _rng(env.seed, STREAM_BOUNDARY, replica)
    u = _uniform_open_closed(rng, len(env.a) + len(env.b))
    m = len(env.a)
    w_i0 = -np.log(u[:m]) / (env.a + z)
    w_0j = -np.log(u[m:]) / (env.b - z)
    return WeightGrid(_bulk(env, replica), env, w_i0, w_0j, float(z))


def _lpp_full(W: np.ndarray, w_i0: np.ndarray | None, w_0j: np.ndarray | None) -> np.ndarray:
    """Full tables for a batch ``W`` of shape (R, m, n)."""
    R, m, n = W.shape
    G = np.zeros((R, m + 1, n + 1))
    if w_i0 is not None:
        G[:, 1:, 0] = np.cumsum(w_i0, axis=1)
        G[:, 0, 1:] = np.cumsum(w_0j, axis=1)
    for d in range(2, m + n + 1):
        i = np.arange(max(1, d - n), min(m, d - 1) + 1)
        j = d - i
        G[:, i, j] = np.maximum(G[:, i - 1, j], G[:, i, j - 1]) + W[:, i - 1, j - 1]
    return G


def _lpp_corner(W: np.ndarray) -> np.ndarray:
    """G(m, n) for a batch of bulk grids, keeping one antidiagonal in memory."""
    R, m, n = W.shape
    prev = np.zeros((R, m + 1))
    for d in range(2, m + n + 1):
        i = np.arange(max(1, d - n), min(m, d - 1) + 1)
        cur = np.zeros((R, m + 1))
        # prev[:, i-1] = G(i-1, d-i), prev[:, i] = G(i, d-1-i); zeros on the axes
        cur[:, i] = np.maximum(prev[:, i - 1], prev[:, i]) + W[:, i - 1, d - i - 1]
        prev = cur
    return prev[:, m]


def passage_times(grid: WeightGrid) -> PassageTable:
    return PassageTable(_lpp_full(grid.W[None], None, None)[0], grid)


def stationary_passage_times(grid: WeightGrid) -> PassageTable:
    if grid.w_i0 is None:
        raise DomainError("grid has no boundary weights")
    G = _lpp_full(grid.W[None], grid.w_i0[None], grid.w_0j[None])[0]
    return PassageTable(G, grid, stationary=True)


def _chunks(reps: int, cells: int) -> list[range]:
    size = max(1, min(reps, CHUNK_CELLS // max(cells, 1)))
    return [range(k, min(k + size, reps)) for k in range(0, reps, size)]


def _run_chunks(fn, reps: int, cells: int) -> list:
    chunks = _chunks(reps, cells)
    workers = min(worker_count(), len(chunks))
    if workers <= 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, chunks))


def _grid_dims(direction, n: int) -> tuple[int, int]:
    s, t = as_direction(direction)
    m, k = int(math.floor(n * s)), int(math.floor(n * t))
    if m < 1 or k < 1:
        raise DomainError(f"n={n} too small for direction ({s}, {t})")
    return m, k


def mc_passage_samples(alpha, beta, direction, n: int, reps: int, seed: int,
                       mode=Mode.QUENCHED) -> np.ndarray:
    """``G(floor(ns), floor(nt))`` for each replica, in replica order."""
    if reps < 1:
        raise DomainError("reps must be at least 1")
    m, k = _grid_dims(direction, n)
    mode = Mode(mode)
    fixed = sample_env(alpha, beta, m, k, seed, mode) if mode is Mode.QUENCHED else None

    def work(chunk: range) -> np.ndarray:
        W = np.empty((len(chunk), m, k))
        for slot, rep in enumerate(chunk):
            env = fixed if fixed is not None else sample_env(alpha, beta, m, k, seed, mode, rep)
            W[slot] = _bulk(env, rep)
        return _lpp_corner(W)

    return np.concatenate(_run_chunks(work, reps, m * k))


def mc_shape_estimate(alpha, beta, direction, n: int, reps: int, seed: int,
                      mode=Mode.QUENCHED) -> tuple[float, float]:
    """Mean and standard error of ``G / n``."""
    g = mc_passage_samples(alpha, beta, direction, n, reps, seed, mode) / n
    err = float(g.std(ddof=1) / math.sqrt(reps)) if reps > 1 else math.inf
    return float(g.mean()), err


def mc_lyapunov_estimate(alpha, beta, direction, lam: float, n: int, reps: int, seed: int,
                         mode=Mode.QUENCHED) -> float:
    """``n^-1 log`` of the sample mean of ``exp(lam G)``."""
    if lam == 0:
        return 0.0
    if lam > 0.5 * (alpha.ess_inf + beta.ess_inf):
        warnings.warn("lambda above half the finiteness threshold: the estimate is "
                      "dominated by rare replicas", RuntimeWarning, stacklevel=2)
    g = mc_passage_samples(alpha, beta, direction, n, reps, seed, mode)
    return float((logsumexp(lam * g) - math.log(reps)) / n)


def mc_tail_estimate(alpha, beta, direction, r: float, n: int, reps: int, seed: int,
                     mode=Mode.QUENCHED, side: str = "upper") -> float:
    """``-n^-1 log`` of the frequency of ``G >= nr`` (``side="lower"``: ``G <= nr``)."""
    g = mc_passage_samples(alpha, beta, direction, n, reps, seed, mode)
    if side == "upper":
        freq = float(np.mean(g >= n * r))
    elif side == "lower":
        freq = float(np.mean(g <= n * r))
    else:
        raise DomainError(f"side must be 'upper' or 'lower', got {side!r}")
    return math.inf if freq == 0 else -math.log(freq) / n


def burke_check(alpha, beta, z: float, m: int, n: int, reps: int, seed: int,
                n_sigma: float = 4.0) -> BurkeReport:
    """Empirical check of the increment laws in the stationary model.

    Means of ``I(i, n) = G(i, n) - G(i-1, n)`` and ``J(m, j) = G(m, j) - G(m, j-1)``
    are compared with ``1/(a_i+z)`` and ``1/(b_j-z)``. Pairwise correlations are
    tested on the increments along the down-right path through the corner
    ``(k, l) = (m // 2, n // 2)``: ``J(k, j)`` for ``j > l`` and ``I(i, l)`` for ``i > k``.
    """
    if not -alpha.ess_inf < z < beta.ess_inf:
        raise DomainError(f"z={z!r} outside ({-alpha.ess_inf!r}, {beta.ess_inf!r})")
    if reps < 2:
        raise DomainError("reps must be at least 2")
    env = sample_env(alpha, beta, m, n, seed, Mode.QUENCHED)
    k, l = m // 2, n // 2

    def work(chunk: range):
        grids = [sample_weights_stationary(env, z, rep) for rep in chunk]
        G = _lpp_full(np.stack([g.W for g in grids]), np.stack([g.w_i0 for g in grids]),
                      np.stack([g.w_0j for g in grids]))
        I_top = np.diff(G[:, :, n], axis=1)
        J_right = np.diff(G[:, m, :], axis=1)
        path = np.concatenate([np.diff(G[:, k, l:], axis=1), np.diff(G[:, k:, l], axis=1)],
                              axis=1)
        return I_top, J_right, path

    parts = _run_chunks(work, reps, m * n)
    I_top = np.concatenate([p[0] for p in parts])
    J_right = np.concatenate([p[1] for p in parts])
    path = np.concatenate([p[2] for p in parts])

    I_exp = 1.0 / (env.a + z)
    J_exp = 1.0 / (env.b - z)
    root = math.sqrt(reps)
    # an exponential variable has standard deviation equal to its mean
    stat_I = np.abs(I_top.mean(0) - I_exp) / (I_exp / root)
    stat_J = np.abs(J_right.mean(0) - J_exp) / (J_exp / root)
    mean_stat = float(max(stat_I.max(), stat_J.max()))
    corr = np.corrcoef(path, rowvar=False)
    off = corr[~np.eye(len(corr), dtype=bool)]
    corr_stat = float(np.abs(off).max() * root) if off.size else 0.0
    return BurkeReport(
        z=float(z), corner=(k, l),
        I_mean=I_top.mean(0), I_var=I_top.var(0, ddof=1), I_expected=I_exp,
        J_mean=J_right.mean(0), J_var=J_right.var(0, ddof=1), J_expected=J_exp,
        mean_stat=mean_stat, corr_stat=corr_stat,
        means_pass=mean_stat <= n_sigma, corr_pass=corr_stat <= n_sigma,
    )


def tasep_positions(table: PassageTable, t: float) -> TasepPositions:
    """``sigma(i, t) = -i + max{j : G(i, j) <= t}`` for ``i = 1..m``.

    Positions whose maximizing ``j`` is the last column of the table are
    flagged unreliable: the true maximum may lie outside the window.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    G = table.G[1:, 1:]
    m, n = G.shape
    counts = np.array([np.searchsorted(G[i], t, side="right") for i in range(m)])
    return TasepPositions(counts - np.arange(1, m + 1), counts == n)


def write_replicates_csv(handle, n: int, values) -> None:
    """Replicate-level records with columns ``replicate, n, value``."""
    writer = csv.writer(handle)
    writer.writerow(["replicate", "n", "value"])
    for rep, value in enumerate(values):
        writer.writerow([rep, n, format(float(value), ".17g")])
