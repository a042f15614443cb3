"""Parameter laws for the row and column rates, and their expectation functionals.

Four closed variants are supported: point mass, finite discrete, uniform on an
interval and the polynomial density ``(k+1)(x-lo)^k / (hi-lo)^(k+1)`` on an
interval. Reweighted (tilted) versions of the continuous variants are carried
as ``TiltedLaw`` objects that reuse the quadrature of their base law.

Every functional has the form ``E[f(X + z)]`` where ``f`` may be singular at 0.
Whether such an expectation is infinite is decided by exact rules, never by
looking at a quadrature value:

* an atom sitting at the shift point makes any singular integrand infinite;
* for interval laws the density behaves like ``u^k`` near the lower end, so a
  pole of order ``m`` is integrable iff ``m <= k``; logarithms always are.

Infinite values are returned as ``math.inf``. NaN is never returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "PointMass",
    "FiniteDiscrete",
    "UniformInterval",
    "PolyInterval",
    "TiltedLaw",
    "ParameterLaw",
    "ess_inf",
    "mean",
    "is_degenerate",
    "mean_inv_pow",
    "mean_log_ratio",
    "mean_ratio",
    "mean_inv_prod",
    "var_inv",
    "expect_shifted",
    "inverse_moment_finite",
    "relative_entropy",
    "tilt_ratio",
    "tilt_mean",
    "law_from_spec",
    "law_to_spec",
]

PROB_TOL = 1e-12

# Graded composite Gauss-Legendre rule on [0, 1]. Panels [2^-(j+1), 2^-j]
# shrink geometrically towards the lower endpoint, where every integrand used
# here may blow up. Each panel sees a singularity at least a panel width away,
# so a fixed 20-point rule per panel is accurate to roughly machine precision.
_GL_ORDER = 20
_GL_LEVELS = 64


def _graded_rule() -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(_GL_ORDER)
    edges = np.concatenate([[0.0], 2.0 ** -np.arange(_GL_LEVELS, -1, -1)])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (lo + half)[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes.ravel(), weights.ravel()


_UNIT_NODES, _UNIT_WEIGHTS = _graded_rule()


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
    return value


class _Atomic:
    """Shared behaviour of laws with finitely many atoms."""

    atoms: tuple[float, ...]
    probs: tuple[float, ...]

    @property
    def ess_inf(self) -> float:
        return self.atoms[0]

    @cached_property
    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(self.atoms, dtype=float)
        return x - x[0], np.asarray(self.probs, dtype=float)

    def _floor_exponent(self) -> float | None:
        # An atom sits at the essential infimum: nothing singular is integrable.
        return None


@dataclass(frozen=True)
class PointMass(_Atomic):
    x: float

    def __post_init__(self):
        object.__setattr__(self, "x", _check_positive("x", self.x))

    @property
    def atoms(self) -> tuple[float, ...]:
        return (self.x,)

    @property
    def probs(self) -> tuple[float, ...]:
        return (1.0,)


@dataclass(frozen=True)
class FiniteDiscrete(_Atomic):
    """Finitely many atoms. Zero-probability atoms are dropped, duplicates
    merged, atoms sorted, and probabilities renormalized."""

    atoms: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.atoms) != len(self.probs) or len(self.atoms) == 0:
            raise ConfigError("atoms and probabilities must be non-empty and of equal length")
        merged: dict[float, float] = {}
        for x, p in zip(self.atoms, self.probs):
            x = _check_positive("atom", x)
            p = float(p)
            if not math.isfinite(p) or p < 0.0:
                raise ConfigError(f"probability must be nonnegative, got {p!r}")
            merged[x] = merged.get(x, 0.0) + p
        total = math.fsum(merged.values())
        if abs(total - 1.0) > PROB_TOL:
            raise ConfigError(f"probabilities sum to {total!r}, not 1 within {PROB_TOL}")
        kept = sorted((x, p / total) for x, p in merged.items() if p > 0.0)
        object.__setattr__(self, "atoms", tuple(x for x, _ in kept))
        object.__setattr__(self, "probs", tuple(p for _, p in kept))

    @classmethod
    def from_pairs(cls, pairs) -> "FiniteDiscrete":
        pairs = list(pairs)
        return cls(tuple(x for x, _ in pairs), tuple(p for _, p in pairs))


class _Continuous:
    lo: float
    hi: float

    @property
    def ess_inf(self) -> float:
        return self.lo

    def _density_exponent(self) -> int:
        raise NotImplementedError

    def _floor_exponent(self) -> float | None:
        return self._density_exponent()

    @cached_property
    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        k = self._density_exponent()
        width = self.hi - self.lo
        u = width * _UNIT_NODES
        # density (k+1) u^k / width^(k+1) written in the unit variable
        w = _UNIT_WEIGHTS * (k + 1) * _UNIT_NODES**k
        return u, w


def _check_interval(lo, hi) -> tuple[float, float]:
    lo = _check_positive("lo", lo)
    hi = _check_positive("hi", hi)
    if not lo < hi:
        raise ConfigError(f"interval needs lo < hi, got lo={lo!r}, hi={hi!r}")
    return lo, hi


@dataclass(frozen=True)
class UniformInterval(_Continuous):
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = _check_interval(self.lo, self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def _density_exponent(self) -> int:
        return 0


@dataclass(frozen=True)
class PolyInterval(_Continuous):
    lo: float
    hi: float
    k: int

    def __post_init__(self):
        lo, hi = _check_interval(self.lo, self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if int(self.k) != self.k or self.k < 0:
            raise ConfigError(f"k must be a nonnegative integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))

    def _density_exponent(self) -> int:
        return self.k


@dataclass(frozen=True)
class TiltedLaw:
    """A continuous base law reweighted by ``(x+z0+lam0)/(x+z0)`` (``kind="ratio"``)
    or by ``x`` (``kind="mean"``), then normalized."""

    base: Union[UniformInterval, PolyInterval, "TiltedLaw"]
    kind: str
    z0: float = 0.0
    lam0: float = 0.0
    normalizer: float = field(default=math.nan, compare=False)

    @property
    def lo(self) -> float:
        return self.base.lo

    @property
    def hi(self) -> float:
        return self.base.hi

    @property
    def ess_inf(self) -> float:
        return self.base.ess_inf

    def _pole(self) -> int:
        return int(self.kind == "ratio" and self.lam0 > 0 and _shift(self.base, self.z0) == 0.0)

    def _floor_exponent(self) -> float | None:
        return self.base._floor_exponent() - self._pole()

    def weight(self, u: np.ndarray) -> np.ndarray:
        """Unnormalized density with respect to the base, at x = lo + u."""
        if self.kind == "ratio":
            return 1.0 + self.lam0 / (u + _shift(self.base, self.z0))
        return u + self.lo

    @cached_property
    def _nodes(self) -> tuple[np.ndarray, np.ndarray]:
        u, w = self.base._nodes
        return u, w * self.weight(u) / self.normalizer


ParameterLaw = Union[PointMass, FiniteDiscrete, UniformInterval, PolyInterval, TiltedLaw]


def ess_inf(law: ParameterLaw) -> float:
    """Exact essential infimum of the support."""
    return law.ess_inf


def _shift(law: ParameterLaw, z: float) -> float:
    """Return ``ess_inf + z``, snapping rounding noise at the boundary to 0."""
    lo = law.ess_inf
    s = lo + float(z)
    tol = 8.0 * np.finfo(float).eps * max(1.0, lo, abs(z))
    if s < -tol:
        raise DomainError(f"shift z={z!r} is below -ess_inf={-lo!r}")
    return 0.0 if s <= tol else s


def expect_shifted(law: ParameterLaw, z: float, fn: Callable[[np.ndarray], np.ndarray],
                   pole: int) -> float:
    """``E[fn(X + z)]`` where ``fn(y)`` has a pole of order ``pole`` at ``y = 0``.

    ``pole = 0`` stands for a logarithmic singularity. The caller guarantees
    ``fn`` is nonnegative near 0 when the integral diverges, so divergence
    always means ``+inf``.
    """
    s = _shift(law, z)
    if s == 0.0:
        floor = law._floor_exponent()
        if floor is None or pole > floor:
            return math.inf
    u, w = law._nodes
    return float(w @ fn(u + s))


def mean(law: ParameterLaw) -> float:
    """E[X]."""
    return expect_shifted(law, 0.0, lambda y: y, 0)


def is_degenerate(law: ParameterLaw) -> bool:
    return isinstance(law, (PointMass, FiniteDiscrete)) and len(law.atoms) == 1


def mean_inv_pow(law: ParameterLaw, z: float, k: int) -> float:
    """E[(X+z)^(-k)]."""
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    return expect_shifted(law, z, lambda y: y**-k, k)


def mean_log_ratio(law: ParameterLaw, z: float, lam: float) -> float:
    """E[log((X+z+lam)/(X+z))]."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam!r}")
    _shift(law, z)
    if lam == 0:
        return 0.0
    return expect_shifted(law, z, lambda y: np.log1p(lam / y), 0)


def mean_ratio(law: ParameterLaw, z: float, lam: float) -> float:
    """E[(X+z+lam)/(X+z)]."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam!r}")
    _shift(law, z)
    if lam == 0:
        return 1.0
    return 1.0 + lam * expect_shifted(law, z, lambda y: 1.0 / y, 1)


def mean_inv_prod(law: ParameterLaw, z: float, lam: float) -> float:
    """E[1/((X+z)(X+z+lam))], the z-derivative kernel of ``mean_log_ratio``."""
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam!r}")
    return expect_shifted(law, z, lambda y: 1.0 / (y * (y + lam)), 1 if lam > 0 else 2)


def var_inv(law: ParameterLaw, z: float) -> float:
    """Var[(X+z)^(-1)], computed as a centered second moment."""
    m1 = mean_inv_pow(law, z, 1)
    if math.isinf(m1):
        return math.inf
    return expect_shifted(law, z, lambda y: (1.0 / y - m1) ** 2, 2)


def inverse_moment_finite(law: ParameterLaw, k: int) -> bool:
    """Whether E[(X - ess_inf)^(-k)] is finite."""
    if k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    floor = law._floor_exponent()
    return floor is not None and k <= floor


def relative_entropy(nu: ParameterLaw, mu: ParameterLaw) -> float:
    """H(nu | mu) for finitely supported laws, or for a tilt of ``mu``."""
    if isinstance(nu, TiltedLaw) and nu.base == mu:
        # E_nu[log(dnu/dmu)], evaluated at offsets u = x - lo
        return expect_shifted(nu, -nu.lo, lambda u: np.log(nu.weight(u) / nu.normalizer), 0)
    if not (isinstance(nu, _Atomic) and isinstance(mu, _Atomic)):
        raise DomainError("relative entropy is only available for finitely supported laws")
    base = dict(zip(mu.atoms, mu.probs))
    total = 0.0
    for x, p in zip(nu.atoms, nu.probs):
        q = base.get(x)
        if q is None:
            match = [y for y in mu.atoms if abs(y - x) <= 1e-12 * max(1.0, x)]
            if not match:
                return math.inf
            q = base[match[0]]
        total += p * math.log(p / q)
    return max(total, 0.0)


def _atomic_from(atoms, probs) -> ParameterLaw:
    if len(atoms) == 1:
        return PointMass(atoms[0])
    probs = np.asarray(probs, dtype=float)
    probs = probs / probs.sum()
    return FiniteDiscrete(tuple(atoms), tuple(probs.tolist()))


def tilt_ratio(law: ParameterLaw, z: float, lam: float) -> ParameterLaw:
    """The law with density proportional to ``(x+z+lam)/(x+z)`` against ``law``."""
    if lam == 0:
        return law
    norm = mean_ratio(law, z, lam)
    if math.isinf(norm):
        raise DomainError("tilt normalizer E[(X+z+lam)/(X+z)] is infinite")
    if isinstance(law, _Atomic):
        s = _shift(law, z)
        x = np.asarray(law.atoms)
        w = np.asarray(law.probs) * (1.0 + lam / ((x - x[0]) + s))
        return _atomic_from(law.atoms, w)
    return TiltedLaw(law, "ratio", float(z), float(lam), norm)


def tilt_mean(law: ParameterLaw) -> ParameterLaw:
    """Size-biased law, density proportional to ``x``."""
    if isinstance(law, _Atomic):
        return _atomic_from(law.atoms, np.asarray(law.atoms) * np.asarray(law.probs))
    return TiltedLaw(law, "mean", normalizer=mean(law))


def law_from_spec(spec: dict) -> ParameterLaw:
    """Build a law from a tagged record such as ``{"type": "delta", "x": 0.5}``."""
    if not isinstance(spec, dict):
        raise ConfigError(f"law spec must be an object, got {type(spec).__name__}")
    kind = spec.get("type")

    def need(key):
        if key not in spec:
            raise ConfigError(f"law spec of type {kind!r} is missing field {key!r}")
        return spec[key]

    try:
        if kind == "delta":
            return PointMass(need("x"))
        if kind == "discrete":
            atoms = need("atoms")
            if not isinstance(atoms, list) or not all(
                    isinstance(a, (list, tuple)) and len(a) == 2 for a in atoms):
                raise ConfigError("field 'atoms' must be a list of [x, p] pairs")
            law = FiniteDiscrete.from_pairs(atoms)
            return PointMass(law.atoms[0]) if len(law.atoms) == 1 else law
        if kind == "uniform":
            return UniformInterval(need("lo"), need("hi"))
        if kind == "poly":
            return PolyInterval(need("lo"), need("hi"), need("k"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"law spec of type {kind!r}: {exc}") from exc
    raise ConfigError(f"field 'type' must be one of delta, discrete, uniform, poly; got {kind!r}")


def law_to_spec(law: ParameterLaw) -> dict:
    if isinstance(law, PointMass):
        return {"type": "delta", "x": law.x}
    if isinstance(law, FiniteDiscrete):
        return {"type": "discrete", "atoms": [[x, p] for x, p in zip(law.atoms, law.probs)]}
    if isinstance(law, UniformInterval):
        return {"type": "uniform", "lo": law.lo, "hi": law.hi}
    if isinstance(law, PolyInterval):
        return {"type": "poly", "lo": law.lo, "hi": law.hi, "k": law.k}
    raise DomainError("tilted laws have no spec representation")
