"""Quenched, annealed and stationary Lyapunov exponents.

Both exponents are infima over ``z`` in ``[-ess_inf(alpha), ess_inf(beta) - lam]``
of a function ``F(z, lam)``:

* quenched: ``s E log((a+z+lam)/(a+z)) + t E log((b-z)/(b-z-lam))``
* annealed: ``s log E[(a+z+lam)/(a+z)] + t log E[(b-z)/(b-z-lam)]``

``F`` is convex in ``z``, so the minimizer ``zhat`` is found from the sign of
``dF/dz`` at the two ends and, if needed, a bracketed root in between. The
derivative in ``lam`` is evaluated in closed form; when ``zhat`` sits on the
moving end ``ess_inf(beta) - lam`` its total derivative picks up ``-dF/dz``.

For ``lam < 0`` the exponent is ``-lam * g(s, t)``; only ``lam >= 0`` is exposed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import param_laws as pl
from ._roots import increasing_root
from .errors import DomainError
from .shape import as_direction, shape_function

__all__ = [
    "Kind",
    "Boundary",
    "LyapunovPoint",
    "CriticalLambdas",
    "quenched_L",
    "annealed_L",
    "lyapunov_L",
    "critical_lambdas",
    "L_prime",
    "L_prime_endpoint",
    "stationary_L",
    "lambda_max",
    "LyapunovCurve",
]

LAMBDA_FLOOR = 1e-12


class Kind(str, enum.Enum):
    QUENCHED = "quenched"
    ANNEALED = "annealed"


class Boundary(str, enum.Enum):
    INTERIOR = "Interior"
    AT_MINUS_ALPHA = "AtMinusAlpha"
    AT_BETA_MINUS_LAMBDA = "AtBetaMinusLambda"
    AT_LAMBDA_ENDPOINT = "AtLambdaEndpoint"


@dataclass(frozen=True)
class LyapunovPoint:
    lam: float
    value: float
    zhat: float
    boundary: Boundary


@dataclass(frozen=True)
class CriticalLambdas:
    lambda1: float
    lambda2: float
    lambda0: float


def lambda_max(alpha, beta) -> float:
    """ess_inf(alpha) + ess_inf(beta), the finiteness threshold in lambda."""
    return alpha.ess_inf + beta.ess_inf


def _signed_sum(s: float, neg: float, t: float, pos: float) -> float:
    """``-s*neg + t*pos`` for ``neg, pos >= 0`` possibly infinite (not both)."""
    if math.isinf(neg) and math.isinf(pos):
        raise DomainError("both sides of the boundary condition are infinite")
    return -s * neg + t * pos


def _quotient(num: float, den: float) -> float:
    # num/den with an infinite numerator read as +inf, per the boundary convention
    return math.inf if math.isinf(num) else num / den


class _Objective:
    """F(z, lam) and its partial derivatives for one law pair and direction."""

    def __init__(self, kind, alpha, beta, direction):
        self.kind = Kind(kind)
        self.alpha, self.beta = alpha, beta
        self.s, self.t = as_direction(direction)
        self.a_lo, self.b_lo = alpha.ess_inf, beta.ess_inf
        self.lam_max = self.a_lo + self.b_lo

    # b-side quantities are written through the shift c = -z - lam, so that
    # b - z - lam = b + c and b - z = b + c + lam.

    def F(self, z: float, lam: float) -> float:
        c = -z - lam
        if self.kind is Kind.QUENCHED:
            return (self.s * pl.mean_log_ratio(self.alpha, z, lam)
                    + self.t * pl.mean_log_ratio(self.beta, c, lam))
        return (self.s * math.log(pl.mean_ratio(self.alpha, z, lam))
                + self.t * math.log(pl.mean_ratio(self.beta, c, lam)))

    def _dz_terms(self, z: float, lam: float) -> tuple[float, float]:
        """(A, B) with dF/dz = lam * (-s A + t B), A, B >= 0."""
        c = -z - lam
        if self.kind is Kind.QUENCHED:
            return pl.mean_inv_prod(self.alpha, z, lam), pl.mean_inv_prod(self.beta, c, lam)
        ra = pl.mean_ratio(self.alpha, z, lam)
        rb = pl.mean_ratio(self.beta, c, lam)
        a = _quotient(pl.mean_inv_pow(self.alpha, z, 2), ra)
        b = _quotient(pl.mean_inv_pow(self.beta, c, 2), rb)
        return a, b

    def dz_scaled(self, z: float, lam: float) -> float:
        """dF/dz divided by lam; same sign as dF/dz."""
        a, b = self._dz_terms(z, lam)
        return _signed_sum(self.s, a, self.t, b)

    def dlam(self, z: float, lam: float) -> float:
        c = -z - lam
        if self.kind is Kind.QUENCHED:
            return (self.s * pl.mean_inv_pow(self.alpha, z + lam, 1)
                    + self.t * pl.mean_inv_pow(self.beta, c, 1))
        ra = pl.mean_ratio(self.alpha, z, lam)
        rb = pl.mean_ratio(self.beta, c, lam)
        b_num = pl.mean_inv_pow(self.beta, c, 1)
        b_num = b_num + lam * pl.mean_inv_pow(self.beta, c, 2) if math.isfinite(b_num) else b_num
        return (self.s * _quotient(pl.mean_inv_pow(self.alpha, z, 1), ra)
                + self.t * _quotient(b_num, rb))

    def dlam_minus_dz(self, z: float, lam: float) -> float:
        """Total lam-derivative of F(z, lam) along z = ess_inf(beta) - lam."""
        c = -z - lam
        if self.kind is Kind.QUENCHED:
            return (self.s * pl.mean_inv_pow(self.alpha, z, 1)
                    + self.t * pl.mean_inv_pow(self.beta, -z, 1))
        ra = pl.mean_ratio(self.alpha, z, lam)
        rb = pl.mean_ratio(self.beta, c, lam)
        a_num = pl.mean_inv_pow(self.alpha, z, 1)
        a_num = a_num + lam * pl.mean_inv_pow(self.alpha, z, 2) if math.isfinite(a_num) else a_num
        return (self.s * _quotient(a_num, ra)
                + self.t * _quotient(pl.mean_inv_pow(self.beta, c, 1), rb))

    def minimize(self, lam: float) -> tuple[float, Boundary]:
        """Inner minimizer for 0 < lam < lam_max."""
        lo, hi = -self.a_lo, self.b_lo - lam
        d_lo = self.dz_scaled(lo, lam)
        if d_lo >= 0:
            return lo, Boundary.AT_MINUS_ALPHA
        d_hi = self.dz_scaled(hi, lam)
        if d_hi <= 0:
            return hi, Boundary.AT_BETA_MINUS_LAMBDA
        z = increasing_root(lambda x: self.dz_scaled(x, lam), lo, hi, d_lo, d_hi)
        return z, Boundary.INTERIOR


def _at_lambda_endpoint(lam: float, lam_max: float) -> bool:
    return abs(lam - lam_max) <= 4.0 * 2.220446049250313e-16 * lam_max


class LyapunovCurve:
    """Exponent of one kind for a fixed law pair and direction.

    Holds the shape value and the objective so repeated evaluations along
    ``lam`` (root finding in the rate module) skip the setup work.
    """

    def __init__(self, kind, alpha, beta, direction):
        self.obj = _Objective(kind, alpha, beta, direction)
        self.kind = self.obj.kind
        self.alpha, self.beta = alpha, beta
        self.direction = as_direction(direction)
        self.lam_max = self.obj.lam_max
        self.g, self.zeta = shape_function(alpha, beta, self.direction)
        self._endpoint_slope = None

    def point(self, lam: float) -> LyapunovPoint:
        obj = self.obj
        lam = float(lam)
        if not lam >= 0:
            raise DomainError(f"lambda must be nonnegative, got {lam!r}")
        if lam == 0:
            if self.zeta == -obj.a_lo:
                where = Boundary.AT_MINUS_ALPHA
            elif self.zeta == obj.b_lo:
                where = Boundary.AT_BETA_MINUS_LAMBDA
            else:
                where = Boundary.INTERIOR
            return LyapunovPoint(0.0, 0.0, self.zeta, where)
        if _at_lambda_endpoint(lam, self.lam_max):
            # only z = -ess_inf(alpha) is admissible
            value = obj.F(-obj.a_lo, self.lam_max)
            return LyapunovPoint(lam, value, -obj.a_lo, Boundary.AT_LAMBDA_ENDPOINT)
        if lam > self.lam_max:
            return LyapunovPoint(lam, math.inf, -obj.a_lo, Boundary.AT_LAMBDA_ENDPOINT)
        z, where = obj.minimize(lam)
        return LyapunovPoint(lam, max(obj.F(z, lam), 0.0), z, where)

    def value(self, lam: float) -> float:
        return self.point(lam).value

    def prime(self, lam: float) -> float:
        """dL/dlam on [0, lam_max], with the endpoint read as a left limit."""
        if lam == 0:
            return self.g
        if lam >= self.lam_max:
            return self.prime_endpoint()
        if lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {lam!r}")
        z, where = self.obj.minimize(lam)
        if where is Boundary.AT_BETA_MINUS_LAMBDA:
            return self.obj.dlam_minus_dz(z, lam)
        return self.obj.dlam(z, lam)

    def prime_endpoint(self) -> float:
        if self._endpoint_slope is None:
            obj = self.obj
            z, lam = -obj.a_lo, obj.lam_max
            a, b = obj._dz_terms(z, lam)
            if math.isinf(a) and math.isinf(b):
                slope = math.inf
            elif _signed_sum(obj.s, a, obj.t, b) <= 0:
                slope = obj.dlam_minus_dz(z, lam)
            else:
                slope = obj.dlam(z, lam)
            self._endpoint_slope = slope
        return self._endpoint_slope


def lyapunov_L(kind, alpha, beta, direction, lam: float) -> LyapunovPoint:
    """Lyapunov exponent of the given kind at ``lam >= 0``."""
    return LyapunovCurve(kind, alpha, beta, direction).point(lam)


def quenched_L(alpha, beta, direction, lam: float) -> LyapunovPoint:
    return lyapunov_L(Kind.QUENCHED, alpha, beta, direction, lam)


def annealed_L(alpha, beta, direction, lam: float) -> LyapunovPoint:
    return lyapunov_L(Kind.ANNEALED, alpha, beta, direction, lam)


def critical_lambdas(kind, alpha, beta, direction) -> CriticalLambdas:
    """Thresholds past which the inner minimizer sticks to an end of its range.

    ``lambda1`` is where ``zhat`` reaches ``-ess_inf(alpha)`` and ``lambda2``
    where it reaches ``ess_inf(beta) - lam``. Both are capped at the
    finiteness threshold. If a condition already holds at ``lam = 1e-12``
    that bracket end is returned.
    """
    obj = _Objective(kind, alpha, beta, direction)
    top = obj.lam_max * (1.0 - 1e-12)

    def holds1(lam):
        return obj.dz_scaled(-obj.a_lo, lam) >= 0

    def holds2(lam):
        return obj.dz_scaled(obj.b_lo - lam, lam) <= 0

    def threshold(pred):
        if pred(LAMBDA_FLOOR):
            return LAMBDA_FLOOR
        if not pred(top):
            return obj.lam_max
        lo, hi = LAMBDA_FLOOR, top
        while hi - lo > 1e-13 * obj.lam_max:
            mid = 0.5 * (lo + hi)
            if pred(mid):
                hi = mid
            else:
                lo = mid
        return hi

    l1, l2 = threshold(holds1), threshold(holds2)
    return CriticalLambdas(l1, l2, min(l1, l2))


def L_prime(kind, alpha, beta, direction, lam: float) -> float:
    """dL/dlam for 0 < lam < ess_inf(alpha) + ess_inf(beta); ``lam = 0`` gives g."""
    curve = LyapunovCurve(kind, alpha, beta, direction)
    if not 0 <= lam < curve.lam_max:
        raise DomainError(f"lambda={lam!r} outside (0, {curve.lam_max!r})")
    return curve.prime(lam)


def L_prime_endpoint(kind, alpha, beta, direction) -> float:
    """Left limit of dL/dlam at lam = ess_inf(alpha) + ess_inf(beta); may be inf."""
    return LyapunovCurve(kind, alpha, beta, direction).prime_endpoint()


def stationary_L(alpha, beta, z: float, direction, lam: float) -> float:
    """Quenched Lyapunov exponent of the stationary model with boundary tilt ``z``."""
    s, t = as_direction(direction)
    a_lo, b_lo = alpha.ess_inf, beta.ess_inf
    if not -a_lo < z < b_lo:
        raise DomainError(f"z={z!r} outside ({-a_lo!r}, {b_lo!r})")
    cap = min(a_lo + z, b_lo - z)
    if not 0 <= lam < cap:
        raise DomainError(f"lambda={lam!r} outside (0, {cap!r})")
    if lam == 0:
        return 0.0
    first = s * pl.mean_log_ratio(alpha, z - lam, lam) + t * pl.mean_log_ratio(beta, -z, lam)
    second = s * pl.mean_log_ratio(alpha, z, lam) + t * pl.mean_log_ratio(beta, -z - lam, lam)
    return max(first, second)
