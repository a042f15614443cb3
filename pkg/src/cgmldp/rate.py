"""Right-tail rate functions, their closed-form special cases and small-deviation expansions.

The right-tail rate is the convex conjugate of the Lyapunov exponent,

    J(r) = sup_{0 <= lam <= lam_max} { lam r - L(lam) },

with ``lam_max = ess_inf(alpha) + ess_inf(beta)``. Since ``L'`` increases
continuously from ``g(s, t)`` to its left limit at ``lam_max``, the maximizer
is the root of ``L'(lam) = r`` when ``r`` is below that limit, and ``lam_max``
otherwise (the rate is then affine in ``r``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.optimize import minimize_scalar

from . import param_laws as pl
from ._roots import increasing_root
from .errors import ConsistencyError, DomainError
from .lyapunov import Kind, LyapunovCurve
from .shape import Region, as_direction, kpz_constant, phase_portrait, shape_function

__all__ = [
    "Regime",
    "RateEval",
    "ExpansionReport",
    "right_tail_J",
    "quenched_J",
    "annealed_J",
    "quenched_I",
    "closed_form_J_homogeneous",
    "closed_form_J_twopoint",
    "closed_form_J_uniform",
    "tasep_rate",
    "expansion",
    "expansion_table",
    "legendre_dual",
    "kpz_normalized_rate",
]


class Regime(str, enum.Enum):
    BELOW_SHAPE = "BelowShape"
    INTERIOR = "Interior"
    LINEAR_TAIL = "LinearTail"


@dataclass(frozen=True)
class RateEval:
    r: float
    value: float
    lambda_star: float
    z_star: float
    regime: Regime


@dataclass(frozen=True)
class ExpansionReport:
    region: Region
    exponent: float
    coefficient: float | None
    moment_condition_met: bool


def _rate_on_curve(curve: LyapunovCurve, r: float) -> RateEval:
    r = float(r)
    if r <= curve.g:
        return RateEval(r, 0.0, 0.0, curve.zeta, Regime.BELOW_SHAPE)
    top = curve.lam_max
    slope_top = curve.prime_endpoint()
    if r >= slope_top:
        pt = curve.point(top)
        return RateEval(r, top * r - pt.value, top, pt.zhat, Regime.LINEAR_TAIL)
    lam = increasing_root(lambda x: curve.prime(x) - r, 0.0, top,
                          curve.g - r, slope_top - r)
    pt = curve.point(lam)
    return RateEval(r, max(lam * r - pt.value, 0.0), lam, pt.zhat, Regime.INTERIOR)


def right_tail_J(kind, alpha, beta, direction, r: float) -> RateEval:
    return _rate_on_curve(LyapunovCurve(kind, alpha, beta, direction), r)


def quenched_J(alpha, beta, direction, r: float) -> RateEval:
    return right_tail_J(Kind.QUENCHED, alpha, beta, direction, r)


def annealed_J(alpha, beta, direction, r: float) -> RateEval:
    return right_tail_J(Kind.ANNEALED, alpha, beta, direction, r)


def quenched_I(alpha, beta, direction, r: float) -> float:
    """Full quenched rate: the right-tail rate above g and ``inf`` below it."""
    curve = LyapunovCurve(Kind.QUENCHED, alpha, beta, direction)
    if r < curve.g:
        return math.inf
    return _rate_on_curve(curve, r).value


def legendre_dual(kind, alpha, beta, direction, lam: float, xatol: float = 1e-7
                  ) -> tuple[float, float]:
    """``sup_r {lam r - J(r)}`` and its maximizer, computed from J values only."""
    curve = LyapunovCurve(kind, alpha, beta, direction)
    if not 0 < lam < curve.lam_max:
        raise DomainError(f"lambda={lam!r} outside (0, {curve.lam_max!r})")

    def objective(r):
        return lam * r - _rate_on_curve(curve, r).value

    # grow a bracket until the concave objective turns down
    g = curve.g
    step = max(g, 1.0)
    left, mid, right = g, g + step, g + 2 * step
    f_mid, f_right = objective(mid), objective(right)
    while f_right > f_mid:
        left, mid, f_mid = mid, right, f_right
        step *= 2
        right = mid + step
        f_right = objective(right)
    res = minimize_scalar(lambda r: -objective(r), bounds=(left, right), method="bounded",
                          options={"xatol": xatol * max(1.0, right)})
    return -res.fun, res.x


def closed_form_J_homogeneous(c: float, direction, r: float) -> float:
    """Rate for constant rates ``a_i = b_j = c/2``."""
    s, t = as_direction(direction)
    g = (math.sqrt(s) + math.sqrt(t)) ** 2 / c
    if r < g * (1 - 1e-14):
        raise DomainError(f"r={r!r} below the shape value {g!r}")
    root = math.sqrt(max((s + t - c * r) ** 2 - 4 * s * t, 0.0))
    arg_s = max((s - t + c * r) / (2 * math.sqrt(c * s * r)), 1.0)
    arg_t = max((t - s + c * r) / (2 * math.sqrt(c * t * r)), 1.0)
    return root - 2 * s * math.acosh(arg_s) - 2 * t * math.acosh(arg_t)


def closed_form_J_twopoint(p: float, q: float, c: float, d: float, s: float, r: float) -> float:
    """Rate on the diagonal for ``alpha = beta = p delta_c + q delta_d``.

    By symmetry the optimal ``z`` is ``-lam/2``; with ``w = lam/2`` the
    first-order condition ``L'(lam) = r`` is a quadratic in ``u = w^2``:

        r u^2 - (r(c^2+d^2) - 2s(pc+qd)) u + r c^2 d^2 - 2s(p c d^2 + q d c^2) = 0,

    whose smaller root vanishes at ``r = g`` and is the one used.
    """
    if abs(p + q - 1.0) > 1e-12 or p < 0 or q < 0:
        raise DomainError("p and q must be nonnegative and sum to 1")
    if c <= 0 or d <= 0 or s <= 0:
        raise DomainError("c, d and s must be positive")
    g = 2 * s * (p / c + q / d)
    if r < g * (1 - 1e-14):
        raise DomainError(f"r={r!r} below the shape value {g!r}")
    b = r * (c * c + d * d) - 2 * s * (p * c + q * d)
    k = r * c * c * d * d - 2 * s * (p * c * d * d + q * d * c * c)
    disc = b * b - 4 * r * k
    if disc < 0:
        raise ConsistencyError(f"negative discriminant {disc!r}")
    sq = math.sqrt(disc)
    # smaller root, in the cancellation-free form
    u = 2 * k / (b + sq) if b > 0 else (b - sq) / (2 * r)
    cap = min(c, d) ** 2
    if u < 0:
        if u < -1e-14 * cap:
            raise ConsistencyError(f"root u={u!r} is negative")
        u = 0.0
    if u >= cap:
        raise ConsistencyError(f"root u={u!r} outside [0, {cap!r})")
    w = math.sqrt(u)
    logs = p * (math.log1p(w / c) - math.log1p(-w / c)) + q * (
        math.log1p(w / d) - math.log1p(-w / d))
    return max(2 * w * r - 2 * s * logs, 0.0)


def closed_form_J_uniform(c: float, l: float, s: float, r: float) -> float:
    """Rate on the diagonal for ``alpha = beta`` uniform on ``[c/2, c/2 + l]``."""
    if c <= 0 or l <= 0 or s <= 0:
        raise DomainError("c, l and s must be positive")
    lo, hi = c / 2, c / 2 + l
    g = (2 * s / l) * math.log1p(2 * l / c)
    if r < g * (1 - 1e-14):
        raise DomainError(f"r={r!r} below the shape value {g!r}")
    # w^2 = ((c/2+l)^2 - (c^2/4) e^{rl/s}) / (1 - e^{rl/s}), rearranged with expm1
    u = lo * lo - (hi * hi - lo * lo) / math.expm1(r * l / s)
    if u < 0:
        if u < -1e-14 * lo * lo:
            raise ConsistencyError(f"root w^2={u!r} is negative")
        u = 0.0
    if u >= lo * lo:
        raise ConsistencyError(f"root w^2={u!r} outside [0, {lo * lo!r})")
    w = math.sqrt(u)

    def antiderivative(x):
        # integral of log((x+w)/(x-w)) dx
        minus = (x - w) * math.log(x - w) if x > w else 0.0
        return (x + w) * math.log(x + w) - minus

    integral = antiderivative(hi) - antiderivative(lo)
    return max(2 * w * r - (2 * s / l) * integral, 0.0)


def tasep_rate(kind, alpha, beta, x: float, y: float, t: float) -> float:
    """Rate of ``sigma(floor(nx), nt) > floor(ny)``: the right-tail rate in direction (x, x+y)."""
    if not (x > 0 and y > 0 and t > 0):
        raise DomainError("x, y and t must be positive")
    return right_tail_J(kind, alpha, beta, (x, x + y), t).value


def expansion(kind, alpha, beta, direction) -> ExpansionReport:
    """Leading-order behaviour of ``J(g + eps)`` as ``eps -> 0``.

    Coefficients come from closed-form moments at ``zeta`` or at the ends of
    the ``z`` range. In the quenched boundary directions the coefficient is
    reported only when the relevant third inverse moment is finite.
    """
    kind = Kind(kind)
    s, t = direction = as_direction(direction)
    portrait = phase_portrait(alpha, beta, direction)
    region, zeta = portrait.region, portrait.zeta
    a_lo, b_lo = alpha.ess_inf, beta.ess_inf

    def ma(z, k):
        return pl.mean_inv_pow(alpha, z, k)

    def mb(z, k):
        return pl.mean_inv_pow(beta, -z, k)

    if kind is Kind.QUENCHED:
        if region is Region.LINEAR_A:
            coef = 1.0 / (-2 * s * ma(-a_lo, 2) + 2 * t * mb(-a_lo, 2))
            return ExpansionReport(region, 2.0, coef, True)
        if region is Region.LINEAR_B:
            coef = 1.0 / (2 * s * ma(b_lo, 2) - 2 * t * mb(b_lo, 2))
            return ExpansionReport(region, 2.0, coef, True)
        if region is Region.CONCAVE:
            coef = (4.0 / 3.0) / math.sqrt(s * ma(zeta, 3) + t * mb(zeta, 3))
            return ExpansionReport(region, 1.5, coef, True)
        side = alpha if region is Region.BOUNDARY_A else beta
        if not pl.inverse_moment_finite(side, 3):
            return ExpansionReport(region, 1.5, None, False)
        z = -a_lo if region is Region.BOUNDARY_A else b_lo
        coef = (2.0 / 3.0) / math.sqrt(s * ma(z, 3) + t * mb(z, 3))
        return ExpansionReport(region, 1.5, coef, True)

    if pl.is_degenerate(alpha) and pl.is_degenerate(beta):
        raise DomainError("the annealed expansion needs at least one nondegenerate law")
    if region is Region.LINEAR_A:
        z = -a_lo
        denom = -s * ma(z, 1) ** 2 + t * pl.var_inv(beta, -z) + t * mb(z, 2)
    elif region is Region.LINEAR_B:
        z = b_lo
        denom = s * pl.var_inv(alpha, z) + s * ma(z, 2) - t * mb(z, 1) ** 2
    else:
        denom = s * pl.var_inv(alpha, zeta) + t * pl.var_inv(beta, -zeta)
    return ExpansionReport(region, 2.0, 1.0 / (2.0 * denom), True)


def expansion_table(kind, alpha, beta, direction, eps_grid) -> list[dict]:
    """Rows of ``J(g+eps)`` next to ``coefficient * eps^exponent``."""
    report = expansion(kind, alpha, beta, direction)
    curve = LyapunovCurve(kind, alpha, beta, direction)
    rows = []
    for eps in eps_grid:
        value = _rate_on_curve(curve, curve.g + eps).value
        pred = None if report.coefficient is None else report.coefficient * eps**report.exponent
        rows.append({
            "eps": eps,
            "J": value,
            "prediction": pred,
            "ratio": None if not pred else value / pred,
        })
    return rows


def kpz_normalized_rate(alpha, beta, direction, u: float) -> float:
    """``J(g + C^(1/3) u)``, which behaves like ``(4/3) u^(3/2)`` at small ``u``
    in the strictly concave region."""
    c = kpz_constant(alpha, beta, direction)
    g = shape_function(alpha, beta, direction).g
    return quenched_J(alpha, beta, direction, g + c ** (1.0 / 3.0) * u).value
