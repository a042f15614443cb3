"""Shape function, its minimizer and the phase portrait of linear regions.

For a tilt parameter ``z`` in ``[-ess_inf(alpha), ess_inf(beta)]`` the
stationary shape is ``g_z(s, t) = s E[1/(a+z)] + t E[1/(b-z)]``; the shape
function is its minimum over ``z``. ``g_z`` is strictly convex in ``z`` with

    d/dz g_z = -s E[(a+z)^-2] + t E[(b-z)^-2],

which is increasing, so the minimizer is located from the sign of this
derivative: at the endpoints first, then by a bracketed root in between.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from . import param_laws as pl
from ._roots import increasing_root
from .errors import DomainError

__all__ = [
    "Direction",
    "Region",
    "PhasePortrait",
    "Shape",
    "as_direction",
    "stationary_shape",
    "shape_derivative",
    "shape_function",
    "phase_portrait",
    "kpz_constant",
]


REGION_RTOL = 1e-12


class Direction(NamedTuple):
    s: float
    t: float


def as_direction(direction) -> Direction:
    s, t = (float(v) for v in direction)
    if not (s > 0 and t > 0 and math.isfinite(s) and math.isfinite(t)):
        raise DomainError(f"direction needs s > 0 and t > 0, got ({s!r}, {t!r})")
    return Direction(s, t)


class Region(str, enum.Enum):
    LINEAR_A = "LinearA"
    BOUNDARY_A = "BoundaryA"
    CONCAVE = "Concave"
    BOUNDARY_B = "BoundaryB"
    LINEAR_B = "LinearB"


@dataclass(frozen=True)
class PhasePortrait:
    c1: float
    c2: float
    zeta: float
    region: Region


class Shape(NamedTuple):
    g: float
    zeta: float


def _check_z(alpha, beta, z: float) -> None:
    if z < -alpha.ess_inf - 1e-15 * max(1.0, alpha.ess_inf) or \
            z > beta.ess_inf + 1e-15 * max(1.0, beta.ess_inf):
        raise DomainError(
            f"z={z!r} outside [{-alpha.ess_inf!r}, {beta.ess_inf!r}]")


def stationary_shape(alpha, beta, z: float, direction) -> float:
    """g_z(s, t); may be ``inf`` at an endpoint."""
    s, t = as_direction(direction)
    _check_z(alpha, beta, z)
    return s * pl.mean_inv_pow(alpha, z, 1) + t * pl.mean_inv_pow(beta, -z, 1)


def shape_derivative(alpha, beta, z: float, direction) -> float:
    """d/dz g_z(s, t). At most one of the two terms can be infinite."""
    s, t = as_direction(direction)
    _check_z(alpha, beta, z)
    return -s * pl.mean_inv_pow(alpha, z, 2) + t * pl.mean_inv_pow(beta, -z, 2)


def _zeta(alpha, beta, direction: Direction) -> float:
    lo, hi = -alpha.ess_inf, beta.ess_inf
    d_lo = shape_derivative(alpha, beta, lo, direction)
    if d_lo >= 0:
        return lo
    d_hi = shape_derivative(alpha, beta, hi, direction)
    if d_hi <= 0:
        return hi
    return increasing_root(lambda z: shape_derivative(alpha, beta, z, direction),
                           lo, hi, d_lo, d_hi)


def shape_function(alpha, beta, direction) -> Shape:
    """Shape function value and its unique minimizer ``zeta``."""
    direction = as_direction(direction)
    zeta = _zeta(alpha, beta, direction)
    return Shape(stationary_shape(alpha, beta, zeta, direction), zeta)


def phase_portrait(alpha, beta, direction) -> PhasePortrait:
    s, t = direction = as_direction(direction)
    a_lo, b_lo = alpha.ess_inf, beta.ess_inf
    m_a = pl.mean_inv_pow(alpha, -a_lo, 2)
    c1 = 0.0 if math.isinf(m_a) else pl.mean_inv_pow(beta, a_lo, 2) / m_a
    m_b = pl.mean_inv_pow(beta, -b_lo, 2)
    c2 = math.inf if math.isinf(m_b) else m_b / pl.mean_inv_pow(alpha, b_lo, 2)
    ratio = s / t
    # thresholds come out of quadrature, so equality is read to a relative tolerance
    if math.isclose(ratio, c1, rel_tol=REGION_RTOL):
        region = Region.BOUNDARY_A
    elif math.isclose(ratio, c2, rel_tol=REGION_RTOL):
        region = Region.BOUNDARY_B
    elif ratio < c1:
        region = Region.LINEAR_A
    elif ratio < c2:
        region = Region.CONCAVE
    else:
        region = Region.LINEAR_B
    return PhasePortrait(c1, c2, _zeta(alpha, beta, direction), region)


def kpz_constant(alpha, beta, direction) -> float:
    """C = s E[(a+zeta)^-3] + t E[(b-zeta)^-3], half the z-curvature of g_z at zeta."""
    s, t = direction = as_direction(direction)
    zeta = _zeta(alpha, beta, direction)
    return s * pl.mean_inv_pow(alpha, zeta, 3) + t * pl.mean_inv_pow(beta, -zeta, 3)
