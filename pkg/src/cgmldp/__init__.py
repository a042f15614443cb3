"""Large deviations for last-passage percolation with random row and column rates."""

from .errors import ConfigError, ConsistencyError, DomainError
from .lyapunov import Kind, lyapunov_L
from .param_laws import FiniteDiscrete, PointMass, PolyInterval, UniformInterval
from .rate import annealed_J, quenched_J
from .shape import phase_portrait, shape_function

__all__ = [
    "ConfigError",
    "ConsistencyError",
    "DomainError",
    "Kind",
    "lyapunov_L",
    "FiniteDiscrete",
    "PointMass",
    "PolyInterval",
    "UniformInterval",
    "annealed_J",
    "quenched_J",
    "phase_portrait",
    "shape_function",
]

__version__ = "0.1.0"
