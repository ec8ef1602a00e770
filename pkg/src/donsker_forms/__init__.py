"""Erroneous random walks, their carre du champ, and the Ornstein-Uhlenbeck limit."""

from .errors import ConfigurationError, NonFiniteSampleError, ValidationError
from .functionals import (
    CylindricalFunctional,
    DiscreteMeasure,
    PathFunctional,
    compose,
    coordinate,
    gamma_of_functional,
    make_cylindrical,
    max_functional,
    sharp_copy_expectation,
    sharp_of_functional,
    supnorm_functional,
)
from .montecarlo import EstimateReport, SeedSpec, estimate, estimate_many
from .structures import (
    CoordinateDraws,
    ErrorStructure1D,
    get_structure,
    ou_gauss,
    sample_increments,
    weighted_uniform,
)
from .walk import SharpWalkPath, WalkPath, build_path, gamma_pair, path_statistics

__version__ = "0.1.0"
