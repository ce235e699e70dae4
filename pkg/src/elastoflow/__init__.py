"""Surface diffusion flow with elasticity on periodic graph films."""

from .elasticity import (
    BulkDisplacement,
    ElasticTensor,
    ElasticTrace,
    boundary_traces,
    bulk_energy,
    solve_equilibrium,
    solve_linearized,
)
from .errors import (
    ConfigError,
    ElastoflowError,
    GridMismatchError,
    NonFiniteFieldError,
    PinchOffError,
    SolverError,
)
from .geometry import (
    SurfaceGeometry,
    compute_geometry,
    laplace_beltrami,
    surface_integral,
    tangential_gradient_squared,
)
from .grid import Grid, HeightField, flat_height

__version__ = "0.1.0"

__all__ = [
    "BulkDisplacement",
    "ConfigError",
    "ElasticTensor",
    "ElasticTrace",
    "ElastoflowError",
    "Grid",
    "GridMismatchError",
    "HeightField",
    "NonFiniteFieldError",
    "PinchOffError",
    "SolverError",
    "SurfaceGeometry",
    "boundary_traces",
    "bulk_energy",
    "compute_geometry",
    "flat_height",
    "laplace_beltrami",
    "solve_equilibrium",
    "solve_linearized",
    "surface_integral",
    "tangential_gradient_squared",
]
