"""Semi-discrete optimal transport with per-site capacity constraints.

Solves for the dual vector whose additively-weighted cells carry prescribed
masses of a piecewise linear density, with a smoothed hard-capacity fee, by
a globally damped Newton iteration.
"""

from .geometry import (ConvexPolygon, DuplicateSites, EmptyCell, Facet,
                       GeometryError, PowerDiagram, clip_halfplane,
                       hausdorff_distance, laguerre_cells,
                       polygon_intersection)
from .generate import generate_instance
from .measure import (DensityMesh, MeshError, dual_functional,
                      facet_density_integral, integrate_density,
                      mass_jacobian, mass_vector, transport_cost)
from .solver import (InitFailed, Instance, IterationRecord, MismatchedN,
                     SingularJacobian, Solution, SolverConfig, SolverError,
                     default_init, newton_direction, newton_solve)
from .storage import (BoundaryDegenerate, CapacityState, DomainError,
                      NotInKEps, StorageError, StorageParams,
                      capacity_jacobian, capacity_map, capacity_state,
                      g_eval, g_inverse, g_prime, normalize_project,
                      optimality_residual, storage_fee)

__version__ = "1.0.0"

__all__ = [
    "ConvexPolygon", "PowerDiagram", "Facet", "DensityMesh", "Instance",
    "Solution", "SolverConfig", "IterationRecord", "StorageParams",
    "laguerre_cells", "clip_halfplane", "polygon_intersection",
    "hausdorff_distance", "integrate_density", "mass_vector",
    "mass_jacobian", "facet_density_integral", "dual_functional",
    "transport_cost", "g_eval", "g_prime", "g_inverse", "capacity_map",
    "capacity_jacobian", "normalize_project", "storage_fee",
    "optimality_residual", "capacity_state", "CapacityState",
    "default_init", "newton_direction", "newton_solve", "GeometryError",
    "DuplicateSites", "EmptyCell", "MeshError", "StorageError",
    "DomainError", "NotInKEps", "BoundaryDegenerate", "SolverError",
    "InitFailed", "SingularJacobian", "MismatchedN", "generate_instance",
]
