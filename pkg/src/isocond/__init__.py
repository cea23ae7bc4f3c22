"""Isoconditioning loci of the symmetric five-bar and of the hybrid manipulator built on it."""

from .errors import (
    EmptyGenerator,
    InvalidGeometry,
    InvalidLevel,
    IsocondError,
    NoAssembly,
    OnSerialSingularity,
    ParallelSingular,
    SingularAssembly,
    Unreachable,
)
from .fivebar import (
    all_inverse_solutions,
    direct_kinematics,
    inverse_kinematics,
    jacobians,
    kappa_a,
    kappa_b,
    working_mode_of,
    workspace_contains,
)
from .hybrid import hybrid_forward, iso_surface, jacobians3, kappa_a3, kappa_b3, workspace_boundary_surface
from .isocurves import IsoCurve, iso_curve_cartesian, iso_curve_jointspace, kappa_field, workspace_boundary
from .linalg import condition_number, singular_values
from .types import ALL_MODES, AssemblyMode, Geometry, HybridPosture, PlanarPosture, WorkingMode

__version__ = "0.1.0"
