"""2D/1D multiscale eddy-current solver for laminated sheets with an
equilibrated a-posteriori error estimator and adaptive refinement."""

from .errors import (ConfigurationError, DomainError, EddyMsfemError, InternalConsistencyError,
                     InvalidArgumentError, InvalidGeometryError, SingularSystemError)
from .mesh import Mesh2D, build_rect_mesh, refine, uniform_refine
from .problem import MU0, Material, Orders, ProblemSetup
from .sources import BiotSavartSource, SourceRegion, UniformField, eval_hbs
from .thickness import ThicknessProfile, coefficient_table, eval_shape

__version__ = "0.1.0"

__all__ = [
    "BiotSavartSource", "ConfigurationError", "DomainError", "EddyMsfemError",
    "InternalConsistencyError", "InvalidArgumentError", "InvalidGeometryError", "MU0",
    "Material", "Mesh2D", "Orders", "ProblemSetup", "SingularSystemError", "SourceRegion",
    "ThicknessProfile", "UniformField", "build_rect_mesh", "coefficient_table", "eval_hbs",
    "eval_shape", "refine", "uniform_refine",
]
