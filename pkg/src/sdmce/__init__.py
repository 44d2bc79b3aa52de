"""Conformal flattening of disk-topology triangle meshes onto the unit disk.

The boundary is optimized on the unit circle against an area-penalized
conformal energy, the interior follows by harmonic extension, and any folded
elements are repaired afterwards.
"""

from .adaptive_mu import BoundaryInit, MuSchedule, generate_initial_boundary, tune_mu
from .disk_energy import (
    DiskEmbedding, PenaltyState, area_deviation, conformal_energy, kkt_residual,
    objective_gradient, penalized_objective, polygon_area,
)
from .errors import (
    ConformalPole, DegenerateFaceError, DegenerateImageFace, EscalationOverflow,
    IoError, ParseError, RepairStall, SingularInteriorError, SingularUpdateError,
    TopologyError,
)
from .laplacian import build_laplacian, build_system
from .mesh_io import TriMesh, load_mesh, make_mesh, write_parameterized
from .metrics import QualityReport, angle_errors, beltrami_coefficients, bijectivity_distances
from .optimizer import NcgConfig, minimize_on_circles
from .pipeline import Parameterizer, parameterize
from .unfolding import FoldingReport, classify_folding, repair_all

__version__ = "0.1.0"

__all__ = [
    "BoundaryInit", "ConformalPole", "DegenerateFaceError", "DegenerateImageFace",
    "DiskEmbedding", "EscalationOverflow", "FoldingReport", "IoError", "MuSchedule",
    "NcgConfig", "Parameterizer", "ParseError", "PenaltyState", "QualityReport",
    "RepairStall", "SingularInteriorError", "SingularUpdateError", "TopologyError",
    "TriMesh", "angle_errors", "area_deviation", "beltrami_coefficients",
    "bijectivity_distances", "build_laplacian", "build_system", "classify_folding",
    "conformal_energy", "generate_initial_boundary", "kkt_residual", "load_mesh",
    "make_mesh", "minimize_on_circles", "objective_gradient", "parameterize",
    "penalized_objective", "polygon_area", "repair_all", "tune_mu", "write_parameterized",
]
