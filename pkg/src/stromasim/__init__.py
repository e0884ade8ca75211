"""Multiscale truss/continuum finite-element simulator of the human cornea.

The package couples an explicit trusswork of collagen fibrils and
proteoglycan crosslinks with a near-incompressible Mooney-Rivlin matrix of
8-node hexahedra, inflated by a follower intraocular pressure on the
posterior surface.  Internal units are mm / MPa / N throughout; mmHg is
converted at the configuration boundary (1 mmHg = 133.322 Pa).
"""

from .geometry import (
    BiconicSurface,
    CorneaGeometry,
    MeshSpec,
    Mesh,
    biconic_sag,
    generate_mesh,
    shape_factors,
)
from .unitcell import TrussKind, Truss, TrussSet, build_trusswork, assign_truss_areas
from .materials import (
    CollagenParams,
    CrosslinkParams,
    MatrixParams,
    collagen_response,
    crosslink_response,
    matrix_energy_stress,
    apply_damage,
)

MMHG_TO_MPA = 133.322e-6
__version__ = "0.1.0"

__all__ = [
    "BiconicSurface",
    "CorneaGeometry",
    "MeshSpec",
    "Mesh",
    "biconic_sag",
    "generate_mesh",
    "shape_factors",
    "TrussKind",
    "Truss",
    "TrussSet",
    "build_trusswork",
    "assign_truss_areas",
    "CollagenParams",
    "CrosslinkParams",
    "MatrixParams",
    "collagen_response",
    "crosslink_response",
    "matrix_energy_stress",
    "apply_damage",
    "MMHG_TO_MPA",
]
