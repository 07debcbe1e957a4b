"""planehead: interactive stylization of scanned meshes by sculptural
abstraction — segment into sculptor's planes, exaggerate the angles
between them, planarize within them, and transfer the result back to
the full-resolution scan in real time."""

from .mesh import (  # noqa: F401
    Mesh,
    MeshError,
    MeshParseError,
    MeshValidationError,
    RegionLabeling,
    ValidationReport,
    cotangent_laplacian,
    region_adjacency,
    validate_mesh,
)
from .meshio import load_labels, load_mesh, save_labels, save_mesh  # noqa: F401

__version__ = "0.1.0"
