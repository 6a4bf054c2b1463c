"""Random sections of Hermitian line bundles on triangle meshes and their zero currents.

Submodules
----------
mesh        closed triangle meshes, cotangent weights, test forms
bundle      discrete unitary connections, curvature, connection Laplacian
spectral    eigenpairs, heat semigroup, heat kernel embedding
sampling    Gaussian sections and Monte Carlo zero-current estimates
zeros       winding-number zero currents and hyperplane intersections
cpn         integral geometry in complex projective space
experiments config-driven experiment runner (used by the CLI)
"""

from .bundle import (
    HermitianLineBundle,
    chern_number,
    connection_laplacian,
    face_curvature,
    flat_torus_bundle,
    pancharatnam_pullback,
    prescribed_curvature_bundle,
)
from .mesh import TriangleMesh, laplacian_weights, make_flat_torus, make_sphere, read_obj
from .sampling import GROUND, estimate_zero_current, sample_ground_state, sample_section
from .spectral import CPnImmersion, SpectralData, eigensolve, heat_apply, heat_kernel_embedding
from .zeros import ZeroCurrent, intersection_current, pair, zero_current

__version__ = "0.1.0"

__all__ = [
    "GROUND",
    "CPnImmersion",
    "HermitianLineBundle",
    "SpectralData",
    "TriangleMesh",
    "ZeroCurrent",
    "chern_number",
    "connection_laplacian",
    "eigensolve",
    "estimate_zero_current",
    "face_curvature",
    "flat_torus_bundle",
    "heat_apply",
    "heat_kernel_embedding",
    "intersection_current",
    "laplacian_weights",
    "make_flat_torus",
    "make_sphere",
    "pair",
    "pancharatnam_pullback",
    "prescribed_curvature_bundle",
    "read_obj",
    "sample_ground_state",
    "sample_section",
    "zero_current",
]
