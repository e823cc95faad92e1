"""Variational regularization for scalar fields on closed triangle meshes.

Evaluate and minimize fit + alpha * penalty objectives (smoothed total
variation or Sobolev seminorm) on triangulated surfaces, blur and
deconvolve with geodesic Gaussian kernels built on fast-marching
distances, and invert great-circle integral data on the sphere in a
spherical-harmonics basis.
"""

from .mesh import (
    ConnectivitySelector,
    MeshFormatError,
    MeshValidationError,
    TriangleGeometry,
    TriangleMesh,
    assemble_geometry,
    divergence,
    gradient,
    load_mesh,
    write_obj,
    write_off,
)
from .functional import (
    Regularizer,
    TikhonovProblem,
    fit_gradient,
    fit_term,
    regularizer_gradient,
    regularizer_value,
    tikhonov_gradient,
    tikhonov_value,
)
from .geodesic import FastMarcher, geodesic_distances
from .operators import (
    ForwardOperator,
    GeodesicKernel,
    IdentityOperator,
    add_noise,
    build_convolution,
    identity_operator,
    load_kernel_triplets,
    save_kernel_triplets,
)
from .landweber import (
    SolveReport,
    SolverConfig,
    auto_step,
    landweber_minimize,
    power_iteration,
)
from .sphere import (
    ShBasis,
    SpherePointSet,
    fibonacci_points,
    fit_coefficients,
    funk_forward,
    funk_invert_direct,
    funk_invert_landweber,
    legendre_at_zero,
    load_points,
    save_points,
    sh_matrix,
    trig_test_function,
)
from .fieldio import (
    RunMetrics,
    export_colored_mesh,
    read_field,
    read_metrics,
    read_ply,
    snr,
    write_field,
    write_metrics,
)

__version__ = "0.1.0"

__all__ = [
    "ConnectivitySelector", "MeshFormatError", "MeshValidationError",
    "TriangleGeometry", "TriangleMesh", "assemble_geometry", "divergence",
    "gradient", "load_mesh", "write_obj", "write_off",
    "Regularizer", "TikhonovProblem", "fit_gradient", "fit_term",
    "regularizer_gradient", "regularizer_value", "tikhonov_gradient",
    "tikhonov_value",
    "FastMarcher", "geodesic_distances",
    "ForwardOperator", "GeodesicKernel", "IdentityOperator", "add_noise",
    "build_convolution", "identity_operator", "load_kernel_triplets",
    "save_kernel_triplets",
    "SolveReport", "SolverConfig", "auto_step", "landweber_minimize",
    "power_iteration",
    "ShBasis", "SpherePointSet", "fibonacci_points", "fit_coefficients",
    "funk_forward", "funk_invert_direct", "funk_invert_landweber",
    "legendre_at_zero", "load_points", "save_points", "sh_matrix",
    "trig_test_function",
    "RunMetrics", "export_colored_mesh", "read_field", "read_metrics",
    "read_ply", "snr", "write_field", "write_metrics",
]
