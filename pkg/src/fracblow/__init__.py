"""Nonlocal operator workbench: kernels, barriers and blow-up solves."""

from .kernels import (
    Anisotropy,
    EllipticityBounds,
    Kernel,
    KernelFamily,
    check_ellipticity,
    normalizing_constant,
)
from .geometry import Ball, HalfSpaceBox, Superellipse, boundary_frame, d_tau, distance, project
from .fields import (
    ScalarField,
    ball_profile_field,
    constant_field,
    dist_pow_field,
    gaussian_field,
    halfspace_profile_field,
    indicator_field,
    remark62_field,
    windowed_quadratic_field,
)
from .operators import (
    EvalResult,
    QuadratureConfig,
    bilinear_form,
    c_constant,
    frac_laplacian,
    isaacs_op,
    linear_op,
    pucci_minus,
    pucci_plus,
)

__version__ = "0.1.0"
