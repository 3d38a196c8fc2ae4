"""Pseudo-spectral simulation and finite-dimensionality analysis of 2-D micropolar fluid flow."""

from micropolar.spectral import (
    FieldError,
    Grid,
    ScalarField,
    VectorField,
    make_grid,
    transform_to_physical,
    transform_to_spectral,
    leray_project,
    apply_A,
    apply_A1,
    rot_vec,
    rot_scalar,
    galerkin_P,
    galerkin_Q,
    trilinear_b,
    trilinear_b1,
    norm,
    inner,
    make_node_set,
    nodal_sample,
    nodal_interpolant,
)

__version__ = "0.1.0"
