"""Numerics for operator self-similar random fields."""
from __future__ import annotations

from ._accel import backend
from .covariance import (
    CovarianceModel,
    OssCheckReport,
    QuadConfig,
    c_gamma,
    cov_oss_check,
    dom_symmetry_check,
    fbf_closed_form,
    hurst,
    ofbf_cov,
    ran_symmetry_check,
    square_grid,
)
from .errors import ConditioningError, DomainError, ModelError, NumericError, OssError, ValidationError
from .exponents import (
    ExponentFamily,
    GroupSpec,
    admissibility_check,
    decompose_field_exponent,
    exponent_family,
    family_invariants_check,
    haar_average,
    haar_commuting_exponent,
    invariant_gaussian,
    opposite_sign_check,
    set_difference_check,
    tangent_basis,
)
from .fieldsim import Grid, GridSample, assemble_cov_matrix, empirical_cov, empirical_oss_test, sample_field
from .matlin import (
    ROTATION_GENERATOR,
    cluster_eigenvalues,
    commutator,
    expm,
    mat_power,
    skew_basis,
    sn_decompose,
    spectral_split,
    spectrum,
)
from .polar import PolarConfig, PolarCoords, e_norm, polar_compose, polar_decompose
from .semistable import SemistableSpec, lattice_scaling_check, oss_failure_witness, psi, truncation_bound

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
