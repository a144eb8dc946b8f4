//! Resolvent contour calculus on sector-minus-comb domains.
//!
//! The crate builds operators of the form
//! `A = (1/2πi) ∫_Γ g(z) h(z) (zI - T)^{-1} dz` for desk-scale model operators
//! `T`, where `Γ` bounds a sector with comb-shaped notches along its rays and
//! `h(z) = exp(-c / (conj(ζ) z)^p)`. Around that core it provides the
//! geometry, resolvent probes, the adaptive comb builder, residual checks for
//! the algebraic identities such integrals satisfy, and a certificate
//! pipeline comparing the kernels and ranges of two such operators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod comb_builder;
pub mod complex_plane;
pub mod contour_calculus;
mod error;
pub mod linalg;
pub mod operator_core;
pub mod presets;
pub mod resolvent_probe;
pub mod selftest;
pub mod serde_complex;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use certify::{
    extract_subspaces, kernel_membership_test, non_comparability_check, rederive_verdict, run_theorem_pipeline,
    Certificate, PipelineConfig, SubspacePair, Verdict, VerdictKind,
};
pub use comb_builder::{build_comb_set, validate_comb_set, BuiltComb, CombBudget, Phi};
pub use complex_plane::{
    build_boundary_contour, chord_arc_constant, comb_to_region, make_sector, point_in_domain, CombSet, Contour, Domain,
    Placement, Sector,
};
pub use contour_calculus::{
    annihilation_residual, deformation_residual, densify_operator, eval_weight, integrate_operator_vector,
    power_identity_residual, product_formula_residual, quadrature_self_test, IntegralSpec, Multiplier, WeightFunction,
};
pub use operator_core::{
    apply_resolvent, make_model_operator, resolvent_identity_residual, OperatorDescriptor, OperatorHandle, VectorSample,
};
pub use resolvent_probe::{
    check_unboundedness_hypothesis, estimate_resolvent_norm, fit_growth_model, power_bounded_checks, GrowthModel,
    ProbeMethod, ResolventSample,
};
pub use selftest::run_selftest;
