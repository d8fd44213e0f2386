//! Numerical toolkit for φ_p-subgaussian random variables.
//!
//! The crate is organised bottom-up:
//!
//! * [`nfunction`]: the quadratic N-functions φ_p, their inverses and
//!   Young–Fenchel conjugates (closed form and numeric), plus an axiom
//!   validator for user-supplied functions.
//! * [`norm`]: cumulant generating functions and the τ_φp norm solver,
//!   together with the algebraic partial-sum norm bounds.
//! * [`tail`]: closed-form tail bounds for single variables, partial sums
//!   and the Marcinkiewicz–Zygmund scaling, and summability of the bound
//!   series.
//! * [`simulator`]: seeded Monte-Carlo harness measuring partial-sum
//!   trajectories and exceedance frequencies against the bounds.

// NaN-rejecting guards are written as `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod nfunction;
pub mod norm;
pub mod rng;
pub mod simulator;
pub mod special;
pub mod tail;

pub use error::{Error, Result};
pub use nfunction::{
    conjugate_index, conjugate_of_scaled, legendre_transform, phi_p_derivative, phi_p_eval,
    phi_p_inverse, validate_nfunction, ConjugateMethod, ConjugateResult, NFunctionSpec, PIndex,
    SolverParams, ValidationReport,
};
pub use norm::{
    cgf_eval, empirical_stability_window, hoeffding_azuma_norm_bound, read_samples, sum_norm_bound,
    tau_norm, triangle_bound, CgfModel, NormEstimate, NormMethod, StabilityWindow,
};
pub use simulator::{
    convergence_report, exceedance_frequency, generate_sequence, normalized_path, Distribution,
    DriverRule, SequenceSpec, SimulationReport,
};
pub use tail::{
    mz_tail_bound, partial_sum_tail_bound, series_sum_bound, slln_condition_fit, tail_bound,
    BoundValue, FitResult, MzParams, Normalization, SeriesReport, SllnBoundParams, TailQuery,
};
