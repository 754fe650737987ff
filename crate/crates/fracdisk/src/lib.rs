//! Spectral solver for the anisotropic fractional diffusion problem
//! `-∇·(-Δ)^{(α-2)/2} K ∇ũ = f` on the unit disk with `K = diag(k1, k2)`,
//! together with a backward Euler time stepper for the parabolic version.
//!
//! The solution is written as `ũ = ω^{α/2} u` with `ω = 1 - |x|²` and `u`
//! expanded in weighted Jacobi polynomials on the disk. The stiffness operator
//! couples only basis functions of equal radial degree, so the steady problem
//! reduces to independent symmetric tridiagonal chains.
//!
//! Modules:
//! - [`specfun`]: Jacobi polynomials, Γ-ratios, Gauss–Jacobi rules.
//! - [`disk_basis`]: the disk basis, norms, index sets and reconstruction.
//! - [`sources`]: coefficient expansions of the model source terms.
//! - [`operator`]: stiffness and mass assembly, scaled chains, diagnostics.
//! - [`solvers`]: steady chain solves and the backward Euler stepper.
//! - [`analysis`]: error norms, convergence studies and rate predictions.
//! - [`io`]: record/manifest serialisation and the reference-solution cache.

// Range checks are written as negated comparisons so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod disk_basis;
pub mod error;
pub mod io;
pub mod operator;
pub mod solvers;
pub mod sources;
pub mod specfun;

pub use analysis::{
    convergence_rate, discrete_time_norm, field_error, predicted_evolution_bound,
    run_evolution_study, run_steady_study, theoretical_rates, ConvergenceRecord, ConvergenceRow,
    EvolutionErrorMeasure, EvolutionStudyConfig, SteadyStudyConfig, TheoreticalRates,
    TimeGridSchedule,
};
pub use disk_basis::{
    basis_norm_sq, enumerate_xr, eval_basis, hs_norm, reconstruct, BasisIndex, IndexSet, Mu,
    PolarGrid, SpectralField,
};
pub use error::{Error, Result};
pub use operator::{
    assemble_matrices, assemble_scaled_system, bilinear_entry, gershgorin_bounds, lemma_expansions,
    theory_constants, ModelParams, OperatorMatrices, ScaledSystem, TheoryConstants,
};
pub use solvers::{apply_operator, evolve, snapshot, steady_solve, EvolutionState, SteadySolution};
pub use sources::{cusp_coefficient, project_source, CuspConvention, SourceSpec, TimeSeparableRHS};
pub use specfun::{
    gamma_ratio, gauss_jacobi, jacobi_eval, jacobi_norm, JacobiParams, QuadratureRule,
};
