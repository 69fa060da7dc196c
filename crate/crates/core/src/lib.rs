//! Numerical laboratory for a 1-D wave–heat transmission system.
//!
//! The model couples a heat field `u` on Ω₁ = (0, γ) to a wave field
//! `(v, ∂ₜv)` on Ω₂ = (γ, L) through the interface conditions
//! `u = ∂ₜv` and `∂ₙu = −∂ₙ′v` at γ, with Dirichlet ends. The crate
//! assembles the dissipative generator 𝒜U = (Δu, w, Δv) on the energy
//! space H = L²(Ω₁) × H¹(Ω₂) × L²(Ω₂), time-integrates it, computes
//! its spectrum and resolvent norms along the imaginary axis, and
//! verifies the Carleman weight construction and the tangential-symbol
//! calculus that underpin the logarithmic-decay analysis of the
//! continuous system.
//!
//! Module map:
//! * [`geometry`] — two-region interval grids with a shared interface node
//! * [`generator`] — mimetic assembly of 𝒜, the discrete H inner product,
//!   energy and dissipation identities
//! * [`evolution`] — implicit Euler / Crank–Nicolson stepping, energy
//!   traces, decay-law fitting
//! * [`spectral`] — dense spectra with H-norm residuals, resolvent
//!   solves, and resolvent-norm sweeps
//! * [`carleman`] — weight functions φ₁, φ₂, interface admissibility
//!   conditions, conjugated-symbol roots and microlocal regions,
//!   Hörmander-bracket checks, and a quantitative estimate probe

pub mod carleman;
pub mod evolution;
pub mod generator;
pub mod geometry;
pub mod linalg;
pub mod spectral;

use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration field failed validation. Carries the field name so
    /// callers can produce machine-parsable diagnostics.
    #[error("invalid config: field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    /// Operand dimensions do not match the operator.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A direct solve hit a (numerically) singular matrix.
    #[error("singular solve in {context}")]
    SingularSolve { context: &'static str },

    /// The requested shift iμ sits on (or numerically too close to) the spectrum.
    #[error("spectral hit at mu = {mu}: nearest eigenvalue {nearest_re}{nearest_im:+}i")]
    SpectralHit {
        mu: f64,
        nearest_re: f64,
        nearest_im: f64,
    },

    /// Dense path refused: dimension above the configured limit.
    #[error("dimension {dim} exceeds dense limit {limit}")]
    DenseLimit { dim: usize, limit: usize },

    /// An iterative kernel failed to reach its accuracy contract.
    #[error("no convergence in {context} after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        context: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Not enough usable data for a fit or a check.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Input violates a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
