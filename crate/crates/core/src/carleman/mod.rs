//! Carleman weight construction and tangential-symbol calculus.
//!
//! Model setting: dimension n = 2, coordinates x = (x′, xₙ) with the
//! interface at {xₙ = 0} and the wave side occupying {xₙ > 0}; the heat
//! side is reflected onto the same half-space. The interface metric is
//! flat: r(x, ξ′) = ξ′², so every symbol below has an exact closed form.
//!
//! The weight pair is built from ψ(x) = |x − x₀|² − δ², x₀ = (0, −δ):
//!
//! φ₁(x) = exp(−β ψ(x′, −xₙ)),   φ₂(x) = exp(−β (ψ(x) − α xₙ)),
//!
//! with δ/2 < α < 2δ and β = M/δ. Submodules:
//!
//! * [`weights`] — weight evaluation with exact derivatives, the interface
//!   admissibility conditions (equal traces, positive normal derivative,
//!   normal-derivative gap > 1) and automatic selection of β;
//! * [`symbols`] — tangential symbols q₁, q₂ of the conjugated operators,
//!   the ξₙ-roots of their full symbols, and the microlocal region
//!   classification with its root-sign laws;
//! * [`bracket`] — the Hörmander hypoellipticity bracket on the
//!   characteristic set, characteristic-sample construction, the scaled
//!   decomposition that explains the β threshold, and its empirical
//!   location by bisection;
//! * [`probe`] — a quantitative probe of the weighted energy inequality on
//!   a 2-D tensor grid with a spectral interface H^{1/2} norm.

pub mod bracket;
pub mod probe;
pub mod symbols;
pub mod weights;

pub use bracket::{
    beta_threshold, characteristic_grid, check_bracket_condition, exact_characteristic_point,
    poisson_bracket, poisson_bracket_fd, scaled_bracket_terms, symbol_value, BracketReport,
    BracketSample, FullPoint, ScaledBracketTerms,
};
pub use probe::{carleman_probe, random_bump, Bump, ProbePatch, ProbeResult};
pub use symbols::{
    check_root_signs, classify_region, classify_region_default, evaluate_symbols,
    interface_q2_identity, make_z_point, region_discriminant, symbol_roots, tangential_symbol_at,
    tangential_symbols, wave_heat_discriminants, OperatorIndex, RegionLabel, RootSignReport,
    SymbolEval, SymbolRoots, DEFAULT_ZERO_BAND_REL,
};
pub use weights::{
    check_interface_conditions, eval_weights, select_beta, BetaSelection, InterfaceReport,
    InterfaceSample, WeightEval,
};

use crate::{Error, Result};

/// Parameters of the weight pair (φ₁, φ₂).
///
/// `beta = m / delta`; the point x₀ = (0, −δ) is implied by the
/// construction and exposed through [`WeightConfig::x0`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct WeightConfig {
    pub delta: f64,
    pub alpha: f64,
    pub m: f64,
}

impl WeightConfig {
    pub fn new(delta: f64, alpha: f64, m: f64) -> Result<Self> {
        if delta.is_nan() || delta <= 0.0 || !delta.is_finite() {
            return Err(Error::InvalidConfig {
                field: "delta",
                reason: format!("must be positive and finite, got {delta}"),
            });
        }
        if alpha.is_nan() || alpha <= delta / 2.0 || alpha >= 2.0 * delta {
            return Err(Error::InvalidConfig {
                field: "alpha",
                reason: format!(
                    "must satisfy delta/2 < alpha < 2*delta, got {alpha} (delta = {delta})"
                ),
            });
        }
        if m.is_nan() || m <= 0.0 || !m.is_finite() {
            return Err(Error::InvalidConfig {
                field: "m",
                reason: format!("must be positive and finite, got {m}"),
            });
        }
        Ok(WeightConfig { delta, alpha, m })
    }

    pub fn beta(&self) -> f64 {
        self.m / self.delta
    }

    pub fn x0(&self) -> [f64; 2] {
        [0.0, -self.delta]
    }
}

/// Phase-space sample (x, ξ′, μ) for the tangential calculus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolPoint {
    pub x: [f64; 2],
    pub xi_prime: f64,
    pub mu: f64,
}

impl SymbolPoint {
    pub fn new(x: [f64; 2], xi_prime: f64, mu: f64) -> Result<Self> {
        if mu.is_nan() || mu <= 0.0 || !mu.is_finite() {
            return Err(Error::InvalidInput(format!(
                "symbol point needs mu > 0, got {mu}"
            )));
        }
        if !xi_prime.is_finite() {
            return Err(Error::InvalidInput("non-finite xi_prime".into()));
        }
        Ok(SymbolPoint { x, xi_prime, mu })
    }

    /// Λ = ⟨ξ′, μ⟩ = (ξ′² + μ²)^{1/2}.
    pub fn lambda(&self) -> f64 {
        self.xi_prime.hypot(self.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validates_alpha_window() {
        assert!(WeightConfig::new(1.0, 1.0, 5.0).is_ok());
        assert!(WeightConfig::new(1.0, 0.5, 5.0).is_err()); // alpha == delta/2
        assert!(WeightConfig::new(1.0, 2.0, 5.0).is_err()); // alpha == 2 delta
        assert!(WeightConfig::new(1.0, 2.4, 5.0).is_err());
        assert!(WeightConfig::new(-1.0, 1.0, 5.0).is_err());
        assert!(WeightConfig::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn symbol_point_needs_positive_mu() {
        assert!(SymbolPoint::new([0.0, 0.0], 1.0, 0.0).is_err());
        assert!(SymbolPoint::new([0.0, 0.0], 1.0, -2.0).is_err());
        let p = SymbolPoint::new([0.1, 0.2], 3.0, 4.0).unwrap();
        assert!((p.lambda() - 5.0).abs() < 1e-15);
    }
}
