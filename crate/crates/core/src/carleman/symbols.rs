//! Tangential symbols, ξₙ-roots, and microlocal region classification.
//!
//! The conjugated operators have full symbols (flat model, n = 2)
//!
//! p₁(x, ξ, μ) = (ξₙ + iμ∂ₙφ₁)² + (ξ′ + iμ∂ₓ′φ₁)²
//! p₂(x, ξ, μ) = (ξₙ + iμ∂ₙφ₂)² + (ξ′ + iμ∂ₓ′φ₂)² − μ²
//!
//! (the heat spectral shift is first order in the ⟨ξ, μ⟩ calculus and does
//! not enter the principal symbol; the wave shift −μ² does). Expanding in
//! ξₙ:
//!
//! p_j = ξₙ² + 2iμ∂ₙφ_j·ξₙ + (q₂ⱼ − [j = wave]μ²) + 2iμ·q₁ⱼ
//!
//! with the tangential symbols
//!
//! q₂ⱼ = ξ′² − (μ∂ₙφ_j)² − μ²(∂ₓ′φ_j)²,   q₁ⱼ = ξ′·∂ₓ′φ_j.
//!
//! The factorization p_j = (ξₙ + iμ∂ₙφ_j − iα_j)(ξₙ + iμ∂ₙφ_j + iα_j)
//! determines α_j² = (μ∂ₙφ_j)² + q₂ⱼ − [wave]μ² + 2iμq₁ⱼ and the roots
//! z_j± = −iμ∂ₙφ_j ± iα_j. Regions are labelled by the sign of
//!
//! q₂ⱼ − [wave]μ² + q₁ⱼ²/(∂ₙφ_j)²
//!
//! which is exactly the statement that α_j² lies right of the parabola
//! Re z = (μ∂ₙφ_j)² − (Im z)²/(2μ∂ₙφ_j)² traced by the squares of the
//! critical lines |Im root| = 0.

use serde::Serialize;

use super::weights::eval_weights;
use super::{SymbolPoint, WeightConfig};
use crate::linalg::quadratic_roots;
use crate::{Error, Result, C64};

/// Which conjugated operator a symbol quantity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OperatorIndex {
    /// j = 1: heat side (reflected), principal symbol without μ shift.
    Heat,
    /// j = 2: wave side, principal symbol carries −μ².
    Wave,
}

impl OperatorIndex {
    pub fn block(&self) -> usize {
        match self {
            OperatorIndex::Heat => 0,
            OperatorIndex::Wave => 1,
        }
    }

    fn mu_sq_shift(&self) -> f64 {
        match self {
            OperatorIndex::Heat => 0.0,
            OperatorIndex::Wave => 1.0,
        }
    }
}

/// Microlocal region label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionLabel {
    EPlus,
    Z,
    EMinus,
}

impl RegionLabel {
    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::EPlus => "E+",
            RegionLabel::Z => "Z",
            RegionLabel::EMinus => "E-",
        }
    }
}

/// Default relative width of the Z band: |disc| ≤ 1e-6·⟨ξ′,μ⟩².
pub const DEFAULT_ZERO_BAND_REL: f64 = 1e-6;

/// (q₁ⱼ, q₂ⱼ) at a phase-space point, with the flat interface metric.
pub fn tangential_symbols(wc: &WeightConfig, pt: &SymbolPoint, j: OperatorIndex) -> (f64, f64) {
    let ev = eval_weights(wc, pt.x);
    let b = j.block();
    let dn = ev.grad[b][1];
    let dx = ev.grad[b][0];
    let q1 = pt.xi_prime * dx;
    let q2 = pt.xi_prime * pt.xi_prime - (pt.mu * dn) * (pt.mu * dn) - pt.mu * pt.mu * dx * dx;
    (q1, q2)
}

/// α_j² candidates and the ξₙ-roots of p_j.
#[derive(Debug, Clone, Copy)]
pub struct SymbolRoots {
    /// α_j² from the factorization of the actual principal symbol p_j.
    pub alpha_sq: C64,
    /// Alternative candidate (μ∂ₙφ₂)² − μ² + q₂₁ + 2iμq₁₁ that mixes the
    /// wave normal derivative with the heat tangential symbols; recorded
    /// for comparison with the factorization value. For the heat operator
    /// it coincides with `alpha_sq`.
    pub alpha_sq_mixed: C64,
    /// Principal square root of `alpha_sq` (branch cut on the negative
    /// real axis, so Re α ≥ 0).
    pub alpha: C64,
    pub z_plus: C64,
    pub z_minus: C64,
}

/// Computes α_j and the roots z_j± = −iμ∂ₙφ_j ± iα_j of p_j(x, ·, μ).
pub fn symbol_roots(wc: &WeightConfig, pt: &SymbolPoint, j: OperatorIndex) -> SymbolRoots {
    let ev = eval_weights(wc, pt.x);
    let b = j.block();
    let dn = ev.grad[b][1];
    let (q1, q2) = tangential_symbols(wc, pt, j);
    let mu = pt.mu;
    let alpha_sq = C64::new(
        (mu * dn) * (mu * dn) + q2 - j.mu_sq_shift() * mu * mu,
        2.0 * mu * q1,
    );
    let alpha_sq_mixed = match j {
        OperatorIndex::Heat => alpha_sq,
        OperatorIndex::Wave => {
            let (q1_heat, q2_heat) = tangential_symbols(wc, pt, OperatorIndex::Heat);
            C64::new(
                (mu * dn) * (mu * dn) - mu * mu + q2_heat,
                2.0 * mu * q1_heat,
            )
        }
    };
    let alpha = alpha_sq.sqrt();
    let i_alpha = C64::i() * alpha;
    let shift = C64::new(0.0, -mu * dn);
    SymbolRoots {
        alpha_sq,
        alpha_sq_mixed,
        alpha,
        z_plus: shift + i_alpha,
        z_minus: shift - i_alpha,
    }
}

/// p_j(x, (ξ′, ζ), μ) for complex normal frequency ζ.
pub fn tangential_symbol_at(
    wc: &WeightConfig,
    pt: &SymbolPoint,
    j: OperatorIndex,
    zeta: C64,
) -> C64 {
    let ev = eval_weights(wc, pt.x);
    let b = j.block();
    let dn = ev.grad[b][1];
    let dx = ev.grad[b][0];
    let mu = pt.mu;
    let n = zeta + C64::new(0.0, mu * dn);
    let t = C64::new(pt.xi_prime, mu * dx);
    n * n + t * t - C64::new(j.mu_sq_shift() * mu * mu, 0.0)
}

/// Everything the symbol layer knows at one point, for both operators.
#[derive(Debug, Clone, Copy)]
pub struct SymbolEval {
    pub phi: [f64; 2],
    pub grad: [[f64; 2]; 2],
    pub q1: [f64; 2],
    pub q2: [f64; 2],
    pub roots: [SymbolRoots; 2],
}

pub fn evaluate_symbols(wc: &WeightConfig, pt: &SymbolPoint) -> SymbolEval {
    let ev = eval_weights(wc, pt.x);
    let (q1h, q2h) = tangential_symbols(wc, pt, OperatorIndex::Heat);
    let (q1w, q2w) = tangential_symbols(wc, pt, OperatorIndex::Wave);
    SymbolEval {
        phi: ev.phi,
        grad: ev.grad,
        q1: [q1h, q1w],
        q2: [q2h, q2w],
        roots: [
            symbol_roots(wc, pt, OperatorIndex::Heat),
            symbol_roots(wc, pt, OperatorIndex::Wave),
        ],
    }
}

/// The region discriminant q₂ⱼ − [wave]μ² + q₁ⱼ²/(∂ₙφ_j)².
pub fn region_discriminant(wc: &WeightConfig, pt: &SymbolPoint, j: OperatorIndex) -> Result<f64> {
    let ev = eval_weights(wc, pt.x);
    let dn = ev.grad[j.block()][1];
    if dn == 0.0 || !dn.is_finite() {
        return Err(Error::InvalidInput(
            "region classification undefined where the weight normal derivative vanishes".into(),
        ));
    }
    let (q1, q2) = tangential_symbols(wc, pt, j);
    Ok(q2 - j.mu_sq_shift() * pt.mu * pt.mu + q1 * q1 / (dn * dn))
}

/// Classifies (x, ξ′, μ) with an explicit zero band around the Z set.
pub fn classify_region(
    wc: &WeightConfig,
    pt: &SymbolPoint,
    j: OperatorIndex,
    zero_band: f64,
) -> Result<RegionLabel> {
    let disc = region_discriminant(wc, pt, j)?;
    Ok(if disc > zero_band {
        RegionLabel::EPlus
    } else if disc < -zero_band {
        RegionLabel::EMinus
    } else {
        RegionLabel::Z
    })
}

/// Classification with the default band 1e-6·⟨ξ′,μ⟩².
pub fn classify_region_default(
    wc: &WeightConfig,
    pt: &SymbolPoint,
    j: OperatorIndex,
) -> Result<RegionLabel> {
    let band = DEFAULT_ZERO_BAND_REL * pt.lambda() * pt.lambda();
    classify_region(wc, pt, j, band)
}

/// Builds a point exactly on the Z set of operator `j` by solving the
/// discriminant for ξ′² at the given (x, μ); `sign` picks the ξ′ branch.
pub fn make_z_point(
    wc: &WeightConfig,
    x: [f64; 2],
    mu: f64,
    j: OperatorIndex,
    sign: f64,
) -> Result<SymbolPoint> {
    let ev = eval_weights(wc, x);
    let b = j.block();
    let d = ev.grad[b][1];
    let e = ev.grad[b][0];
    if d == 0.0 {
        return Err(Error::InvalidInput("vanishing normal derivative".into()));
    }
    // disc = (d²+e²)/d² · ξ′² − μ²(d²+e²) − [wave]μ² = 0
    let de = d * d + e * e;
    let xi_sq = mu * mu * d * d * (de + j.mu_sq_shift()) / de;
    SymbolPoint::new(x, sign.signum() * xi_sq.sqrt(), mu)
}

/// Root-sign verdict for one point, checked against the quadratic-formula
/// oracle applied to the expanded polynomial coefficients.
#[derive(Debug, Clone, Copy)]
pub struct RootSignReport {
    pub label: RegionLabel,
    /// Oracle roots (quadratic formula on expanded coefficients).
    pub oracle_roots: [C64; 2],
    /// Max set-distance between factored roots and oracle roots.
    pub root_set_distance: f64,
    /// Residuals |p_j(z±)| of the factored roots.
    pub residuals: [f64; 2],
    /// The sign law of the labelled region holds for the oracle roots.
    pub signs_hold: bool,
}

/// Checks the root-sign law of the region the point classifies into:
/// E⁺ → one root strictly above and one strictly below the real axis
/// (z⁺ above); Z → at least one root with |Im| ≤ `real_tol`; E⁻ → both
/// roots below (∂ₙφ_j > 0) or both above (∂ₙφ_j < 0).
pub fn check_root_signs(
    wc: &WeightConfig,
    pt: &SymbolPoint,
    j: OperatorIndex,
    zero_band: f64,
    real_tol: f64,
) -> Result<RootSignReport> {
    let label = classify_region(wc, pt, j, zero_band)?;
    let ev = eval_weights(wc, pt.x);
    let b = j.block();
    let dn = ev.grad[b][1];
    let (q1, q2) = tangential_symbols(wc, pt, j);
    let mu = pt.mu;

    // expanded coefficients of p_j(ζ) = ζ² + Bζ + C
    let coeff_b = C64::new(0.0, 2.0 * mu * dn);
    let coeff_c = C64::new(q2 - j.mu_sq_shift() * mu * mu, 2.0 * mu * q1);
    let (r1, r2) = quadratic_roots(C64::new(1.0, 0.0), coeff_b, coeff_c);

    let roots = symbol_roots(wc, pt, j);
    let d_a = (roots.z_plus - r1).norm().max((roots.z_minus - r2).norm());
    let d_b = (roots.z_plus - r2).norm().max((roots.z_minus - r1).norm());
    let root_set_distance = d_a.min(d_b);

    let residuals = [
        tangential_symbol_at(wc, pt, j, roots.z_plus).norm(),
        tangential_symbol_at(wc, pt, j, roots.z_minus).norm(),
    ];

    let signs_hold = match label {
        RegionLabel::EPlus => {
            // oracle roots must straddle the axis, and the factored z⁺ is
            // the upper one
            let hi = r1.im.max(r2.im);
            let lo = r1.im.min(r2.im);
            hi > 0.0 && lo < 0.0 && roots.z_plus.im > 0.0 && roots.z_minus.im < 0.0
        }
        RegionLabel::Z => r1.im.abs().min(r2.im.abs()) <= real_tol,
        RegionLabel::EMinus => {
            if dn > 0.0 {
                r1.im < 0.0 && r2.im < 0.0
            } else {
                r1.im > 0.0 && r2.im > 0.0
            }
        }
    };
    Ok(RootSignReport {
        label,
        oracle_roots: [r1, r2],
        root_set_distance,
        residuals,
        signs_hold,
    })
}

/// Both sides of the interface comparison of the two discriminant
/// expressions: (q₂₂ − μ² + q₁²/(∂ₙφ₂)², q₂₁ + q₁²/(∂ₙφ₁)²) with the
/// common interface q₁. Under the gap condition the wave side strictly
/// dominates, which is why the E⁺ region of the heat operator is contained
/// in that of the wave operator.
pub fn wave_heat_discriminants(wc: &WeightConfig, pt: &SymbolPoint) -> Result<(f64, f64)> {
    let wave = region_discriminant(wc, pt, OperatorIndex::Wave)?;
    let heat = region_discriminant(wc, pt, OperatorIndex::Heat)?;
    Ok((wave, heat))
}

/// Interface identity: returns (q₂₂ − q₂₁, (μ∂ₙφ₁)² − (μ∂ₙφ₂)²) which must
/// agree at xₙ = 0, plus the natural comparison scale μ²·max(∂ₙφ)².
///
/// Both q₂ formulas are evaluated in double-double arithmetic: their ξ′²
/// terms cancel exactly in the difference, so the identity can be asserted
/// at 1e-12 of the small μ²-scale even when ξ′² dominates it by many
/// orders of magnitude.
pub fn interface_q2_identity(wc: &WeightConfig, pt: &SymbolPoint) -> (f64, f64, f64) {
    use crate::linalg::Dd;
    let ev = eval_weights(wc, pt.x);
    let mu = pt.mu;
    let q2_dd = |b: usize| -> Dd {
        let md = mu * ev.grad[b][1];
        let me = mu * ev.grad[b][0];
        Dd::two_prod(pt.xi_prime, pt.xi_prime) - Dd::two_prod(md, md) - Dd::two_prod(me, me)
    };
    let lhs = (q2_dd(1) - q2_dd(0)).to_f64();
    let md1 = mu * ev.grad[0][1];
    let md2 = mu * ev.grad[1][1];
    let rhs = (Dd::two_prod(md1, md1) - Dd::two_prod(md2, md2)).to_f64();
    let scale = mu * mu * ev.grad[0][1].powi(2).max(ev.grad[1][1].powi(2));
    (lhs, rhs, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn wc() -> WeightConfig {
        WeightConfig::new(1.0, 1.0, 5.0).unwrap()
    }

    #[test]
    fn q1_vanishes_on_symmetry_axis() {
        let wc = wc();
        let pt = SymbolPoint::new([0.0, 0.1], 2.0, 3.0).unwrap();
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            let (q1, q2) = tangential_symbols(&wc, &pt, j);
            assert_eq!(q1, 0.0);
            let ev = eval_weights(&wc, pt.x);
            let want = pt.xi_prime * pt.xi_prime - (pt.mu * ev.grad[j.block()][1]).powi(2);
            assert!((q2 - want).abs() < 1e-12 * want.abs().max(1.0));
        }
    }

    #[test]
    fn quadratic_terms_scale_homogeneously() {
        // freeze the weights at x and scale (ξ′, μ) by c: the quadratic
        // part of q₂ scales by c²
        let wc = wc();
        let x = [0.2, 0.15];
        let c = 3.7;
        let p1 = SymbolPoint::new(x, 1.1, 2.3).unwrap();
        let p2 = SymbolPoint::new(x, c * 1.1, c * 2.3).unwrap();
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            let (q1a, q2a) = tangential_symbols(&wc, &p1, j);
            let (q1b, q2b) = tangential_symbols(&wc, &p2, j);
            assert!((q2b - c * c * q2a).abs() < 1e-10 * q2a.abs().max(1.0));
            assert!((q1b - c * q1a).abs() < 1e-12 * q1a.abs().max(1.0));
        }
    }

    #[test]
    fn roots_annihilate_symbol() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let wc = wc();
        for _ in 0..200 {
            let pt = SymbolPoint::new(
                [rng.random_range(-0.5..0.5), rng.random_range(0.0..0.4)],
                rng.random_range(-8.0..8.0),
                rng.random_range(0.1..9.0),
            )
            .unwrap();
            for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
                let roots = symbol_roots(&wc, &pt, j);
                let lam2 = pt.lambda() * pt.lambda();
                for z in [roots.z_plus, roots.z_minus] {
                    let p = tangential_symbol_at(&wc, &pt, j, z);
                    assert!(
                        p.norm() <= 1e-10 * lam2.max(1.0),
                        "residual {} at {pt:?}",
                        p.norm()
                    );
                }
                // Vieta: z⁺ + z⁻ = −2iμ∂ₙφ
                let ev = eval_weights(&wc, pt.x);
                let want = C64::new(0.0, -2.0 * pt.mu * ev.grad[j.block()][1]);
                assert!(
                    (roots.z_plus + roots.z_minus - want).norm() <= 1e-10 * want.norm().max(1.0)
                );
                // Vieta product against the expanded constant coefficient
                let (q1, q2) = tangential_symbols(&wc, &pt, j);
                let cc = C64::new(
                    q2 - if j == OperatorIndex::Wave {
                        pt.mu * pt.mu
                    } else {
                        0.0
                    },
                    2.0 * pt.mu * q1,
                );
                assert!((roots.z_plus * roots.z_minus - cc).norm() <= 1e-9 * cc.norm().max(1.0));
            }
        }
    }

    #[test]
    fn mixed_alpha_candidate_recorded_for_wave() {
        // on the interface the direct candidate and the mixed one differ
        // by exactly (μ∂ₙφ₁)² − (μ∂ₙφ₂)² in their real parts
        let wc = wc();
        let pt = SymbolPoint::new([0.2, 0.0], 1.5, 2.0).unwrap();
        let roots = symbol_roots(&wc, &pt, OperatorIndex::Wave);
        let ev = eval_weights(&wc, pt.x);
        let gap = (pt.mu * ev.grad[1][1]).powi(2) - (pt.mu * ev.grad[0][1]).powi(2);
        let diff = roots.alpha_sq - roots.alpha_sq_mixed;
        assert!((diff.im).abs() < 1e-12);
        assert!((diff.re - (-gap)).abs() < 1e-9 * gap.abs().max(1.0));
    }

    #[test]
    fn large_xi_prime_lands_in_e_plus() {
        let wc = wc();
        let pt = SymbolPoint::new([0.1, 0.05], 500.0, 1.0).unwrap();
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            assert_eq!(
                classify_region_default(&wc, &pt, j).unwrap(),
                RegionLabel::EPlus
            );
        }
    }

    #[test]
    fn zero_xi_prime_lands_in_e_minus() {
        let wc = wc();
        let pt = SymbolPoint::new([0.0, 0.05], 0.0, 5.0).unwrap();
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            assert_eq!(
                classify_region_default(&wc, &pt, j).unwrap(),
                RegionLabel::EMinus
            );
        }
    }

    #[test]
    fn constructed_z_point_has_near_real_root() {
        let wc = wc();
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            let pt = make_z_point(&wc, [0.15, 0.1], 3.0, j, 1.0).unwrap();
            let disc = region_discriminant(&wc, &pt, j).unwrap();
            assert!(disc.abs() <= 1e-9 * pt.lambda().powi(2));
            let rep = check_root_signs(&wc, &pt, j, 1e-6 * pt.lambda().powi(2), 1e-8 * pt.lambda())
                .unwrap();
            assert_eq!(rep.label, RegionLabel::Z);
            assert!(rep.signs_hold, "{rep:?}");
        }
    }

    #[test]
    fn classification_undefined_where_normal_derivative_vanishes() {
        // ∂ₙφ₁ = 0 exactly at xₙ = δ
        let wc = wc();
        let pt = SymbolPoint::new([0.0, wc.delta], 1.0, 1.0).unwrap();
        assert!(classify_region_default(&wc, &pt, OperatorIndex::Heat).is_err());
        // the wave weight has no in-domain critical height
        assert!(classify_region_default(&wc, &pt, OperatorIndex::Wave).is_ok());
    }

    #[test]
    fn interface_q2_identity_on_interface() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let wc = wc();
        for _ in 0..500 {
            let pt = SymbolPoint::new(
                [rng.random_range(-0.8..0.8), 0.0],
                rng.random_range(-10.0..10.0),
                rng.random_range(0.1..10.0),
            )
            .unwrap();
            let (lhs, rhs, scale) = interface_q2_identity(&wc, &pt);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * scale.max(1e-300),
                "e12 gap {} at {pt:?}",
                (lhs - rhs).abs()
            );
        }
    }

    #[test]
    fn containment_of_elliptic_regions_at_interface() {
        // where the gap condition holds and heat classifies E⁺, wave must too
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let wc = wc();
        let mut checked = 0;
        for _ in 0..10_000 {
            let pt = SymbolPoint::new(
                [rng.random_range(-0.5..0.5), 0.0],
                rng.random_range(-30.0..30.0),
                rng.random_range(0.1..10.0),
            )
            .unwrap();
            // gap condition at this interface point
            let ev = eval_weights(&wc, pt.x);
            if ev.grad[0][1].powi(2) - ev.grad[1][1].powi(2) <= 1.0 {
                continue;
            }
            if classify_region_default(&wc, &pt, OperatorIndex::Heat).unwrap() == RegionLabel::EPlus
            {
                checked += 1;
                assert_eq!(
                    classify_region_default(&wc, &pt, OperatorIndex::Wave).unwrap(),
                    RegionLabel::EPlus,
                    "containment failed at {pt:?}"
                );
                let (wave, heat) = wave_heat_discriminants(&wc, &pt).unwrap();
                assert!(wave > heat);
            }
        }
        assert!(checked > 100, "containment test unexercised: {checked}");
    }
}
