//! Weight pair evaluation and interface admissibility.
//!
//! With ψ(y) = |y − x₀|² − δ² and x₀ = (0, −δ):
//!
//! * φ₁(x) = exp(−β ψ̃(x)), ψ̃(x) = ψ(x′, −xₙ) = x′² + (δ − xₙ)² − δ²
//! * φ₂(x) = exp(−β χ(x)),  χ(x) = ψ(x) − α xₙ = x′² + (xₙ + δ)² − δ² − α xₙ
//!
//! Both exponents are quadratics with Hessian 2I, so every derivative
//! below is exact. On the interface {xₙ = 0} the two exponents coincide
//! (ψ̃ = χ = x′²) and the normal-derivative gap has the closed form
//!
//! (∂ₙφ₁)² − (∂ₙφ₂)² = β² α (4δ − α) e^{−2βψ}.

use serde::Serialize;

use super::WeightConfig;
use crate::{Error, Result};

/// Values and exact derivatives of both weights at one point.
#[derive(Debug, Clone, Copy)]
pub struct WeightEval {
    /// ψ(x) (wave-side exponent core, before the −αxₙ tilt).
    pub psi: f64,
    /// ψ̃(x) = ψ(x′, −xₙ) (heat-side reflected exponent).
    pub psi_reflected: f64,
    /// φ₁, φ₂.
    pub phi: [f64; 2],
    /// grad[j] = (∂φ/∂x′, ∂φ/∂xₙ) of φ_{j+1}.
    pub grad: [[f64; 2]; 2],
    /// hess[j] = Hessian of φ_{j+1}, row-major 2×2.
    pub hess: [[[f64; 2]; 2]; 2],
}

impl WeightEval {
    pub fn dn(&self, j: usize) -> f64 {
        self.grad[j][1]
    }

    pub fn dx(&self, j: usize) -> f64 {
        self.grad[j][0]
    }
}

/// Evaluates φ₁, φ₂ with exact first and second derivatives.
pub fn eval_weights(wc: &WeightConfig, x: [f64; 2]) -> WeightEval {
    let beta = wc.beta();
    let delta = wc.delta;
    let [xp, xn] = x;

    let psi = xp * xp + (xn + delta) * (xn + delta) - delta * delta;
    let psi_reflected = xp * xp + (delta - xn) * (delta - xn) - delta * delta;
    let chi = psi - wc.alpha * xn;

    // exponent gradients; both Hessians equal 2I
    let g1 = [2.0 * xp, 2.0 * (xn - delta)];
    let g2 = [2.0 * xp, 2.0 * (xn + delta) - wc.alpha];

    let phi1 = (-beta * psi_reflected).exp();
    let phi2 = (-beta * chi).exp();

    let grad = [
        [-beta * phi1 * g1[0], -beta * phi1 * g1[1]],
        [-beta * phi2 * g2[0], -beta * phi2 * g2[1]],
    ];
    let mut hess = [[[0.0; 2]; 2]; 2];
    for (j, (phi, g)) in [(phi1, g1), (phi2, g2)].into_iter().enumerate() {
        for a in 0..2 {
            for b in 0..2 {
                let outer = beta * beta * g[a] * g[b];
                let second = if a == b { 2.0 * beta } else { 0.0 };
                hess[j][a][b] = phi * (outer - second);
            }
        }
    }

    WeightEval {
        psi,
        psi_reflected,
        phi: [phi1, phi2],
        grad,
        hess,
    }
}

/// Per-sample record of the interface conditions.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterfaceSample {
    pub x_prime: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub dn_phi1: f64,
    pub dn_phi2: f64,
    /// (∂ₙφ₁)² − (∂ₙφ₂)² from the analytic derivatives.
    pub gap: f64,
    /// β²α(4δ−α)e^{−2βψ} closed form.
    pub gap_closed_form: f64,
    /// Gap re-evaluated with centered finite differences.
    pub gap_finite_difference: f64,
    pub traces_equal: bool,
    pub dn_phi1_positive: bool,
    /// Condition (gap > 1).
    pub gap_exceeds_one: bool,
}

impl InterfaceSample {
    pub fn passes(&self) -> bool {
        self.traces_equal && self.dn_phi1_positive && self.gap_exceeds_one
    }
}

/// Result of checking the three interface conditions over a sample set.
#[derive(Debug, Clone)]
pub struct InterfaceReport {
    pub samples: Vec<InterfaceSample>,
    /// Max relative disagreement between analytic gap and closed form.
    pub max_closed_form_mismatch: f64,
    /// Max relative disagreement between analytic gap and finite differences.
    pub max_fd_mismatch: f64,
    pub all_pass: bool,
}

const FD_STEP: f64 = 1e-5;

fn dn_phi_fd(wc: &WeightConfig, x_prime: f64, j: usize) -> f64 {
    let p = eval_weights(wc, [x_prime, FD_STEP]).phi[j];
    let m = eval_weights(wc, [x_prime, -FD_STEP]).phi[j];
    (p - m) / (2.0 * FD_STEP)
}

/// Verifies the interface conditions at each x′ sample: equal traces,
/// ∂ₙφ₁ > 0, and (∂ₙφ₁)² − (∂ₙφ₂)² > 1, cross-checking the closed form
/// β²α(4δ−α)e^{−2βψ} and a finite-difference evaluation.
pub fn check_interface_conditions(wc: &WeightConfig, samples: &[f64]) -> InterfaceReport {
    let beta = wc.beta();
    let mut out = Vec::with_capacity(samples.len());
    let mut max_cf = 0.0f64;
    let mut max_fd = 0.0f64;
    for &xp in samples {
        let ev = eval_weights(wc, [xp, 0.0]);
        let gap = ev.grad[0][1] * ev.grad[0][1] - ev.grad[1][1] * ev.grad[1][1];
        let psi = ev.psi; // on the interface ψ = ψ̃ = x′²
        let cf = beta * beta * wc.alpha * (4.0 * wc.delta - wc.alpha) * (-2.0 * beta * psi).exp();
        let d1 = dn_phi_fd(wc, xp, 0);
        let d2 = dn_phi_fd(wc, xp, 1);
        let gap_fd = d1 * d1 - d2 * d2;
        let scale = gap.abs().max(1e-300);
        max_cf = max_cf.max((gap - cf).abs() / scale);
        max_fd = max_fd.max((gap - gap_fd).abs() / scale);
        out.push(InterfaceSample {
            x_prime: xp,
            phi1: ev.phi[0],
            phi2: ev.phi[1],
            dn_phi1: ev.grad[0][1],
            dn_phi2: ev.grad[1][1],
            gap,
            gap_closed_form: cf,
            gap_finite_difference: gap_fd,
            traces_equal: (ev.phi[0] - ev.phi[1]).abs() <= 1e-13 * ev.phi[0].abs().max(1e-300),
            dn_phi1_positive: ev.grad[0][1] > 0.0,
            gap_exceeds_one: gap > 1.0,
        });
    }
    let all_pass = out.iter().all(|s| s.passes());
    InterfaceReport {
        samples: out,
        max_closed_form_mismatch: max_cf,
        max_fd_mismatch: max_fd,
        all_pass,
    }
}

/// Outcome of the automatic β search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BetaSelection {
    pub beta: f64,
    pub m: f64,
    /// Smallest feasible β found by the scan.
    pub feasible_lo: f64,
    /// Largest feasible β found by the scan.
    pub feasible_hi: f64,
}

/// Picks β = M/δ so that the normal-derivative gap exceeds 1 on the
/// interface patch |x′| ≤ `x_half` and the hypoellipticity bracket clears
/// `bracket_floor` · ⟨ξ,μ⟩² on characteristic samples over the strip patch
/// (both operators). Returns the geometric mean of the feasible range.
///
/// The admissible β form an interval: the gap condition
/// β²α(4δ−α)e^{−2βx′²} > 1 degrades for both very small and very large β,
/// and the bracket condition imposes the lower threshold discussed in
/// [`super::bracket`].
pub fn select_beta(
    delta: f64,
    alpha: f64,
    x_half: f64,
    xn_depth: f64,
    bracket_floor: f64,
) -> Result<BetaSelection> {
    use super::bracket::{check_bracket_condition, exact_characteristic_point};
    use super::symbols::OperatorIndex;

    let feasible = |beta: f64| -> bool {
        let wc = match WeightConfig::new(delta, alpha, beta * delta) {
            Ok(wc) => wc,
            Err(_) => return false,
        };
        // gap condition at the patch edge (worst interface point)
        let gap =
            beta * beta * alpha * (4.0 * delta - alpha) * (-2.0 * beta * x_half * x_half).exp();
        if gap <= 1.0 {
            return false;
        }
        // bracket condition on exact characteristic samples over the strip
        let mut pts = Vec::new();
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            for ix in 0..5 {
                for inx in 0..5 {
                    let x = [
                        -x_half + 2.0 * x_half * ix as f64 / 4.0,
                        xn_depth * inx as f64 / 4.0,
                    ];
                    for mu in [1.0, 4.0] {
                        for sign in [1.0, -1.0] {
                            if let Ok(p) = exact_characteristic_point(&wc, x, mu, j, sign) {
                                pts.push((j, p));
                            }
                        }
                    }
                }
            }
        }
        for j in [OperatorIndex::Heat, OperatorIndex::Wave] {
            let grid: Vec<_> = pts
                .iter()
                .filter(|(jj, _)| *jj == j)
                .map(|(_, p)| *p)
                .collect();
            let rep = check_bracket_condition(&wc, j, &grid, 1e-3, bracket_floor);
            if !rep.conclusive || !rep.pass {
                return false;
            }
        }
        true
    };

    // log-spaced scan over a wide β range
    let lo = 0.05 / delta;
    let hi = 200.0 / delta;
    let n = 400;
    let mut first = None;
    let mut last = None;
    for i in 0..=n {
        let beta = lo * (hi / lo).powf(i as f64 / n as f64);
        if feasible(beta) {
            if first.is_none() {
                first = Some(beta);
            }
            last = Some(beta);
        }
    }
    match (first, last) {
        (Some(a), Some(b)) if b >= a => {
            let beta = (a * b).sqrt();
            if !feasible(beta) {
                // non-interval artifact of coarse scanning; fall back
                return Ok(BetaSelection {
                    beta: a,
                    m: a * delta,
                    feasible_lo: a,
                    feasible_hi: b,
                });
            }
            Ok(BetaSelection {
                beta,
                m: beta * delta,
                feasible_lo: a,
                feasible_hi: b,
            })
        }
        _ => Err(Error::InsufficientData(format!(
            "no feasible beta for delta={delta}, alpha={alpha}, patch={x_half}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wc() -> WeightConfig {
        WeightConfig::new(1.0, 1.0, 5.0).unwrap()
    }

    #[test]
    fn traces_coincide_on_interface() {
        let wc = wc();
        for xp in [-0.7, -0.2, 0.0, 0.33, 0.9] {
            let ev = eval_weights(&wc, [xp, 0.0]);
            assert_eq!(ev.phi[0], ev.phi[1]);
        }
    }

    #[test]
    fn psi_zero_at_origin_gives_unit_weights() {
        // δ=1, α=1, β=1: ψ(0,0) = 0, so φ₁ = φ₂ = 1
        let wc = WeightConfig::new(1.0, 1.0, 1.0).unwrap();
        let ev = eval_weights(&wc, [0.0, 0.0]);
        assert_eq!(ev.psi, 0.0);
        assert_eq!(ev.phi[0], 1.0);
        assert_eq!(ev.phi[1], 1.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let wc = wc();
        let h = 1e-5;
        for &x in &[[0.2, 0.1], [-0.3, 0.4], [0.0, 0.0], [0.5, 0.02]] {
            let ev = eval_weights(&wc, x);
            for j in 0..2 {
                for axis in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[axis] += h;
                    xm[axis] -= h;
                    let fd =
                        (eval_weights(&wc, xp).phi[j] - eval_weights(&wc, xm).phi[j]) / (2.0 * h);
                    let an = ev.grad[j][axis];
                    assert!(
                        (fd - an).abs() <= 1e-6 * an.abs().max(1.0),
                        "grad mismatch j={j} axis={axis}: fd={fd} an={an}"
                    );
                    // second derivatives along the axis
                    let fd2 = (eval_weights(&wc, xp).phi[j] - 2.0 * ev.phi[j]
                        + eval_weights(&wc, xm).phi[j])
                        / (h * h);
                    let an2 = ev.hess[j][axis][axis];
                    assert!(
                        (fd2 - an2).abs() <= 1e-4 * an2.abs().max(1.0),
                        "hess mismatch j={j} axis={axis}: fd={fd2} an={an2}"
                    );
                }
            }
        }
    }

    #[test]
    fn h1_report_passes_on_modest_patch() {
        let wc = wc();
        let samples: Vec<f64> = (0..101).map(|i| -0.5 + i as f64 * 0.01).collect();
        let rep = check_interface_conditions(&wc, &samples);
        assert!(
            rep.all_pass,
            "h1 failed: {:#?}",
            rep.samples.iter().find(|s| !s.passes())
        );
        assert!(rep.max_closed_form_mismatch < 1e-12);
        assert!(rep.max_fd_mismatch < 1e-6);
    }

    #[test]
    fn h1_fails_for_tiny_beta() {
        let wc = WeightConfig::new(1.0, 1.0, 0.1).unwrap();
        let rep = check_interface_conditions(&wc, &[0.0]);
        // gap = β²·3 = 0.03 < 1
        assert!(!rep.all_pass);
    }

    #[test]
    fn beta_selection_feasible_and_reported_range_sane() {
        let sel = select_beta(1.0, 1.0, 0.5, 0.25, 0.1).unwrap();
        assert!(sel.feasible_lo <= sel.beta && sel.beta <= sel.feasible_hi);
        // selected beta must satisfy (1c) on the patch
        let wc = WeightConfig::new(1.0, 1.0, sel.m).unwrap();
        let samples: Vec<f64> = (0..51).map(|i| -0.5 + i as f64 * 0.02).collect();
        assert!(check_interface_conditions(&wc, &samples).all_pass);
    }
}
