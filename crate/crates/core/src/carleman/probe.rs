//! Quantitative probe of the weighted interface energy inequality.
//!
//! On a tensor grid over the strip patch [−a, a] × [0, b] the probe
//! evaluates, for a compactly supported smooth pair h = (h₁, h₂),
//!
//! LHS = μ‖e^{μφ}h‖²_{H¹}
//! RHS = ‖e^{μφ}P h‖² + |e^{μφ}(h₁ − iμh₂)|²_{H^{1/2}} + μ|e^{μφ}B₂h|²
//!
//! with P = diag(−Δ − μ, −Δ − μ²) and
//! B₂h = ∂ₙh₁ + ∂ₙh₂ + iμ(∂ₙφ₁)h₁ + iμ(∂ₙφ₂)h₂ on {xₙ = 0}.
//!
//! The interface H^{1/2} norm is spectral: the trace is expanded in a
//! discrete Fourier basis (the bump vanishes near the lateral edges, so
//! periodic continuation is exact to the support) and weighted by
//! ⟨ξ′, μ⟩. All fields of h are evaluated analytically, including Δh, so
//! the probe has no differencing error; quadrature is trapezoid. Weights
//! are normalized by the largest φ over the support of h, which cancels in
//! the ratio and keeps every exponential representable.
//!
//! The probe records RHS/LHS and asserts nothing about its value beyond
//! positivity bookkeeping: it is evidence for boundedness below, not a
//! certification of any constant.

use rand::Rng;
use serde::Serialize;

use super::weights::eval_weights;
use super::WeightConfig;
use crate::{Error, Result, C64};

/// Tensor-grid patch: x′ ∈ [−x_half, x_half) with `nx` periodic samples,
/// xₙ ∈ [0, xn_depth] with `nn` trapezoid samples.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbePatch {
    pub x_half: f64,
    pub xn_depth: f64,
    pub nx: usize,
    pub nn: usize,
}

impl ProbePatch {
    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| v.is_nan() || v <= 0.0;
        if bad(self.x_half) || bad(self.xn_depth) {
            return Err(Error::InvalidInput(
                "probe patch must have positive extent".into(),
            ));
        }
        if self.nx < 16 || self.nn < 8 {
            return Err(Error::InvalidInput(format!(
                "probe grid too coarse: nx={} nn={}",
                self.nx, self.nn
            )));
        }
        Ok(())
    }
}

/// One smooth compactly supported component: amp·b((x′−c)/w)·cap(xₙ/depth)
/// with b the standard C₀^∞ mollifier and cap its one-sided version equal
/// to 1 at the interface.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BumpComponent {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
    pub depth: f64,
}

/// Sample pair (h₁, h₂).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Bump {
    pub h1: BumpComponent,
    pub h2: BumpComponent,
}

/// b(s) = exp(−1/(1−s²)) on |s| < 1, with two derivatives.
fn mollifier(s: f64) -> (f64, f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - s * s;
    let b = (-1.0 / q).exp();
    let d1 = -2.0 * s / (q * q);
    // b′ = b·d1; b″ = b·(d1² + d1′)
    let d1p = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
    (b, b * d1, b * (d1 * d1 + d1p))
}

impl BumpComponent {
    /// (value, ∂x′, ∂xₙ, Δ) at a point.
    fn eval(&self, x: [f64; 2]) -> (f64, f64, f64, f64) {
        let sx = (x[0] - self.center) / self.width;
        let sn = x[1] / self.depth;
        if sn < 0.0 {
            return (0.0, 0.0, 0.0, 0.0);
        }
        let (f, f1, f2) = mollifier(sx);
        let (g0, g1, g2) = mollifier(sn);
        // cap normalized to 1 at the interface
        let e = std::f64::consts::E;
        let (g, gd, gdd) = (e * g0, e * g1, e * g2);
        let val = self.amp * f * g;
        let dx = self.amp * f1 * g / self.width;
        let dn = self.amp * f * gd / self.depth;
        let lap =
            self.amp * (f2 * g / (self.width * self.width) + f * gdd / (self.depth * self.depth));
        (val, dx, dn, lap)
    }

    fn support_inside(&self, patch: &ProbePatch) -> bool {
        let margin_x = 2.0 * patch.x_half / patch.nx as f64;
        let margin_n = patch.xn_depth / patch.nn as f64;
        self.center - self.width > -patch.x_half + margin_x
            && self.center + self.width < patch.x_half - margin_x
            && self.depth < patch.xn_depth - margin_n
            && self.width > 0.0
            && self.depth > 0.0
    }
}

/// Draws a random admissible bump pair for the patch.
pub fn random_bump<R: Rng + ?Sized>(patch: &ProbePatch, rng: &mut R) -> Bump {
    let component = |rng: &mut R| {
        let center = rng.random_range(-0.35..0.35) * patch.x_half;
        let max_w = (patch.x_half - center.abs()) * 0.85;
        let width = rng.random_range(0.4..0.95) * max_w;
        let depth = rng.random_range(0.45..0.85) * patch.xn_depth;
        let amp = rng.random_range(0.4..1.6) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        BumpComponent {
            amp,
            center,
            width,
            depth,
        }
    };
    Bump {
        h1: component(rng),
        h2: component(rng),
    }
}

/// Probe outcome at one μ.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeResult {
    pub mu: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// RHS/LHS; `None` when the sample vanishes (both sides zero).
    pub ratio: Option<f64>,
    /// Interior part ‖e^{μφ}Ph‖² of the RHS.
    pub rhs_interior: f64,
    /// |e^{μφ}B₁h|²_{H^{1/2}} part.
    pub rhs_b1: f64,
    /// μ|e^{μφ}B₂h|² part.
    pub rhs_b2: f64,
    /// max φ over the support, used as the normalization exponent.
    pub phi_cap: f64,
}

/// Evaluates both sides of the weighted inequality for one bump pair and
/// one μ. Errors if the bump support touches the patch boundary (the
/// periodic trace expansion and the integration by parts behind the
/// inequality both need genuine compact support).
pub fn carleman_probe(
    patch: &ProbePatch,
    wc: &WeightConfig,
    bump: &Bump,
    mu: f64,
) -> Result<ProbeResult> {
    patch.validate()?;
    if mu <= 0.0 || mu.is_nan() {
        return Err(Error::InvalidInput(format!("probe needs mu > 0, got {mu}")));
    }
    if !bump.h1.support_inside(patch) || !bump.h2.support_inside(patch) {
        return Err(Error::InvalidInput(
            "bump support touches the patch boundary (boundary contamination)".into(),
        ));
    }

    let nx = patch.nx;
    let nn = patch.nn;
    let dx = 2.0 * patch.x_half / nx as f64;
    let dn = patch.xn_depth / (nn - 1) as f64;

    // normalization: largest weight over the support of h
    let mut phi_cap = f64::NEG_INFINITY;
    let mut grid_phi = vec![[0.0f64; 2]; nx * nn];
    let mut grid_dnphi = vec![[0.0f64; 2]; nx * nn];
    let mut grid_h = vec![[(0.0f64, 0.0f64, 0.0f64, 0.0f64); 2]; nx * nn];
    for ix in 0..nx {
        let xp = -patch.x_half + ix as f64 * dx;
        for inn in 0..nn {
            let xn = inn as f64 * dn;
            let idx = ix * nn + inn;
            let ev = eval_weights(wc, [xp, xn]);
            grid_phi[idx] = ev.phi;
            grid_dnphi[idx] = [ev.grad[0][1], ev.grad[1][1]];
            let e1 = bump.h1.eval([xp, xn]);
            let e2 = bump.h2.eval([xp, xn]);
            grid_h[idx] = [e1, e2];
            if e1.0 != 0.0 || e2.0 != 0.0 {
                phi_cap = phi_cap.max(ev.phi[0].max(ev.phi[1]));
            }
        }
    }
    if !phi_cap.is_finite() {
        // identically zero sample: both sides vanish, ratio undefined
        return Ok(ProbeResult {
            mu,
            lhs: 0.0,
            rhs: 0.0,
            ratio: None,
            rhs_interior: 0.0,
            rhs_b1: 0.0,
            rhs_b2: 0.0,
            phi_cap: 0.0,
        });
    }

    // interior quadrature
    let mut lhs = 0.0;
    let mut rhs_interior = 0.0;
    for ix in 0..nx {
        let xp = -patch.x_half + ix as f64 * dx;
        for inn in 0..nn {
            let xn = inn as f64 * dn;
            let wq = dx * dn * if inn == 0 || inn == nn - 1 { 0.5 } else { 1.0 };
            let idx = ix * nn + inn;
            let ev = eval_weights(wc, [xp, xn]);
            for (j, &(h, hx, hn, lap)) in grid_h[idx].iter().enumerate() {
                if h == 0.0 && hx == 0.0 && hn == 0.0 && lap == 0.0 {
                    continue;
                }
                let w = (mu * (grid_phi[idx][j] - phi_cap)).exp();
                let w2 = w * w;
                // |∇(e^{μφ}h)|² = e^{2μφ}|∇h + μ∇φ h|²
                let gx = hx + mu * ev.grad[j][0] * h;
                let gn = hn + mu * ev.grad[j][1] * h;
                lhs += wq * w2 * (h * h + gx * gx + gn * gn);
                // P₁ = −Δ − μ, P₂ = −Δ − μ²
                let shift = if j == 0 { mu } else { mu * mu };
                let p = -lap - shift * h;
                rhs_interior += wq * w2 * p * p;
            }
        }
    }
    lhs *= mu;

    // interface traces
    let mut b1 = vec![C64::new(0.0, 0.0); nx];
    let mut b2 = vec![C64::new(0.0, 0.0); nx];
    for ix in 0..nx {
        let idx = ix * nn;
        let (h1, _, hn1, _) = grid_h[idx][0];
        let (h2, _, hn2, _) = grid_h[idx][1];
        // φ₁ = φ₂ on the interface: one common weight
        let w = (mu * (grid_phi[idx][0] - phi_cap)).exp();
        b1[ix] = w * C64::new(h1, -mu * h2);
        let d1 = grid_dnphi[idx][0];
        let d2 = grid_dnphi[idx][1];
        b2[ix] = w * (C64::new(hn1 + hn2, 0.0) + C64::new(0.0, mu * (d1 * h1 + d2 * h2)));
    }
    let rhs_b1 = h_half_norm_sq(&b1, patch.x_half, mu);
    let rhs_b2 = mu * b2.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;

    let rhs = rhs_interior + rhs_b1 + rhs_b2;
    let ratio = if lhs > 0.0 { Some(rhs / lhs) } else { None };
    Ok(ProbeResult {
        mu,
        lhs,
        rhs,
        ratio,
        rhs_interior,
        rhs_b1,
        rhs_b2,
        phi_cap,
    })
}

/// Spectral μ-weighted H^{1/2} norm squared of a periodic interface trace:
/// Σ_k ⟨ξ′_k, μ⟩ |ĝ_k|² · (period), with ξ′_k = πk/x_half.
fn h_half_norm_sq(g: &[C64], x_half: f64, mu: f64) -> f64 {
    let n = g.len();
    let period = 2.0 * x_half;
    let mut acc = 0.0;
    for k in 0..n {
        // frequency index mapped to [−n/2, n/2)
        let kk = if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        };
        let xi = 2.0 * std::f64::consts::PI * kk / period;
        let mut hat = C64::new(0.0, 0.0);
        for (m, &gm) in g.iter().enumerate() {
            let phase = -2.0 * std::f64::consts::PI * (k as f64) * (m as f64) / n as f64;
            hat += gm * C64::new(phase.cos(), phase.sin());
        }
        hat /= n as f64;
        acc += xi.hypot(mu) * hat.norm_sqr();
    }
    acc * period
}
