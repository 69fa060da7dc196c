//! Time integration of ∂ₜU = 𝒜U and energy-decay reporting.
//!
//! Two schemes: implicit Euler, whose unconditional energy monotonicity is
//! what the decay assertions rely on, and Crank–Nicolson for second-order
//! accuracy studies. Both step by a direct dense factorization of the
//! shifted operator (factored once per run).
//!
//! The recorded energy balance uses the discrete identity of each scheme:
//! for implicit Euler
//!
//! E_{k+1} − E_k = −dt‖∇u_{k+1}‖² − ½‖s_{k+1} − s_k‖²_H,
//!
//! so the balance residual E_k − E(0) + Σ dt‖∇u‖² equals −½Σ‖Δs‖² ≤ 0 and
//! is O(dt) small; for Crank–Nicolson the same residual with midpoint
//! gradients vanishes to roundoff.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;
use serde::Serialize;

use crate::generator::{Generator, SystemState};
use crate::linalg;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ImplicitEuler => "implicit-euler",
            Scheme::CrankNicolson => "crank-nicolson",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "implicit-euler" | "ie" => Ok(Scheme::ImplicitEuler),
            "crank-nicolson" | "cn" => Ok(Scheme::CrankNicolson),
            other => Err(Error::InvalidInput(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Energy history of a run, sampled once per recorded step.
#[derive(Debug, Clone)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Cumulative dissipation Σ dt‖∇u‖² up to each sample.
    pub dissipation_cum: Vec<f64>,
    /// E(t_k) − E(0) + Σ dt‖∇u‖² per sample.
    pub balance_residual: Vec<f64>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Factored single-step propagator for a fixed (generator, dt, scheme).
pub struct Stepper<'a> {
    g: &'a Generator,
    dt: f64,
    scheme: Scheme,
    lu: PartialPivLu<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(g: &'a Generator, dt: f64, scheme: Scheme) -> Result<Self> {
        if dt.is_nan() || dt <= 0.0 || !dt.is_finite() {
            return Err(Error::InvalidInput(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let theta = match scheme {
            Scheme::ImplicitEuler => 1.0,
            Scheme::CrankNicolson => 0.5,
        };
        let dense = g.operator().matrix.to_dense();
        let n = g.dim();
        let m = Mat::<f64>::from_fn(n, n, |i, j| {
            let a = -theta * dt * dense[(i, j)];
            if i == j {
                a + 1.0
            } else {
                a
            }
        });
        let lu = m.partial_piv_lu();
        Ok(Stepper { g, dt, scheme, lu })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// One time step. For implicit Euler E(next) ≤ E(current) holds by
    /// construction; a singular solve signals a broken assembly.
    pub fn advance(&self, s: &SystemState) -> Result<SystemState> {
        let n = self.g.dim();
        let rhs: Vec<C64> = match self.scheme {
            Scheme::ImplicitEuler => s.as_slice().to_vec(),
            Scheme::CrankNicolson => {
                let as_ = self.g.apply(s)?;
                s.as_slice()
                    .iter()
                    .zip(as_.as_slice())
                    .map(|(x, ax)| x + 0.5 * self.dt * ax)
                    .collect()
            }
        };
        // real factorization, complex rhs: solve the two real parts
        let mut b = Mat::<f64>::zeros(n, 2);
        for i in 0..n {
            b[(i, 0)] = rhs[i].re;
            b[(i, 1)] = rhs[i].im;
        }
        let x = self.lu.solve(&b);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let c = C64::new(x[(i, 0)], x[(i, 1)]);
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::SingularSolve {
                    context: "time step",
                });
            }
            out.push(c);
        }
        SystemState::from_vec(s.n1(), s.n2(), out)
    }
}

/// One time step with a freshly factored propagator.
pub fn step(g: &Generator, s: &SystemState, dt: f64, scheme: Scheme) -> Result<SystemState> {
    Stepper::new(g, dt, scheme)?.advance(s)
}

/// Integrates to `t_end`, recording every step.
pub fn simulate(
    g: &Generator,
    s0: &SystemState,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
) -> Result<EnergyTrace> {
    simulate_with_stride(g, s0, t_end, dt, scheme, 1)
}

/// Integrates to `t_end`, recording every `stride`-th step (the initial
/// state and the final step are always recorded).
pub fn simulate_with_stride(
    g: &Generator,
    s0: &SystemState,
    t_end: f64,
    dt: f64,
    scheme: Scheme,
    stride: usize,
) -> Result<EnergyTrace> {
    if t_end.is_nan() || t_end <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be >= 1".into()));
    }
    let stepper = Stepper::new(g, dt, scheme)?;
    let steps = (t_end / dt).ceil() as usize;
    let mut trace = EnergyTrace {
        times: Vec::with_capacity(steps / stride + 2),
        energies: Vec::new(),
        dissipation_cum: Vec::new(),
        balance_residual: Vec::new(),
    };
    let e0 = g.energy(s0);
    trace.times.push(0.0);
    trace.energies.push(e0);
    trace.dissipation_cum.push(0.0);
    trace.balance_residual.push(0.0);

    let mut s = s0.clone();
    let mut diss = 0.0;
    for k in 1..=steps {
        let next = stepper.advance(&s)?;
        // dissipation sampled where the scheme's discrete identity lives
        let grad = match scheme {
            Scheme::ImplicitEuler => g.grad_u_sq(&next),
            Scheme::CrankNicolson => {
                let mid_vec: Vec<C64> = s
                    .as_slice()
                    .iter()
                    .zip(next.as_slice())
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                let mid = SystemState::from_vec(s.n1(), s.n2(), mid_vec)?;
                g.grad_u_sq(&mid)
            }
        };
        diss += dt * grad;
        s = next;
        if k % stride == 0 || k == steps {
            let e = g.energy(&s);
            trace.times.push(k as f64 * dt);
            trace.energies.push(e);
            trace.dissipation_cum.push(diss);
            trace.balance_residual.push(e - e0 + diss);
        }
    }
    Ok(trace)
}

/// Decay-law model fitted to √E(t).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecayModel {
    /// √E ≈ C / log(t + 2)
    Logarithmic,
    /// √E ≈ C (1 + t)^{−p}
    Polynomial,
}

impl DecayModel {
    pub fn name(&self) -> &'static str {
        match self {
            DecayModel::Logarithmic => "logarithmic",
            DecayModel::Polynomial => "polynomial",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "logarithmic" | "log" => Ok(DecayModel::Logarithmic),
            "polynomial" | "poly" => Ok(DecayModel::Polynomial),
            other => Err(Error::InvalidInput(format!(
                "unknown decay model `{other}`"
            ))),
        }
    }
}

/// Least-squares constants for a decay model, fitted in log coordinates.
/// Reporting only: no claim about which model is correct.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub c: f64,
    /// Exponent p for the polynomial model; absent for the logarithmic one.
    pub exponent: Option<f64>,
    pub rms_residual: f64,
    pub samples_used: usize,
}

/// Fits √E(t) against the requested model in log coordinates.
pub fn fit_decay(trace: &EnergyTrace, model: DecayModel) -> Result<DecayFit> {
    let mut ts = Vec::new();
    let mut ys = Vec::new(); // log √E
    for (&t, &e) in trace.times.iter().zip(&trace.energies) {
        if e > 0.0 && t.is_finite() {
            ts.push(t);
            ys.push(0.5 * e.ln());
        }
    }
    if ts.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "decay fit needs >= 10 samples with E > 0, got {}",
            ts.len()
        )));
    }
    match model {
        DecayModel::Logarithmic => {
            // log √E = log C − log log(t+2): one free constant
            let shifted: Vec<f64> = ts.iter().map(|&t| (t + 2.0).ln().ln()).collect();
            let n = ts.len() as f64;
            let log_c = ys.iter().zip(&shifted).map(|(y, s)| y + s).sum::<f64>() / n;
            let mut ss = 0.0;
            for (y, s) in ys.iter().zip(&shifted) {
                let r = y - (log_c - s);
                ss += r * r;
            }
            Ok(DecayFit {
                model,
                c: log_c.exp(),
                exponent: None,
                rms_residual: (ss / n).sqrt(),
                samples_used: ts.len(),
            })
        }
        DecayModel::Polynomial => {
            let xs: Vec<f64> = ts.iter().map(|&t| (1.0 + t).ln()).collect();
            let fit = linalg::fit_line(&xs, &ys)?;
            Ok(DecayFit {
                model,
                c: fit.intercept.exp(),
                exponent: Some(-fit.slope),
                rms_residual: fit.rms_residual,
                samples_used: ts.len(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{assemble_generator, assemble_with_coupling, Coupling};
    use crate::geometry::{build_grid, DomainConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coupled(n1: usize, n2: usize) -> Generator {
        let grid = build_grid(&DomainConfig::new(1.0, 0.5, n1, n2).unwrap()).unwrap();
        assemble_generator(&grid)
    }

    #[test]
    fn zero_state_stays_zero() {
        let g = coupled(8, 8);
        let z = g.zero_state();
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let out = step(&g, &z, 0.31, scheme).unwrap();
            assert!(out.as_slice().iter().all(|c| c.norm() == 0.0));
        }
    }

    #[test]
    fn implicit_euler_monotone_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let g = coupled(12, 12);
        let s0 = SystemState::random(12, 12, &mut rng);
        let trace = simulate(&g, &s0, 0.5, 1e-2, Scheme::ImplicitEuler).unwrap();
        for w in trace.energies.windows(2) {
            assert!(w[1] <= w[0], "energy increased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn implicit_euler_balance_identity() {
        // E_k − E_0 + Σ dt‖∇u‖² must equal −½ Σ‖Δs‖²_H exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let g = coupled(8, 8);
        let s0 = SystemState::random(8, 8, &mut rng);
        let dt = 1e-2;
        let stepper = Stepper::new(&g, dt, Scheme::ImplicitEuler).unwrap();
        let mut s = s0.clone();
        let mut jump_sum = 0.0;
        let mut diss = 0.0;
        let e0 = g.energy(&s0);
        for _ in 0..50 {
            let next = stepper.advance(&s).unwrap();
            let delta: Vec<C64> = next
                .as_slice()
                .iter()
                .zip(s.as_slice())
                .map(|(a, b)| a - b)
                .collect();
            let dn = g.operator().weights.norm(&delta);
            jump_sum += 0.5 * dn * dn;
            diss += dt * g.grad_u_sq(&next);
            s = next;
        }
        let residual = g.energy(&s) - e0 + diss;
        assert!(
            (residual + jump_sum).abs() <= 1e-11 * e0.max(1.0),
            "residual {residual:.3e} vs jump sum {jump_sum:.3e}"
        );
    }

    #[test]
    fn crank_nicolson_balance_near_machine() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let g = coupled(8, 8);
        let s0 = SystemState::random(8, 8, &mut rng);
        let trace = simulate(&g, &s0, 1.0, 1e-3, Scheme::CrankNicolson).unwrap();
        let e0 = trace.energies[0];
        for &r in &trace.balance_residual {
            assert!(r.abs() <= 1e-6 * e0, "balance residual {r:.3e}");
        }
    }

    #[test]
    fn crank_nicolson_conserves_decoupled_wave_energy() {
        let grid = build_grid(&DomainConfig::new(1.0, 0.5, 8, 16).unwrap()).unwrap();
        let g = assemble_with_coupling(&grid, Coupling::DecoupledDirichlet);
        let mut s0 = g.zero_state();
        // pure wave data: v bump (v(γ)=0 respected), w zero
        for j in 1..16 {
            let x = j as f64 / 16.0;
            s0.set_v_node(j, C64::new((std::f64::consts::PI * x).sin(), 0.0));
        }
        let dt = 1e-2;
        let stepper = Stepper::new(&g, dt, Scheme::CrankNicolson).unwrap();
        let mut s = s0.clone();
        let mut prev = g.energy(&s);
        for _ in 0..100 {
            s = stepper.advance(&s).unwrap();
            let e = g.energy(&s);
            assert!(
                (e - prev).abs() <= 1e-10 * prev,
                "CN wave energy drifted: {prev} -> {e}"
            );
            prev = e;
        }
    }

    #[test]
    fn heat_mode_decays_at_analytic_rate() {
        // decoupled heat data: first Dirichlet mode on (0, γ), rate −(π/γ)²
        let n1 = 200;
        let grid = build_grid(&DomainConfig::new(1.0, 0.5, n1, 8).unwrap()).unwrap();
        let g = assemble_with_coupling(&grid, Coupling::DecoupledDirichlet);
        let gamma = 0.5;
        let mut s0 = g.zero_state();
        for i in 1..n1 {
            let x = i as f64 * g.h1();
            s0.set_u_node(i, C64::new((std::f64::consts::PI * x / gamma).sin(), 0.0));
        }
        let dt = 1e-4;
        let t_end = 0.02;
        let trace = simulate(&g, &s0, t_end, dt, Scheme::ImplicitEuler).unwrap();
        let lambda1 = -(std::f64::consts::PI / gamma).powi(2);
        // E ∝ u², so E decays at rate 2λ₁
        let expected = trace.energies[0] * (2.0 * lambda1 * t_end).exp();
        let got = *trace.energies.last().unwrap();
        assert!(
            (got - expected).abs() <= 0.02 * expected,
            "E(t_end) {got:.6e} vs analytic {expected:.6e}"
        );
    }

    #[test]
    fn scheme_orders_measured_by_halving_dt() {
        let g = coupled(8, 8);
        // smooth initial state: single smooth bump in v
        let mut s0 = g.zero_state();
        for j in 0..8 {
            let x = j as f64 / 8.0;
            s0.set_v_node(j, C64::new((std::f64::consts::PI * x).sin().powi(2), 0.0));
        }
        let t_end = 0.4;
        let e_at = |dt: f64, scheme: Scheme| {
            *simulate(&g, &s0, t_end, dt, scheme)
                .unwrap()
                .energies
                .last()
                .unwrap()
        };
        for (scheme, order) in [(Scheme::ImplicitEuler, 1.0), (Scheme::CrankNicolson, 2.0)] {
            let dt0 = 1e-2;
            let e1 = e_at(dt0, scheme);
            let e2 = e_at(dt0 / 2.0, scheme);
            let e3 = e_at(dt0 / 4.0, scheme);
            let ratio = (e1 - e2) / (e2 - e3);
            let want = 2f64.powf(order);
            assert!(
                (ratio - want).abs() < 0.35 * want,
                "{scheme:?}: refinement ratio {ratio}, want ~{want}"
            );
        }
    }

    #[test]
    fn fit_recovers_logarithmic_model() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let energies: Vec<f64> = times.iter().map(|&t| ((t + 2.0).ln()).powi(-2)).collect();
        let n = times.len();
        let trace = EnergyTrace {
            times,
            energies,
            dissipation_cum: vec![0.0; n],
            balance_residual: vec![0.0; n],
        };
        let fit = fit_decay(&trace, DecayModel::Logarithmic).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-6);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn fit_recovers_polynomial_model() {
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.5).collect();
        let energies: Vec<f64> = times.iter().map(|&t| (1.0 + t).powi(-2)).collect();
        let n = times.len();
        let trace = EnergyTrace {
            times,
            energies,
            dissipation_cum: vec![0.0; n],
            balance_residual: vec![0.0; n],
        };
        let fit = fit_decay(&trace, DecayModel::Polynomial).unwrap();
        assert!((fit.c - 1.0).abs() < 1e-6);
        assert!((fit.exponent.unwrap() - 1.0).abs() < 1e-6);
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn fit_rejects_degenerate_traces() {
        let trace = EnergyTrace {
            times: vec![0.0, 1.0, 2.0],
            energies: vec![0.0, 0.0, 0.0],
            dissipation_cum: vec![0.0; 3],
            balance_residual: vec![0.0; 3],
        };
        assert!(fit_decay(&trace, DecayModel::Logarithmic).is_err());
    }
}
