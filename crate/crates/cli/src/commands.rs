//! Subcommand implementations.
//!
//! Every runner resolves its configuration through the tracking getters
//! (so the manifest echoes each default), executes deterministically under
//! the run seed, and writes fixed-column CSV artifacts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use waveheat_core::carleman::{
    beta_threshold, carleman_probe, characteristic_grid, check_bracket_condition,
    check_interface_conditions, classify_region, random_bump, select_beta, OperatorIndex,
    ProbePatch, SymbolPoint, WeightConfig,
};
use waveheat_core::evolution::{self, DecayModel, Scheme};
use waveheat_core::generator::{assemble_generator, Generator, SystemState};
use waveheat_core::geometry::{build_grid, DomainConfig};
use waveheat_core::spectral;
use waveheat_core::C64;

use crate::config::Config;
use crate::output::{fmt_real, ArtifactWriter};

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration: exit code 2.
    Config(String),
    /// Numerical failure, with the failing operation named: exit code 3.
    Numerical(String),
    /// I/O failure writing artifacts: exit code 3.
    Io(String),
}

impl From<crate::config::ConfigError> for CliError {
    fn from(e: crate::config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn core_err(op: &str, e: waveheat_core::Error) -> CliError {
    use waveheat_core::Error::*;
    match e {
        InvalidConfig { .. } | InvalidInput(_) => CliError::Config(format!("{op}: {e}")),
        _ => CliError::Numerical(format!("{op}: {e}")),
    }
}

fn domain(cfg: &mut Config) -> Result<(DomainConfig, Generator), CliError> {
    let length = cfg.get_f64("length", 1.0)?;
    let gamma = cfg.get_f64("gamma", 0.5)?;
    let n1 = cfg.get_usize("n1", 64)?;
    let n2 = cfg.get_usize("n2", 64)?;
    let dc = DomainConfig::new(length, gamma, n1, n2).map_err(|e| core_err("build_grid", e))?;
    let grid = build_grid(&dc).map_err(|e| core_err("build_grid", e))?;
    Ok((dc, assemble_generator(&grid)))
}

fn weight_config(cfg: &mut Config) -> Result<(WeightConfig, Option<(f64, f64)>), CliError> {
    let delta = cfg.get_f64("delta", 1.0)?;
    let alpha = cfg.get_f64("alpha", 1.0)?;
    let m = cfg.get_f64_opt("m")?;
    match m {
        Some(m) => {
            let wc = WeightConfig::new(delta, alpha, m).map_err(|e| core_err("weights", e))?;
            Ok((wc, None))
        }
        None => {
            let sel = select_beta(delta, alpha, 0.5, 0.25, 0.1)
                .map_err(|e| core_err("select_beta", e))?;
            let wc = WeightConfig::new(delta, alpha, sel.m).map_err(|e| core_err("weights", e))?;
            Ok((wc, Some((sel.feasible_lo, sel.feasible_hi))))
        }
    }
}

pub fn run_simulate(cfg: &mut Config, out: &mut ArtifactWriter, seed: u64) -> Result<(), CliError> {
    let (_dc, g) = domain(cfg)?;
    let scheme = Scheme::parse(&cfg.get_or("scheme", "implicit-euler"))
        .map_err(|e| core_err("scheme", e))?;
    let dt = cfg.get_f64("dt", 1e-3)?;
    let t_end = cfg.get_f64("t_end", 1.0)?;
    let stride = cfg.get_usize("stride", 1)?;
    let initial = cfg.get_or("initial", "bump");
    cfg.finish()?;

    let s0 = match initial.as_str() {
        "zero" => g.zero_state(),
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            SystemState::random(g.n1(), g.n2(), &mut rng)
        }
        "bump" => {
            // smooth compactly supported displacement bump, u = w = 0
            let mut s = g.zero_state();
            let gamma = g.n1() as f64 * g.h1();
            let width = 0.3 * (g.n2() as f64 * g.h2());
            let center = gamma + 0.5 * (g.n2() as f64 * g.h2());
            for j in 0..g.n2() {
                let x = gamma + j as f64 * g.h2();
                let t = (x - center) / width;
                if t.abs() < 1.0 {
                    s.set_v_node(j, C64::new((-1.0 / (1.0 - t * t)).exp(), 0.0));
                }
            }
            s
        }
        other => {
            return Err(CliError::Config(format!(
                "field=initial: unknown initial state `{other}`"
            )))
        }
    };

    let trace = evolution::simulate_with_stride(&g, &s0, t_end, dt, scheme, stride)
        .map_err(|e| core_err("simulate", e))?;
    out.write_csv(
        ".csv",
        &["t", "E", "dissipation_cum", "balance_residual"],
        (0..trace.len()).map(|k| {
            vec![
                fmt_real(trace.times[k]),
                fmt_real(trace.energies[k]),
                fmt_real(trace.dissipation_cum[k]),
                fmt_real(trace.balance_residual[k]),
            ]
        }),
    )?;

    // decay-law fits are reporting only; initial-state size is recorded as
    // the discrete graph norm
    let graph_norm_sq = {
        let a = g.apply(&s0).map_err(|e| core_err("apply", e))?;
        g.h_norm(&s0).powi(2) + g.h_norm(&a).powi(2)
    };
    let mut fits = serde_json::Map::new();
    fits.insert(
        "initial_graph_norm_sq".into(),
        serde_json::json!(graph_norm_sq),
    );
    for model in [DecayModel::Logarithmic, DecayModel::Polynomial] {
        let entry = match evolution::fit_decay(&trace, model) {
            Ok(fit) => serde_json::json!({
                "c": fit.c,
                "exponent": fit.exponent,
                "rms_residual": fit.rms_residual,
                "samples_used": fit.samples_used,
            }),
            Err(e) => serde_json::json!({ "unavailable": e.to_string() }),
        };
        fits.insert(model.name().into(), entry);
    }
    out.write_json(".fits.json", &serde_json::Value::Object(fits))?;
    Ok(())
}

pub fn run_spectrum(
    cfg: &mut Config,
    out: &mut ArtifactWriter,
    _seed: u64,
) -> Result<(), CliError> {
    let (_dc, g) = domain(cfg)?;
    let block = cfg.get_or("block", "coupled");
    let tol = cfg.get_f64("tol", 1e-8)?;
    cfg.finish()?;

    let report = match block.as_str() {
        "coupled" => spectral::eigenvalues(&g, tol),
        "heat" => spectral::operator_eigenvalues(&g.heat_block(), tol),
        "wave" => spectral::operator_eigenvalues(&g.wave_block(), tol),
        other => {
            return Err(CliError::Config(format!(
                "field=block: unknown block `{other}`"
            )))
        }
    }
    .map_err(|e| core_err("eigenvalues", e))?;

    out.write_csv(
        ".csv",
        &["re", "im", "residual"],
        report
            .eigenvalues
            .iter()
            .zip(&report.residuals)
            .map(|(z, r)| vec![fmt_real(z.re), fmt_real(z.im), fmt_real(*r)]),
    )?;
    Ok(())
}

pub fn run_resolvent(
    cfg: &mut Config,
    out: &mut ArtifactWriter,
    _seed: u64,
) -> Result<(), CliError> {
    let (_dc, g) = domain(cfg)?;
    let mu_min = cfg.get_f64("mu_min", 1.0)?;
    let mu_max = cfg.get_f64("mu_max", 100.0)?;
    let count = cfg.get_usize("count", 50)?;
    cfg.finish()?;

    let sweep = spectral::resolvent_sweep(&g, mu_min, mu_max, count)
        .map_err(|e| core_err("resolvent_sweep", e))?;
    out.write_csv(
        ".csv",
        &["mu", "norm", "log_norm"],
        sweep
            .mus
            .iter()
            .zip(&sweep.norms)
            .map(|(&mu, &n)| vec![fmt_real(mu), fmt_real(n), fmt_real(n.ln())]),
    )?;
    out.write_json(
        ".fits.json",
        &serde_json::json!({
            "log_norm_vs_mu": sweep.exp_fit,
            "log_norm_vs_log_mu": sweep.poly_fit,
        }),
    )?;
    Ok(())
}

pub fn run_carleman_check(
    cfg: &mut Config,
    out: &mut ArtifactWriter,
    seed: u64,
) -> Result<(), CliError> {
    let (wc, feasible) = weight_config(cfg)?;
    let x_half = cfg.get_f64("patch_x_half", 0.5)?;
    let xn_depth = cfg.get_f64("patch_xn_depth", 0.25)?;
    let interface_samples = cfg.get_usize("interface_samples", 1000)?;
    let char_tol = cfg.get_f64("char_tol", 1e-3)?;
    let bracket_floor = cfg.get_f64("bracket_floor", 1e-3)?;
    let grid_x = cfg.get_usize("char_grid_x", 7)?;
    let grid_xn = cfg.get_usize("char_grid_xn", 4)?;
    let mu_min = cfg.get_f64("char_mu_min", 0.5)?;
    let mu_max = cfg.get_f64("char_mu_max", 8.0)?;
    let mu_count = cfg.get_usize("char_mu_count", 3)?;
    let jitter = cfg.get_f64("char_jitter", 0.0)?;
    cfg.finish()?;
    if interface_samples < 2 || grid_x < 2 || grid_xn < 1 || mu_count < 1 {
        return Err(CliError::Config(
            "field=interface_samples/char_grid_x/char_grid_xn/char_mu_count: need at least 2/2/1/1"
                .into(),
        ));
    }

    // interface condition samples
    let samples: Vec<f64> = (0..interface_samples)
        .map(|i| -x_half + 2.0 * x_half * i as f64 / (interface_samples - 1) as f64)
        .collect();
    let interface = check_interface_conditions(&wc, &samples);
    out.write_csv(
        ".interface.csv",
        &[
            "x_prime",
            "phi1",
            "phi2",
            "dn_phi1",
            "dn_phi2",
            "gap",
            "gap_closed_form",
            "gap_finite_difference",
            "pass",
        ],
        interface.samples.iter().map(|s| {
            vec![
                fmt_real(s.x_prime),
                fmt_real(s.phi1),
                fmt_real(s.phi2),
                fmt_real(s.dn_phi1),
                fmt_real(s.dn_phi2),
                fmt_real(s.gap),
                fmt_real(s.gap_closed_form),
                fmt_real(s.gap_finite_difference),
                (if s.passes() { "1" } else { "0" }).to_string(),
            ]
        }),
    )?;

    // bracket condition on characteristic-adapted samples
    let xs: Vec<[f64; 2]> = (0..grid_x)
        .flat_map(|i| {
            (0..grid_xn).map(move |k| {
                [
                    -x_half + 2.0 * x_half * i as f64 / (grid_x - 1) as f64,
                    if grid_xn == 1 {
                        0.0
                    } else {
                        xn_depth * k as f64 / (grid_xn - 1) as f64
                    },
                ]
            })
        })
        .collect();
    let mus: Vec<f64> = (0..mu_count)
        .map(|i| {
            if mu_count == 1 {
                mu_min
            } else {
                mu_min * (mu_max / mu_min).powf(i as f64 / (mu_count - 1) as f64)
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bracket_rows = Vec::new();
    let mut summaries = serde_json::Map::new();
    for (name, j) in [("heat", OperatorIndex::Heat), ("wave", OperatorIndex::Wave)] {
        let grid = characteristic_grid(&wc, j, &xs, &mus, jitter, &mut rng);
        let rep = check_bracket_condition(&wc, j, &grid, char_tol, bracket_floor);
        for s in &rep.flagged {
            bracket_rows.push(vec![
                name.to_string(),
                fmt_real(s.x[0]),
                fmt_real(s.x[1]),
                fmt_real(s.xi[0]),
                fmt_real(s.xi[1]),
                fmt_real(s.mu),
                fmt_real(s.bracket),
                fmt_real(s.scaled_bracket),
                (if s.pass { "1" } else { "0" }).to_string(),
            ]);
        }
        let threshold = beta_threshold(wc.delta, wc.alpha, j, &xs, &mus, bracket_floor).ok();
        summaries.insert(
            name.into(),
            serde_json::json!({
                "samples": rep.total_samples,
                "flagged": rep.flagged.len(),
                "conclusive": rep.conclusive,
                "pass": rep.pass,
                "min_scaled_bracket": rep.min_scaled_bracket,
                "empirical_beta_threshold": threshold,
            }),
        );
    }
    out.write_csv(
        ".bracket.csv",
        &[
            "operator",
            "x_prime",
            "x_n",
            "xi_prime",
            "xi_n",
            "mu",
            "bracket",
            "scaled_bracket",
            "pass",
        ],
        bracket_rows.into_iter(),
    )?;

    let summary = serde_json::json!({
        "beta": wc.beta(),
        "m": wc.m,
        "beta_feasible_range": feasible.map(|(a, b)| vec![a, b]),
        "interface_all_pass": interface.all_pass,
        "interface_closed_form_mismatch": interface.max_closed_form_mismatch,
        "interface_fd_mismatch": interface.max_fd_mismatch,
        "bracket": serde_json::Value::Object(summaries),
    });
    out.write_json(".summary.json", &summary)?;
    Ok(())
}

pub fn run_classify(cfg: &mut Config, out: &mut ArtifactWriter, seed: u64) -> Result<(), CliError> {
    let (wc, _) = weight_config(cfg)?;
    let samples = cfg.get_usize("samples", 10_000)?;
    let x_half = cfg.get_f64("x_half", 0.5)?;
    let xn_depth = cfg.get_f64("xn_depth", 0.3)?;
    let xi_max = cfg.get_f64("xi_max", 40.0)?;
    let mu_min = cfg.get_f64("mu_min", 0.1)?;
    let mu_max = cfg.get_f64("mu_max", 12.0)?;
    let zero_band_rel = cfg.get_f64("zero_band_rel", 1e-6)?;
    cfg.finish()?;
    if !(mu_min > 0.0 && mu_max > mu_min) {
        return Err(CliError::Config(
            "field=mu_min/mu_max: need 0 < mu_min < mu_max".into(),
        ));
    }

    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let pt = SymbolPoint::new(
            [
                rng.random_range(-x_half..x_half),
                rng.random_range(0.0..xn_depth),
            ],
            rng.random_range(-xi_max..xi_max),
            rng.random_range(mu_min..mu_max),
        )
        .map_err(|e| core_err("symbol_point", e))?;
        let band = zero_band_rel * pt.lambda() * pt.lambda();
        let l1 = classify_region(&wc, &pt, OperatorIndex::Heat, band)
            .map_err(|e| core_err("classify_region", e))?;
        let l2 = classify_region(&wc, &pt, OperatorIndex::Wave, band)
            .map_err(|e| core_err("classify_region", e))?;
        rows.push(vec![
            fmt_real(pt.x[0]),
            fmt_real(pt.x[1]),
            fmt_real(pt.xi_prime),
            fmt_real(pt.mu),
            l1.name().to_string(),
            l2.name().to_string(),
        ]);
    }
    out.write_csv(
        ".csv",
        &["x_prime", "x_n", "xi_prime", "mu", "label_j1", "label_j2"],
        rows.into_iter(),
    )?;
    Ok(())
}

pub fn run_probe(cfg: &mut Config, out: &mut ArtifactWriter, seed: u64) -> Result<(), CliError> {
    let (wc, _) = weight_config(cfg)?;
    let patch = ProbePatch {
        x_half: cfg.get_f64("x_half", 0.4)?,
        xn_depth: cfg.get_f64("xn_depth", 0.3)?,
        nx: cfg.get_usize("nx", 64)?,
        nn: cfg.get_usize("nn", 48)?,
    };
    let mu0 = cfg.get_f64("mu0", 2.0)?;
    let mu_factor = cfg.get_f64("mu_factor", 10.0)?;
    let mu_count = cfg.get_usize("mu_count", 6)?;
    let bumps = cfg.get_usize("bumps", 20)?;
    cfg.finish()?;
    if mu_count < 1 || bumps < 1 {
        return Err(CliError::Config(
            "field=mu_count/bumps: need at least one".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut min_ratio = f64::INFINITY;
    let mut bump_list = Vec::new();
    for _ in 0..bumps {
        let bump = random_bump(&patch, &mut rng);
        bump_list.push(serde_json::json!({
            "h1": bump.h1, "h2": bump.h2,
        }));
        for k in 0..mu_count {
            let mu = if mu_count == 1 {
                mu0
            } else {
                mu0 * mu_factor.powf(k as f64 / (mu_count - 1) as f64)
            };
            let r = carleman_probe(&patch, &wc, &bump, mu).map_err(|e| core_err("probe", e))?;
            let ratio_text = match r.ratio {
                Some(ratio) => {
                    min_ratio = min_ratio.min(ratio);
                    fmt_real(ratio)
                }
                None => "nan".to_string(),
            };
            rows.push(vec![
                fmt_real(mu),
                fmt_real(r.lhs),
                fmt_real(r.rhs),
                ratio_text,
            ]);
        }
    }
    out.write_csv(".csv", &["mu", "lhs", "rhs", "ratio"], rows.into_iter())?;
    out.write_json(
        ".summary.json",
        &serde_json::json!({
            "beta": wc.beta(),
            "min_ratio": if min_ratio.is_finite() { Some(min_ratio) } else { None },
            "bumps": bump_list,
        }),
    )?;
    Ok(())
}
