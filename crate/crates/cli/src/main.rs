//! `waveheat` — deterministic runner for the wave–heat transmission lab.
//!
//! Usage: `waveheat <config-file>`. The config is a flat `key = value`
//! table whose `subcommand` key selects the run (simulate | spectrum |
//! resolvent | carleman-check | classify | probe). Artifacts are written
//! as `<subcommand>-<tag>.*` plus a manifest echoing the fully resolved
//! configuration. A fixed `seed` makes runs byte-for-byte reproducible;
//! `WAVEHEAT_OUT` overrides the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use commands::CliError;
use config::Config;
use output::ArtifactWriter;

const USAGE: &str = "usage: waveheat <config-file>

The config file is a flat `key = value` table; `#` starts a comment.
Required key: subcommand (simulate | spectrum | resolvent | carleman-check | classify | probe).
Common keys: seed (default 0), tag (default \"run\"), out_dir (default \"out\",
overridden by the WAVEHEAT_OUT environment variable).
Remaining keys are subcommand-specific; every applied default is echoed in
the manifest JSON written next to the artifacts.";

fn main() -> ExitCode {
    // single-threaded kernels keep artifacts bit-stable across runs
    faer::set_global_parallelism(faer::Par::Seq);

    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "-h" || a == "--help") {
        println!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    if args.len() != 1 {
        eprintln!("error: config: expected exactly one config-file argument");
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    }
    match run(&args[0]) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: config: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: numerical: {msg}");
            ExitCode::from(3)
        }
        Err(CliError::Io(msg)) => {
            eprintln!("error: io: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(config_path: &str) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("field=config-file: cannot read {config_path}: {e}"))
    })?;
    let mut cfg = Config::parse(&text)?;

    let subcommand = cfg.require("subcommand")?;
    let seed = cfg.get_u64("seed", 0)?;
    let tag = cfg.get_or("tag", "run");
    let out_dir = cfg.get_or("out_dir", "out");
    let out_dir = match std::env::var("WAVEHEAT_OUT") {
        Ok(env_dir) if !env_dir.is_empty() => {
            cfg.override_resolved("out_dir", env_dir.clone());
            PathBuf::from(env_dir)
        }
        _ => PathBuf::from(out_dir),
    };

    let mut writer = ArtifactWriter::new(&out_dir, &subcommand, &tag)?;
    match subcommand.as_str() {
        "simulate" => commands::run_simulate(&mut cfg, &mut writer, seed)?,
        "spectrum" => commands::run_spectrum(&mut cfg, &mut writer, seed)?,
        "resolvent" => commands::run_resolvent(&mut cfg, &mut writer, seed)?,
        "carleman-check" => commands::run_carleman_check(&mut cfg, &mut writer, seed)?,
        "classify" => commands::run_classify(&mut cfg, &mut writer, seed)?,
        "probe" => commands::run_probe(&mut cfg, &mut writer, seed)?,
        other => {
            return Err(CliError::Config(format!(
                "field=subcommand: unknown subcommand `{other}`"
            )))
        }
    }
    writer.write_manifest(&subcommand, cfg.resolved())?;
    Ok(())
}
