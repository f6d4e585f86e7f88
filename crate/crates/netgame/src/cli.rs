//! Command implementations behind the `netgame` binary.
//!
//! Each command is an ordinary function so tests can drive it without
//! spawning a process. Failures carry the exit code class:
//! config problems exit 2, solver failures 3, property violations 4,
//! I/O errors 5.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, ParticipationSpec, ScheduleSection};
use crate::dynamics::{DynamicsMode, RunOptions, StepSchedule};
use crate::equilibrium::{
    epsilon_bar, solve_expected_vi, write_equilibrium_csv, EquilibriumResult, SolveOptions,
};
use crate::game::{derive_bounds, GameSpec};
use crate::metrics::constants;
use crate::net::SampleStream;
use crate::trace::{
    write_summary_json, write_trace_csv, ReplicationDigest, RunSummary, TraceMetadata,
};
use crate::verify::run_battery;
use crate::Error;

/// Command failure with its exit-code class.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Property(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Property(_) => 4,
            CliError::Io(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Property(m) => write!(f, "property violation: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(e) => CliError::Io(e.to_string()),
            Error::InvariantViolated(m) => CliError::Property(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub replications: Option<u64>,
}

fn load_config(path: &Path, overrides: &Overrides) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = overrides.seed {
        config.run.seed = seed;
    }
    if let Some(reps) = overrides.replications {
        if reps == 0 {
            return Err(CliError::Config("replications must be at least 1".into()));
        }
        config.run.replications = reps;
    }
    if let Some(out) = &overrides.out {
        config.run.output_dir = out.display().to_string();
    }
    let out_dir = PathBuf::from(&config.run.output_dir);
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(e.to_string()))?;
    Ok((config, out_dir))
}

fn solve(config: &ExperimentConfig, game: &GameSpec) -> Result<EquilibriumResult, CliError> {
    let opts = SolveOptions { tolerance: config.run.equilibrium_tolerance, ..Default::default() };
    let result = solve_expected_vi(game, &opts)?;
    if !result.converged {
        return Err(CliError::Solver(format!(
            "equilibrium solver stopped at residual {:.3e} after {} iterations (tolerance {:.1e})",
            result.residual, result.iterations, config.run.equilibrium_tolerance
        )));
    }
    Ok(result)
}

/// `netgame equilibrium`: solve and export the expected-game equilibrium.
pub fn cmd_equilibrium(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let (config, out_dir) = load_config(config_path, overrides)?;
    let game = config.build_game()?;
    let result = solve(&config, &game)?;
    let path = out_dir.join("equilibrium.csv");
    write_equilibrium_csv(&path, &result.profile, &config.canonical_hash())?;
    println!(
        "equilibrium solved: residual {:.3e} in {} iterations (step {:.4e})",
        result.residual, result.iterations, result.solver_step
    );
    println!("written to {}", path.display());
    Ok(())
}

/// `netgame run`: execute the replicated learning dynamics, writing one
/// trace file per replication plus a machine-readable summary.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let (config, out_dir) = load_config(config_path, overrides)?;
    let game = config.build_game()?;
    let bounds = derive_bounds(&game)?;
    let pre =
        constants(&bounds, game.network(), &StepSchedule::theta(0.25).expect("valid exponent"));
    let schedule = config.build_schedule(pre.contraction)?;
    let bundle = constants(&bounds, game.network(), &schedule);
    let equilibrium = solve(&config, &game)?;
    let config_hash = config.canonical_hash();
    write_equilibrium_csv(&out_dir.join("equilibrium.csv"), &equilibrium.profile, &config_hash)?;

    let mut run_opts = RunOptions::new(
        if config.run.store_noise { DynamicsMode::Sgd } else { DynamicsMode::Play },
        config.run.horizon,
    );
    run_opts.record_regret = config.run.record_regret;
    if config.run.record_regret {
        run_opts.regret_bound = Some(bundle.regret_params());
    }
    if config.run.store_noise {
        run_opts.noise_ceiling = Some(bundle.noise_ceiling());
    }
    if !config.run.store_profiles {
        run_opts.profile_stride = Some(u64::MAX);
    }

    let digests: Result<Vec<ReplicationDigest>, CliError> = (0..config.run.replications)
        .into_par_iter()
        .map(|rep| {
            let stream = SampleStream::new(config.run.seed, rep);
            let trace = crate::dynamics::run(
                &game,
                &schedule,
                &equilibrium.profile,
                &run_opts,
                &stream,
                None,
            )?;
            let trace_file = format!("trace_rep{rep:04}.csv");
            let metadata = TraceMetadata {
                config_hash: config_hash.clone(),
                master_seed: config.run.seed,
                replication: rep,
                equilibrium_residual: equilibrium.residual,
                constants: Some(bundle),
                created_unix: None,
            }
            .stamped();
            write_trace_csv(&out_dir.join(&trace_file), &metadata, &trace)?;
            if config.run.store_profiles {
                write_profiles_csv(
                    &out_dir.join(format!("profiles_rep{rep:04}.csv")),
                    &trace.profiles,
                )
                .map_err(|e| CliError::Io(e.to_string()))?;
            }
            Ok(ReplicationDigest {
                replication: rep,
                final_distance: trace.rows.last().expect("nonempty trace").distance,
                initial_distance: trace.initial_distance,
                regret_bound_violations: trace.bound_violations,
                trace_file,
            })
        })
        .collect();
    let digests = digests?;

    let mean_final =
        digests.iter().map(|d| d.final_distance).sum::<f64>() / digests.len() as f64;
    let max_final = digests.iter().map(|d| d.final_distance).fold(0.0f64, f64::max);
    let violations: u64 = digests.iter().map(|d| d.regret_bound_violations).sum();
    let summary = RunSummary {
        config_hash,
        master_seed: config.run.seed,
        replications: config.run.replications,
        horizon: config.run.horizon,
        equilibrium_residual: equilibrium.residual,
        equilibrium_iterations: equilibrium.iterations,
        equilibrium_converged: equilibrium.converged,
        constants: bundle,
        mean_final_distance: mean_final,
        max_final_distance: max_final,
        total_regret_bound_violations: violations,
        per_replication: digests,
    };
    write_summary_json(&out_dir.join("summary.json"), &summary)?;
    println!(
        "{} replications x {} iterations: mean final distance {mean_final:.4e}, max {max_final:.4e}",
        config.run.replications, config.run.horizon
    );
    println!("outputs in {}", out_dir.display());
    if violations > 0 {
        return Err(CliError::Property(format!(
            "{violations} rows violated the deterministic regret inequality"
        )));
    }
    Ok(())
}

fn write_profiles_csv(path: &Path, profiles: &[(u64, Vec<f64>)]) -> std::io::Result<()> {
    let mut out = String::new();
    if let Some((_, first)) = profiles.first() {
        let header: Vec<String> = (0..first.len()).map(|i| format!("c{i}")).collect();
        writeln!(out, "k,{}", header.join(",")).expect("string write");
    }
    for (k, values) in profiles {
        let fields: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{k},{}", fields.join(",")).expect("string write");
    }
    fs::write(path, out)
}

/// `netgame verify`: the full property battery; exits nonzero when any
/// check fails.
pub fn cmd_verify(config_path: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let (config, out_dir) = load_config(config_path, overrides)?;
    let (outcomes, equilibrium) = run_battery(&config)?;
    let mut failures = 0usize;
    for outcome in &outcomes {
        let tag = if outcome.skipped {
            "SKIP"
        } else if outcome.passed {
            "PASS"
        } else {
            failures += 1;
            "FAIL"
        };
        println!("[{tag}] {}: {}", outcome.name, outcome.detail);
    }
    let report = serde_json::json!({
        "config_hash": config.canonical_hash(),
        "equilibrium_residual": equilibrium.residual,
        "checks": outcomes,
    });
    fs::write(
        out_dir.join("verify.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )
    .map_err(|e| CliError::Io(e.to_string()))?;
    if failures > 0 {
        return Err(CliError::Property(format!("{failures} verification checks failed")));
    }
    println!("all {} checks passed", outcomes.len());
    Ok(())
}

/// Parameter axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Population size.
    Agents,
    /// Fast-rule exponent.
    Alpha,
    /// Slow-rule exponent.
    Theta,
    /// Confidence parameter of the almost-Nash level.
    Delta,
    /// Shared participation probability.
    Participation,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SweepParam::Agents => "agents",
            SweepParam::Alpha => "alpha",
            SweepParam::Theta => "theta",
            SweepParam::Delta => "delta",
            SweepParam::Participation => "participation",
        };
        f.write_str(s)
    }
}

/// One row of a sweep table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub agents: usize,
    pub monotonicity: f64,
    pub contraction: f64,
    pub noise_bound: f64,
    pub envelope: Option<f64>,
    pub eps_high_probability: f64,
    pub eps_worst_case: f64,
    pub equilibrium_residual: f64,
    pub solver_iterations: u64,
}

/// Evaluates equilibrium, constants and almost-Nash levels across a grid of
/// one parameter; pure computation, shared by the CLI and tests.
pub fn sweep_rows(
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<Vec<SweepRow>, CliError> {
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let mut config = base.clone();
        match param {
            SweepParam::Agents => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(CliError::Config(format!(
                        "agents grid values must be positive integers, got {value}"
                    )));
                }
                if matches!(config.network.participation, ParticipationSpec::PerAgent(_)) {
                    return Err(CliError::Config(
                        "cannot sweep the population with per-agent participation".into(),
                    ));
                }
                config.game.agents = value as usize;
            }
            SweepParam::Alpha => {
                config.schedule = ScheduleSection::Alpha { alpha: value, c2: None };
            }
            SweepParam::Theta => {
                config.schedule = ScheduleSection::Theta { theta: value };
            }
            SweepParam::Delta => {
                config.verify.delta = value;
            }
            SweepParam::Participation => {
                config.network.participation = ParticipationSpec::Scalar(value);
            }
        }
        let violations = config.validate();
        if !violations.is_empty() {
            return Err(CliError::Config(format!(
                "grid value {value} is invalid: {}",
                violations.join("; ")
            )));
        }
        let game = config.build_game()?;
        let bounds = derive_bounds(&game)?;
        let pre = constants(&bounds, game.network(), &StepSchedule::theta(0.25).expect("valid"));
        let schedule = config.build_schedule(pre.contraction)?;
        let bundle = constants(&bounds, game.network(), &schedule);
        let equilibrium = solve(&config, &game)?;
        let eps = epsilon_bar(game.n_agents(), game.dim(), config.verify.delta, &bounds)?;
        rows.push(SweepRow {
            value,
            agents: game.n_agents(),
            monotonicity: bounds.monotonicity,
            contraction: bundle.contraction,
            noise_bound: bundle.noise_bound,
            envelope: bundle.rate.map(|r| r.envelope),
            eps_high_probability: eps.high_probability,
            eps_worst_case: eps.worst_case,
            equilibrium_residual: equilibrium.residual,
            solver_iterations: equilibrium.iterations,
        });
    }
    Ok(rows)
}

/// `netgame sweep`: vary one parameter over a grid and emit a comparison
/// table (stdout + CSV).
pub fn cmd_sweep(
    config_path: &Path,
    overrides: &Overrides,
    param: SweepParam,
    values: &[f64],
) -> Result<(), CliError> {
    let (config, out_dir) = load_config(config_path, overrides)?;
    let rows = sweep_rows(&config, param, values)?;

    let path = out_dir.join("sweep.csv");
    let mut writer = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
    writer
        .write_record([
            param.to_string().as_str(),
            "agents",
            "monotonicity",
            "contraction",
            "noise_bound",
            "envelope",
            "eps_high_probability",
            "eps_worst_case",
            "equilibrium_residual",
            "solver_iterations",
        ])
        .map_err(|e| CliError::Io(e.to_string()))?;
    println!(
        "{:>14} {:>8} {:>12} {:>12} {:>12} {:>12} {:>14} {:>12}",
        param.to_string(),
        "agents",
        "monotone",
        "contraction",
        "noise",
        "envelope",
        "eps(delta)",
        "eps(worst)"
    );
    for row in &rows {
        writer
            .write_record([
                row.value.to_string(),
                row.agents.to_string(),
                row.monotonicity.to_string(),
                row.contraction.to_string(),
                row.noise_bound.to_string(),
                row.envelope.map(|d| d.to_string()).unwrap_or_default(),
                row.eps_high_probability.to_string(),
                row.eps_worst_case.to_string(),
                row.equilibrium_residual.to_string(),
                row.solver_iterations.to_string(),
            ])
            .map_err(|e| CliError::Io(e.to_string()))?;
        println!(
            "{:>14} {:>8} {:>12.6} {:>12.6} {:>12.4} {:>12} {:>14.6} {:>12.4}",
            row.value,
            row.agents,
            row.monotonicity,
            row.contraction,
            row.noise_bound,
            row.envelope.map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into()),
            row.eps_high_probability,
            row.eps_worst_case
        );
    }
    writer.flush().map_err(|e| CliError::Io(e.to_string()))?;
    println!("table written to {}", path.display());
    Ok(())
}
