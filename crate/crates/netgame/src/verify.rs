//! The property battery: statistical and deterministic checks that the
//! implemented dynamics actually satisfy the guarantees they are supposed
//! to. The CLI `verify` command runs it at config scale; the acceptance
//! suite runs the same functions at full scale.
//!
//! Statistical checks use four standard errors of Monte Carlo slack, which
//! keeps false failures negligible at the replication counts used here;
//! deterministic inequalities get no slack beyond float round-off.

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::dynamics::{self, run, DynamicsMode, RunOptions, StepSchedule};
use crate::equilibrium::{
    aggregate_concentration_radius, epsilon_bar, solve_expected_vi, EquilibriumResult,
    SolveOptions,
};
use crate::error::{Error, Result};
use crate::game::{self, derive_bounds, GameBounds, GameSpec, StrategyProfile};
use crate::metrics::{
    self, constants, mean_square_bound_check, AppendixGrid, ConstantsBundle, DeviationStats,
};
use crate::net::SampleStream;

/// Verdict of one check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// `true` when the check does not apply to this configuration (counted
    /// as passed, but reported distinctly).
    pub skipped: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(name: &str, detail: String) -> Self {
        Self { name: name.into(), passed: true, skipped: false, detail }
    }

    fn fail(name: &str, detail: String) -> Self {
        Self { name: name.into(), passed: false, skipped: false, detail }
    }

    fn skip(name: &str, detail: String) -> Self {
        Self { name: name.into(), passed: true, skipped: true, detail }
    }

    fn from(name: &str, passed: bool, detail: String) -> Self {
        if passed {
            Self::pass(name, detail)
        } else {
            Self::fail(name, detail)
        }
    }
}

/// Scales for [`noise_moment_check`].
#[derive(Debug, Clone, Copy)]
pub struct NoiseMomentOptions {
    pub profiles: usize,
    pub draws: u64,
    pub seed: u64,
}

/// At several fixed profiles, the sampled perturbation must average to zero
/// coordinate-wise (within four standard errors) and every single draw must
/// respect the proven squared-norm ceiling.
pub fn noise_moment_check(game: &GameSpec, opts: &NoiseMomentOptions) -> Result<CheckOutcome> {
    let bounds = derive_bounds(game)?;
    let min_p = game.network().min_participation();
    let noise_bound = bounds.gradient_bound * (1.0 / min_p + 1.0);
    let ceiling = noise_bound * noise_bound * game.n_agents() as f64;
    let expected = game.network().expected_effective();
    let len = game.n_agents() * game.dim();

    let results: Vec<(f64, f64, u64)> = (0..opts.profiles)
        .into_par_iter()
        .map(|p_idx| {
            let mut rng = SampleStream::new(opts.seed, p_idx as u64).rng_at(u64::MAX);
            let profile = game.sample_feasible(&mut rng);
            let mut expected_op = vec![0.0; len];
            game::local_aggregates_into(&profile, &expected, &mut expected_op);
            let mut expected_jac = vec![0.0; len];
            game::game_jacobian_from_aggregates(
                game,
                &profile,
                &expected_op,
                &mut expected_jac,
                0,
            )
            .expect("quadratic gradients are finite");

            let stream = SampleStream::new(opts.seed, p_idx as u64);
            let mut realization = game.network().empty_realization();
            let mut masked = vec![0.0; len];
            let mut aggregates = vec![0.0; len];
            let mut gradient = vec![0.0; len];
            let mut noise = vec![0.0; len];
            let mut mean = vec![0.0; len];
            let mut m2 = vec![0.0; len];
            let mut ceiling_violations = 0u64;
            let participation = game.network().participation();
            for k in 0..opts.draws {
                let mut draw_rng = stream.rng_at(k);
                game.network().sample_into(&mut draw_rng, k, &mut realization);
                dynamics::realized_aggregates_into(
                    &profile,
                    &realization,
                    &mut masked,
                    &mut aggregates,
                );
                game::game_jacobian_from_aggregates(game, &profile, &aggregates, &mut gradient, k)
                    .expect("quadratic gradients are finite");
                let mut sq = 0.0;
                for i in 0..game.n_agents() {
                    let ratio = if realization.is_present(i) {
                        1.0 / participation[i]
                    } else {
                        0.0
                    };
                    for d in 0..game.dim() {
                        let idx = i * game.dim() + d;
                        noise[idx] = ratio * gradient[idx] - expected_jac[idx];
                        sq += noise[idx] * noise[idx];
                    }
                }
                if sq > ceiling {
                    ceiling_violations += 1;
                }
                let count = (k + 1) as f64;
                for idx in 0..len {
                    let delta = noise[idx] - mean[idx];
                    mean[idx] += delta / count;
                    m2[idx] += delta * (noise[idx] - mean[idx]);
                }
            }
            // Worst standardized coordinate mean for this profile.
            let mut worst = 0.0f64;
            for idx in 0..len {
                let se = (m2[idx] / (opts.draws - 1) as f64 / opts.draws as f64).sqrt();
                let excess = mean[idx].abs() - 4.0 * se - 1e-12;
                worst = worst.max(excess);
            }
            let max_ratio = (0..len)
                .map(|idx| {
                    let se = (m2[idx] / (opts.draws - 1) as f64 / opts.draws as f64).sqrt();
                    if se > 0.0 {
                        mean[idx].abs() / se
                    } else {
                        0.0
                    }
                })
                .fold(0.0f64, f64::max);
            (worst, max_ratio, ceiling_violations)
        })
        .collect();

    let worst_excess = results.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let max_ratio = results.iter().map(|r| r.1).fold(0.0f64, f64::max);
    let ceiling_violations: u64 = results.iter().map(|r| r.2).sum();
    let passed = worst_excess <= 0.0 && ceiling_violations == 0;
    Ok(CheckOutcome::from(
        "noise moments",
        passed,
        format!(
            "{} profiles x {} draws: max |mean|/se = {max_ratio:.2} (limit 4), ceiling \
             violations = {ceiling_violations}",
            opts.profiles, opts.draws
        ),
    ))
}

/// The two update forms must agree to floating-point reordering on random
/// (profile, realization, step) triples.
pub fn equivalence_check(
    games: &[GameSpec],
    trials_per_game: u64,
    seed: u64,
    tolerance: f64,
) -> Result<CheckOutcome> {
    use rand::Rng;
    let mut max_gap = 0.0f64;
    for (g_idx, game) in games.iter().enumerate() {
        let stream = SampleStream::new(seed, g_idx as u64);
        let mut rng = stream.rng_at(u64::MAX);
        for t in 0..trials_per_game {
            let profile = game.sample_feasible(&mut rng);
            let tau = rng.random_range(0.0..1.5);
            let realization = game.network().sample(&mut stream.rng_at(t), t);
            let play = dynamics::play_step(game, &profile, &realization, tau)?;
            let (sgd, _) = dynamics::sgd_step(game, &profile, &realization, tau)?;
            max_gap = max_gap.max(play.distance_to(&sgd));
        }
    }
    Ok(CheckOutcome::from(
        "update-form equivalence",
        max_gap < tolerance,
        format!(
            "{} games x {} triples: max discrepancy {max_gap:.3e} (tolerance {tolerance:.0e})",
            games.len(),
            trials_per_game
        ),
    ))
}

/// The realized aggregate of each fixed agent must fall inside the
/// concentration radius around its expected aggregate in at least a
/// `1 - delta/(2N) - slack` share of network draws.
pub fn concentration_check(
    game: &GameSpec,
    equilibrium: &StrategyProfile,
    delta: f64,
    draws: u64,
    seed: u64,
    slack: f64,
) -> Result<CheckOutcome> {
    let bounds = derive_bounds(game)?;
    let n = game.n_agents();
    let dim = game.dim();
    let len = n * dim;
    let radius =
        aggregate_concentration_radius(n, dim, delta, bounds.strategy_norm_bound);
    let expected = game.network().expected_effective();
    let expected_agg = game::local_aggregates(equilibrium, &expected)?;

    let stream = SampleStream::new(seed, 0);
    let mut realization = game.network().empty_realization();
    let mut masked = vec![0.0; len];
    let mut aggregates = vec![0.0; len];
    let mut inside = vec![0u64; n];
    for k in 0..draws {
        let mut rng = stream.rng_at(k);
        game.network().sample_into(&mut rng, k, &mut realization);
        dynamics::realized_aggregates_into(equilibrium, &realization, &mut masked, &mut aggregates);
        for i in 0..n {
            let mut dev = 0.0;
            for d in 0..dim {
                let idx = i * dim + d;
                let diff = aggregates[idx] - expected_agg[idx];
                dev += diff * diff;
            }
            if dev.sqrt() <= radius {
                inside[i] += 1;
            }
        }
    }
    let threshold = 1.0 - delta / (2.0 * n as f64) - slack;
    let min_freq =
        inside.iter().map(|c| *c as f64 / draws as f64).fold(f64::INFINITY, f64::min);
    Ok(CheckOutcome::from(
        "aggregate concentration",
        min_freq >= threshold,
        format!(
            "{draws} draws: min per-agent in-radius frequency {min_freq:.4} (threshold \
             {threshold:.4}, radius {radius:.4})"
        ),
    ))
}

/// The expected-game equilibrium must be an almost-Nash equilibrium of the
/// sampled stage game: within the high-probability level in at least a
/// `1 - delta - slack` share of draws, and within the worst-case level on
/// every draw.
pub fn eps_nash_check(
    game: &GameSpec,
    equilibrium: &StrategyProfile,
    delta: f64,
    draws: u64,
    seed: u64,
    slack: f64,
) -> Result<CheckOutcome> {
    let bounds = derive_bounds(game)?;
    let n = game.n_agents();
    let dim = game.dim();
    let len = n * dim;
    let eps = epsilon_bar(n, dim, delta, &bounds)?;

    let stream = SampleStream::new(seed, 0);
    let mut realization = game.network().empty_realization();
    let mut masked = vec![0.0; len];
    let mut aggregates = vec![0.0; len];
    let mut within_high = 0u64;
    let mut worst_violations = 0u64;
    let mut max_gap_seen = 0.0f64;
    for k in 0..draws {
        let mut rng = stream.rng_at(k);
        game.network().sample_into(&mut rng, k, &mut realization);
        dynamics::realized_aggregates_into(equilibrium, &realization, &mut masked, &mut aggregates);
        let mut max_gap = 0.0f64;
        for i in 0..n {
            let z = &aggregates[i * dim..(i + 1) * dim];
            let gap = crate::equilibrium::agent_gap(game, i, equilibrium.agent(i), z)?;
            max_gap = max_gap.max(gap);
        }
        max_gap_seen = max_gap_seen.max(max_gap);
        if max_gap <= eps.high_probability {
            within_high += 1;
        }
        if max_gap > eps.worst_case + 1e-12 {
            worst_violations += 1;
        }
    }
    let frequency = within_high as f64 / draws as f64;
    let threshold = 1.0 - delta - slack;
    Ok(CheckOutcome::from(
        "almost-Nash frequency",
        frequency >= threshold && worst_violations == 0,
        format!(
            "{draws} draws: frequency within high-probability level {frequency:.4} (threshold \
             {threshold:.4}); worst-case violations {worst_violations}; max gap {max_gap_seen:.3e} \
             vs worst-case level {:.3e}",
            eps.worst_case
        ),
    ))
}

/// The three scalar inequalities behind the rate analysis, on the full
/// grid.
pub fn appendix_check() -> CheckOutcome {
    let report = metrics::appendix_checks(&AppendixGrid::default());
    CheckOutcome::from(
        "scalar inequality grid",
        report.passed(),
        format!(
            "{} cases: {} power, {} series, {} decay violations",
            report.cases(),
            report.power_violations,
            report.series_violations,
            report.decay_violations
        ),
    )
}

/// Scales and windows for the replicated-run battery.
#[derive(Debug, Clone, Copy)]
pub struct BatteryOptions {
    pub replications: u64,
    pub horizon: u64,
    pub master_seed: u64,
    /// Envelope exponent for the almost-sure surrogate.
    pub beta: f64,
    /// Rate-fit window (also the fit window of the envelope constant).
    pub fit_lo: u64,
    pub fit_hi: u64,
}

impl BatteryOptions {
    pub fn new(replications: u64, horizon: u64, master_seed: u64, beta: f64) -> Self {
        Self {
            replications,
            horizon,
            master_seed,
            beta,
            fit_lo: 100.min(horizon / 10).max(10),
            fit_hi: horizon.min(10_000),
        }
    }
}

/// Reduced record of one replication.
#[derive(Debug, Clone)]
pub struct RepSummary {
    pub replication: u64,
    pub initial_distance: f64,
    pub final_distance: f64,
    pub bound_violations: u64,
    /// Largest single-agent regret seen on any row.
    pub max_regret: f64,
    /// Max of `distance * k^((1-beta)/2)` over the fit window.
    pub scaled_early_max: f64,
    /// Same statistic over the last decade of iterations.
    pub scaled_late_max: f64,
}

/// Cross-replication data the battery checks are computed from.
#[derive(Debug, Clone)]
pub struct BatteryData {
    pub replications: u64,
    pub horizon: u64,
    pub stats: Vec<DeviationStats>,
    pub per_rep: Vec<RepSummary>,
    /// Per-agent mean (over replications) of the time-averaged regret at
    /// the horizon.
    pub regret_mean_by_agent: Vec<f64>,
    pub regret_se_by_agent: Vec<f64>,
    pub total_bound_violations: u64,
}

/// Runs `replications` independent seeded paths in parallel and reduces
/// them to the statistics the convergence, rate and regret checks need.
pub fn replicated_battery(
    game: &GameSpec,
    schedule: &StepSchedule,
    equilibrium: &StrategyProfile,
    bundle: &ConstantsBundle,
    opts: &BatteryOptions,
) -> Result<BatteryData> {
    let n = game.n_agents();
    let rows = opts.horizon as usize + 1;
    let split = (opts.horizon / 10).max(opts.fit_lo + 1);

    struct Accumulator {
        sum: Vec<f64>,
        sum_sq: Vec<f64>,
        regret_sum: Vec<f64>,
        regret_sum_sq: Vec<f64>,
        reps: Vec<RepSummary>,
    }
    impl Accumulator {
        fn new(rows: usize, agents: usize) -> Self {
            Self {
                sum: vec![0.0; rows],
                sum_sq: vec![0.0; rows],
                regret_sum: vec![0.0; agents],
                regret_sum_sq: vec![0.0; agents],
                reps: Vec::new(),
            }
        }
        fn merge(mut self, other: Self) -> Self {
            for (a, b) in self.sum.iter_mut().zip(&other.sum) {
                *a += b;
            }
            for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
                *a += b;
            }
            for (a, b) in self.regret_sum.iter_mut().zip(&other.regret_sum) {
                *a += b;
            }
            for (a, b) in self.regret_sum_sq.iter_mut().zip(&other.regret_sum_sq) {
                *a += b;
            }
            self.reps.extend(other.reps);
            self
        }
    }

    let scale_exp = (1.0 - opts.beta) / 2.0;
    let run_opts = {
        let mut o = RunOptions::new(DynamicsMode::Play, opts.horizon);
        o.record_regret = true;
        o.regret_bound = Some(bundle.regret_params());
        o.profile_stride = Some(u64::MAX);
        o
    };

    let traces: Result<Vec<Accumulator>> = (0..opts.replications)
        .into_par_iter()
        .map(|rep| {
            let stream = SampleStream::new(opts.master_seed, rep);
            let trace = run(game, schedule, equilibrium, &run_opts, &stream, None)?;
            let mut acc = Accumulator::new(rows, n);
            let mut early = 0.0f64;
            let mut late = 0.0f64;
            let mut max_regret = 0.0f64;
            for row in &trace.rows {
                let k = row.iteration;
                acc.sum[k as usize] += row.distance;
                acc.sum_sq[k as usize] += row.distance * row.distance;
                max_regret = max_regret.max(row.max_regret.unwrap_or(0.0));
                if k >= opts.fit_lo {
                    let scaled = row.distance * (k as f64).powf(scale_exp);
                    if k <= split {
                        early = early.max(scaled);
                    } else {
                        late = late.max(scaled);
                    }
                }
            }
            let horizon = opts.horizon.max(1) as f64;
            for (i, total) in trace.regret_totals.iter().enumerate() {
                let avg = total / horizon;
                acc.regret_sum[i] += avg;
                acc.regret_sum_sq[i] += avg * avg;
            }
            acc.reps.push(RepSummary {
                replication: rep,
                initial_distance: trace.initial_distance,
                final_distance: trace.rows.last().expect("nonempty trace").distance,
                bound_violations: trace.bound_violations,
                max_regret,
                scaled_early_max: early,
                scaled_late_max: late,
            });
            Ok(acc)
        })
        .collect();
    let acc = traces?
        .into_iter()
        .reduce(Accumulator::merge)
        .ok_or_else(|| Error::InsufficientData("battery needs at least one replication".into()))?;

    let r = opts.replications as f64;
    let stats = (0..rows)
        .map(|k| {
            let mean = acc.sum[k] / r;
            let var = if opts.replications > 1 {
                ((acc.sum_sq[k] - acc.sum[k] * acc.sum[k] / r) / (r - 1.0)).max(0.0)
            } else {
                0.0
            };
            DeviationStats {
                iteration: k as u64,
                mean,
                std_dev: var.sqrt(),
                replications: opts.replications as usize,
            }
        })
        .collect();
    let regret_mean_by_agent: Vec<f64> = acc.regret_sum.iter().map(|s| s / r).collect();
    let regret_se_by_agent: Vec<f64> = (0..n)
        .map(|i| {
            if opts.replications > 1 {
                let var = ((acc.regret_sum_sq[i] - acc.regret_sum[i] * acc.regret_sum[i] / r)
                    / (r - 1.0))
                    .max(0.0);
                (var / r).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut per_rep = acc.reps;
    per_rep.sort_by_key(|r| r.replication);
    let total_bound_violations = per_rep.iter().map(|r| r.bound_violations).sum();
    Ok(BatteryData {
        replications: opts.replications,
        horizon: opts.horizon,
        stats,
        per_rep,
        regret_mean_by_agent,
        regret_se_by_agent,
        total_bound_violations,
    })
}

/// Finite-path surrogate of almost-sure convergence: every seeded path must
/// end well inside its starting distance, and the envelope-scaled distance
/// must not grow into the last decade of iterations.
pub fn convergence_surrogate_outcome(data: &BatteryData, contraction_ratio: f64) -> CheckOutcome {
    let mut worst_ratio = 0.0f64;
    let mut envelope_failures = 0u64;
    for rep in &data.per_rep {
        let ratio = rep.final_distance / rep.initial_distance.max(1e-300);
        worst_ratio = worst_ratio.max(ratio);
        if rep.scaled_late_max > rep.scaled_early_max {
            envelope_failures += 1;
        }
    }
    CheckOutcome::from(
        "almost-sure convergence surrogate",
        worst_ratio < contraction_ratio && envelope_failures == 0,
        format!(
            "{} paths: worst final/initial distance ratio {worst_ratio:.3e} (limit \
             {contraction_ratio}), envelope-growth failures {envelope_failures}",
            data.replications
        ),
    )
}

/// Zero tolerance sweep of the deterministic regret inequality.
pub fn regret_bound_outcome(data: &BatteryData) -> CheckOutcome {
    CheckOutcome::from(
        "deterministic regret inequality",
        data.total_bound_violations == 0,
        format!(
            "{} paths x {} rows: {} violations",
            data.replications,
            data.horizon + 1,
            data.total_bound_violations
        ),
    )
}

/// Mean-square envelope over the replicated paths.
pub fn mean_square_outcome(
    data: &BatteryData,
    bundle: &ConstantsBundle,
    schedule: &StepSchedule,
) -> CheckOutcome {
    if bundle.rate.is_none() {
        return CheckOutcome::skip(
            "mean-square envelope",
            "no envelope constant for this schedule".into(),
        );
    }
    match mean_square_bound_check(&data.stats, bundle, schedule) {
        Ok(report) => CheckOutcome::from(
            "mean-square envelope",
            report.passed(),
            format!(
                "{} iterations checked: {} violations, min slack {:.3e}",
                report.checked,
                report.violations.len(),
                report.min_slack
            ),
        ),
        Err(e) => CheckOutcome::fail("mean-square envelope", e.to_string()),
    }
}

/// Log-log slope of the mean deviation path against a threshold.
pub fn slope_outcome(data: &BatteryData, fit_lo: u64, fit_hi: u64, threshold: f64) -> CheckOutcome {
    let series: Vec<(u64, f64)> =
        data.stats.iter().map(|s| (s.iteration, s.mean)).collect();
    match metrics::fit_rate(&series, fit_lo, fit_hi) {
        Ok(fit) => CheckOutcome::from(
            "deviation decay slope",
            fit.exponent <= threshold,
            format!(
                "fitted slope {:.3} on [{fit_lo}, {fit_hi}] (threshold {threshold}), residual {:.2e}",
                fit.exponent, fit.residual
            ),
        ),
        Err(e) => CheckOutcome::fail("deviation decay slope", e.to_string()),
    }
}

/// Expected time-averaged regret at the horizon against its closed-form
/// bound, per agent, within four standard errors.
pub fn averaged_regret_outcome(
    data: &BatteryData,
    bounds: &GameBounds,
    bundle: &ConstantsBundle,
) -> CheckOutcome {
    let name = "time-averaged regret bound";
    let n = data.regret_mean_by_agent.len();
    if n < 2 {
        return CheckOutcome::skip(name, "needs at least two agents".into());
    }
    let Some(rate) = bundle.rate else {
        return CheckOutcome::skip(name, "no envelope constant for this schedule".into());
    };
    let delta = 1.0 / n as f64;
    let eps = match epsilon_bar(n, 1, delta, bounds) {
        Ok(e) => e,
        Err(e) => return CheckOutcome::fail(name, e.to_string()),
    };
    let t = data.horizon as f64;
    let bound = 2.0 * bounds.cost_bound / t
        + 2.0 * bundle.regret_slope * (n as f64 * rate.envelope / t).sqrt()
        + eps.high_probability * (1.0 - delta)
        + bundle.regret_offset * delta;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_mean = 0.0f64;
    for i in 0..n {
        let excess = data.regret_mean_by_agent[i] - bound - 4.0 * data.regret_se_by_agent[i];
        worst_excess = worst_excess.max(excess);
        worst_mean = worst_mean.max(data.regret_mean_by_agent[i]);
    }
    CheckOutcome::from(
        name,
        worst_excess <= 0.0,
        format!("max agent mean {worst_mean:.3e} vs bound {bound:.3e} (+4 se)"),
    )
}

/// Everything `verify` runs, at the scales the config asks for.
pub fn run_battery(config: &ExperimentConfig) -> Result<(Vec<CheckOutcome>, EquilibriumResult)> {
    let game = config.build_game()?;
    let bounds = derive_bounds(&game)?;
    let pre_bundle =
        constants(&bounds, game.network(), &StepSchedule::theta(0.25).expect("valid"));
    let schedule = config.build_schedule(pre_bundle.contraction)?;
    let bundle = constants(&bounds, game.network(), &schedule);
    let solve_opts = SolveOptions {
        tolerance: config.run.equilibrium_tolerance,
        ..Default::default()
    };
    let equilibrium = solve_expected_vi(&game, &solve_opts)?;
    let seed = config.run.seed;

    let mut outcomes = Vec::new();
    outcomes.push(noise_moment_check(
        &game,
        &NoiseMomentOptions {
            profiles: config.verify.noise_profiles,
            draws: config.verify.noise_draws,
            seed: seed ^ 0x6e6f_6973,
        },
    )?);
    outcomes.push(equivalence_check(
        std::slice::from_ref(&game),
        config.verify.equivalence_trials,
        seed ^ 0x6571_7576,
        1e-12,
    )?);
    outcomes.push(concentration_check(
        &game,
        &equilibrium.profile,
        config.verify.delta,
        config.verify.network_draws,
        seed ^ 0x636f_6e63,
        0.02,
    )?);
    outcomes.push(eps_nash_check(
        &game,
        &equilibrium.profile,
        config.verify.delta,
        config.verify.network_draws,
        seed ^ 0x6570_7331,
        0.02,
    )?);
    outcomes.push(appendix_check());

    let battery_opts = BatteryOptions::new(
        config.run.replications,
        config.run.horizon,
        seed,
        config.verify.beta,
    );
    let data = replicated_battery(&game, &schedule, &equilibrium.profile, &bundle, &battery_opts)?;
    outcomes.push(convergence_surrogate_outcome(&data, 0.05));
    outcomes.push(regret_bound_outcome(&data));
    outcomes.push(mean_square_outcome(&data, &bundle, &schedule));
    if let StepSchedule::Alpha { alpha, .. } = &schedule {
        outcomes.push(slope_outcome(
            &data,
            battery_opts.fit_lo,
            battery_opts.fit_hi,
            -alpha / 2.0 + 0.1,
        ));
        outcomes.push(averaged_regret_outcome(&data, &bounds, &bundle));
    }
    Ok((outcomes, equilibrium))
}
