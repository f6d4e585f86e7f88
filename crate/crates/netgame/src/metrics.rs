//! Regret accounting, theoretical constants, rate fitting, and numeric
//! verification of the convergence and regret bounds.

use serde::Serialize;

use crate::dynamics::{RegretBoundParams, SimulationTrace, StepSchedule};
use crate::error::{Error, Result};
use crate::game::{GameBounds, GameSpec, StrategyProfile};
use crate::net::{NetworkModel, NetworkRealization};

/// The constants that parameterize the convergence-rate and regret bounds,
/// evaluated in closed form from the game bounds and the network model.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantsBundle {
    pub n_agents: usize,
    /// Per-agent noise magnitude ceiling: the realized perturbation block
    /// never exceeds this norm (`gradient bound * (1/min participation + 1)`).
    pub noise_bound: f64,
    /// Second-moment factor of one noisy step:
    /// `max participation * (gradient bound^2 + noise bound^2)`.
    pub step_noise: f64,
    /// Per-step contraction coefficient:
    /// `2 * monotonicity * min participation`.
    pub contraction: f64,
    /// Worst-case weighted squared deviation per agent:
    /// `4 * strategy norm bound^2 / min participation`.
    pub deviation_cap: f64,
    /// Regret sensitivity to the distance from equilibrium:
    /// `strategy Lipschitz + 2 * aggregate Lipschitz`.
    pub regret_slope: f64,
    /// Worst-case almost-Nash level, the distance-free part of the regret
    /// bound: `4 * aggregate Lipschitz * strategy norm bound`.
    pub regret_offset: f64,
    /// Hard cap on any realized regret: twice the cost bound.
    pub regret_cap: f64,
    /// Mean-square envelope constants; absent when the schedule does not
    /// contract fast enough (its scaled step never beats the contraction).
    pub rate: Option<RateConstants>,
}

/// Constants of the mean-square envelope `E dist <= sqrt(N D delta_k)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateConstants {
    /// Multiplier `B` with `tau_k = B * delta_k`.
    pub step_scale: f64,
    /// First iteration the envelope is claimed from.
    pub start_iteration: u64,
    /// The envelope constant `D`.
    pub envelope: f64,
}

impl ConstantsBundle {
    /// Squared-noise ceiling for a whole profile.
    pub fn noise_ceiling(&self) -> f64 {
        self.noise_bound * self.noise_bound * self.n_agents as f64
    }

    /// Parameters of the deterministic per-row regret inequality.
    pub fn regret_params(&self) -> RegretBoundParams {
        RegretBoundParams { slope: self.regret_slope, offset: self.regret_offset }
    }

    /// Mean-square envelope value at iteration `k` for the given schedule.
    pub fn envelope_at(&self, schedule: &StepSchedule, k: u64) -> Option<f64> {
        let rate = self.rate?;
        let decay = schedule.decay_at(k)?;
        Some((self.n_agents as f64 * rate.envelope * decay).sqrt())
    }
}

/// Evaluates every bound constant for a game/network/schedule triple.
///
/// The envelope constant needs the scaled step to beat the contraction
/// (`B * contraction > 1`); when it does not (possible for custom
/// schedules, or for the slow rule on weakly contracting games) `rate` is
/// `None` and mean-square checks are refused.
pub fn constants(
    bounds: &GameBounds,
    model: &NetworkModel,
    schedule: &StepSchedule,
) -> ConstantsBundle {
    let min_p = model.min_participation();
    let max_p = model.max_participation();
    let noise_bound = bounds.gradient_bound * (1.0 / min_p + 1.0);
    let step_noise = max_p * (bounds.gradient_bound.powi(2) + noise_bound.powi(2));
    let contraction = 2.0 * bounds.monotonicity * min_p;
    let deviation_cap = 4.0 * bounds.strategy_norm_bound.powi(2) / min_p;
    let rate = schedule.step_scale().and_then(|scale| {
        let product = scale * contraction;
        if product <= 1.0 {
            return None;
        }
        // First k with delta_k <= 1/(B C2); 1 ulp of slack so the matched
        // construction (B = 2^alpha / C2) lands exactly on k = 2.
        let threshold = (1.0 + 1e-12) / product;
        let mut start = 1u64;
        while schedule.decay_at(start).expect("built-in schedule") > threshold {
            start += 1;
        }
        let delta_start = schedule.decay_at(start).expect("built-in schedule");
        let envelope =
            (deviation_cap / delta_start).max(scale * scale * step_noise / (product - 1.0));
        Some(RateConstants { step_scale: scale, start_iteration: start, envelope })
    });
    ConstantsBundle {
        n_agents: model.n_agents(),
        noise_bound,
        step_noise,
        contraction,
        deviation_cap,
        regret_slope: bounds.strategy_lipschitz + 2.0 * bounds.aggregate_lipschitz,
        regret_offset: 4.0 * bounds.aggregate_lipschitz * bounds.strategy_norm_bound,
        regret_cap: 2.0 * bounds.cost_bound,
        rate,
    }
}

/// Distance between profiles in the norm weighted by inverse participation
/// probabilities.
pub fn weighted_distance(
    a: &StrategyProfile,
    b: &StrategyProfile,
    participation: &[f64],
) -> Result<f64> {
    if a.n_agents() != b.n_agents() || a.dim() != b.dim() {
        return Err(Error::DimensionMismatch("profiles have different shapes".into()));
    }
    if participation.len() != a.n_agents() {
        return Err(Error::DimensionMismatch(format!(
            "{} participation probabilities for {} agents",
            participation.len(),
            a.n_agents()
        )));
    }
    if participation.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidParameter(
            "participation probabilities must be strictly positive".into(),
        ));
    }
    Ok(weighted_distance_slices(a.values(), b.values(), participation, a.dim()))
}

pub(crate) fn weighted_distance_slices(
    a: &[f64],
    b: &[f64],
    participation: &[f64],
    dim: usize,
) -> f64 {
    let mut total = 0.0;
    for (i, p) in participation.iter().enumerate() {
        let mut block = 0.0;
        for d in 0..dim {
            let idx = i * dim + d;
            let diff = a[idx] - b[idx];
            block += diff * diff;
        }
        total += block / p;
    }
    total.sqrt()
}

/// Realized regret of every agent in the stage game of `realization`: cost
/// actually paid minus the best cost achievable against the aggregate the
/// agent sensed. Tiny negative values from the inner minimization are
/// clamped to zero.
pub fn instantaneous_regret(
    game: &GameSpec,
    profile: &StrategyProfile,
    realization: &NetworkRealization,
) -> Result<Vec<f64>> {
    let gaps = crate::equilibrium::nash_gap(game, profile, &realization.effective())?;
    Ok(gaps.into_iter().map(|g| g.max(0.0)).collect())
}

/// Realized regret of one agent at one iteration, paired with the value of
/// its deterministic bound.
#[derive(Debug, Clone, Copy)]
pub struct RegretRecord {
    pub iteration: u64,
    pub agent: usize,
    pub regret: f64,
    /// `slope * distance + offset` at that iteration.
    pub bound_value: f64,
    pub margin: f64,
}

/// Full per-(iteration, agent) regret table of a trace that stored
/// per-agent regret.
pub fn regret_records(
    trace: &SimulationTrace,
    constants: &ConstantsBundle,
) -> Result<Vec<RegretRecord>> {
    let per_agent = trace.per_agent_regret.as_ref().ok_or_else(|| {
        Error::InsufficientData("regret records need the per-agent regret rows".into())
    })?;
    let params = constants.regret_params();
    let mut records = Vec::with_capacity(per_agent.len() * trace.regret_totals.len());
    for (row, regrets) in trace.rows.iter().zip(per_agent) {
        let bound_value = params.slope * row.distance + params.offset;
        for (agent, regret) in regrets.iter().enumerate() {
            records.push(RegretRecord {
                iteration: row.iteration,
                agent,
                regret: *regret,
                bound_value,
                margin: bound_value - regret,
            });
        }
    }
    Ok(records)
}

/// One violation of the deterministic regret inequality.
#[derive(Debug, Clone, Copy)]
pub struct RegretViolation {
    pub iteration: u64,
    pub agent: Option<usize>,
    pub regret: f64,
    pub allowed: f64,
}

/// Outcome of sweeping the deterministic regret inequality over a trace.
#[derive(Debug, Clone)]
pub struct RegretCheckReport {
    pub rows_checked: u64,
    pub min_margin: f64,
    pub violations: Vec<RegretViolation>,
}

impl RegretCheckReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies `regret <= slope * distance + offset` on every row of the
/// trace (and per agent when the trace stored per-agent regret). The
/// inequality is deterministic, so any violation is a failure, not noise.
pub fn regret_bound_check(
    trace: &SimulationTrace,
    constants: &ConstantsBundle,
) -> Result<RegretCheckReport> {
    let params = constants.regret_params();
    let mut report =
        RegretCheckReport { rows_checked: 0, min_margin: f64::INFINITY, violations: Vec::new() };
    if let Some(per_agent) = &trace.per_agent_regret {
        for (row, regrets) in trace.rows.iter().zip(per_agent) {
            let allowed = params.slope * row.distance + params.offset;
            for (agent, regret) in regrets.iter().enumerate() {
                let margin = allowed - regret;
                report.min_margin = report.min_margin.min(margin);
                if margin < 0.0 {
                    report.violations.push(RegretViolation {
                        iteration: row.iteration,
                        agent: Some(agent),
                        regret: *regret,
                        allowed,
                    });
                }
                if *regret > constants.regret_cap {
                    report.violations.push(RegretViolation {
                        iteration: row.iteration,
                        agent: Some(agent),
                        regret: *regret,
                        allowed: constants.regret_cap,
                    });
                }
            }
            report.rows_checked += 1;
        }
        return Ok(report);
    }
    // Fall back to the margins the run recorded online.
    for row in &trace.rows {
        let (Some(margin), Some(max_regret)) = (row.bound_margin, row.max_regret) else {
            return Err(Error::InsufficientData(
                "trace has neither per-agent regret nor online bound margins".into(),
            ));
        };
        report.min_margin = report.min_margin.min(margin);
        if margin < 0.0 {
            report.violations.push(RegretViolation {
                iteration: row.iteration,
                agent: None,
                regret: max_regret,
                allowed: params.slope * row.distance + params.offset,
            });
        }
        if max_regret > constants.regret_cap {
            report.violations.push(RegretViolation {
                iteration: row.iteration,
                agent: None,
                regret: max_regret,
                allowed: constants.regret_cap,
            });
        }
        report.rows_checked += 1;
    }
    Ok(report)
}

/// Per-agent running means of realized regret: entry `t-1` of agent `i`'s
/// series is the average of its regret over iterations `1..=t`.
pub fn time_averaged_regret(trace: &SimulationTrace) -> Result<Vec<Vec<f64>>> {
    let per_agent = trace.per_agent_regret.as_ref().ok_or_else(|| {
        Error::InsufficientData("running means need the per-agent regret rows".into())
    })?;
    let horizon = trace.horizon() as usize;
    let n = trace.regret_totals.len();
    let mut series = vec![Vec::with_capacity(horizon); n];
    let mut sums = vec![0.0; n];
    for (k, regrets) in per_agent.iter().enumerate().skip(1) {
        for i in 0..n {
            sums[i] += regrets[i];
            series[i].push(sums[i] / k as f64);
        }
    }
    Ok(series)
}

/// Power-law fit of a positive series on log-log axes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    /// Slope of log(value) against log(k).
    pub exponent: f64,
    /// Intercept, i.e. log of the prefactor.
    pub intercept: f64,
    pub k_min: u64,
    pub k_max: u64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares slope of `log(value)` on `log(k)` over `k_min..=k_max`.
/// Rejects ranges with fewer than 10 points or nonpositive values.
pub fn fit_rate(series: &[(u64, f64)], k_min: u64, k_max: u64) -> Result<RateFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, v) in series {
        if *k < k_min || *k > k_max || *k == 0 {
            continue;
        }
        if !(*v > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rate fitting needs positive values, got {v} at k={k}"
            )));
        }
        xs.push((*k as f64).ln());
        ys.push(v.ln());
    }
    if xs.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "rate fitting needs at least 10 points in range, got {}",
            xs.len()
        )));
    }
    let count = xs.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / count;
    let y_mean = ys.iter().sum::<f64>() / count;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let exponent = sxy / sxx;
    let intercept = y_mean - exponent * x_mean;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + exponent * x);
            r * r
        })
        .sum::<f64>()
        / count)
        .sqrt();
    Ok(RateFit { exponent, intercept, k_min, k_max, residual })
}

/// Cross-replication deviation summary at one iteration.
#[derive(Debug, Clone, Copy)]
pub struct DeviationStats {
    pub iteration: u64,
    pub mean: f64,
    pub std_dev: f64,
    pub replications: usize,
}

/// Per-iteration mean and standard deviation of the distance to equilibrium
/// across replicated traces (all must share the horizon).
pub fn deviation_stats(traces: &[SimulationTrace]) -> Result<Vec<DeviationStats>> {
    let first = traces.first().ok_or_else(|| {
        Error::InsufficientData("deviation statistics need at least one trace".into())
    })?;
    let rows = first.rows.len();
    if traces.iter().any(|t| t.rows.len() != rows) {
        return Err(Error::DimensionMismatch("traces have different horizons".into()));
    }
    let r = traces.len();
    let mut out = Vec::with_capacity(rows);
    for k in 0..rows {
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (idx, trace) in traces.iter().enumerate() {
            let x = trace.rows[k].distance;
            let delta = x - mean;
            mean += delta / (idx + 1) as f64;
            m2 += delta * (x - mean);
        }
        let var = if r > 1 { m2 / (r - 1) as f64 } else { 0.0 };
        out.push(DeviationStats {
            iteration: first.rows[k].iteration,
            mean,
            std_dev: var.sqrt(),
            replications: r,
        });
    }
    Ok(out)
}

/// Outcome of the mean-square envelope sweep.
#[derive(Debug, Clone)]
pub struct MeanSquareReport {
    pub checked: usize,
    pub min_slack: f64,
    pub violations: Vec<u64>,
}

impl MeanSquareReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the mean-square envelope `mean distance <= sqrt(N D delta_k)`
/// plus four standard errors of Monte Carlo slack, from the envelope's
/// start iteration (at least 2) onward. Refuses fewer than 30 replications.
pub fn mean_square_bound_check(
    stats: &[DeviationStats],
    constants: &ConstantsBundle,
    schedule: &StepSchedule,
) -> Result<MeanSquareReport> {
    let rate = constants.rate.ok_or_else(|| {
        Error::InsufficientData(
            "no envelope constant: the scaled step does not beat the contraction".into(),
        )
    })?;
    let mut report = MeanSquareReport { checked: 0, min_slack: f64::INFINITY, violations: Vec::new() };
    let start = rate.start_iteration.max(2);
    for stat in stats {
        if stat.iteration < start {
            continue;
        }
        if stat.replications < 30 {
            return Err(Error::InsufficientData(format!(
                "mean-square check needs at least 30 replications, got {}",
                stat.replications
            )));
        }
        let envelope = constants
            .envelope_at(schedule, stat.iteration)
            .ok_or_else(|| Error::InsufficientData("custom schedules have no decay factor".into()))?;
        let slack_term = 4.0 * stat.std_dev / (stat.replications as f64).sqrt();
        let slack = envelope + slack_term - stat.mean;
        report.min_slack = report.min_slack.min(slack);
        if slack < 0.0 {
            report.violations.push(stat.iteration);
        }
        report.checked += 1;
    }
    Ok(report)
}

/// Grid for [`appendix_checks`].
#[derive(Debug, Clone)]
pub struct AppendixGrid {
    pub alphas: Vec<f64>,
    pub k_max: u64,
    pub k0_max: u64,
    pub t_max: u64,
}

impl Default for AppendixGrid {
    fn default() -> Self {
        Self {
            alphas: (1..=10).map(|i| i as f64 / 10.0).collect(),
            k_max: 1_000,
            k0_max: 1_000,
            t_max: 10_000,
        }
    }
}

/// Violation counts for the three scalar inequalities the rate analysis
/// leans on.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AppendixReport {
    /// `(k+1)^alpha <= k^alpha + 1` for alpha in (0,1].
    pub power_cases: u64,
    pub power_violations: u64,
    /// `sum_{k=k0}^T k^-alpha <= T^(1-alpha)/(1-alpha)` for alpha in (0,1).
    pub series_cases: u64,
    pub series_violations: u64,
    /// `delta_k (1 - delta_k) <= delta_{k+1}` for `delta_k = k^-alpha`.
    pub decay_cases: u64,
    pub decay_violations: u64,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.power_violations == 0 && self.series_violations == 0 && self.decay_violations == 0
    }

    pub fn cases(&self) -> u64 {
        self.power_cases + self.series_cases + self.decay_cases
    }
}

/// Exhaustively evaluates the three inequalities over the grid. The float
/// tolerance only absorbs round-off in the equality cases (alpha = 1).
pub fn appendix_checks(grid: &AppendixGrid) -> AppendixReport {
    let tol = 1e-9;
    let mut report = AppendixReport {
        power_cases: 0,
        power_violations: 0,
        series_cases: 0,
        series_violations: 0,
        decay_cases: 0,
        decay_violations: 0,
    };
    for &alpha in &grid.alphas {
        for k in 1..=grid.k_max {
            let k = k as f64;
            report.power_cases += 1;
            if (k + 1.0).powf(alpha) > k.powf(alpha) + 1.0 + tol {
                report.power_violations += 1;
            }
            report.decay_cases += 1;
            let delta_k = k.powf(-alpha);
            let delta_next = (k + 1.0).powf(-alpha);
            if delta_k * (1.0 - delta_k) > delta_next + tol {
                report.decay_violations += 1;
            }
        }
        if alpha >= 1.0 {
            continue;
        }
        // Prefix sums make the (k0, T) sweep a pair of lookups.
        let t_max = grid.t_max as usize;
        let mut prefix = vec![0.0f64; t_max + 1];
        for k in 1..=t_max {
            prefix[k] = prefix[k - 1] + (k as f64).powf(-alpha);
        }
        let mut rhs = vec![0.0f64; t_max + 1];
        for (t, slot) in rhs.iter_mut().enumerate().skip(1) {
            *slot = (t as f64).powf(1.0 - alpha) / (1.0 - alpha);
        }
        for k0 in 1..=grid.k0_max as usize {
            for t in (k0 + 1)..=t_max {
                report.series_cases += 1;
                if prefix[t] - prefix[k0 - 1] > rhs[t] + tol {
                    report.series_violations += 1;
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, DynamicsMode, RunOptions};
    use crate::equilibrium::{solve_expected_vi, SolveOptions};
    use crate::game::{derive_bounds, CostModel, StrategySet};
    use crate::net::{EdgeDistribution, EdgeModel, SampleStream};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_game() -> GameSpec {
        let network = NetworkModel::new(
            2,
            EdgeModel::Shared(EdgeDistribution::constant(1.0).unwrap()),
            vec![1.0, 1.0],
        )
        .unwrap();
        GameSpec::homogeneous(
            2,
            StrategySet::box_set(vec![0.0], vec![1.0]).unwrap(),
            CostModel::quadratic(1.0, 0.5, vec![-1.0]).unwrap(),
            network,
        )
        .unwrap()
    }

    fn noisy_game(n: usize, participation: f64) -> GameSpec {
        let network = NetworkModel::uniform_participation(
            n,
            EdgeModel::Shared(EdgeDistribution::bernoulli(0.5).unwrap()),
            participation,
        )
        .unwrap();
        GameSpec::homogeneous(
            n,
            StrategySet::box_set(vec![0.0], vec![1.0]).unwrap(),
            CostModel::quadratic(1.0, 0.5, vec![-1.0]).unwrap(),
            network,
        )
        .unwrap()
    }

    #[test]
    fn noise_bound_examples() {
        // Direct substitution: gradient bound 2 and min participation 0.5
        // give a noise ceiling of 2 * (2 + 1) = 6.
        let bounds = GameBounds {
            strategy_norm_bound: 1.0,
            cost_bound: 1.0,
            gradient_bound: 2.0,
            strategy_lipschitz: 2.0,
            aggregate_lipschitz: 0.5,
            monotonicity: 1.0,
        };
        let model = NetworkModel::uniform_participation(
            4,
            EdgeModel::Shared(EdgeDistribution::constant(0.5).unwrap()),
            0.5,
        )
        .unwrap();
        let schedule = StepSchedule::theta(0.25).unwrap();
        let bundle = constants(&bounds, &model, &schedule);
        assert_relative_eq!(bundle.noise_bound, 6.0, epsilon = 1e-15);

        let full = NetworkModel::uniform_participation(
            4,
            EdgeModel::Shared(EdgeDistribution::constant(0.5).unwrap()),
            1.0,
        )
        .unwrap();
        let bundle = constants(&bounds, &full, &schedule);
        assert_relative_eq!(bundle.noise_bound, 2.0 * bounds.gradient_bound, epsilon = 1e-15);
    }

    #[test]
    fn alpha_one_envelope_constant() {
        // With alpha = 1 the scaled step times contraction is exactly 2, the
        // envelope starts at k = 2, and D = max(2 C3, B^2 C1).
        let game = noisy_game(10, 0.7);
        let bounds = derive_bounds(&game).unwrap();
        let pre = constants(&bounds, game.network(), &StepSchedule::theta(0.25).unwrap());
        let schedule = StepSchedule::alpha(1.0, pre.contraction).unwrap();
        let bundle = constants(&bounds, game.network(), &schedule);
        let rate = bundle.rate.unwrap();
        let b = 2.0 / bundle.contraction;
        assert_relative_eq!(rate.step_scale, b, epsilon = 1e-12);
        assert_eq!(rate.start_iteration, 2);
        let expected = (2.0 * bundle.deviation_cap).max(b * b * bundle.step_noise);
        assert_relative_eq!(rate.envelope, expected, epsilon = 1e-9);
        // Envelope value at k = 2: sqrt(N D / 2).
        let at2 = bundle.envelope_at(&schedule, 2).unwrap();
        assert_relative_eq!(
            at2,
            (10.0 * rate.envelope / 2.0).sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn custom_schedule_has_no_envelope() {
        let game = noisy_game(4, 0.5);
        let bounds = derive_bounds(&game).unwrap();
        let schedule = StepSchedule::custom(std::sync::Arc::new(|k| 1.0 / (k as f64 + 1.0)));
        let bundle = constants(&bounds, game.network(), &schedule);
        assert!(bundle.rate.is_none());
        assert!(matches!(
            mean_square_bound_check(&[], &bundle, &schedule),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn weighted_distance_examples() {
        let a = StrategyProfile::new(vec![1.0, 0.0], 1).unwrap();
        let b = StrategyProfile::new(vec![0.0, 0.0], 1).unwrap();
        assert_relative_eq!(weighted_distance(&a, &b, &[1.0, 1.0]).unwrap(), 1.0);
        // Participation 1/4 doubles the weighted length of a unit offset.
        assert_relative_eq!(weighted_distance(&a, &b, &[0.25, 0.25]).unwrap(), 2.0);
        assert!(weighted_distance(&a, &b, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn weighted_distance_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..1000 {
            let a = StrategyProfile::new((0..6).map(|_| rng.random_range(-2.0..2.0)).collect(), 2)
                .unwrap();
            let b = StrategyProfile::new((0..6).map(|_| rng.random_range(-2.0..2.0)).collect(), 2)
                .unwrap();
            let participation: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
            let weighted = weighted_distance(&a, &b, &participation).unwrap();
            let euclid = a.distance_to(&b);
            let min_p = participation.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(euclid * euclid >= min_p * weighted * weighted - 1e-9);
            assert!(weighted * weighted >= euclid * euclid - 1e-9);
        }
    }

    #[test]
    fn regret_examples() {
        let game = reference_game();
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let bounds = derive_bounds(&game).unwrap();

        // At the equilibrium against the mean network the regret is zero.
        let real = crate::net::NetworkRealization::new(
            game.network().mean_adjacency(),
            vec![true, true],
            0,
        )
        .unwrap();
        let r = instantaneous_regret(&game, &eq.profile, &real).unwrap();
        assert!(r.iter().all(|v| *v < 1e-18));

        // The all-ones profile pays 0.03125 each.
        let ones = StrategyProfile::new(vec![1.0, 1.0], 1).unwrap();
        let r = instantaneous_regret(&game, &ones, &real).unwrap();
        for v in &r {
            assert_relative_eq!(*v, 0.03125, epsilon = 1e-15);
        }

        // Any regret stays below twice the cost bound.
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let stream = SampleStream::new(50, 0);
        for k in 0..200u64 {
            let s = StrategyProfile::new((0..2).map(|_| rng.random_range(0.0..1.0)).collect(), 1)
                .unwrap();
            let real = game.network().sample(&mut stream.rng_at(k), k);
            let r = instantaneous_regret(&game, &s, &real).unwrap();
            for v in r {
                assert!(v <= 2.0 * bounds.cost_bound);
            }
        }
    }

    #[test]
    fn regret_bound_check_on_seeded_run() {
        let game = noisy_game(20, 0.7);
        let bounds = derive_bounds(&game).unwrap();
        let schedule = StepSchedule::theta(0.25).unwrap();
        let bundle = constants(&bounds, game.network(), &schedule);
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let mut opts = RunOptions::new(DynamicsMode::Play, 2_000);
        opts.record_regret = true;
        opts.store_per_agent_regret = true;
        opts.regret_bound = Some(bundle.regret_params());
        let trace =
            run(&game, &schedule, &eq.profile, &opts, &SampleStream::new(60, 0), None).unwrap();
        assert_eq!(trace.bound_violations, 0);
        let report = regret_bound_check(&trace, &bundle).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
        assert!(report.min_margin >= 0.0);

        let records = regret_records(&trace, &bundle).unwrap();
        assert_eq!(records.len(), 2_001 * 20);
        assert!(records.iter().all(|r| r.margin >= 0.0 && r.regret >= 0.0));
        assert!(records.iter().all(|r| (r.margin - (r.bound_value - r.regret)).abs() < 1e-15));

        // The same verdict comes out of the online margins alone.
        let mut slim = trace.clone();
        slim.per_agent_regret = None;
        let online = regret_bound_check(&slim, &bundle).unwrap();
        assert!(online.passed());
    }

    #[test]
    fn regret_bound_single_agent_decoupled() {
        // One agent, no network term: regret must be controlled by the
        // distance term alone since the aggregate Lipschitz constant is 0.
        let network = NetworkModel::uniform_participation(
            1,
            EdgeModel::Shared(EdgeDistribution::constant(0.0).unwrap()),
            1.0,
        )
        .unwrap();
        let game = GameSpec::homogeneous(
            1,
            StrategySet::box_set(vec![0.0], vec![1.0]).unwrap(),
            CostModel::quadratic(1.0, 0.0, vec![-0.5]).unwrap(),
            network,
        )
        .unwrap();
        let bounds = derive_bounds(&game).unwrap();
        assert_eq!(bounds.aggregate_lipschitz, 0.0);
        let schedule = StepSchedule::theta(0.25).unwrap();
        let bundle = constants(&bounds, game.network(), &schedule);
        assert_eq!(bundle.regret_offset, 0.0);
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let mut opts = RunOptions::new(DynamicsMode::Play, 500);
        opts.record_regret = true;
        opts.store_per_agent_regret = true;
        let trace =
            run(&game, &schedule, &eq.profile, &opts, &SampleStream::new(61, 0), None).unwrap();
        let report = regret_bound_check(&trace, &bundle).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn time_averaged_regret_closed_forms() {
        let game = reference_game();
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let schedule = StepSchedule::theta(0.25).unwrap();
        let mut opts = RunOptions::new(DynamicsMode::Play, 10);
        opts.record_regret = true;
        opts.store_per_agent_regret = true;
        let mut trace =
            run(&game, &schedule, &eq.profile, &opts, &SampleStream::new(62, 0), None).unwrap();

        // Constant regret r keeps the running mean at r.
        let n = 2;
        let constant = vec![vec![0.25; n]; 11];
        trace.per_agent_regret = Some(constant);
        let means = time_averaged_regret(&trace).unwrap();
        for series in &means {
            for m in series {
                assert_relative_eq!(*m, 0.25, epsilon = 1e-15);
            }
        }

        // A single spike of size c at k=1 averages to c/T.
        let mut spike = vec![vec![0.0; n]; 11];
        spike[1] = vec![4.0; n];
        trace.per_agent_regret = Some(spike);
        let means = time_averaged_regret(&trace).unwrap();
        for series in &means {
            for (idx, m) in series.iter().enumerate() {
                let t = (idx + 1) as f64;
                assert_relative_eq!(*m, 4.0 / t, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn time_averaged_regret_below_decomposition() {
        // Averaging the per-row inequality: the running mean must stay
        // below slope * (average distance) + offset, recomputed from the
        // same trace.
        let game = noisy_game(10, 0.7);
        let bounds = derive_bounds(&game).unwrap();
        let schedule = StepSchedule::theta(0.25).unwrap();
        let bundle = constants(&bounds, game.network(), &schedule);
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let mut opts = RunOptions::new(DynamicsMode::Play, 2_000);
        opts.record_regret = true;
        opts.store_per_agent_regret = true;
        let trace =
            run(&game, &schedule, &eq.profile, &opts, &SampleStream::new(63, 0), None).unwrap();
        let means = time_averaged_regret(&trace).unwrap();
        let t = trace.horizon() as usize;
        let avg_distance: f64 =
            trace.rows[1..=t].iter().map(|r| r.distance).sum::<f64>() / t as f64;
        let rhs = bundle.regret_slope * avg_distance + bundle.regret_offset;
        for series in &means {
            assert!(series[t - 1] <= rhs + 1e-12, "{} > {rhs}", series[t - 1]);
        }
    }

    #[test]
    fn fit_rate_recovers_synthetic_power_laws() {
        let series: Vec<(u64, f64)> = (1..=500).map(|k| (k, (k as f64).powf(-0.5))).collect();
        let fit = fit_rate(&series, 1, 500).unwrap();
        assert_relative_eq!(fit.exponent, -0.5, epsilon = 1e-8);
        assert!(fit.residual < 1e-10);

        let series: Vec<(u64, f64)> =
            (1..=500).map(|k| (k, 3.7 * (k as f64).powf(-0.3))).collect();
        let fit = fit_rate(&series, 1, 500).unwrap();
        assert_relative_eq!(fit.exponent, -0.3, epsilon = 1e-8);
        assert_relative_eq!(fit.intercept, 3.7f64.ln(), epsilon = 1e-8);
    }

    #[test]
    fn fit_rate_rejects_bad_input() {
        let short: Vec<(u64, f64)> = (1..=5).map(|k| (k, 1.0)).collect();
        assert!(matches!(fit_rate(&short, 1, 5), Err(Error::InsufficientData(_))));
        let mut series: Vec<(u64, f64)> = (1..=20).map(|k| (k, 1.0)).collect();
        series[3].1 = 0.0;
        assert!(matches!(fit_rate(&series, 1, 20), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn mean_square_envelope_deterministic_case() {
        // Deterministic network: every replication is the same path, the
        // envelope holds with big slack.
        let game = reference_game();
        let bounds = derive_bounds(&game).unwrap();
        let pre = constants(&bounds, game.network(), &StepSchedule::theta(0.25).unwrap());
        let schedule = StepSchedule::alpha(1.0, pre.contraction).unwrap();
        let bundle = constants(&bounds, game.network(), &schedule);
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let opts = RunOptions::new(DynamicsMode::Play, 200);
        let traces: Vec<SimulationTrace> = (0..30)
            .map(|rep| {
                run(&game, &schedule, &eq.profile, &opts, &SampleStream::new(70, rep), None)
                    .unwrap()
            })
            .collect();
        let stats = deviation_stats(&traces).unwrap();
        let report = mean_square_bound_check(&stats, &bundle, &schedule).unwrap();
        assert!(report.passed(), "violations at {:?}", report.violations);
        assert!(report.min_slack > 0.0);

        // Too few replications are refused.
        let few = deviation_stats(&traces[..10]).unwrap();
        assert!(matches!(
            mean_square_bound_check(&few, &bundle, &schedule),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn appendix_grid_has_zero_violations() {
        let report = appendix_checks(&AppendixGrid::default());
        assert!(report.passed(), "{report:?}");
        assert!(report.cases() > 50_000_000, "grid unexpectedly small: {}", report.cases());
    }

    #[test]
    fn appendix_example_values() {
        // alpha = 0.5, k = 4: sqrt(5) <= 3.
        assert!(5f64.sqrt() <= 4f64.powf(0.5) + 1.0);
        assert_relative_eq!(5f64.sqrt(), 2.23606797749979, epsilon = 1e-14);
        // alpha = 1: equality (k+1) = k + 1 on the whole range.
        for k in 1..100 {
            let k = k as f64;
            assert_relative_eq!((k + 1.0).powf(1.0), k.powf(1.0) + 1.0, epsilon = 1e-12);
        }
        // Series example: alpha = 0.5, k0 = 2, T = 4.
        let lhs = 2f64.powf(-0.5) + 3f64.powf(-0.5) + 4f64.powf(-0.5);
        assert_relative_eq!(lhs, 1.7844570503761732, epsilon = 1e-12);
        assert!(lhs <= 4f64.powf(0.5) / 0.5);
    }
}
