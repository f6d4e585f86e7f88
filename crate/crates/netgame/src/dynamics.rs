//! Projected gradient play over sampled networks.
//!
//! At iteration `k` every present agent takes one projected gradient step
//! against the aggregate it sensed on the realized network; absent agents
//! keep their strategy. The same update can be written as projected
//! stochastic gradient descent on the expected game with a zero-mean,
//! bounded perturbation, and [`sgd_step`] implements that form so the two
//! can be checked against each other.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::game::{self, GameSpec, StrategyProfile};
use crate::metrics::weighted_distance_slices;
use crate::net::{NetworkRealization, SampleStream};

/// Diminishing step-size rule.
///
/// The built-in rules are positive, vanishing, non-summable and
/// square-summable, which is what the stochastic-approximation convergence
/// argument needs; custom sequences are the caller's responsibility.
#[derive(Clone)]
pub enum StepSchedule {
    /// `tau_0 = 1`, `tau_k = 1 / k^(1-theta)` with `theta` in (0, 1/2).
    Theta { theta: f64 },
    /// `tau_k = B / k^alpha` with `B = 2^alpha / contraction`, `tau_0 = B`,
    /// `alpha` in (0, 1]. `contraction` is the per-step contraction
    /// coefficient of the game being run (see
    /// [`crate::metrics::constants`]).
    Alpha { alpha: f64, contraction: f64, scale: f64 },
    /// Arbitrary positive sequence.
    Custom(Arc<dyn Fn(u64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for StepSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StepSchedule::Theta { theta } => f.debug_struct("Theta").field("theta", theta).finish(),
            StepSchedule::Alpha { alpha, contraction, scale } => f
                .debug_struct("Alpha")
                .field("alpha", alpha)
                .field("contraction", contraction)
                .field("scale", scale)
                .finish(),
            StepSchedule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl StepSchedule {
    pub fn theta(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "step-size exponent theta must lie in (0, 0.5), got {theta}"
            )));
        }
        Ok(StepSchedule::Theta { theta })
    }

    pub fn alpha(alpha: f64, contraction: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "step-size exponent alpha must lie in (0, 1], got {alpha}"
            )));
        }
        if !(contraction > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "contraction coefficient must be positive, got {contraction}"
            )));
        }
        let scale = 2f64.powf(alpha) / contraction;
        Ok(StepSchedule::Alpha { alpha, contraction, scale })
    }

    pub fn custom(f: Arc<dyn Fn(u64) -> f64 + Send + Sync>) -> Self {
        StepSchedule::Custom(f)
    }

    /// Step size at iteration `k`.
    pub fn step_size(&self, k: u64) -> f64 {
        match self {
            StepSchedule::Theta { theta } => {
                if k == 0 {
                    1.0
                } else {
                    (k as f64).powf(theta - 1.0)
                }
            }
            StepSchedule::Alpha { alpha, scale, .. } => {
                if k == 0 {
                    *scale
                } else {
                    scale * (k as f64).powf(-alpha)
                }
            }
            StepSchedule::Custom(f) => {
                let tau = f(k);
                assert!(tau > 0.0, "custom step size must be positive, got {tau} at k={k}");
                tau
            }
        }
    }

    /// The decay factor `delta_k` such that `tau_k = B * delta_k` for the
    /// built-in rules; `None` for custom sequences.
    pub fn decay_at(&self, k: u64) -> Option<f64> {
        let k = k.max(1) as f64;
        match self {
            StepSchedule::Theta { theta } => Some(k.powf(theta - 1.0)),
            StepSchedule::Alpha { alpha, .. } => Some(k.powf(-alpha)),
            StepSchedule::Custom(_) => None,
        }
    }

    /// The multiplier `B` with `tau_k = B * delta_k`; `None` for custom.
    pub fn step_scale(&self) -> Option<f64> {
        match self {
            StepSchedule::Theta { .. } => Some(1.0),
            StepSchedule::Alpha { scale, .. } => Some(*scale),
            StepSchedule::Custom(_) => None,
        }
    }
}

/// Zero-mean perturbation making the realized update a stochastic gradient
/// step on the expected game.
#[derive(Debug, Clone)]
pub struct NoiseSample {
    pub values: Vec<f64>,
    pub iteration: u64,
}

impl NoiseSample {
    pub fn sq_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Effective aggregates of a realization: absent agents are masked out of
/// every sum, which is the same as zeroing their adjacency column.
pub(crate) fn realized_aggregates_into(
    profile: &StrategyProfile,
    realization: &NetworkRealization,
    masked: &mut [f64],
    out: &mut [f64],
) {
    let n = profile.n_agents();
    let dim = profile.dim();
    let s = profile.values();
    for j in 0..n {
        let block = &mut masked[j * dim..(j + 1) * dim];
        if realization.is_present(j) {
            block.copy_from_slice(&s[j * dim..(j + 1) * dim]);
        } else {
            block.fill(0.0);
        }
    }
    let g = realization.adjacency().as_slice();
    out.fill(0.0);
    // Column-major walk over the adjacency matrix.
    for j in 0..n {
        if !realization.is_present(j) {
            continue;
        }
        let col = &g[j * n..(j + 1) * n];
        let sj = &masked[j * dim..(j + 1) * dim];
        if dim == 1 {
            let sj = sj[0];
            for i in 0..n {
                out[i] += col[i] * sj;
            }
        } else {
            for i in 0..n {
                let wij = col[i];
                if wij != 0.0 {
                    let zi = &mut out[i * dim..(i + 1) * dim];
                    for (z, v) in zi.iter_mut().zip(sj) {
                        *z += wij * v;
                    }
                }
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for v in out.iter_mut() {
        *v *= inv_n;
    }
}

fn check_step_inputs(
    game: &GameSpec,
    profile: &StrategyProfile,
    realization: &NetworkRealization,
    tau: f64,
) -> Result<()> {
    if profile.n_agents() != game.n_agents() || profile.dim() != game.dim() {
        return Err(Error::DimensionMismatch("profile does not match game shape".into()));
    }
    if realization.participation().len() != game.n_agents() {
        return Err(Error::DimensionMismatch("realization does not match game shape".into()));
    }
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "step size must be finite and >= 0, got {tau}"
        )));
    }
    Ok(())
}

/// One iteration of projected gradient play: present agents step against
/// the aggregate sensed on the realized network, absent agents stay put.
pub fn play_step(
    game: &GameSpec,
    profile: &StrategyProfile,
    realization: &NetworkRealization,
    tau: f64,
) -> Result<StrategyProfile> {
    check_step_inputs(game, profile, realization, tau)?;
    let len = game.n_agents() * game.dim();
    let mut masked = vec![0.0; len];
    let mut aggregates = vec![0.0; len];
    let mut gradient = vec![0.0; len];
    realized_aggregates_into(profile, realization, &mut masked, &mut aggregates);
    game::game_jacobian_from_aggregates(
        game,
        profile,
        &aggregates,
        &mut gradient,
        realization.iteration(),
    )?;
    let mut next = profile.clone();
    apply_play_update(game, realization, tau, &gradient, &mut next);
    Ok(next)
}

fn apply_play_update(
    game: &GameSpec,
    realization: &NetworkRealization,
    tau: f64,
    gradient: &[f64],
    profile: &mut StrategyProfile,
) {
    let dim = game.dim();
    for i in 0..game.n_agents() {
        if !realization.is_present(i) {
            continue;
        }
        let block = profile.agent_mut(i);
        for (v, g) in block.iter_mut().zip(&gradient[i * dim..(i + 1) * dim]) {
            *v -= tau * g;
        }
        game.set(i).project_in_place(block);
    }
}

/// The same iteration written as projected stochastic gradient descent on
/// the expected game: the update direction splits into the expected-game
/// operator plus the zero-mean perturbation, scaled by the participation
/// probabilities. Agrees with [`play_step`] to floating-point reordering
/// (within 1e-12). Needs the analytic expected operator, hence quadratic
/// costs.
pub fn sgd_step(
    game: &GameSpec,
    profile: &StrategyProfile,
    realization: &NetworkRealization,
    tau: f64,
) -> Result<(StrategyProfile, NoiseSample)> {
    check_step_inputs(game, profile, realization, tau)?;
    if !game.all_quadratic() {
        return Err(Error::RequiresQuadratic(
            "the stochastic-gradient form evaluates the expected operator analytically".into(),
        ));
    }
    let len = game.n_agents() * game.dim();
    let mut masked = vec![0.0; len];
    let mut aggregates = vec![0.0; len];
    let mut gradient = vec![0.0; len];
    realized_aggregates_into(profile, realization, &mut masked, &mut aggregates);
    game::game_jacobian_from_aggregates(
        game,
        profile,
        &aggregates,
        &mut gradient,
        realization.iteration(),
    )?;
    let expected_op = game::game_jacobian(game, profile, &game.network().expected_effective())?;
    let mut noise = vec![0.0; len];
    fill_noise(game, realization, &gradient, &expected_op, &mut noise);

    let mut next = profile.clone();
    let participation = game.network().participation();
    let dim = game.dim();
    for i in 0..game.n_agents() {
        let block = next.agent_mut(i);
        let p = participation[i];
        for d in 0..dim {
            let idx = i * dim + d;
            block[d] -= tau * p * (expected_op[idx] + noise[idx]);
        }
        game.set(i).project_in_place(block);
    }
    Ok((next, NoiseSample { values: noise, iteration: realization.iteration() }))
}

/// Perturbation blocks: participation indicator over its probability times
/// the realized gradient, minus the expected operator.
fn fill_noise(
    game: &GameSpec,
    realization: &NetworkRealization,
    gradient: &[f64],
    expected_op: &[f64],
    noise: &mut [f64],
) {
    let dim = game.dim();
    let participation = game.network().participation();
    for i in 0..game.n_agents() {
        let indicator = if realization.is_present(i) { 1.0 } else { 0.0 };
        let ratio = indicator / participation[i];
        for d in 0..dim {
            let idx = i * dim + d;
            noise[idx] = ratio * gradient[idx] - expected_op[idx];
        }
    }
}

/// Which update form drives a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsMode {
    Play,
    Sgd,
}

/// Deterministic regret inequality parameters for online checking: regret
/// of any agent must stay below `slope * distance + offset`.
#[derive(Debug, Clone, Copy)]
pub struct RegretBoundParams {
    pub slope: f64,
    pub offset: f64,
}

/// Options for [`run`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub mode: DynamicsMode,
    pub horizon: u64,
    /// Starting profile; defaults to the projection of the origin.
    pub initial: Option<StrategyProfile>,
    pub record_regret: bool,
    /// Keep the full per-agent regret rows in memory (large for long runs).
    pub store_per_agent_regret: bool,
    /// Check the deterministic regret inequality on every row.
    pub regret_bound: Option<RegretBoundParams>,
    /// Hard ceiling on the squared noise norm (Sgd mode); exceeding it is
    /// an internal error since the bound is proven.
    pub noise_ceiling: Option<f64>,
    /// Store full profiles every this many iterations; `None` picks
    /// `ceil(horizon / 1000)`. The initial and final profiles are always
    /// kept.
    pub profile_stride: Option<u64>,
}

impl RunOptions {
    pub fn new(mode: DynamicsMode, horizon: u64) -> Self {
        Self {
            mode,
            horizon,
            initial: None,
            record_regret: false,
            store_per_agent_regret: false,
            regret_bound: None,
            noise_ceiling: None,
            profile_stride: None,
        }
    }
}

/// Scalar metrics of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    /// Euclidean distance to the expected-game equilibrium.
    pub distance: f64,
    /// Distance weighted by inverse participation probabilities.
    pub weighted_distance: f64,
    pub step_size: f64,
    pub participants: usize,
    pub max_regret: Option<f64>,
    pub mean_regret: Option<f64>,
    /// Smallest slack of the deterministic regret inequality across agents;
    /// negative means a violation.
    pub bound_margin: Option<f64>,
    pub noise_sq_norm: Option<f64>,
}

/// Full record of one replication.
#[derive(Debug, Clone)]
pub struct SimulationTrace {
    pub rows: Vec<TraceRow>,
    /// Thinned full profiles, keyed by iteration.
    pub profiles: Vec<(u64, Vec<f64>)>,
    /// Per-agent regret for every iteration (only when requested).
    pub per_agent_regret: Option<Vec<Vec<f64>>>,
    /// Per-agent regret summed over iterations 1..=horizon.
    pub regret_totals: Vec<f64>,
    pub final_profile: StrategyProfile,
    pub initial_distance: f64,
    pub replication: u64,
    /// Rows on which the deterministic regret inequality failed.
    pub bound_violations: u64,
}

impl SimulationTrace {
    pub fn horizon(&self) -> u64 {
        self.rows.len() as u64 - 1
    }
}

/// Runs projected gradient play for `horizon` steps and records the trace.
///
/// Row `k` describes the pre-step state: the profile `s^k`, the step size
/// `tau^k`, and the network drawn for iteration `k` (which the update to
/// `s^{k+1}` then uses). The trace has `horizon + 1` rows. A hook, when
/// given, sees every row together with the current profile, read-only.
pub fn run(
    game: &GameSpec,
    schedule: &StepSchedule,
    equilibrium: &StrategyProfile,
    opts: &RunOptions,
    stream: &SampleStream,
    mut hook: Option<&mut dyn FnMut(u64, &StrategyProfile, &TraceRow)>,
) -> Result<SimulationTrace> {
    let n = game.n_agents();
    let dim = game.dim();
    let len = n * dim;
    if equilibrium.n_agents() != n || equilibrium.dim() != dim {
        return Err(Error::DimensionMismatch("equilibrium does not match game shape".into()));
    }
    let horizon = opts.horizon;
    let mut profile = match &opts.initial {
        Some(p) => {
            if p.n_agents() != n || p.dim() != dim {
                return Err(Error::DimensionMismatch("initial profile does not match game".into()));
            }
            let mut p = p.clone();
            game.project_profile(&mut p);
            p
        }
        None => game.initial_profile(),
    };
    if opts.mode == DynamicsMode::Sgd && !game.all_quadratic() {
        return Err(Error::RequiresQuadratic(
            "Sgd mode evaluates the expected operator analytically".into(),
        ));
    }

    let participation = game.network().participation().to_vec();
    let expected_net = if opts.mode == DynamicsMode::Sgd {
        Some(game.network().expected_effective())
    } else {
        None
    };
    let stride = opts.profile_stride.unwrap_or_else(|| horizon.div_ceil(1000).max(1)).max(1);

    let mut realization = game.network().empty_realization();
    let mut masked = vec![0.0; len];
    let mut aggregates = vec![0.0; len];
    let mut gradient = vec![0.0; len];
    let mut expected_op = vec![0.0; len];
    let mut noise = vec![0.0; len];
    let mut regret = vec![0.0; n];

    let mut rows = Vec::with_capacity(horizon as usize + 1);
    let mut profiles = Vec::new();
    let mut per_agent_rows = if opts.store_per_agent_regret { Some(Vec::new()) } else { None };
    let mut regret_totals = vec![0.0; n];
    let mut bound_violations = 0u64;
    let initial_distance = profile.distance_to(equilibrium);

    for k in 0..=horizon {
        let mut rng = stream.rng_at(k);
        game.network().sample_into(&mut rng, k, &mut realization);
        realized_aggregates_into(&profile, &realization, &mut masked, &mut aggregates);
        game::game_jacobian_from_aggregates(game, &profile, &aggregates, &mut gradient, k)?;

        let tau = schedule.step_size(k);
        let distance = profile.distance_to(equilibrium);
        let weighted_distance =
            weighted_distance_slices(profile.values(), equilibrium.values(), &participation, dim);

        let mut row = TraceRow {
            iteration: k,
            distance,
            weighted_distance,
            step_size: tau,
            participants: realization.participant_count(),
            max_regret: None,
            mean_regret: None,
            bound_margin: None,
            noise_sq_norm: None,
        };

        if opts.record_regret {
            for i in 0..n {
                let z = &aggregates[i * dim..(i + 1) * dim];
                regret[i] = crate::equilibrium::agent_gap(game, i, profile.agent(i), z)?.max(0.0);
            }
            let max = regret.iter().fold(0.0_f64, |acc, r| acc.max(*r));
            let mean = regret.iter().sum::<f64>() / n as f64;
            row.max_regret = Some(max);
            row.mean_regret = Some(mean);
            if let Some(bound) = &opts.regret_bound {
                let allowed = bound.slope * distance + bound.offset;
                let margin = regret.iter().fold(f64::INFINITY, |acc, r| acc.min(allowed - r));
                row.bound_margin = Some(margin);
                if margin < 0.0 {
                    bound_violations += 1;
                }
            }
            if k >= 1 {
                for (total, r) in regret_totals.iter_mut().zip(&regret) {
                    *total += *r;
                }
            }
            if let Some(storage) = per_agent_rows.as_mut() {
                storage.push(regret.clone());
            }
        }

        if let Some(expected) = &expected_net {
            game::local_aggregates_into(&profile, expected, &mut masked);
            game::game_jacobian_from_aggregates(game, &profile, &masked, &mut expected_op, k)?;
            fill_noise(game, &realization, &gradient, &expected_op, &mut noise);
            let sq = noise.iter().map(|v| v * v).sum::<f64>();
            row.noise_sq_norm = Some(sq);
            if let Some(ceiling) = opts.noise_ceiling {
                if sq > ceiling {
                    return Err(Error::InvariantViolated(format!(
                        "noise squared norm {sq} exceeds its proven ceiling {ceiling} at k={k}"
                    )));
                }
            }
        }

        if k % stride == 0 || k == horizon {
            profiles.push((k, profile.values().to_vec()));
        }
        if let Some(h) = hook.as_mut() {
            h(k, &profile, &row);
        }
        rows.push(row);

        if k == horizon {
            break;
        }
        match opts.mode {
            DynamicsMode::Play => {
                apply_play_update(game, &realization, tau, &gradient, &mut profile)
            }
            DynamicsMode::Sgd => {
                for i in 0..n {
                    let p = participation[i];
                    let block = profile.agent_mut(i);
                    for d in 0..dim {
                        let idx = i * dim + d;
                        block[d] -= tau * p * (expected_op[idx] + noise[idx]);
                    }
                    game.set(i).project_in_place(block);
                }
            }
        }
    }

    Ok(SimulationTrace {
        rows,
        profiles,
        per_agent_regret: per_agent_rows,
        regret_totals,
        final_profile: profile,
        initial_distance,
        replication: stream.replication(),
        bound_violations,
    })
}
