//! One-shot network game model.
//!
//! Each agent `i` holds a strategy `s_i` in a compact convex set and pays a
//! cost that depends on `s_i` and on the local aggregate `z_i`, the scaled
//! weighted average of the other agents' strategies over whatever network is
//! in force. The built-in cost family is quadratic,
//!
//! ```text
//! J_i(s_i, z_i) = q/2 * |s_i|^2 + (a * z_i + b)' s_i,
//! ```
//!
//! which keeps every bound constant computable in closed form; arbitrary
//! smooth costs plug in through the [`CostFunction`] trait but must declare
//! their own bounds.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::NetworkModel;

/// Stacked strategy profile: agent `i` occupies the block
/// `values[i*dim .. (i+1)*dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    values: Vec<f64>,
    dim: usize,
}

impl StrategyProfile {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("strategy dimension must be positive".into()));
        }
        if values.is_empty() || values.len() % dim != 0 {
            return Err(Error::DimensionMismatch(format!(
                "profile of length {} is not a multiple of dimension {dim}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("profile entries must be finite".into()));
        }
        Ok(Self { values, dim })
    }

    pub fn zeros(n_agents: usize, dim: usize) -> Self {
        Self { values: vec![0.0; n_agents * dim], dim }
    }

    pub fn n_agents(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn agent_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Euclidean distance to another profile of the same shape.
    pub fn distance_to(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-agent feasible set. Boxes and Euclidean balls only, so projections
/// are exact and closed-form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySet {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl StrategySet {
    pub fn box_set(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = StrategySet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let set = StrategySet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StrategySet::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch(
                        "box bounds must be nonempty and of equal length".into(),
                    ));
                }
                for (lo, hi) in lower.iter().zip(upper) {
                    if !lo.is_finite() || !hi.is_finite() {
                        return Err(Error::InvalidParameter("box bounds must be finite".into()));
                    }
                    if lo > hi {
                        return Err(Error::InvalidParameter(format!(
                            "box lower bound {lo} exceeds upper bound {hi}"
                        )));
                    }
                }
                Ok(())
            }
            StrategySet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::DimensionMismatch("ball center must be nonempty".into()));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidParameter("ball center must be finite".into()));
                }
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "ball radius must be positive, got {radius}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            StrategySet::Box { lower, .. } => lower.len(),
            StrategySet::Ball { center, .. } => center.len(),
        }
    }

    /// Upper bound on `|s_i|_2` over the set, from the set parameters alone.
    pub fn norm_bound(&self) -> f64 {
        match self {
            StrategySet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            StrategySet::Ball { center, radius } => {
                center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius
            }
        }
    }

    /// Euclidean projection onto the set. Boxes clamp componentwise; balls
    /// shrink radially when the point is outside.
    pub fn project(&self, point: &[f64]) -> Result<Vec<f64>> {
        if point.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "point of dimension {} projected on set of dimension {}",
                point.len(),
                self.dimension()
            )));
        }
        let mut out = point.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// In-place projection; `point` must already have the set's dimension.
    pub fn project_in_place(&self, point: &mut [f64]) {
        match self {
            StrategySet::Box { lower, upper } => {
                for ((v, lo), hi) in point.iter_mut().zip(lower).zip(upper) {
                    *v = v.clamp(*lo, *hi);
                }
            }
            StrategySet::Ball { center, radius } => {
                let dist = point
                    .iter()
                    .zip(center)
                    .map(|(v, c)| (v - c) * (v - c))
                    .sum::<f64>()
                    .sqrt();
                if dist > *radius {
                    let scale = radius / dist;
                    for (v, c) in point.iter_mut().zip(center) {
                        *v = c + (*v - c) * scale;
                    }
                }
            }
        }
    }

    pub fn contains(&self, point: &[f64], tol: f64) -> bool {
        match self {
            StrategySet::Box { lower, upper } => point
                .iter()
                .zip(lower)
                .zip(upper)
                .all(|((v, lo), hi)| *v >= lo - tol && *v <= hi + tol),
            StrategySet::Ball { center, radius } => {
                let dist = point
                    .iter()
                    .zip(center)
                    .map(|(v, c)| (v - c) * (v - c))
                    .sum::<f64>()
                    .sqrt();
                dist <= radius + tol
            }
        }
    }
}

/// Bound constants of a game instance. For the quadratic family these come
/// out of [`derive_bounds`] in closed form; custom cost models declare them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameBounds {
    /// Max Euclidean norm of any feasible per-agent strategy.
    pub strategy_norm_bound: f64,
    /// Max absolute per-agent cost over admissible inputs.
    pub cost_bound: f64,
    /// Max norm of the per-agent cost gradient over admissible inputs.
    pub gradient_bound: f64,
    /// Lipschitz constant of the cost in the agent's own strategy.
    pub strategy_lipschitz: f64,
    /// Lipschitz constant of the cost in the local aggregate.
    pub aggregate_lipschitz: f64,
    /// Strong monotonicity modulus of the expected-game operator.
    pub monotonicity: f64,
}

/// User-supplied smooth cost. Implementations must be thread-safe; the
/// simulator evaluates them from worker threads.
pub trait CostFunction: Send + Sync {
    fn cost(&self, strategy: &[f64], aggregate: &[f64]) -> f64;

    /// Writes the gradient with respect to the agent's own strategy.
    fn gradient(&self, strategy: &[f64], aggregate: &[f64], out: &mut [f64]);

    /// Bound constants for this cost. Custom models must supply these; there
    /// is no automatic estimation.
    fn declared_bounds(&self) -> Option<GameBounds> {
        None
    }
}

/// Per-agent cost model.
#[derive(Clone)]
pub enum CostModel {
    /// `J(s, z) = q/2 |s|^2 + (a z + b)' s` with `q > 0`.
    Quadratic { q: f64, a: f64, b: Vec<f64> },
    Custom(Arc<dyn CostFunction>),
}

impl std::fmt::Debug for CostModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostModel::Quadratic { q, a, b } => {
                f.debug_struct("Quadratic").field("q", q).field("a", a).field("b", b).finish()
            }
            CostModel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl CostModel {
    pub fn quadratic(q: f64, a: f64, b: Vec<f64>) -> Result<Self> {
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::InvalidParameter(format!("quadratic weight q must be positive, got {q}")));
        }
        if !a.is_finite() {
            return Err(Error::InvalidParameter("aggregate weight a must be finite".into()));
        }
        if b.is_empty() || b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("offset b must be nonempty and finite".into()));
        }
        Ok(CostModel::Quadratic { q, a, b })
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, CostModel::Quadratic { .. })
    }

    pub fn cost(&self, strategy: &[f64], aggregate: &[f64]) -> f64 {
        match self {
            CostModel::Quadratic { q, a, b } => {
                let own: f64 = strategy.iter().map(|v| v * v).sum();
                let cross: f64 = strategy
                    .iter()
                    .zip(aggregate)
                    .zip(b)
                    .map(|((s, z), off)| (a * z + off) * s)
                    .sum();
                0.5 * q * own + cross
            }
            CostModel::Custom(f) => f.cost(strategy, aggregate),
        }
    }

    /// Gradient of the cost in the agent's own strategy. Quadratic:
    /// `q s + a z + b`.
    pub fn gradient_into(&self, strategy: &[f64], aggregate: &[f64], out: &mut [f64]) {
        match self {
            CostModel::Quadratic { q, a, b } => {
                for i in 0..out.len() {
                    out[i] = q * strategy[i] + a * aggregate[i] + b[i];
                }
            }
            CostModel::Custom(f) => f.gradient(strategy, aggregate, out),
        }
    }
}

/// Cost shared by all agents or specified per agent.
#[derive(Debug, Clone)]
pub enum CostAssignment {
    Shared(CostModel),
    PerAgent(Vec<CostModel>),
}

/// A complete game instance: population, strategy sets, costs, and the
/// random network model the game is played over.
#[derive(Debug, Clone)]
pub struct GameSpec {
    sets: Vec<StrategySet>,
    cost: CostAssignment,
    network: NetworkModel,
    dim: usize,
}

impl GameSpec {
    pub fn new(sets: Vec<StrategySet>, cost: CostAssignment, network: NetworkModel) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidParameter("at least one agent is required".into()));
        }
        if sets.len() != network.n_agents() {
            return Err(Error::DimensionMismatch(format!(
                "{} strategy sets for a {}-agent network model",
                sets.len(),
                network.n_agents()
            )));
        }
        let dim = sets[0].dimension();
        for (i, set) in sets.iter().enumerate() {
            set.validate()?;
            if set.dimension() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "strategy set of agent {i} has dimension {}, expected {dim}",
                    set.dimension()
                )));
            }
        }
        match &cost {
            CostAssignment::Shared(model) => validate_cost_dim(model, dim)?,
            CostAssignment::PerAgent(models) => {
                if models.len() != sets.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} cost models for {} agents",
                        models.len(),
                        sets.len()
                    )));
                }
                for model in models {
                    validate_cost_dim(model, dim)?;
                }
            }
        }
        Ok(Self { sets, cost, network, dim })
    }

    /// Convenience constructor: one set and one cost shared by all agents.
    pub fn homogeneous(
        n_agents: usize,
        set: StrategySet,
        cost: CostModel,
        network: NetworkModel,
    ) -> Result<Self> {
        Self::new(vec![set; n_agents], CostAssignment::Shared(cost), network)
    }

    pub fn n_agents(&self) -> usize {
        self.sets.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&self, i: usize) -> &StrategySet {
        &self.sets[i]
    }

    pub fn sets(&self) -> &[StrategySet] {
        &self.sets
    }

    pub fn cost(&self, i: usize) -> &CostModel {
        match &self.cost {
            CostAssignment::Shared(model) => model,
            CostAssignment::PerAgent(models) => &models[i],
        }
    }

    pub fn network(&self) -> &NetworkModel {
        &self.network
    }

    pub fn all_quadratic(&self) -> bool {
        match &self.cost {
            CostAssignment::Shared(model) => model.is_quadratic(),
            CostAssignment::PerAgent(models) => models.iter().all(CostModel::is_quadratic),
        }
    }

    /// Projects each agent block of `profile` onto its strategy set.
    pub fn project_profile(&self, profile: &mut StrategyProfile) {
        for (i, set) in self.sets.iter().enumerate() {
            set.project_in_place(profile.agent_mut(i));
        }
    }

    /// Default starting point: projection of the origin onto the joint set.
    pub fn initial_profile(&self) -> StrategyProfile {
        let mut profile = StrategyProfile::zeros(self.n_agents(), self.dim);
        self.project_profile(&mut profile);
        profile
    }

    pub fn profile_in_sets(&self, profile: &StrategyProfile, tol: f64) -> bool {
        (0..self.n_agents()).all(|i| self.sets[i].contains(profile.agent(i), tol))
    }

    /// Random feasible profile: uniform per box coordinate; for balls,
    /// uniform in the bounding cube then projected.
    pub fn sample_feasible<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> StrategyProfile {
        let mut profile = StrategyProfile::zeros(self.n_agents(), self.dim);
        for (i, set) in self.sets.iter().enumerate() {
            let block = profile.agent_mut(i);
            match set {
                StrategySet::Box { lower, upper } => {
                    for ((v, lo), hi) in block.iter_mut().zip(lower).zip(upper) {
                        *v = if lo == hi { *lo } else { rng.random_range(*lo..*hi) };
                    }
                }
                StrategySet::Ball { center, radius } => {
                    for (v, c) in block.iter_mut().zip(center) {
                        *v = rng.random_range(c - radius..c + radius);
                    }
                    set.project_in_place(block);
                }
            }
        }
        profile
    }
}

fn validate_cost_dim(model: &CostModel, dim: usize) -> Result<()> {
    if let CostModel::Quadratic { b, .. } = model {
        if b.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "quadratic offset b has dimension {}, expected {dim}",
                b.len()
            )));
        }
    }
    Ok(())
}

fn check_weight_matrix(n: usize, w: &DMatrix<f64>) -> Result<()> {
    if w.nrows() != n || w.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "weight matrix is {}x{}, expected {n}x{n}",
            w.nrows(),
            w.ncols()
        )));
    }
    for i in 0..n {
        if w[(i, i)] != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "weight matrix has nonzero diagonal entry at ({i},{i})"
            )));
        }
    }
    Ok(())
}

/// Local aggregates `z_i = (1/N) sum_j W_ij s_j`, stacked agent-by-agent.
pub fn local_aggregates(profile: &StrategyProfile, weights: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = profile.n_agents();
    check_weight_matrix(n, weights)?;
    let mut out = vec![0.0; n * profile.dim()];
    local_aggregates_into(profile, weights, &mut out);
    Ok(out)
}

/// Aggregate kernel without validation; `out` must have profile length.
pub(crate) fn local_aggregates_into(
    profile: &StrategyProfile,
    weights: &DMatrix<f64>,
    out: &mut [f64],
) {
    let n = profile.n_agents();
    let dim = profile.dim();
    let inv_n = 1.0 / n as f64;
    out.fill(0.0);
    let s = profile.values();
    // Column-major walk: column j contributes W_ij * s_j to every z_i.
    let w = weights.as_slice();
    for j in 0..n {
        let col = &w[j * n..(j + 1) * n];
        let sj = &s[j * dim..(j + 1) * dim];
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
    for v in out.iter_mut() {
        *v *= inv_n;
    }
}

/// Stacked game Jacobian: block `i` is the gradient of agent `i`'s cost in
/// its own strategy, evaluated at the aggregates induced by `weights`.
pub fn game_jacobian(
    game: &GameSpec,
    profile: &StrategyProfile,
    weights: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let n = game.n_agents();
    check_weight_matrix(n, weights)?;
    if profile.n_agents() != n || profile.dim() != game.dim() {
        return Err(Error::DimensionMismatch("profile does not match game shape".into()));
    }
    let mut aggregates = vec![0.0; n * game.dim()];
    local_aggregates_into(profile, weights, &mut aggregates);
    let mut out = vec![0.0; n * game.dim()];
    game_jacobian_from_aggregates(game, profile, &aggregates, &mut out, 0)?;
    Ok(out)
}

/// Jacobian kernel reusing precomputed aggregates. The iteration index is
/// only used to label gradient faults.
pub(crate) fn game_jacobian_from_aggregates(
    game: &GameSpec,
    profile: &StrategyProfile,
    aggregates: &[f64],
    out: &mut [f64],
    iteration: u64,
) -> Result<()> {
    let dim = game.dim();
    for i in 0..game.n_agents() {
        let s_i = profile.agent(i);
        let z_i = &aggregates[i * dim..(i + 1) * dim];
        let block = &mut out[i * dim..(i + 1) * dim];
        let cost = game.cost(i);
        cost.gradient_into(s_i, z_i, block);
        if !cost.is_quadratic() && block.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient { agent: i, iteration });
        }
    }
    Ok(())
}

/// How to evaluate the expected-game operator.
#[derive(Debug, Clone, Copy)]
pub enum JacobianEstimator {
    /// Exact: evaluate the Jacobian at the expected effective network. Valid
    /// because the quadratic gradient is affine in the aggregate.
    Analytic,
    /// Sample mean over independent network draws, with standard errors.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Result of [`expected_jacobian`]; `std_error` is populated by the Monte
/// Carlo estimator only.
#[derive(Debug, Clone)]
pub struct ExpectedJacobian {
    pub values: Vec<f64>,
    pub std_error: Option<Vec<f64>>,
}

/// Expected-game operator: the expectation of the game Jacobian over network
/// and participation draws.
pub fn expected_jacobian(
    game: &GameSpec,
    profile: &StrategyProfile,
    estimator: JacobianEstimator,
) -> Result<ExpectedJacobian> {
    match estimator {
        JacobianEstimator::Analytic => {
            if !game.all_quadratic() {
                return Err(Error::RequiresQuadratic(
                    "the analytic expected Jacobian swaps expectation into the gradient, \
                     which needs a gradient affine in the aggregate"
                        .into(),
                ));
            }
            let values = game_jacobian(game, profile, &game.network().expected_effective())?;
            Ok(ExpectedJacobian { values, std_error: None })
        }
        JacobianEstimator::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("Monte Carlo needs at least one sample".into()));
            }
            let len = game.n_agents() * game.dim();
            let mut mean = vec![0.0; len];
            let mut m2 = vec![0.0; len];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut realization = game.network().empty_realization();
            let mut aggregates = vec![0.0; len];
            let mut jac = vec![0.0; len];
            for draw in 0..samples {
                game.network().sample_into(&mut rng, draw as u64, &mut realization);
                let effective = realization.effective();
                local_aggregates_into(profile, &effective, &mut aggregates);
                game_jacobian_from_aggregates(game, profile, &aggregates, &mut jac, draw as u64)?;
                // Welford update per coordinate.
                let count = (draw + 1) as f64;
                for idx in 0..len {
                    let delta = jac[idx] - mean[idx];
                    mean[idx] += delta / count;
                    m2[idx] += delta * (jac[idx] - mean[idx]);
                }
            }
            let std_error = m2
                .iter()
                .map(|v| (v / (samples.max(2) - 1) as f64 / samples as f64).sqrt())
                .collect();
            Ok(ExpectedJacobian { values: mean, std_error: Some(std_error) })
        }
    }
}

/// Closed-form bound constants for a quadratic game; custom models must
/// declare their own. Fails when the expected game is not strongly monotone.
pub fn derive_bounds(game: &GameSpec) -> Result<GameBounds> {
    if !game.all_quadratic() {
        return declared_custom_bounds(game);
    }
    let s_max = game.sets().iter().map(StrategySet::norm_bound).fold(0.0, f64::max);
    let mut q_min = f64::INFINITY;
    let mut grad = 0.0_f64;
    let mut cost = 0.0_f64;
    let mut lip_z = 0.0_f64;
    for i in 0..game.n_agents() {
        let CostModel::Quadratic { q, a, b } = game.cost(i) else { unreachable!() };
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        grad = grad.max(q * s_max + a.abs() * s_max + b_norm);
        cost = cost.max(0.5 * q * s_max * s_max + (a.abs() * s_max + b_norm) * s_max);
        lip_z = lip_z.max(a.abs() * s_max);
        q_min = q_min.min(*q);
    }
    let mu = quadratic_monotonicity(game)?;
    if mu <= 0.0 {
        return Err(Error::NotStronglyMonotone(mu));
    }
    Ok(GameBounds {
        strategy_norm_bound: s_max,
        cost_bound: cost,
        gradient_bound: grad,
        strategy_lipschitz: grad,
        aggregate_lipschitz: lip_z,
        monotonicity: mu,
    })
}

fn declared_custom_bounds(game: &GameSpec) -> Result<GameBounds> {
    let mut declared: Option<GameBounds> = None;
    for i in 0..game.n_agents() {
        if let CostModel::Custom(f) = game.cost(i) {
            match f.declared_bounds() {
                Some(b) => {
                    declared = Some(match declared {
                        // Worst case across agents.
                        Some(acc) => GameBounds {
                            strategy_norm_bound: acc.strategy_norm_bound.max(b.strategy_norm_bound),
                            cost_bound: acc.cost_bound.max(b.cost_bound),
                            gradient_bound: acc.gradient_bound.max(b.gradient_bound),
                            strategy_lipschitz: acc.strategy_lipschitz.max(b.strategy_lipschitz),
                            aggregate_lipschitz: acc.aggregate_lipschitz.max(b.aggregate_lipschitz),
                            monotonicity: acc.monotonicity.min(b.monotonicity),
                        },
                        None => b,
                    });
                }
                None => return Err(Error::MissingBounds),
            }
        }
    }
    let bounds = declared.ok_or(Error::MissingBounds)?;
    if bounds.monotonicity <= 0.0 {
        return Err(Error::NotStronglyMonotone(bounds.monotonicity));
    }
    Ok(bounds)
}

/// Smallest eigenvalue of the symmetric part of the expected-game operator
/// matrix `q I + (a/N) Gbar diag(Pbar)`, exploiting that the block structure
/// replicates each eigenvalue once per strategy coordinate.
fn quadratic_monotonicity(game: &GameSpec) -> Result<f64> {
    let n = game.n_agents();
    let expected = game.network().expected_effective();
    // A heterogeneous quadratic family stays linear; build the full N x N
    // coefficient matrix row by row.
    let mut op = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let CostModel::Quadratic { q, a, .. } = game.cost(i) else { unreachable!() };
        for j in 0..n {
            op[(i, j)] = a / n as f64 * expected[(i, j)];
        }
        op[(i, i)] += q;
    }
    let sym = (&op + op.transpose()) * 0.5;
    let eigen = SymmetricEigen::new(sym.clone());
    let mut min_val = f64::INFINITY;
    let mut min_idx = 0;
    for (idx, val) in eigen.eigenvalues.iter().enumerate() {
        if *val < min_val {
            min_val = *val;
            min_idx = idx;
        }
    }
    // Residual check on the minimal eigenpair; failure means the numeric
    // eigensolver (not the model) misbehaved.
    let v = eigen.eigenvectors.column(min_idx);
    let residual = (&sym * v - v * min_val).norm();
    let scale = sym.norm().max(1.0);
    if residual > 1e-10 * scale {
        return Err(Error::InvariantViolated(format!(
            "eigenvalue residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(min_val)
}

/// Largest singular value of the expected-game operator matrix, i.e. its
/// Lipschitz constant. Quadratic games only.
pub fn quadratic_lipschitz(game: &GameSpec) -> Result<f64> {
    if !game.all_quadratic() {
        return Err(Error::RequiresQuadratic(
            "the operator Lipschitz constant is only computed for the quadratic family".into(),
        ));
    }
    let n = game.n_agents();
    let expected = game.network().expected_effective();
    let mut op = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let CostModel::Quadratic { q, a, .. } = game.cost(i) else { unreachable!() };
        for j in 0..n {
            op[(i, j)] = a / n as f64 * expected[(i, j)];
        }
        op[(i, i)] += q;
    }
    let svals = op.singular_values();
    Ok(svals.iter().fold(0.0_f64, |acc, v| acc.max(*v)))
}
