//! Equilibrium of the expected game, best responses, and almost-Nash
//! certification.
//!
//! The unique Nash equilibrium of the expected game is the solution of the
//! variational inequality defined by the expected-game operator over the
//! joint strategy set. With strong monotonicity it is the fixed point of the
//! projected-gradient map with a small constant step, which is how we solve
//! it here.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::game::{
    self, derive_bounds, local_aggregates, CostModel, GameBounds, GameSpec, StrategyProfile,
};

/// Options for [`solve_expected_vi`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Target on the fixed-point residual. The equilibrium feeds every
    /// downstream metric, so the default is tight.
    pub tolerance: f64,
    pub max_iters: u64,
    /// Lipschitz constant of the expected operator. Computed in closed form
    /// for quadratic games; custom models must supply one.
    pub lipschitz: Option<f64>,
    pub initial: Option<StrategyProfile>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-10, max_iters: 200_000, lipschitz: None, initial: None }
    }
}

/// Solver output. `residual` is the fixed-point gap
/// `|s - proj(s - tau F(s))|` at the returned profile.
#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    pub profile: StrategyProfile,
    pub residual: f64,
    pub iterations: u64,
    pub solver_step: f64,
    pub converged: bool,
}

/// Solves the variational inequality of the expected game by fixed-point
/// iteration `s <- proj(s - tau F(s))` with `tau = mu / L^2`, which is
/// strictly inside the contraction range for a mu-strongly monotone,
/// L-Lipschitz operator.
///
/// Quadratic costs only: their gradient is affine in the aggregate, so the
/// expected operator is the Jacobian at the expected effective network.
/// For a custom cost that evaluation would be a biased plug-in, so custom
/// models are rejected rather than silently solved against the wrong
/// operator.
pub fn solve_expected_vi(game: &GameSpec, opts: &SolveOptions) -> Result<EquilibriumResult> {
    if !game.all_quadratic() {
        return Err(Error::RequiresQuadratic(
            "the expected-game operator has a closed form only for the quadratic family".into(),
        ));
    }
    let bounds = derive_bounds(game)?;
    let mu = bounds.monotonicity;
    let lipschitz = match opts.lipschitz {
        Some(l) if l > 0.0 => l,
        Some(l) => {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive, got {l}"
            )))
        }
        None => game::quadratic_lipschitz(game)?,
    };
    let tau = mu / (lipschitz * lipschitz);
    let expected = game.network().expected_effective();

    let mut current = match &opts.initial {
        Some(p) => {
            let mut p = p.clone();
            game.project_profile(&mut p);
            p
        }
        None => game.initial_profile(),
    };
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iters {
        let next = fixed_point_map(game, &current, &expected, tau)?;
        residual = current.distance_to(&next);
        current = next;
        iterations += 1;
        if residual <= opts.tolerance {
            break;
        }
    }
    // Report the residual at the final iterate itself.
    let probe = fixed_point_map(game, &current, &expected, tau)?;
    let final_residual = current.distance_to(&probe);
    Ok(EquilibriumResult {
        profile: current,
        residual: final_residual,
        iterations,
        solver_step: tau,
        converged: final_residual <= opts.tolerance || residual <= opts.tolerance,
    })
}

fn fixed_point_map(
    game: &GameSpec,
    profile: &StrategyProfile,
    expected: &DMatrix<f64>,
    tau: f64,
) -> Result<StrategyProfile> {
    let jac = game::game_jacobian(game, profile, expected)?;
    let mut next = profile.clone();
    for (v, g) in next.values_mut().iter_mut().zip(&jac) {
        *v -= tau * g;
    }
    game.project_profile(&mut next);
    Ok(next)
}

/// Outcome of a best-response computation. `converged` is always true for
/// the quadratic closed form; the custom-cost inner loop flags failure.
#[derive(Debug, Clone)]
pub struct BestResponse {
    pub strategy: Vec<f64>,
    pub converged: bool,
}

/// Minimizes agent `i`'s cost against a fixed aggregate. Quadratic costs
/// reduce to the projection of `-(a z + b)/q`, which is exact for boxes and
/// balls; custom costs run a projected-gradient inner loop with
/// backtracking.
pub fn best_response(
    game: &GameSpec,
    agent: usize,
    aggregate: &[f64],
    tolerance: f64,
) -> Result<BestResponse> {
    if agent >= game.n_agents() {
        return Err(Error::InvalidParameter(format!("agent index {agent} out of range")));
    }
    if aggregate.len() != game.dim() {
        return Err(Error::DimensionMismatch(format!(
            "aggregate of dimension {} for a game of dimension {}",
            aggregate.len(),
            game.dim()
        )));
    }
    if aggregate.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("aggregate must be finite".into()));
    }
    let set = game.set(agent);
    match game.cost(agent) {
        CostModel::Quadratic { q, a, b } => {
            let target: Vec<f64> =
                aggregate.iter().zip(b).map(|(z, off)| -(a * z + off) / q).collect();
            Ok(BestResponse { strategy: set.project(&target)?, converged: true })
        }
        CostModel::Custom(f) => {
            let mut point = set.project(&vec![0.0; game.dim()])?;
            let mut grad = vec![0.0; game.dim()];
            let mut step = 1.0;
            let max_iters = 10_000;
            for _ in 0..max_iters {
                f.gradient(&point, aggregate, &mut grad);
                if grad.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFiniteGradient { agent, iteration: 0 });
                }
                let current_cost = f.cost(&point, aggregate);
                // Backtrack until the projected step gives a decrease.
                let mut candidate;
                loop {
                    candidate =
                        point.iter().zip(&grad).map(|(p, g)| p - step * g).collect::<Vec<f64>>();
                    set.project_in_place(&mut candidate);
                    if f.cost(&candidate, aggregate) <= current_cost || step < 1e-14 {
                        break;
                    }
                    step *= 0.5;
                }
                let moved: f64 = candidate
                    .iter()
                    .zip(&point)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                point = candidate;
                if moved <= tolerance && step >= 1e-14 {
                    return Ok(BestResponse { strategy: point, converged: true });
                }
            }
            Ok(BestResponse { strategy: point, converged: false })
        }
    }
}

/// High-probability almost-Nash level of the expected-game equilibrium in a
/// randomly sampled stage game.
#[derive(Debug, Clone, Copy)]
pub struct EpsilonBound {
    pub n_agents: usize,
    pub dim: usize,
    pub delta: f64,
    pub strategy_norm_bound: f64,
    pub aggregate_lipschitz: f64,
    /// Level that holds with probability at least `1 - delta`.
    pub high_probability: f64,
    /// Level that holds on every realization.
    pub worst_case: f64,
}

/// Evaluates the almost-Nash level: with probability at least `1 - delta`
/// over the stage network draw, the expected-game equilibrium is an
/// `high_probability`-Nash equilibrium of the stage game, and it is a
/// `worst_case`-Nash equilibrium always.
pub fn epsilon_bar(
    n_agents: usize,
    dim: usize,
    delta: f64,
    bounds: &GameBounds,
) -> Result<EpsilonBound> {
    if n_agents == 0 {
        return Err(Error::InvalidParameter("population must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0,1), got {delta}")));
    }
    let n = n_agents as f64;
    let s_max = bounds.strategy_norm_bound;
    let lip_z = bounds.aggregate_lipschitz;
    let concentration = aggregate_concentration_radius(n_agents, dim, delta, s_max);
    let high_probability =
        4.0 * lip_z * (concentration * (2.0 - delta / (2.0 * n)) + delta * s_max / n);
    Ok(EpsilonBound {
        n_agents,
        dim,
        delta,
        strategy_norm_bound: s_max,
        aggregate_lipschitz: lip_z,
        high_probability,
        worst_case: 4.0 * lip_z * s_max,
    })
}

/// Radius inside which a fixed agent's realized aggregate concentrates
/// around the expected one with probability at least `1 - delta/(2N)`.
pub fn aggregate_concentration_radius(
    n_agents: usize,
    dim: usize,
    delta: f64,
    strategy_norm_bound: f64,
) -> f64 {
    let n = n_agents as f64;
    let d = dim as f64;
    (d * strategy_norm_bound * strategy_norm_bound * (4.0 * d * n / delta).ln() / (2.0 * n)).sqrt()
}

/// Best-response gap of every agent in the stage game with weight matrix
/// `weights`: how much each agent could gain by unilaterally deviating. The
/// profile is an eps-Nash equilibrium of that stage game iff the max gap is
/// at most eps.
pub fn nash_gap(
    game: &GameSpec,
    profile: &StrategyProfile,
    weights: &DMatrix<f64>,
) -> Result<Vec<f64>> {
    let aggregates = local_aggregates(profile, weights)?;
    let dim = game.dim();
    let mut gaps = Vec::with_capacity(game.n_agents());
    for i in 0..game.n_agents() {
        gaps.push(agent_gap(game, i, profile.agent(i), &aggregates[i * dim..(i + 1) * dim])?);
    }
    Ok(gaps)
}

/// Single-agent best-response gap against a fixed aggregate.
///
/// For the quadratic family the cost is `q/2 |s - u|^2 + const` with
/// unconstrained optimum `u = -(a z + b)/q`, so with `r = proj(u)` the gap
/// is the cancellation-free sum of two nonnegative terms
/// `q/2 |s - r|^2 + q (s - r)'(r - u)`.
pub(crate) fn agent_gap(
    game: &GameSpec,
    agent: usize,
    strategy: &[f64],
    aggregate: &[f64],
) -> Result<f64> {
    match game.cost(agent) {
        CostModel::Quadratic { q, a, b } => {
            let set = game.set(agent);
            let target: Vec<f64> =
                aggregate.iter().zip(b).map(|(z, off)| -(a * z + off) / q).collect();
            let response = set.project(&target)?;
            let mut dist2 = 0.0;
            let mut cross = 0.0;
            for i in 0..strategy.len() {
                let ds = strategy[i] - response[i];
                dist2 += ds * ds;
                cross += ds * (response[i] - target[i]);
            }
            Ok(0.5 * q * dist2 + q * cross)
        }
        CostModel::Custom(f) => {
            let response = best_response(game, agent, aggregate, 1e-10)?;
            if !response.converged {
                return Err(Error::InvalidParameter(format!(
                    "best-response inner loop did not converge for agent {agent}"
                )));
            }
            let gap = f.cost(strategy, aggregate) - f.cost(&response.strategy, aggregate);
            // The inner loop only ever underestimates the gap; tiny negative
            // values are numerical noise.
            if gap < -1e-8 {
                return Err(Error::InvariantViolated(format!(
                    "negative best-response gap {gap} for agent {agent}"
                )));
            }
            Ok(gap.max(0.0))
        }
    }
}

/// Writes an equilibrium profile as a flat CSV vector, one coordinate per
/// line, preceded by a game-hash header so a reload can detect that the
/// file belongs to a different experiment.
pub fn write_equilibrium_csv(path: &Path, profile: &StrategyProfile, game_hash: &str) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "# game_hash={game_hash}").expect("string write");
    writeln!(out, "# dim={}", profile.dim()).expect("string write");
    writeln!(out, "value").expect("string write");
    for v in profile.values() {
        writeln!(out, "{v:.17e}").expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a profile written by [`write_equilibrium_csv`], refusing files
/// whose game hash does not match.
pub fn read_equilibrium_csv(path: &Path, expected_hash: &str) -> Result<StrategyProfile> {
    let text = fs::read_to_string(path)?;
    let mut dim = None;
    let mut values = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(hash) = rest.strip_prefix("game_hash=") {
                if hash != expected_hash {
                    return Err(Error::MalformedFile {
                        path: path.display().to_string(),
                        reason: format!("game hash {hash} does not match expected {expected_hash}"),
                    });
                }
            } else if let Some(d) = rest.strip_prefix("dim=") {
                dim = Some(d.parse::<usize>().map_err(|e| Error::MalformedFile {
                    path: path.display().to_string(),
                    reason: format!("bad dim header: {e}"),
                })?);
            }
            continue;
        }
        if line == "value" || line.is_empty() {
            continue;
        }
        values.push(line.parse::<f64>().map_err(|e| Error::MalformedFile {
            path: path.display().to_string(),
            reason: format!("bad coordinate {line:?}: {e}"),
        })?);
    }
    let dim = dim.ok_or_else(|| Error::MalformedFile {
        path: path.display().to_string(),
        reason: "missing dim header".into(),
    })?;
    StrategyProfile::new(values, dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{CostModel, GameSpec, StrategySet};
    use crate::net::{EdgeDistribution, EdgeModel, NetworkModel, SampleStream};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reference_game_with_offset(offset: f64) -> GameSpec {
        let network = NetworkModel::new(
            2,
            EdgeModel::Shared(EdgeDistribution::constant(1.0).unwrap()),
            vec![1.0, 1.0],
        )
        .unwrap();
        GameSpec::homogeneous(
            2,
            StrategySet::box_set(vec![0.0], vec![1.0]).unwrap(),
            CostModel::quadratic(1.0, 0.5, vec![offset]).unwrap(),
            network,
        )
        .unwrap()
    }

    fn reference_game() -> GameSpec {
        reference_game_with_offset(-1.0)
    }

    /// Linear-solve oracle: an interior equilibrium of the quadratic game
    /// solves (q I + (a/N) W) s = -b.
    fn linear_solve_oracle(game: &GameSpec) -> Vec<f64> {
        let n = game.n_agents();
        let w = game.network().expected_effective();
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        for i in 0..n {
            let CostModel::Quadratic { q, a, b } = game.cost(i) else { panic!() };
            for j in 0..n {
                m[(i, j)] = a / n as f64 * w[(i, j)];
            }
            m[(i, i)] += q;
            rhs[i] = -b[0];
        }
        m.lu().solve(&rhs).unwrap().iter().copied().collect()
    }

    #[test]
    fn solves_reference_game() {
        let game = reference_game();
        let result = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        assert!(result.converged);
        assert!(result.residual < 1e-10);
        let oracle = linear_solve_oracle(&game);
        assert_relative_eq!(oracle[0], 0.8, epsilon = 1e-12);
        for (got, want) in result.profile.values().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs oracle {want}");
        }
    }

    #[test]
    fn zero_offset_gives_zero_equilibrium() {
        let game = reference_game_with_offset(0.0);
        let result = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        for v in result.profile.values() {
            assert!(v.abs() < 1e-10);
        }
    }

    #[test]
    fn strong_pull_pins_at_upper_bound() {
        let game = reference_game_with_offset(-10.0);
        let result = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        for v in result.profile.values() {
            assert_relative_eq!(*v, 1.0, epsilon = 1e-10);
        }
        // KKT check: the operator points outward at the upper bound, so the
        // VI inequality holds for every feasible direction.
        let jac = crate::game::game_jacobian(
            &game,
            &result.profile,
            &game.network().expected_effective(),
        )
        .unwrap();
        for g in jac {
            assert!(g < 0.0);
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let game = reference_game();
        let opts = SolveOptions { max_iters: 2, tolerance: 1e-14, ..Default::default() };
        let result = solve_expected_vi(&game, &opts).unwrap();
        assert!(!result.converged);
        assert_eq!(result.iterations, 2);
    }

    #[test]
    fn vi_inequality_on_random_feasible_points() {
        let game = reference_game();
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let operator =
            crate::game::game_jacobian(&game, &eq.profile, &game.network().expected_effective())
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let s: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..1.0)).collect();
            let inner: f64 = s
                .iter()
                .zip(eq.profile.values())
                .zip(&operator)
                .map(|((si, ei), fi)| (si - ei) * fi)
                .sum();
            assert!(inner >= -1e-8, "VI violated: {inner}");
        }
    }

    #[test]
    fn solver_unique_from_random_starts() {
        let game = reference_game();
        let tolerance = 1e-10;
        let base = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let start =
                StrategyProfile::new((0..2).map(|_| rng.random_range(0.0..1.0)).collect(), 1)
                    .unwrap();
            let opts = SolveOptions { initial: Some(start), ..Default::default() };
            let result = solve_expected_vi(&game, &opts).unwrap();
            assert!(result.profile.distance_to(&base.profile) <= 10.0 * tolerance);
        }
    }

    #[test]
    fn best_response_examples() {
        let game = reference_game();
        // clamp(-(0.5*0.4 - 1)/1) = clamp(0.8) = 0.8
        let br = best_response(&game, 0, &[0.4], 1e-10).unwrap();
        assert_relative_eq!(br.strategy[0], 0.8, epsilon = 1e-15);

        // a z + b = 0 and 0 feasible -> best response 0.
        let zero_game = reference_game_with_offset(0.0);
        let br = best_response(&zero_game, 0, &[0.0], 1e-10).unwrap();
        assert_eq!(br.strategy[0], 0.0);

        // Unconstrained optimum 3 clamps to the box top.
        let pull = reference_game_with_offset(-3.0);
        let br = best_response(&pull, 1, &[0.0], 1e-10).unwrap();
        assert_eq!(br.strategy[0], 1.0);
    }

    #[test]
    fn best_response_on_ball_is_radial() {
        let network = NetworkModel::new(
            2,
            EdgeModel::Shared(EdgeDistribution::constant(1.0).unwrap()),
            vec![1.0, 1.0],
        )
        .unwrap();
        let game = GameSpec::homogeneous(
            2,
            StrategySet::ball(vec![0.0, 0.0], 1.0).unwrap(),
            CostModel::quadratic(1.0, 0.0, vec![-3.0, -4.0]).unwrap(),
            network,
        )
        .unwrap();
        // Unconstrained optimum (3,4) shrinks onto the unit sphere.
        let br = best_response(&game, 0, &[0.0, 0.0], 1e-10).unwrap();
        assert_relative_eq!(br.strategy[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(br.strategy[1], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn custom_cost_declared_bounds_and_solver_refusal() {
        struct Mirror;
        impl crate::game::CostFunction for Mirror {
            fn cost(&self, s: &[f64], z: &[f64]) -> f64 {
                0.5 * s[0] * s[0] + (0.5 * z[0] - 1.0) * s[0]
            }
            fn gradient(&self, s: &[f64], z: &[f64], out: &mut [f64]) {
                out[0] = s[0] + 0.5 * z[0] - 1.0;
            }
            fn declared_bounds(&self) -> Option<GameBounds> {
                Some(GameBounds {
                    strategy_norm_bound: 1.0,
                    cost_bound: 2.0,
                    gradient_bound: 2.5,
                    strategy_lipschitz: 2.5,
                    aggregate_lipschitz: 0.5,
                    monotonicity: 0.75,
                })
            }
        }
        let network = NetworkModel::new(
            2,
            EdgeModel::Shared(EdgeDistribution::constant(1.0).unwrap()),
            vec![1.0, 1.0],
        )
        .unwrap();
        let game = GameSpec::homogeneous(
            2,
            StrategySet::box_set(vec![0.0], vec![1.0]).unwrap(),
            CostModel::Custom(std::sync::Arc::new(Mirror)),
            network,
        )
        .unwrap();
        // Declared bounds are picked up.
        let bounds = derive_bounds(&game).unwrap();
        assert_eq!(bounds.monotonicity, 0.75);
        assert_eq!(bounds.aggregate_lipschitz, 0.5);
        // The solver refuses custom costs even with an explicit Lipschitz
        // constant: it has no unbiased expected-operator evaluation for
        // them.
        assert!(matches!(
            solve_expected_vi(&game, &SolveOptions::default()),
            Err(Error::RequiresQuadratic(_))
        ));
        let opts = SolveOptions { lipschitz: Some(1.25), ..Default::default() };
        assert!(matches!(solve_expected_vi(&game, &opts), Err(Error::RequiresQuadratic(_))));
        // Regret machinery still works for custom costs through the
        // realized stage games.
        let real = game.network().sample(&mut SampleStream::new(3, 0).rng_at(0), 0);
        let profile = StrategyProfile::new(vec![0.4, 0.9], 1).unwrap();
        let gaps = nash_gap(&game, &profile, &real.effective()).unwrap();
        assert!(gaps.iter().all(|g| *g >= 0.0));
    }

    #[test]
    fn custom_cost_best_response_converges() {
        struct Quartic;
        impl crate::game::CostFunction for Quartic {
            fn cost(&self, s: &[f64], z: &[f64]) -> f64 {
                0.25 * s[0].powi(4) + 0.5 * (s[0] - z[0]).powi(2)
            }
            fn gradient(&self, s: &[f64], z: &[f64], out: &mut [f64]) {
                out[0] = s[0].powi(3) + (s[0] - z[0]);
            }
        }
        let network = NetworkModel::new(
            2,
            EdgeModel::Shared(EdgeDistribution::constant(1.0).unwrap()),
            vec![1.0, 1.0],
        )
        .unwrap();
        let game = GameSpec::homogeneous(
            2,
            StrategySet::box_set(vec![-2.0], vec![2.0]).unwrap(),
            CostModel::Custom(std::sync::Arc::new(Quartic)),
            network,
        )
        .unwrap();
        let br = best_response(&game, 0, &[1.0], 1e-12).unwrap();
        assert!(br.converged);
        // Stationarity: s^3 + s - 1 = 0 at the interior optimum.
        let s = br.strategy[0];
        assert!((s.powi(3) + s - 1.0).abs() < 1e-6, "stationarity residual at {s}");
    }

    #[test]
    fn epsilon_bar_reference_value() {
        let bounds = GameBounds {
            strategy_norm_bound: 1.0,
            cost_bound: 1.0,
            gradient_bound: 1.0,
            strategy_lipschitz: 1.0,
            aggregate_lipschitz: 1.0,
            monotonicity: 1.0,
        };
        let eps = epsilon_bar(100, 1, 0.1, &bounds).unwrap();
        // Direct evaluation: 4 (sqrt(ln(4000)/200) (2 - 0.0005) + 0.001).
        let concentration = ((4000.0f64).ln() / 200.0).sqrt();
        let expected = 4.0 * (concentration * (2.0 - 0.0005) + 0.001);
        assert_relative_eq!(eps.high_probability, expected, epsilon = 1e-14);
        assert_relative_eq!(eps.high_probability, 1.633, epsilon = 1e-3);
        assert_relative_eq!(eps.worst_case, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn epsilon_bar_decreases_in_population() {
        let bounds = GameBounds {
            strategy_norm_bound: 1.0,
            cost_bound: 1.0,
            gradient_bound: 1.0,
            strategy_lipschitz: 1.0,
            aggregate_lipschitz: 1.0,
            monotonicity: 1.0,
        };
        let mut last = f64::INFINITY;
        for n in [100usize, 1_000, 10_000, 100_000] {
            let eps = epsilon_bar(n, 1, 0.1, &bounds).unwrap().high_probability;
            assert!(eps < last, "almost-Nash level should shrink with N: {eps} !< {last}");
            last = eps;
        }
        assert!(epsilon_bar(10, 1, 1.0, &bounds).is_err());
        assert!(epsilon_bar(10, 1, 0.0, &bounds).is_err());
    }

    #[test]
    fn nash_gap_examples() {
        let game = reference_game();
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let expected = game.network().expected_effective();
        let gaps = nash_gap(&game, &eq.profile, &expected).unwrap();
        for g in &gaps {
            assert!(g.abs() <= 0.5 * eq.residual * eq.residual + 1e-18, "gap {g}");
        }

        // s = (1,1): z = 0.5, best response clamp(0.75) = 0.75,
        // gap = 0.5 (1 - 0.75)^2 = 0.03125 each.
        let ones = StrategyProfile::new(vec![1.0, 1.0], 1).unwrap();
        let gaps = nash_gap(&game, &ones, &expected).unwrap();
        for g in gaps {
            assert_relative_eq!(g, 0.03125, epsilon = 1e-15);
        }

        // Replacing a strategy with its best response zeroes the gap.
        let ones = StrategyProfile::new(vec![1.0, 1.0], 1).unwrap();
        let z = local_aggregates(&ones, &expected).unwrap();
        let br = best_response(&game, 0, &z[0..1], 1e-10).unwrap();
        let mut replaced = ones.clone();
        replaced.agent_mut(0)[0] = br.strategy[0];
        let gaps = nash_gap(&game, &replaced, &expected).unwrap();
        assert!(gaps[0].abs() < 1e-15);
    }

    #[test]
    fn gap_matches_direct_cost_difference_including_pinned_cases() {
        // The pinned-at-the-boundary case is where a naive q/2 |s - br|^2
        // formula would be wrong; the exact two-term form must agree with
        // the raw cost difference everywhere.
        let game = reference_game_with_offset(-10.0);
        let expected = game.network().expected_effective();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let s = StrategyProfile::new((0..2).map(|_| rng.random_range(0.0..1.0)).collect(), 1)
                .unwrap();
            let gaps = nash_gap(&game, &s, &expected).unwrap();
            let aggregates = local_aggregates(&s, &expected).unwrap();
            for i in 0..2 {
                let z = &aggregates[i..i + 1];
                let br = best_response(&game, i, z, 1e-12).unwrap();
                let direct = game.cost(i).cost(s.agent(i), z) - game.cost(i).cost(&br.strategy, z);
                assert!(
                    (gaps[i] - direct).abs() < 1e-10,
                    "closed form {} vs direct {direct}",
                    gaps[i]
                );
                assert!(gaps[i] >= 0.0);
            }
        }
    }

    #[test]
    fn concentration_radius_formula() {
        let radius = aggregate_concentration_radius(100, 1, 0.1, 1.0);
        assert_relative_eq!(radius, ((4000.0f64).ln() / 200.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn equilibrium_csv_roundtrip_and_hash_check() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("equilibrium.csv");
        let profile = StrategyProfile::new(vec![0.125, -3.5, 0.8], 1).unwrap();
        write_equilibrium_csv(&path, &profile, "abc123").unwrap();
        let back = read_equilibrium_csv(&path, "abc123").unwrap();
        assert_eq!(back, profile);
        match read_equilibrium_csv(&path, "other") {
            Err(Error::MalformedFile { reason, .. }) => assert!(reason.contains("hash")),
            other => panic!("expected hash mismatch, got {other:?}"),
        }
    }

    #[test]
    fn eps_nash_frequency_at_scale() {
        // Sampled stage games: the expected-game equilibrium must be an
        // almost-Nash equilibrium at the high-probability level in at least
        // a 1 - delta share of draws, and at the worst-case level always.
        let n = 40;
        let delta = 0.1;
        let network = NetworkModel::uniform_participation(
            n,
            EdgeModel::Shared(EdgeDistribution::bernoulli(0.5).unwrap()),
            0.7,
        )
        .unwrap();
        let game = GameSpec::homogeneous(
            n,
            StrategySet::box_set(vec![0.0], vec![1.0]).unwrap(),
            CostModel::quadratic(1.0, 0.5, vec![-1.0]).unwrap(),
            network,
        )
        .unwrap();
        let eq = solve_expected_vi(&game, &SolveOptions::default()).unwrap();
        let bounds = derive_bounds(&game).unwrap();
        let eps = epsilon_bar(n, 1, delta, &bounds).unwrap();
        let stream = SampleStream::new(99, 0);
        let draws = 2_000u64;
        let mut ok = 0u64;
        let mut real = game.network().empty_realization();
        for k in 0..draws {
            let mut rng = stream.rng_at(k);
            game.network().sample_into(&mut rng, k, &mut real);
            let gaps = nash_gap(&game, &eq.profile, &real.effective()).unwrap();
            let max_gap = gaps.iter().fold(0.0_f64, |acc, g| acc.max(*g));
            assert!(max_gap <= eps.worst_case + 1e-12, "worst-case level violated: {max_gap}");
            if max_gap <= eps.high_probability {
                ok += 1;
            }
        }
        let frequency = ok as f64 / draws as f64;
        let slack = 4.0 * (delta * (1.0 - delta) / draws as f64).sqrt();
        assert!(frequency >= 1.0 - delta - slack, "frequency {frequency}");
    }
}
