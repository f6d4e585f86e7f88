//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The heavy replicated batteries (criteria 4, 5, 8, 9) are computed once
//! and shared through `OnceLock`.

use std::path::Path;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use netgame::cli::{cmd_run, Overrides};
use netgame::config::ExperimentConfig;
use netgame::dynamics::StepSchedule;
use netgame::equilibrium::{solve_expected_vi, SolveOptions};
use netgame::game::{derive_bounds, CostModel, GameBounds, GameSpec, StrategyProfile, StrategySet};
use netgame::metrics::{constants, ConstantsBundle};
use netgame::net::{EdgeDistribution, EdgeModel, NetworkModel};
use netgame::verify::{
    appendix_check, averaged_regret_outcome, concentration_check, convergence_surrogate_outcome,
    eps_nash_check, equivalence_check, mean_square_outcome, noise_moment_check, regret_bound_outcome,
    replicated_battery, slope_outcome, BatteryData, BatteryOptions, NoiseMomentOptions,
};

fn report(criterion: u32, name: &str, passed: bool, detail: &str, elapsed: Duration) {
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("[criterion {criterion:02}] {verdict} {name}: {detail} ({elapsed:.2?})");
    assert!(passed, "criterion {criterion}: {name}: {detail}");
}

fn quadratic_game(
    n: usize,
    edges: EdgeDistribution,
    participation: f64,
    set: StrategySet,
    q: f64,
    a: f64,
    b: Vec<f64>,
) -> GameSpec {
    let network =
        NetworkModel::uniform_participation(n, EdgeModel::Shared(edges), participation).unwrap();
    GameSpec::homogeneous(n, set, CostModel::quadratic(q, a, b).unwrap(), network).unwrap()
}

fn unit_box(dim: usize) -> StrategySet {
    StrategySet::box_set(vec![0.0; dim], vec![1.0; dim]).unwrap()
}

/// The 2-agent reference game: deterministic 2-cycle, full participation.
fn reference_game() -> GameSpec {
    quadratic_game(
        2,
        EdgeDistribution::constant(1.0).unwrap(),
        1.0,
        unit_box(1),
        1.0,
        0.5,
        vec![-1.0],
    )
}

/// The 50-agent noisy reference: half-density random edges, 70%
/// participation.
fn noisy_game(n: usize) -> GameSpec {
    quadratic_game(
        n,
        EdgeDistribution::bernoulli(0.5).unwrap(),
        0.7,
        unit_box(1),
        1.0,
        0.5,
        vec![-1.0],
    )
}

struct SharedContext {
    game50: GameSpec,
    bounds50: GameBounds,
    eq50: StrategyProfile,
    game100: GameSpec,
    eq100: StrategyProfile,
}

fn ctx() -> &'static SharedContext {
    static CTX: OnceLock<SharedContext> = OnceLock::new();
    CTX.get_or_init(|| {
        let game50 = noisy_game(50);
        let bounds50 = derive_bounds(&game50).unwrap();
        let eq50 = solve_expected_vi(&game50, &SolveOptions::default()).unwrap().profile;
        let game100 = noisy_game(100);
        let eq100 = solve_expected_vi(&game100, &SolveOptions::default()).unwrap().profile;
        SharedContext { game50, bounds50, eq50, game100, eq100 }
    })
}

/// Criterion 4/8 battery: slow rule, 200 paths, 100k iterations.
fn theta_battery() -> &'static (BatteryData, ConstantsBundle) {
    static DATA: OnceLock<(BatteryData, ConstantsBundle)> = OnceLock::new();
    DATA.get_or_init(|| {
        let c = ctx();
        let schedule = StepSchedule::theta(0.25).unwrap();
        let bundle = constants(&c.bounds50, c.game50.network(), &schedule);
        let opts = BatteryOptions {
            replications: 200,
            horizon: 100_000,
            master_seed: 1_000,
            beta: 0.6,
            fit_lo: 100,
            fit_hi: 10_000,
        };
        let data = replicated_battery(&c.game50, &schedule, &c.eq50, &bundle, &opts).unwrap();
        (data, bundle)
    })
}

/// Criterion 5/9 battery: fast rule (alpha = 1), 200 paths, 10k iterations.
fn alpha_battery() -> &'static (BatteryData, ConstantsBundle, StepSchedule) {
    static DATA: OnceLock<(BatteryData, ConstantsBundle, StepSchedule)> = OnceLock::new();
    DATA.get_or_init(|| {
        let c = ctx();
        let pre = constants(&c.bounds50, c.game50.network(), &StepSchedule::theta(0.25).unwrap());
        let schedule = StepSchedule::alpha(1.0, pre.contraction).unwrap();
        let bundle = constants(&c.bounds50, c.game50.network(), &schedule);
        let opts = BatteryOptions {
            replications: 200,
            horizon: 10_000,
            master_seed: 2_000,
            beta: 0.6,
            fit_lo: 100,
            fit_hi: 10_000,
        };
        let data = replicated_battery(&c.game50, &schedule, &c.eq50, &bundle, &opts).unwrap();
        (data, bundle, schedule)
    })
}

#[test]
fn c01_equilibrium_oracle() {
    let start = Instant::now();
    let game = reference_game();
    let result = solve_expected_vi(&game, &SolveOptions::default()).unwrap();

    // Independent oracle: the interior equilibrium solves
    // (I + (a/N) Gbar) s = -b, i.e. s = 0.8 per agent for the 2-cycle.
    let oracle = {
        let m = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 0.25, 0.25, 1.0]);
        let rhs = nalgebra::DVector::from_element(2, 1.0);
        m.lu().solve(&rhs).unwrap()
    };
    let elapsed = start.elapsed();
    let max_err = result
        .profile
        .values()
        .iter()
        .zip(oracle.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    let frozen_err = result
        .profile
        .values()
        .iter()
        .map(|v| (v - 0.8).abs())
        .fold(0.0f64, f64::max);
    let passed =
        max_err < 1e-8 && frozen_err < 1e-8 && result.converged && elapsed < Duration::from_secs(1);
    report(
        1,
        "equilibrium oracle",
        passed,
        &format!(
            "max deviation from linear-solve oracle {max_err:.2e}, from (0.8, 0.8) \
             {frozen_err:.2e}, residual {:.2e}",
            result.residual
        ),
        elapsed,
    );
}

#[test]
fn c02_dynamics_equivalence() {
    let start = Instant::now();
    let games = vec![
        reference_game(),
        quadratic_game(
            10,
            EdgeDistribution::bernoulli(0.6).unwrap(),
            0.8,
            StrategySet::box_set(vec![-0.5, 0.0], vec![1.0, 2.0]).unwrap(),
            1.0,
            0.7,
            vec![-0.4, 0.3],
        ),
        quadratic_game(
            25,
            EdgeDistribution::uniform(0.2, 0.9).unwrap(),
            0.5,
            StrategySet::ball(vec![0.5], 1.0).unwrap(),
            2.0,
            -0.3,
            vec![-1.0],
        ),
        {
            let network = NetworkModel::new(
                5,
                EdgeModel::Shared(EdgeDistribution::bernoulli(0.3).unwrap()),
                vec![0.9, 0.4, 0.7, 1.0, 0.6],
            )
            .unwrap();
            GameSpec::homogeneous(
                5,
                unit_box(3),
                CostModel::quadratic(1.5, 0.4, vec![-0.2, 0.1, -0.6]).unwrap(),
                network,
            )
            .unwrap()
        },
        noisy_game(50),
    ];
    let outcome = equivalence_check(&games, 1_000, 0x0002, 1e-12).unwrap();
    let elapsed = start.elapsed();
    report(
        2,
        "dynamics equivalence",
        outcome.passed && elapsed < Duration::from_secs(10),
        &outcome.detail,
        elapsed,
    );
}

#[test]
fn c03_noise_moments() {
    let start = Instant::now();
    let c = ctx();
    let outcome = noise_moment_check(
        &c.game50,
        &NoiseMomentOptions { profiles: 20, draws: 10_000, seed: 1 },
    )
    .unwrap();
    let elapsed = start.elapsed();
    report(
        3,
        "noise moments",
        outcome.passed && elapsed < Duration::from_secs(60),
        &outcome.detail,
        elapsed,
    );
}

#[test]
fn c04_almost_sure_convergence_surrogate() {
    let start = Instant::now();
    let (data, _) = theta_battery();
    let outcome = convergence_surrogate_outcome(data, 0.05);
    report(4, "almost-sure convergence surrogate", outcome.passed, &outcome.detail, start.elapsed());
}

#[test]
fn c05_mean_square_rate() {
    let start = Instant::now();
    let (data, bundle, schedule) = alpha_battery();
    let envelope = mean_square_outcome(data, bundle, schedule);
    let slope = slope_outcome(data, 100, 10_000, -0.4);
    report(
        5,
        "mean-square rate",
        envelope.passed && !envelope.skipped && slope.passed,
        &format!("{}; {}", envelope.detail, slope.detail),
        start.elapsed(),
    );
}

#[test]
fn c06_aggregate_concentration() {
    let start = Instant::now();
    let c = ctx();
    let outcome = concentration_check(&c.game100, &c.eq100, 0.1, 10_000, 0x0006, 0.02).unwrap();
    report(6, "aggregate concentration", outcome.passed, &outcome.detail, start.elapsed());
}

#[test]
fn c07_eps_nash_frequency() {
    let start = Instant::now();
    let c = ctx();
    let outcome = eps_nash_check(&c.game100, &c.eq100, 0.1, 10_000, 0x0007, 0.02).unwrap();
    report(7, "almost-Nash frequency", outcome.passed, &outcome.detail, start.elapsed());
}

#[test]
fn c08_deterministic_regret_inequality() {
    let start = Instant::now();
    let (theta_data, theta_bundle) = theta_battery();
    let (alpha_data, alpha_bundle, _) = alpha_battery();
    let theta_outcome = regret_bound_outcome(theta_data);
    let alpha_outcome = regret_bound_outcome(alpha_data);
    let max_regret = theta_data
        .per_rep
        .iter()
        .chain(&alpha_data.per_rep)
        .map(|r| r.max_regret)
        .fold(0.0f64, f64::max);
    let cap = theta_bundle.regret_cap.min(alpha_bundle.regret_cap);
    let passed = theta_outcome.passed && alpha_outcome.passed && max_regret <= cap;
    report(
        8,
        "deterministic regret inequality",
        passed,
        &format!(
            "slow rule: {}; fast rule: {}; max regret {max_regret:.3e} vs cap {cap:.3e}",
            theta_outcome.detail, alpha_outcome.detail
        ),
        start.elapsed(),
    );
}

#[test]
fn c09_time_averaged_regret() {
    let start = Instant::now();
    let c = ctx();
    let (data, bundle, _) = alpha_battery();
    let outcome = averaged_regret_outcome(data, &c.bounds50, bundle);
    report(
        9,
        "time-averaged regret",
        outcome.passed && !outcome.skipped,
        &outcome.detail,
        start.elapsed(),
    );
}

#[test]
fn c10_appendix_grid() {
    let start = Instant::now();
    let outcome = appendix_check();
    let elapsed = start.elapsed();
    report(
        10,
        "scalar inequality grid",
        outcome.passed && elapsed < Duration::from_secs(5),
        &outcome.detail,
        elapsed,
    );
}

#[test]
fn c11_reproducibility() {
    let start = Instant::now();
    let config_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference_2agent.toml");
    // Sanity-check the shipped config before running it.
    ExperimentConfig::load(&config_path).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    cmd_run(
        &config_path,
        &Overrides { out: Some(out_a.clone()), replications: Some(5), ..Default::default() },
    )
    .unwrap();
    cmd_run(
        &config_path,
        &Overrides { out: Some(out_b.clone()), replications: Some(5), ..Default::default() },
    )
    .unwrap();
    let strip = |p: &Path| {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# created_unix="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut identical = true;
    for rep in 0..5 {
        let name = format!("trace_rep{rep:04}.csv");
        identical &= strip(&out_a.join(&name)) == strip(&out_b.join(&name));
    }
    identical &= std::fs::read_to_string(out_a.join("summary.json")).unwrap()
        == std::fs::read_to_string(out_b.join("summary.json")).unwrap();
    identical &= std::fs::read_to_string(out_a.join("equilibrium.csv")).unwrap()
        == std::fs::read_to_string(out_b.join("equilibrium.csv")).unwrap();
    report(
        11,
        "reproducibility",
        identical,
        "5 replications re-run: traces, summary and equilibrium byte-identical (timestamp \
         header excluded)",
        start.elapsed(),
    );
}
