//! Experiment configuration: a strict TOML schema plus validation that
//! reports every violation, not just the first.
//!
//! Unknown fields are rejected everywhere; a typo in a parameter name would
//! otherwise silently run a different experiment.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::StepSchedule;
use crate::game::{CostModel, GameSpec, StrategySet};
use crate::net::{EdgeDistribution, EdgeModel, NetworkModel};

/// Configuration errors: unparsable text, or a parsed config that violates
/// the model requirements (with one message per violation).
#[derive(Debug)]
pub enum ConfigError {
    Io(std::io::Error),
    Parse(String),
    Invalid(Vec<String>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(e) => write!(f, "cannot read config: {e}"),
            ConfigError::Parse(msg) => write!(f, "config parse error: {msg}"),
            ConfigError::Invalid(violations) => {
                writeln!(f, "config is invalid ({} violations):", violations.len())?;
                for v in violations {
                    writeln!(f, "  - {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Top-level experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSection,
    pub network: NetworkSection,
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub verify: VerifySection,
}

/// Population, strategy sets and the cost family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSection {
    pub agents: usize,
    pub dimension: usize,
    pub cost: CostSection,
    pub strategy_set: StrategySet,
}

/// Quadratic cost parameters: `q/2 |s|^2 + (a z + b)' s`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum CostSection {
    Quadratic { q: f64, a: f64, b: Vec<f64> },
}

/// Edge law and participation probabilities.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub edges: EdgeDistribution,
    pub participation: ParticipationSpec,
}

/// One probability for everyone, or one per agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParticipationSpec {
    Scalar(f64),
    PerAgent(Vec<f64>),
}

/// Step-size rule. The `alpha` rule's contraction coefficient defaults to
/// the one computed from the game; setting `c2` overrides it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSection {
    Theta { theta: f64 },
    Alpha { alpha: f64, #[serde(default, skip_serializing_if = "Option::is_none")] c2: Option<f64> },
}

/// Horizon, replication count, seeding and output toggles.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_horizon")]
    pub horizon: u64,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    #[serde(default)]
    pub store_noise: bool,
    #[serde(default)]
    pub store_profiles: bool,
    #[serde(default = "default_true")]
    pub record_regret: bool,
    #[serde(default = "default_equilibrium_tolerance")]
    pub equilibrium_tolerance: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            replications: default_replications(),
            seed: 0,
            output_dir: default_output_dir(),
            store_noise: false,
            store_profiles: false,
            record_regret: true,
            equilibrium_tolerance: default_equilibrium_tolerance(),
        }
    }
}

/// Scales of the statistical verification battery.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_network_draws")]
    pub network_draws: u64,
    #[serde(default = "default_noise_profiles")]
    pub noise_profiles: usize,
    #[serde(default = "default_noise_draws")]
    pub noise_draws: u64,
    #[serde(default = "default_equivalence_trials")]
    pub equivalence_trials: u64,
    /// Exponent for the almost-sure envelope surrogate; must lie in
    /// (2 theta, 1) for the slow rule.
    #[serde(default = "default_beta")]
    pub beta: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            network_draws: default_network_draws(),
            noise_profiles: default_noise_profiles(),
            noise_draws: default_noise_draws(),
            equivalence_trials: default_equivalence_trials(),
            beta: default_beta(),
        }
    }
}

fn default_horizon() -> u64 {
    10_000
}
fn default_replications() -> u64 {
    1
}
fn default_output_dir() -> String {
    "out".into()
}
fn default_true() -> bool {
    true
}
fn default_equilibrium_tolerance() -> f64 {
    1e-10
}
fn default_delta() -> f64 {
    0.1
}
fn default_network_draws() -> u64 {
    10_000
}
fn default_noise_profiles() -> usize {
    10
}
fn default_noise_draws() -> u64 {
    2_000
}
fn default_equivalence_trials() -> u64 {
    1_000
}
fn default_beta() -> f64 {
    0.6
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(ConfigError::Io)?;
        Self::parse(&text)
    }

    /// Parses and fully validates; returns every violation found.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let violations = config.validate();
        if violations.is_empty() {
            Ok(config)
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }

    /// Collects all violations of the model requirements.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let game = &self.game;
        if game.agents == 0 {
            v.push("game.agents: population must be at least 1".into());
        }
        if game.dimension == 0 {
            v.push("game.dimension: strategy dimension must be at least 1".into());
        }
        let CostSection::Quadratic { q, a, b } = &game.cost;
        if !(*q > 0.0 && q.is_finite()) {
            v.push(format!("game.cost.q: quadratic weight must be positive and finite, got {q}"));
        }
        if !a.is_finite() {
            v.push(format!("game.cost.a: aggregate weight must be finite, got {a}"));
        }
        if b.len() != game.dimension {
            v.push(format!(
                "game.cost.b: offset has dimension {}, expected {}",
                b.len(),
                game.dimension
            ));
        }
        if b.iter().any(|x| !x.is_finite()) {
            v.push("game.cost.b: offset entries must be finite".into());
        }
        if game.strategy_set.dimension() != game.dimension {
            v.push(format!(
                "game.strategy_set: dimension {} does not match game.dimension {}",
                game.strategy_set.dimension(),
                game.dimension
            ));
        }
        if let Err(e) = game.strategy_set.validate() {
            v.push(format!("game.strategy_set: {e}"));
        }
        if let Err(e) = self.network.edges.validate() {
            v.push(format!("network.edges: {e}"));
        }
        match &self.network.participation {
            ParticipationSpec::Scalar(p) => {
                if !(*p > 0.0 && *p <= 1.0) {
                    v.push(format!(
                        "network.participation: probability must lie in (0,1] (strictly \
                         positive), got {p}"
                    ));
                }
            }
            ParticipationSpec::PerAgent(ps) => {
                if ps.len() != game.agents {
                    v.push(format!(
                        "network.participation: {} probabilities for {} agents",
                        ps.len(),
                        game.agents
                    ));
                }
                for (i, p) in ps.iter().enumerate() {
                    if !(*p > 0.0 && *p <= 1.0) {
                        v.push(format!(
                            "network.participation: probability of agent {i} must lie in (0,1] \
                             (strictly positive), got {p}"
                        ));
                    }
                }
            }
        }
        match &self.schedule {
            ScheduleSection::Theta { theta } => {
                if !(*theta > 0.0 && *theta < 0.5) {
                    v.push(format!(
                        "schedule.theta: exponent must lie in the open interval (0, 0.5), got \
                         {theta}"
                    ));
                }
            }
            ScheduleSection::Alpha { alpha, c2 } => {
                if !(*alpha > 0.0 && *alpha <= 1.0) {
                    v.push(format!("schedule.alpha: exponent must lie in (0, 1], got {alpha}"));
                }
                if let Some(c2) = c2 {
                    if !(*c2 > 0.0) {
                        v.push(format!(
                            "schedule.c2: contraction coefficient must be positive, got {c2}"
                        ));
                    }
                }
            }
        }
        if self.run.replications == 0 {
            v.push("run.replications: at least one replication is required".into());
        }
        if !(self.run.equilibrium_tolerance > 0.0) {
            v.push(format!(
                "run.equilibrium_tolerance: must be positive, got {}",
                self.run.equilibrium_tolerance
            ));
        }
        if !(self.verify.delta > 0.0 && self.verify.delta < 1.0) {
            v.push(format!(
                "verify.delta: confidence parameter must lie in (0,1), got {}",
                self.verify.delta
            ));
        }
        if !(self.verify.beta > 0.0 && self.verify.beta < 1.0) {
            v.push(format!("verify.beta: must lie in (0,1), got {}", self.verify.beta));
        }
        if let ScheduleSection::Theta { theta } = &self.schedule {
            if *theta > 0.0 && *theta < 0.5 && self.verify.beta <= 2.0 * theta {
                v.push(format!(
                    "verify.beta: must exceed 2 * theta = {} for the envelope surrogate, got {}",
                    2.0 * theta,
                    self.verify.beta
                ));
            }
        }
        v
    }

    pub fn build_network(&self) -> crate::Result<NetworkModel> {
        let participation = match &self.network.participation {
            ParticipationSpec::Scalar(p) => vec![*p; self.game.agents],
            ParticipationSpec::PerAgent(ps) => ps.clone(),
        };
        NetworkModel::new(self.game.agents, EdgeModel::Shared(self.network.edges), participation)
    }

    pub fn build_game(&self) -> crate::Result<GameSpec> {
        let network = self.build_network()?;
        let CostSection::Quadratic { q, a, b } = &self.game.cost;
        GameSpec::homogeneous(
            self.game.agents,
            self.game.strategy_set.clone(),
            CostModel::quadratic(*q, *a, b.clone())?,
            network,
        )
    }

    /// Builds the step schedule; the alpha rule takes its contraction
    /// coefficient from the game when the config does not pin one.
    pub fn build_schedule(&self, game_contraction: f64) -> crate::Result<StepSchedule> {
        match &self.schedule {
            ScheduleSection::Theta { theta } => StepSchedule::theta(*theta),
            ScheduleSection::Alpha { alpha, c2 } => {
                StepSchedule::alpha(*alpha, c2.unwrap_or(game_contraction))
            }
        }
    }

    /// Hash of the canonical serialized form; identifies the experiment in
    /// trace and equilibrium file headers. The output directory is not part
    /// of the experiment, so it is excluded.
    pub fn canonical_hash(&self) -> String {
        let mut canonical_config = self.clone();
        canonical_config.run.output_dir = String::new();
        let canonical = toml::to_string(&canonical_config).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }
}
