//! Random network model with intermittent participation.
//!
//! At every repetition the simulator draws a fresh weighted adjacency matrix
//! (each off-diagonal entry independently from a bounded distribution on
//! [0,1]) and an independent participation coin per agent. The network that
//! actually carries interactions is `G diag(P)`: an absent agent's column is
//! zeroed, so it contributes to nobody's aggregate that round.
//!
//! Sampling is counter-based: every `(master seed, replication, iteration)`
//! triple owns an independent generator, so replications parallelize with no
//! shared generator state and identical seeds reproduce bit-identical draws.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of a single edge weight; support must sit inside [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeDistribution {
    Bernoulli { p: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl EdgeDistribution {
    pub fn bernoulli(p: f64) -> Result<Self> {
        let d = EdgeDistribution::Bernoulli { p };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = EdgeDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn constant(value: f64) -> Result<Self> {
        let d = EdgeDistribution::Constant { value };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            EdgeDistribution::Bernoulli { p } => (0.0..=1.0).contains(p),
            EdgeDistribution::Uniform { lo, hi } => {
                (0.0..=1.0).contains(lo) && (0.0..=1.0).contains(hi) && lo <= hi
            }
            EdgeDistribution::Constant { value } => (0.0..=1.0).contains(value),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "edge distribution support must lie in [0,1]: {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            EdgeDistribution::Bernoulli { p } => *p,
            EdgeDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            EdgeDistribution::Constant { value } => *value,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            EdgeDistribution::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            EdgeDistribution::Uniform { lo, hi } => {
                if lo == hi {
                    *lo
                } else {
                    rng.random_range(*lo..*hi)
                }
            }
            EdgeDistribution::Constant { value } => *value,
        }
    }
}

/// Edge law for the whole network: one shared distribution (Erdos-Renyi
/// style) or one distribution per ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub enum EdgeModel {
    Shared(EdgeDistribution),
    /// Row-major `N*N` table; diagonal entries are ignored.
    PerPair(Vec<EdgeDistribution>),
}

/// Random network model: edge law plus per-agent participation
/// probabilities, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    n_agents: usize,
    edges: EdgeModel,
    participation: Vec<f64>,
}

impl NetworkModel {
    pub fn new(n_agents: usize, edges: EdgeModel, participation: Vec<f64>) -> Result<Self> {
        if n_agents == 0 {
            return Err(Error::InvalidParameter("network needs at least one agent".into()));
        }
        if participation.len() != n_agents {
            return Err(Error::DimensionMismatch(format!(
                "{} participation probabilities for {n_agents} agents",
                participation.len()
            )));
        }
        for (i, p) in participation.iter().enumerate() {
            // The noise bound divides by min participation, so zero is out.
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "participation probability of agent {i} must lie in (0,1], got {p}"
                )));
            }
        }
        match &edges {
            EdgeModel::Shared(d) => d.validate()?,
            EdgeModel::PerPair(table) => {
                if table.len() != n_agents * n_agents {
                    return Err(Error::DimensionMismatch(format!(
                        "per-pair edge table has {} entries, expected {}",
                        table.len(),
                        n_agents * n_agents
                    )));
                }
                for d in table {
                    d.validate()?;
                }
            }
        }
        Ok(Self { n_agents, edges, participation })
    }

    /// Same edge law and the same participation probability for everyone.
    pub fn uniform_participation(n_agents: usize, edges: EdgeModel, p: f64) -> Result<Self> {
        Self::new(n_agents, edges, vec![p; n_agents])
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn participation(&self) -> &[f64] {
        &self.participation
    }

    pub fn min_participation(&self) -> f64 {
        self.participation.iter().fold(f64::INFINITY, |acc, p| acc.min(*p))
    }

    pub fn max_participation(&self) -> f64 {
        self.participation.iter().fold(0.0_f64, |acc, p| acc.max(*p))
    }

    fn edge_distribution(&self, i: usize, j: usize) -> &EdgeDistribution {
        match &self.edges {
            EdgeModel::Shared(d) => d,
            EdgeModel::PerPair(table) => &table[i * self.n_agents + j],
        }
    }

    /// Mean adjacency matrix (zero diagonal).
    pub fn mean_adjacency(&self) -> DMatrix<f64> {
        let n = self.n_agents;
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { self.edge_distribution(i, j).mean() })
    }

    /// Expected effective network: mean adjacency right-scaled by the
    /// participation probabilities (column `j` times `p_j`).
    pub fn expected_effective(&self) -> DMatrix<f64> {
        let mut m = self.mean_adjacency();
        for j in 0..self.n_agents {
            let p = self.participation[j];
            for i in 0..self.n_agents {
                m[(i, j)] *= p;
            }
        }
        m
    }

    /// Preallocated realization buffer for [`Self::sample_into`].
    pub fn empty_realization(&self) -> NetworkRealization {
        NetworkRealization {
            adjacency: DMatrix::zeros(self.n_agents, self.n_agents),
            participation: vec![false; self.n_agents],
            iteration: 0,
        }
    }

    /// Draws one network realization labeled with iteration `k`.
    pub fn sample<R: RngCore>(&self, rng: &mut R, iteration: u64) -> NetworkRealization {
        let mut out = self.empty_realization();
        self.sample_into(rng, iteration, &mut out);
        out
    }

    /// Fills `out` with a fresh draw. Draw order is fixed (rows of the
    /// adjacency matrix, skipping the diagonal, then the participation
    /// coins) so a given generator state always yields the same network.
    pub fn sample_into<R: RngCore>(
        &self,
        rng: &mut R,
        iteration: u64,
        out: &mut NetworkRealization,
    ) {
        let n = self.n_agents;
        debug_assert_eq!(out.adjacency.nrows(), n);
        for i in 0..n {
            for j in 0..n {
                out.adjacency[(i, j)] =
                    if i == j { 0.0 } else { self.edge_distribution(i, j).sample(rng) };
            }
        }
        for (flag, p) in out.participation.iter_mut().zip(&self.participation) {
            *flag = rng.random::<f64>() < *p;
        }
        out.iteration = iteration;
    }
}

/// One sampled network: weighted adjacency, participation flags and the
/// iteration the draw belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    adjacency: DMatrix<f64>,
    participation: Vec<bool>,
    iteration: u64,
}

impl NetworkRealization {
    pub fn new(adjacency: DMatrix<f64>, participation: Vec<bool>, iteration: u64) -> Result<Self> {
        if adjacency.nrows() != adjacency.ncols() || adjacency.nrows() != participation.len() {
            return Err(Error::DimensionMismatch(
                "adjacency matrix and participation vector shapes differ".into(),
            ));
        }
        for i in 0..adjacency.nrows() {
            if adjacency[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!("self-loop at agent {i}")));
            }
        }
        Ok(Self { adjacency, participation, iteration })
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn participation(&self) -> &[bool] {
        &self.participation
    }

    pub fn is_present(&self, agent: usize) -> bool {
        self.participation[agent]
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn participant_count(&self) -> usize {
        self.participation.iter().filter(|p| **p).count()
    }

    /// Effective interaction network `G diag(P)`: column `j` is zeroed when
    /// agent `j` is absent.
    pub fn effective(&self) -> DMatrix<f64> {
        let n = self.participation.len();
        let mut m = self.adjacency.clone();
        for j in 0..n {
            if !self.participation[j] {
                for i in 0..n {
                    m[(i, j)] = 0.0;
                }
            }
        }
        m
    }

    /// Dense CSV dump of the effective network, one row per line, for
    /// debugging a single draw.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let eff = self.effective();
        for i in 0..eff.nrows() {
            let row: Vec<String> = (0..eff.ncols()).map(|j| format!("{}", eff[(i, j)])).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Counter-based stream of per-iteration generators for one replication.
///
/// Each iteration's generator is keyed by mixing `(master seed, replication,
/// iteration)` through SplitMix64, so draws are independent across
/// iterations and across replications without any shared state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStream {
    master_seed: u64,
    replication: u64,
}

impl SampleStream {
    pub fn new(master_seed: u64, replication: u64) -> Self {
        Self { master_seed, replication }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    /// Generator owning the draws of iteration `k`.
    pub fn rng_at(&self, iteration: u64) -> ChaCha8Rng {
        let mut key = splitmix64(self.master_seed ^ 0x9e37_79b9_7f4a_7c15);
        key = splitmix64(key ^ self.replication);
        key = splitmix64(key ^ iteration);
        ChaCha8Rng::seed_from_u64(key)
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
