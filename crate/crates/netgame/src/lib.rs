//! Simulation library for repeated network games on randomly sampled
//! networks with intermittent agent participation.
//!
//! Agents repeatedly play a smooth strongly monotone network game. At every
//! repetition a fresh network is drawn (edge weights from a bounded
//! distribution, participation as independent coin flips) and present agents
//! take one projected gradient step against the aggregate they actually
//! sensed. The library provides:
//!
//! - the one-shot game model: strategy sets, cost functions, local
//!   aggregates, game Jacobian and its expectation ([`game`]);
//! - the random network model and reproducible counter-based sampling
//!   ([`net`]);
//! - the learning dynamics, their stochastic-gradient reformulation and
//!   step-size schedules ([`dynamics`]);
//! - equilibrium solving for the expected game as a variational inequality,
//!   best responses, and almost-Nash certification ([`equilibrium`]);
//! - regret accounting, theoretical constants, rate fitting and numeric
//!   verification of the convergence/regret bounds ([`metrics`]);
//! - experiment configs, CSV traces, and the `netgame` CLI
//!   ([`config`], [`trace`], [`verify`], [`cli`]).

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod equilibrium;
mod error;
pub mod game;
pub mod metrics;
pub mod net;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
