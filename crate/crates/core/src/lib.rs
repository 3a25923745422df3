//! Recover human-readable behavior-tree swarm controllers from observed trajectories.
//!
//! The pipeline: measure an observed [`sim::Trajectory`] with the nine [`metrics`] streams,
//! then evolve [`bt::BehaviorTree`]s whose simulated swarms reproduce those streams
//! ([`evolve`]). The [`eval`] module holds the recovery benchmark and the metric
//! discrimination study.

pub mod bt;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod evolve;
pub mod geom;
pub mod io;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod sim;

pub use bt::{BehaviorTree, CancelingPairs, LeafAction};
pub use error::{Error, Result};
pub use evolve::{EvolutionConfig, ExtractionResult, Observation};
pub use geom::Vec2;
pub use metrics::{MetricBounds, MetricParams, MetricSeries};
pub use sim::{ArenaConfig, SwarmState, Trajectory};
