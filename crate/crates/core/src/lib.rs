//! Distributed solution of square linear systems by projection consensus
//! over a communication network, with walk-based error bounds and a
//! Kaczmarz reference solver.

pub mod cli;
pub mod consensus;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kaczmarz;
pub mod linalg;
pub mod walks;

pub use consensus::{AgentEnsemble, Checkpoint, ConvergenceTrace, UpdatingMatrix};
pub use error::{Error, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult};
pub use graph::{GraphFamily, Network};
pub use linalg::LinearSystem;
pub use walks::{walk_order, BoundReport, OrderDecomposition, Walk};
