//! Experiment harness for `season-core`: synthetic leagues with known
//! ground truth, CSV ingestion, and the forecasting, objective, prior
//! knowledge and optimizer experiments with their reports.

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use season_core::league::LeagueError;
use season_core::objectives::ObjectiveError;
use season_core::outcome::ModelError;
use season_core::prior::PriorError;
use season_core::season_sim::SimError;
use season_core::tactics::TacticError;

pub mod config;
pub mod experiments;
pub mod ingest;
pub mod metrics;
pub mod modeling;
pub mod report;
pub mod world;

pub use config::ExperimentConfig;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{file}: line {line}: {message}")]
    Ingest { file: String, line: u64, message: String },
    #[error(transparent)]
    League(#[from] LeagueError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error(transparent)]
    Tactic(#[from] TacticError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}
