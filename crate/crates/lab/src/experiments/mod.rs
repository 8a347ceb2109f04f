//! The experiment runners. Each builds `n_seeds` synthetic worlds, runs
//! them (in parallel when `workers > 1`) and assembles a [`Report`].

use rayon::prelude::*;

use season_core::league::{write_fixtures, write_results};
use season_core::seed::{self, tag};

use crate::config::ExperimentConfig;
use crate::ingest::write_tactics;
use crate::report::{csv_string, Report};
use crate::world::World;
use crate::LabError;

pub mod forecast;
pub mod optimizer;
pub mod prior_boost;

pub use forecast::{forecast_world, run_experiment1, run_experiment2, ForecastRun};
pub use optimizer::{run_all_teams, run_experiment4, OptimizerRun};
pub use prior_boost::{prior_boost_world, run_experiment3, PriorBoostRun};

/// Seed of world `index` in a run.
pub fn world_seed(cfg: &ExperimentConfig, index: usize) -> u64 {
    seed::derive(cfg.seed, &[tag::WORLD, index as u64])
}

/// `f(0..n)` in index order, on `cfg.workers` threads.
pub fn par_map<T, F>(cfg: &ExperimentConfig, n: usize, f: F) -> Result<Vec<T>, LabError>
where
    T: Send,
    F: Fn(usize) -> Result<T, LabError> + Sync + Send,
{
    if cfg.workers <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(&f).collect())
}

/// Persists a world's ground truth and both seasons next to the results.
pub fn add_truth(report: &mut Report, world: &World, index: usize) {
    let dir = format!("truth/world_{index:02}");
    let truth = serde_json::json!({
        "world_seed": world.seed,
        "team_ids": world.team_ids(),
        "parameters": world.truth,
    });
    report.artifact(format!("{dir}/truth.json"), serde_json::to_string_pretty(&truth).expect("truth serializes") + "\n");
    for (name, season) in [("history", &world.history), ("current", &world.current)] {
        report.artifact(format!("{dir}/{name}_fixtures.csv"), csv_string(|w| write_fixtures(w, &world.league, &season.schedule)));
        report.artifact(
            format!("{dir}/{name}_results.csv"),
            csv_string(|w| write_results(w, &world.league, &season.schedule, &season.state())),
        );
        report.artifact(format!("{dir}/{name}_tactics.csv"), csv_string(|w| write_tactics(w, &world.league, &season.records, world.catalog)));
    }
}
