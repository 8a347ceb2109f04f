//! Weekly season forecasts: rank error (experiment 1) and the accuracy of
//! the weekly objective (experiment 2).
//!
//! Before each week the strengths and classifier are refitted on the history
//! season plus the results so far, and the rest of the season is simulated
//! with tactics marginalised uniformly. Week `w` in the curves means "after
//! `w` completed weeks", so week 0 is the pre-season forecast.

use std::fmt::Write as _;

use rand::Rng;

use season_core::objectives::{
    default_bands, map_objective, objective_accuracy_curve, objective_probabilities, BandSet, ObjectiveId,
};
use season_core::outcome::UniformTactics;
use season_core::season_sim::{
    expected_difference_curve, position_difference_curve, simulate_remaining, PositionDistribution, SimulationConfig,
};
use season_core::seed::{self, tag};

use super::{add_truth, par_map, world_seed};
use crate::config::ExperimentConfig;
use crate::metrics::{mean, spearman};
use crate::modeling::fit_predictor;
use crate::report::Report;
use crate::world::{MatchRecord, World};
use crate::LabError;

const RANDOM_OBJECTIVE: u64 = 0x0B1E;

#[derive(Clone, Debug, PartialEq)]
pub struct ForecastRun {
    pub world_seed: u64,
    pub final_ranks: Vec<usize>,
    /// Mean |actual − modal rank| per week.
    pub modal_error: Vec<f64>,
    /// Mean |actual − expected rank| per week.
    pub expected_error: Vec<f64>,
    /// Objective accuracy curves in percent; empty when the league size has
    /// no default objective bands.
    pub map_accuracy: Vec<f64>,
    pub random_accuracy: Vec<f64>,
    pub oracle_accuracy: f64,
}

/// Forecast distributions for weeks `0..=n_weeks`.
pub fn weekly_distributions(cfg: &ExperimentConfig, world: &World) -> Result<Vec<PositionDistribution>, LabError> {
    let season = &world.current;
    let full_state = season.state();
    let n_weeks = season.schedule.n_weeks();
    (0..=n_weeks)
        .map(|week| {
            let records: Vec<MatchRecord> =
                world.history.records.iter().chain(season.before_week(week)).copied().collect();
            let predictor =
                fit_predictor(&world.league, world.catalog, &records, cfg, seed::derive(world.seed, &[tag::TRAIN, week as u64]))?;
            let state = full_state.truncated(&season.schedule, week);
            let sim = SimulationConfig::new(cfg.replicates, seed::derive(world.seed, &[tag::REPLICATE, week as u64]))
                .with_workers(1);
            Ok(simulate_remaining(&season.schedule, &state, &UniformTactics::new(&predictor), &sim)?)
        })
        .collect()
}

fn weekly_objectives(dists: &[PositionDistribution], bands: &BandSet) -> Result<Vec<Vec<ObjectiveId>>, LabError> {
    dists
        .iter()
        .map(|d| {
            (0..d.n_teams())
                .map(|t| Ok(map_objective(&objective_probabilities(d, t, bands)?).id))
                .collect::<Result<Vec<_>, LabError>>()
        })
        .collect()
}

pub fn forecast_world(cfg: &ExperimentConfig, world: &World) -> Result<ForecastRun, LabError> {
    let final_ranks = world.current.final_table().ranks();
    let dists = weekly_distributions(cfg, world)?;
    let modal_error = position_difference_curve(&final_ranks, &dists)?;
    let expected_error = expected_difference_curve(&final_ranks, &dists)?;

    let (mut map_accuracy, mut random_accuracy, mut oracle_accuracy) = (vec![], vec![], f64::NAN);
    if let Ok(bands) = default_bands(cfg.n_teams) {
        map_accuracy = objective_accuracy_curve(&weekly_objectives(&dists, &bands)?, &final_ranks, &bands)?;
        let ids: Vec<ObjectiveId> = bands.bands().iter().map(|b| b.id).collect();
        let mut rng = seed::stream(world.seed, &[RANDOM_OBJECTIVE]);
        let random: Vec<Vec<ObjectiveId>> =
            dists.iter().map(|_| (0..cfg.n_teams).map(|_| ids[rng.gen_range(0..ids.len())]).collect()).collect();
        random_accuracy = objective_accuracy_curve(&random, &final_ranks, &bands)?;
        // Perfect foresight: each team targets the band it actually lands in;
        // relegated teams can only be given the last band.
        let oracle: Vec<ObjectiveId> =
            final_ranks.iter().map(|&r| bands.band_of_rank(r).unwrap_or(bands.last().id)).collect();
        oracle_accuracy = objective_accuracy_curve(&[oracle], &final_ranks, &bands)?[0];
    }
    Ok(ForecastRun {
        world_seed: world.seed,
        final_ranks,
        modal_error,
        expected_error,
        map_accuracy,
        random_accuracy,
        oracle_accuracy,
    })
}

fn run_all(cfg: &ExperimentConfig, report: &mut Report) -> Result<Vec<ForecastRun>, LabError> {
    let worlds = par_map(cfg, cfg.n_seeds, |s| {
        let world = World::generate(cfg, world_seed(cfg, s))?;
        let run = forecast_world(cfg, &world)?;
        Ok((world, run))
    })?;
    let mut runs = Vec::with_capacity(worlds.len());
    for (s, (world, run)) in worlds.into_iter().enumerate() {
        add_truth(report, &world, s);
        runs.push(run);
    }
    Ok(runs)
}

/// Element-wise mean of equally long curves.
fn mean_curve<'a>(curves: impl Iterator<Item = &'a Vec<f64>>) -> Vec<f64> {
    let curves: Vec<&Vec<f64>> = curves.collect();
    let len = curves.first().map_or(0, |c| c.len());
    (0..len).map(|k| mean(&curves.iter().map(|c| c[k]).collect::<Vec<_>>())).collect()
}

fn window_mean(curve: &[f64], range: std::ops::Range<usize>) -> f64 {
    let end = range.end.min(curve.len());
    mean(&curve[range.start.min(end)..end])
}

pub fn run_experiment1(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let mut report = Report::new("exp1", cfg);
    let runs = run_all(cfg, &mut report)?;
    let modal = mean_curve(runs.iter().map(|r| &r.modal_error));
    let expected = mean_curve(runs.iter().map(|r| &r.expected_error));
    let weeks: Vec<f64> = (0..modal.len()).map(|w| w as f64).collect();

    let mut curve = String::from("week,modal_rank_error,expected_rank_error\n");
    for w in 0..modal.len() {
        let _ = writeln!(curve, "{w},{},{}", modal[w], expected[w]);
    }
    let mut per_seed = String::from("world,week,modal_rank_error,expected_rank_error\n");
    for (s, r) in runs.iter().enumerate() {
        for w in 0..r.modal_error.len() {
            let _ = writeln!(per_seed, "{s},{w},{},{}", r.modal_error[w], r.expected_error[w]);
        }
    }
    report.artifact("exp1_curve.csv", curve);
    report.artifact("exp1_per_world.csv", per_seed);

    report.metric("n_worlds", runs.len());
    report.metric("early_modal_error", window_mean(&modal, 0..6));
    report.metric("late_modal_error", window_mean(&modal, 30..modal.len()));
    report.metric("final_modal_error", *modal.last().unwrap_or(&f64::NAN));
    report.metric("spearman_week_modal_error", spearman(&weeks, &modal));
    report.metric("early_expected_error", window_mean(&expected, 0..6));
    report.metric("late_expected_error", window_mean(&expected, 30..expected.len()));
    report.metric("spearman_week_expected_error", spearman(&weeks, &expected));
    Ok(report)
}

pub fn run_experiment2(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    default_bands(cfg.n_teams)?;
    let mut report = Report::new("exp2", cfg);
    let runs = run_all(cfg, &mut report)?;
    let map = mean_curve(runs.iter().map(|r| &r.map_accuracy));
    let random = mean_curve(runs.iter().map(|r| &r.random_accuracy));
    let oracle = mean(&runs.iter().map(|r| r.oracle_accuracy).collect::<Vec<_>>());

    let mut curve = String::from("week,map_accuracy,random_accuracy,oracle_accuracy\n");
    for w in 0..map.len() {
        let _ = writeln!(curve, "{w},{},{},{oracle}", map[w], random[w]);
    }
    let mut per_seed = String::from("world,week,map_accuracy,random_accuracy\n");
    for (s, r) in runs.iter().enumerate() {
        for w in 0..r.map_accuracy.len() {
            let _ = writeln!(per_seed, "{s},{w},{},{}", r.map_accuracy[w], r.random_accuracy[w]);
        }
    }
    report.artifact("exp2_accuracy.csv", curve);
    report.artifact("exp2_per_world.csv", per_seed);

    let all_points: Vec<f64> = runs.iter().flat_map(|r| r.map_accuracy.iter().copied()).collect();
    report.metric("n_worlds", runs.len());
    report.metric("max_map_accuracy", all_points.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    report.metric("mean_map_accuracy", mean(&map));
    report.metric("mean_random_accuracy", mean(&random));
    report.metric("first_week_map_accuracy", *map.first().unwrap_or(&f64::NAN));
    report.metric("last_week_map_accuracy", *map.last().unwrap_or(&f64::NAN));
    report.metric("oracle_accuracy", oracle);
    report.metric(
        "worlds_map_beats_random",
        runs.iter().filter(|r| mean(&r.map_accuracy) > mean(&r.random_accuracy)).count(),
    );
    Ok(report)
}
