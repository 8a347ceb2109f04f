//! Does the weight matrix help prediction? (experiment 3)
//!
//! Two classifiers are trained on the history season: one on strengths and
//! tactics alone, one that also sees the two weight-matrix entries of the
//! match. Weights are league-wide, built from every game played before the
//! match's week, and carried over from history into the current season.
//! Both arms then predict every current-season match from its real tactics.

use std::fmt::Write as _;

use season_core::outcome::{encode, predict_encoded, train_classifier, FeatureLayout, MatchContext, PriorFeatures};
use season_core::prior::{init_weights, observations_from_game, PriorKnowledge, WeightMatrix};
use season_core::seed::{self, tag};

use super::{add_truth, par_map, world_seed};
use crate::config::ExperimentConfig;
use crate::metrics::{accuracy, mean, sign_test_p, weighted_scores, WeightedScores};
use crate::modeling::{fit_strength_model, training_config, training_examples};
use crate::report::Report;
use crate::world::{MatchRecord, Season, World};
use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArmScores {
    pub accuracy: f64,
    pub weighted: WeightedScores,
    /// Mean negative log-likelihood of the realised outcomes.
    pub log_loss: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriorBoostRun {
    pub world_seed: u64,
    pub without: ArmScores,
    pub with: ArmScores,
}

/// Weight features for every record of `season`, each computed from the
/// evidence before its week; `knowledge` is advanced through the season.
fn season_features(season: &Season, knowledge: &mut PriorKnowledge) -> Result<Vec<PriorFeatures>, LabError> {
    let mut out = Vec::with_capacity(season.records.len());
    let mut snapshot: Option<(usize, WeightMatrix)> = None;
    let mut pending: Vec<&MatchRecord> = Vec::new();
    for r in &season.records {
        let week = r.fixture.week;
        if snapshot.as_ref().map_or(true, |(w, _)| *w != week) {
            for p in pending.drain(..) {
                for obs in observations_from_game(p.home_pair, p.away_pair, p.outcome, None) {
                    knowledge.record(&obs)?;
                }
            }
            snapshot = Some((week, knowledge.weights()));
        }
        let (_, w) = snapshot.as_ref().expect("snapshot was just taken");
        out.push(w.features(r.home_pair, r.away_pair)?);
        pending.push(r);
    }
    for p in pending {
        for obs in observations_from_game(p.home_pair, p.away_pair, p.outcome, None) {
            knowledge.record(&obs)?;
        }
    }
    Ok(out)
}

pub fn prior_boost_world(cfg: &ExperimentConfig, world: &World) -> Result<PriorBoostRun, LabError> {
    let rated = fit_strength_model(&world.league, &world.history.records, cfg)?.apply(&world.league);
    let mut knowledge = PriorKnowledge::new(init_weights(world.catalog.n_pairs())?, cfg.draw_credit);
    let history_features = season_features(&world.history, &mut knowledge)?;
    let current_features = season_features(&world.current, &mut knowledge)?;

    let train_seed = seed::derive(world.seed, &[tag::TRAIN]);
    let score = |with_prior: bool| -> Result<ArmScores, LabError> {
        let layout = FeatureLayout::new(world.catalog, with_prior);
        let data = training_examples(&rated, world.catalog, &world.history.records, &layout, |i, _| {
            with_prior.then(|| history_features[i])
        })?;
        let params = train_classifier(layout, &data, &training_config(cfg, train_seed))?.params;
        let mut predicted = Vec::with_capacity(world.current.records.len());
        let mut actual = Vec::with_capacity(world.current.records.len());
        let mut loss = 0.0;
        for (r, feats) in world.current.records.iter().zip(&current_features) {
            let ctx = MatchContext {
                home: rated.team(r.fixture.home)?,
                away: rated.team(r.fixture.away)?,
                home_tactic: world.catalog.pair(r.home_pair)?,
                away_tactic: world.catalog.pair(r.away_pair)?,
                prior: with_prior.then_some(*feats),
            };
            let d = predict_encoded(&params, &encode(&ctx, &layout)?)?;
            loss -= d.prob(r.outcome).ln();
            predicted.push(d.argmax());
            actual.push(r.outcome);
        }
        Ok(ArmScores {
            accuracy: accuracy(&predicted, &actual),
            weighted: weighted_scores(&predicted, &actual),
            log_loss: loss / actual.len() as f64,
        })
    };
    Ok(PriorBoostRun { world_seed: world.seed, without: score(false)?, with: score(true)? })
}

/// The same worlds with every tactic effect switched off.
pub fn without_tactic_effects(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig { tactic_main_effect: 0.0, tactic_interaction: 0.0, ..cfg.clone() }
}

fn runs(cfg: &ExperimentConfig, report: Option<&mut Report>) -> Result<Vec<PriorBoostRun>, LabError> {
    let worlds = par_map(cfg, cfg.n_seeds, |s| {
        let world = World::generate(cfg, world_seed(cfg, s))?;
        let run = prior_boost_world(cfg, &world)?;
        Ok((world, run))
    })?;
    let mut out = Vec::with_capacity(worlds.len());
    let mut report = report;
    for (s, (world, run)) in worlds.into_iter().enumerate() {
        if let Some(r) = report.as_deref_mut() {
            add_truth(r, &world, s);
        }
        out.push(run);
    }
    Ok(out)
}

fn table(runs: &[PriorBoostRun]) -> String {
    let mut s = String::from("world,arm,accuracy,weighted_precision,weighted_recall,weighted_f1,log_loss\n");
    for (i, r) in runs.iter().enumerate() {
        for (arm, a) in [("without_weights", r.without), ("with_weights", r.with)] {
            let _ = writeln!(s, "{i},{arm},{},{},{},{},{}", a.accuracy, a.weighted.precision, a.weighted.recall, a.weighted.f1, a.log_loss);
        }
    }
    s
}

pub fn run_experiment3(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let mut report = Report::new("exp3", cfg);
    let effect = runs(cfg, Some(&mut report))?;
    let null = runs(&without_tactic_effects(cfg), None)?;
    report.artifact("exp3_metrics.csv", table(&effect));
    report.artifact("exp3_zero_effect_metrics.csv", table(&null));

    let wins = effect.iter().filter(|r| r.with.accuracy > r.without.accuracy).count();
    let avg = |rs: &[PriorBoostRun], f: fn(&PriorBoostRun) -> f64| mean(&rs.iter().map(f).collect::<Vec<_>>());
    report.metric("n_worlds", effect.len());
    report.metric("accuracy_without_weights", avg(&effect, |r| r.without.accuracy));
    report.metric("accuracy_with_weights", avg(&effect, |r| r.with.accuracy));
    report.metric("f1_without_weights", avg(&effect, |r| r.without.weighted.f1));
    report.metric("f1_with_weights", avg(&effect, |r| r.with.weighted.f1));
    report.metric("precision_with_weights", avg(&effect, |r| r.with.weighted.precision));
    report.metric("recall_with_weights", avg(&effect, |r| r.with.weighted.recall));
    report.metric("log_loss_without_weights", avg(&effect, |r| r.without.log_loss));
    report.metric("log_loss_with_weights", avg(&effect, |r| r.with.log_loss));
    report.metric("worlds_with_weights_better", wins);
    report.metric("sign_test_p", sign_test_p(wins, effect.len()));
    report.metric("zero_effect_accuracy_without_weights", avg(&null, |r| r.without.accuracy));
    report.metric("zero_effect_accuracy_with_weights", avg(&null, |r| r.with.accuracy));
    report.metric("zero_effect_mean_difference", avg(&null, |r| r.with.accuracy - r.without.accuracy));
    Ok(report)
}
