//! Fitting pipeline shared by the experiments: result-based strengths, then
//! the tactic-aware classifier on top of them.

use season_core::league::League;
use season_core::outcome::{
    encode, fit_strengths, train_classifier, FeatureLayout, FitConfig, FittedStrengths, MatchContext, Predictor,
    PriorFeatures, TacticCatalog, TrainingConfig, TrainingExample,
};

use crate::config::ExperimentConfig;
use crate::world::MatchRecord;
use crate::LabError;

pub fn fit_config(cfg: &ExperimentConfig) -> FitConfig {
    FitConfig { iterations: cfg.fit_iterations, ..FitConfig::default() }
}

pub fn training_config(cfg: &ExperimentConfig, seed: u64) -> TrainingConfig {
    TrainingConfig { epochs: cfg.classifier_epochs, learning_rate: cfg.learning_rate, l2: cfg.l2, seed }
}

pub fn fit_strength_model(
    league: &League,
    records: &[MatchRecord],
    cfg: &ExperimentConfig,
) -> Result<FittedStrengths, LabError> {
    let results: Vec<_> = records.iter().map(|r| (r.fixture, r.outcome)).collect();
    Ok(fit_strengths(league, &results, &fit_config(cfg))?)
}

/// One example per record. `prior` supplies the weight features when the
/// layout asks for them.
pub fn training_examples(
    rated: &League,
    catalog: TacticCatalog,
    records: &[MatchRecord],
    layout: &FeatureLayout,
    prior: impl Fn(usize, &MatchRecord) -> Option<PriorFeatures>,
) -> Result<Vec<TrainingExample>, LabError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let ctx = MatchContext {
                home: rated.team(r.fixture.home)?,
                away: rated.team(r.fixture.away)?,
                home_tactic: catalog.pair(r.home_pair)?,
                away_tactic: catalog.pair(r.away_pair)?,
                prior: prior(i, r),
            };
            Ok(TrainingExample { features: encode(&ctx, layout)?, label: r.outcome })
        })
        .collect()
}

/// Strengths fitted on `records`, then a classifier without weight
/// features trained on the same records.
pub fn fit_predictor(
    league: &League,
    catalog: TacticCatalog,
    records: &[MatchRecord],
    cfg: &ExperimentConfig,
    train_seed: u64,
) -> Result<Predictor, LabError> {
    let rated = fit_strength_model(league, records, cfg)?.apply(league);
    let layout = FeatureLayout::new(catalog, false);
    let data = training_examples(&rated, catalog, records, &layout, |_, _| None)?;
    let trained = train_classifier(layout, &data, &training_config(cfg, train_seed))?;
    Ok(Predictor::new(rated, trained.params))
}
