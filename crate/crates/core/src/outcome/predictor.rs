use super::classifier::{predict_encoded, ClassifierParams};
use super::features::{encode, PriorFeatures};
use super::{MatchContext, ModelError, OutcomeDistribution, TacticCatalog, TacticPair};
use crate::league::{Fixture, League, TeamIdx};

/// Outcome probabilities for a scheduled fixture, tactics already settled
/// (fixed, marginalised, or irrelevant to the model).
pub trait FixturePredictor: Sync {
    fn predict(&self, fixture: &Fixture) -> Result<OutcomeDistribution, ModelError>;
}

impl<F> FixturePredictor for F
where
    F: Fn(&Fixture) -> OutcomeDistribution + Sync,
{
    fn predict(&self, fixture: &Fixture) -> Result<OutcomeDistribution, ModelError> {
        Ok(self(fixture))
    }
}

/// Outcome probabilities for a fixture under given tactic choices.
pub trait TacticPredictor: Sync {
    fn catalog(&self) -> TacticCatalog;

    fn predict_tactics(
        &self,
        fixture: &Fixture,
        home: TacticPair,
        away: TacticPair,
    ) -> Result<OutcomeDistribution, ModelError>;
}

/// Classifier probabilities for one match context.
pub fn predict_outcome(ctx: &MatchContext<'_>, params: &ClassifierParams) -> Result<OutcomeDistribution, ModelError> {
    predict_encoded(params, &encode(ctx, &params.layout)?)
}

/// A fitted classifier bound to the teams it was fitted for.
#[derive(Clone, Debug, PartialEq)]
pub struct Predictor {
    league: League,
    params: ClassifierParams,
}

impl Predictor {
    pub fn new(league: League, params: ClassifierParams) -> Self {
        Predictor { league, params }
    }

    pub fn league(&self) -> &League {
        &self.league
    }

    pub fn params(&self) -> &ClassifierParams {
        &self.params
    }

    pub fn catalog(&self) -> TacticCatalog {
        self.params.layout.catalog
    }

    pub fn predict_idx(
        &self,
        home: TeamIdx,
        away: TeamIdx,
        home_tactic: TacticPair,
        away_tactic: TacticPair,
        prior: Option<PriorFeatures>,
    ) -> Result<OutcomeDistribution, ModelError> {
        let lookup = |i: TeamIdx| self.league.team(i).map_err(|_| ModelError::UnknownTeam(format!("#{i}")));
        let ctx = MatchContext { home: lookup(home)?, away: lookup(away)?, home_tactic, away_tactic, prior };
        predict_outcome(&ctx, &self.params)
    }

    pub fn predict_by_id(
        &self,
        home: &str,
        away: &str,
        home_tactic: TacticPair,
        away_tactic: TacticPair,
        prior: Option<PriorFeatures>,
    ) -> Result<OutcomeDistribution, ModelError> {
        let lookup = |id: &str| self.league.index_of(id).map_err(|_| ModelError::UnknownTeam(id.to_string()));
        self.predict_idx(lookup(home)?, lookup(away)?, home_tactic, away_tactic, prior)
    }
}

impl TacticPredictor for Predictor {
    fn catalog(&self) -> TacticCatalog {
        self.params.layout.catalog
    }

    fn predict_tactics(
        &self,
        fixture: &Fixture,
        home: TacticPair,
        away: TacticPair,
    ) -> Result<OutcomeDistribution, ModelError> {
        self.predict_idx(fixture.home, fixture.away, home, away, None)
    }
}

/// Marginalises a [`TacticPredictor`] over each team's tactic distribution:
/// uniform over the catalog unless a per-team distribution is supplied.
pub struct UniformTactics<'a, P: ?Sized> {
    inner: &'a P,
    team_tactics: Option<&'a [Vec<f64>]>,
}

impl<'a, P: TacticPredictor + ?Sized> UniformTactics<'a, P> {
    pub fn new(inner: &'a P) -> Self {
        UniformTactics { inner, team_tactics: None }
    }

    /// `tactics[team][pair]` is the probability that `team` plays `pair`.
    pub fn with_team_tactics(inner: &'a P, tactics: &'a [Vec<f64>]) -> Self {
        UniformTactics { inner, team_tactics: Some(tactics) }
    }

    fn belief(&self, team: TeamIdx, n_pairs: usize) -> Vec<f64> {
        match self.team_tactics.and_then(|t| t.get(team)) {
            Some(b) if b.len() == n_pairs => b.clone(),
            _ => vec![1.0 / n_pairs as f64; n_pairs],
        }
    }
}

impl<'a, P: TacticPredictor + ?Sized> FixturePredictor for UniformTactics<'a, P> {
    fn predict(&self, fixture: &Fixture) -> Result<OutcomeDistribution, ModelError> {
        let catalog = self.inner.catalog();
        let n = catalog.n_pairs();
        let home_b = self.belief(fixture.home, n);
        let away_b = self.belief(fixture.away, n);
        let mut parts = Vec::with_capacity(n * n);
        for (i, &bh) in home_b.iter().enumerate() {
            for (j, &ba) in away_b.iter().enumerate() {
                if bh * ba > 0.0 {
                    let d = self.inner.predict_tactics(fixture, catalog.pair(i)?, catalog.pair(j)?)?;
                    parts.push((bh * ba, d));
                }
            }
        }
        Ok(OutcomeDistribution::mixture(parts))
    }
}
