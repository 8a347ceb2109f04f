use serde::{Deserialize, Serialize};

use super::{MatchContext, ModelError, TacticCatalog, TacticPair};

/// Weights of the tactic pairs in play, taken from a weight matrix:
/// `home_vs_away` is w[home pair][away pair] and `away_vs_home` the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorFeatures {
    pub home_vs_away: f64,
    pub away_vs_home: f64,
}

impl PriorFeatures {
    pub fn swapped(self) -> Self {
        PriorFeatures { home_vs_away: self.away_vs_home, away_vs_home: self.home_vs_away }
    }
}

/// Layout of one side's feature view.
///
/// A view is written from the perspective of one team ("own") against the
/// other ("opp"):
///
/// ```text
/// [own style one-hot | own formation one-hot | opp style one-hot | opp formation one-hot |
///  own attack - opp defence | opp attack - own defence | (w own-vs-opp | w opp-vs-own)]
/// ```
///
/// The home view and the away view of a match are the same layout filled
/// from opposite perspectives, which is what makes the classifier's
/// home/away symmetry hold by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub catalog: TacticCatalog,
    pub prior: bool,
}

impl FeatureLayout {
    pub fn new(catalog: TacticCatalog, prior: bool) -> Self {
        FeatureLayout { catalog, prior }
    }

    fn block(&self) -> usize {
        self.catalog.n_styles + self.catalog.n_formations
    }

    pub fn own_diff(&self) -> usize {
        2 * self.block()
    }

    pub fn opp_diff(&self) -> usize {
        2 * self.block() + 1
    }

    pub fn own_weight(&self) -> Option<usize> {
        self.prior.then(|| 2 * self.block() + 2)
    }

    pub fn opp_weight(&self) -> Option<usize> {
        self.prior.then(|| 2 * self.block() + 3)
    }

    /// Length of one side's view.
    pub fn len(&self) -> usize {
        2 * self.block() + if self.prior { 4 } else { 2 }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn fill_tactic(&self, view: &mut [f64], offset: usize, t: TacticPair) {
        view[offset + t.style] = 1.0;
        view[offset + self.catalog.n_styles + t.formation] = 1.0;
    }
}

/// A match turned into the two side views plus the home-advantage scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedMatch {
    pub home_view: Vec<f64>,
    pub away_view: Vec<f64>,
    pub home_advantage: f64,
}

pub fn encode(ctx: &MatchContext<'_>, layout: &FeatureLayout) -> Result<EncodedMatch, ModelError> {
    if ctx.home.id == ctx.away.id {
        return Err(ModelError::SameTeam(ctx.home.id.clone()));
    }
    layout.catalog.check(ctx.home_tactic)?;
    layout.catalog.check(ctx.away_tactic)?;
    let block = layout.catalog.n_styles + layout.catalog.n_formations;
    let home_diff = ctx.home.attack - ctx.away.defence;
    let away_diff = ctx.away.attack - ctx.home.defence;

    let mut home_view = vec![0.0; layout.len()];
    layout.fill_tactic(&mut home_view, 0, ctx.home_tactic);
    layout.fill_tactic(&mut home_view, block, ctx.away_tactic);
    home_view[layout.own_diff()] = home_diff;
    home_view[layout.opp_diff()] = away_diff;

    let mut away_view = vec![0.0; layout.len()];
    layout.fill_tactic(&mut away_view, 0, ctx.away_tactic);
    layout.fill_tactic(&mut away_view, block, ctx.home_tactic);
    away_view[layout.own_diff()] = away_diff;
    away_view[layout.opp_diff()] = home_diff;

    if let (Some(own), Some(opp)) = (layout.own_weight(), layout.opp_weight()) {
        // Without weights a match looks like one with no evidence at all.
        let prior = ctx.prior.unwrap_or(PriorFeatures { home_vs_away: 1.0, away_vs_home: 1.0 });
        home_view[own] = prior.home_vs_away;
        home_view[opp] = prior.away_vs_home;
        away_view[own] = prior.away_vs_home;
        away_view[opp] = prior.home_vs_away;
    }

    Ok(EncodedMatch { home_view, away_view, home_advantage: ctx.home.home_advantage })
}
