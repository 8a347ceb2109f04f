//! Match outcome probabilities from team strengths and tactic choices.

mod classifier;
mod features;
mod params_io;
mod predictor;
mod strengths;

pub use classifier::{
    mean_loss, mean_loss_gradient, predict_encoded, train_classifier, ClassifierParams, TrainedClassifier,
    TrainingConfig, TrainingExample,
};
pub use features::{encode, EncodedMatch, FeatureLayout, PriorFeatures};
pub use params_io::{read_params, write_params};
pub use predictor::{predict_outcome, FixturePredictor, Predictor, TacticPredictor, UniformTactics};
pub use strengths::{fit_strengths, FitConfig, FittedStrengths};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::league::{Outcome, Side, Team};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("tactic (style {style}, formation {formation}) is outside a {n_styles}x{n_formations} catalog")]
    TacticOutOfRange { style: usize, formation: usize, n_styles: usize, n_formations: usize },
    #[error("tactic pair index {0} is outside the catalog")]
    PairOutOfRange(usize),
    #[error("the tactic catalog must have at least one style and one formation")]
    EmptyCatalog,
    #[error("unknown team {0:?}")]
    UnknownTeam(String),
    #[error("a match needs two distinct teams, got {0:?} twice")]
    SameTeam(String),
    #[error("no training data")]
    NoData,
    #[error("training data has no {0:?} examples")]
    MissingClass(Outcome),
    #[error("no results for teams: {}", .0.join(", "))]
    TeamsWithoutResults(Vec<String>),
    #[error("feature vector has {found} entries, parameters expect {expected}")]
    FeatureMismatch { expected: usize, found: usize },
    #[error("invalid probabilities ({0}, {1}, {2})")]
    InvalidDistribution(f64, f64, f64),
    #[error("parameter file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Size of the style and formation catalogs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TacticCatalog {
    pub n_styles: usize,
    pub n_formations: usize,
}

impl TacticCatalog {
    pub fn new(n_styles: usize, n_formations: usize) -> Result<Self, ModelError> {
        if n_styles == 0 || n_formations == 0 {
            return Err(ModelError::EmptyCatalog);
        }
        Ok(TacticCatalog { n_styles, n_formations })
    }

    /// Number of style/formation pairs.
    pub fn n_pairs(&self) -> usize {
        self.n_styles * self.n_formations
    }

    pub fn pair(&self, index: usize) -> Result<TacticPair, ModelError> {
        if index >= self.n_pairs() {
            return Err(ModelError::PairOutOfRange(index));
        }
        Ok(TacticPair { style: index / self.n_formations, formation: index % self.n_formations })
    }

    pub fn index(&self, t: TacticPair) -> Result<usize, ModelError> {
        self.check(t)?;
        Ok(t.style * self.n_formations + t.formation)
    }

    pub fn check(&self, t: TacticPair) -> Result<(), ModelError> {
        if t.style >= self.n_styles || t.formation >= self.n_formations {
            return Err(ModelError::TacticOutOfRange {
                style: t.style,
                formation: t.formation,
                n_styles: self.n_styles,
                n_formations: self.n_formations,
            });
        }
        Ok(())
    }

    pub fn pairs(&self) -> impl Iterator<Item = TacticPair> + '_ {
        (0..self.n_pairs()).map(|i| TacticPair { style: i / self.n_formations, formation: i % self.n_formations })
    }
}

/// A style and a formation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TacticPair {
    pub style: usize,
    pub formation: usize,
}

/// Everything the classifier sees about one match.
#[derive(Clone, Copy, Debug)]
pub struct MatchContext<'a> {
    pub home: &'a Team,
    pub away: &'a Team,
    pub home_tactic: TacticPair,
    pub away_tactic: TacticPair,
    /// Tactic-pair weights for the two sides, when the model uses them.
    pub prior: Option<PriorFeatures>,
}

impl<'a> MatchContext<'a> {
    /// The same match with the roles of the two teams exchanged.
    pub fn swapped(&self) -> MatchContext<'a> {
        MatchContext {
            home: self.away,
            away: self.home,
            home_tactic: self.away_tactic,
            away_tactic: self.home_tactic,
            prior: self.prior.map(PriorFeatures::swapped),
        }
    }
}

/// Probabilities of a home win, a draw and an away win.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    pub p_home: f64,
    pub p_draw: f64,
    pub p_away: f64,
}

impl OutcomeDistribution {
    pub const UNIFORM: OutcomeDistribution =
        OutcomeDistribution { p_home: 1.0 / 3.0, p_draw: 1.0 / 3.0, p_away: 1.0 / 3.0 };

    pub fn new(p_home: f64, p_draw: f64, p_away: f64) -> Result<Self, ModelError> {
        let ok = [p_home, p_draw, p_away].iter().all(|p| (0.0..=1.0).contains(p))
            && (p_home + p_draw + p_away - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(ModelError::InvalidDistribution(p_home, p_draw, p_away));
        }
        Ok(OutcomeDistribution { p_home, p_draw, p_away })
    }

    /// Certain outcome.
    pub fn certain(outcome: Outcome) -> Self {
        let mut p = [0.0; 3];
        p[outcome.index()] = 1.0;
        OutcomeDistribution { p_home: p[0], p_draw: p[1], p_away: p[2] }
    }

    /// Softmax of class scores ordered (home, draw, away).
    pub fn from_scores(scores: [f64; 3]) -> Self {
        let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e = scores.map(|s| (s - m).exp());
        let z: f64 = e.iter().sum();
        OutcomeDistribution { p_home: e[0] / z, p_draw: e[1] / z, p_away: e[2] / z }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_home, self.p_draw, self.p_away]
    }

    pub fn prob(&self, outcome: Outcome) -> f64 {
        self.as_array()[outcome.index()]
    }

    /// Probability that `side` wins.
    pub fn win(&self, side: Side) -> f64 {
        match side {
            Side::Home => self.p_home,
            Side::Away => self.p_away,
        }
    }

    /// Probability that `side` loses.
    pub fn loss(&self, side: Side) -> f64 {
        self.win(side.opposite())
    }

    /// Most likely outcome; ties go to the earlier of home, draw, away.
    pub fn argmax(&self) -> Outcome {
        let p = self.as_array();
        let mut best = 0;
        for k in 1..3 {
            if p[k] > p[best] {
                best = k;
            }
        }
        Outcome::ALL[best]
    }

    /// Sample with a single uniform draw in [0, 1).
    pub fn sample_with(&self, u: f64) -> Outcome {
        if u < self.p_home {
            Outcome::HomeWin
        } else if u < self.p_home + self.p_draw {
            Outcome::Draw
        } else {
            Outcome::AwayWin
        }
    }

    /// Weighted average of distributions; weights must sum to one.
    pub fn mixture<I: IntoIterator<Item = (f64, OutcomeDistribution)>>(parts: I) -> Self {
        let mut acc = [0.0; 3];
        for (w, d) in parts {
            for (a, p) in acc.iter_mut().zip(d.as_array()) {
                *a += w * p;
            }
        }
        let z: f64 = acc.iter().sum();
        OutcomeDistribution { p_home: acc[0] / z, p_draw: acc[1] / z, p_away: acc[2] / z }
    }
}
