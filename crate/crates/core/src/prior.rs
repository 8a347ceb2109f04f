//! Tactic-pair effectiveness weights learnt from played and observed games.
//!
//! A cell `w[x][y]` scores our style/formation pair `x` against an opposing
//! pair `y` by averaging two win rates: the one in games we played and the
//! one in games we watched. A source with no games drops out of the average;
//! with no games at all the cell keeps its initial value.

use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::league::{Outcome, Side};
use crate::outcome::PriorFeatures;
use crate::season_sim::TeamResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("a weight matrix needs at least one tactic pair")]
    Empty,
    #[error("pair index {index} out of range for {n_pairs} pairs")]
    PairOutOfRange { index: usize, n_pairs: usize },
    #[error("expected {expected} entries, got {found}")]
    Shape { expected: usize, found: usize },
    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Played,
    Observed,
}

/// One team's view of one game.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GameObservation {
    pub source: Source,
    pub our_pair: usize,
    pub opp_pair: usize,
    pub result: TeamResult,
}

/// Both perspectives of a finished game. `ours` marks the side the
/// recording team played, if any; that view is `Played` and the other is
/// `Observed`. Games between two other teams give two `Observed` views.
pub fn observations_from_game(
    home_pair: usize,
    away_pair: usize,
    outcome: Outcome,
    ours: Option<Side>,
) -> [GameObservation; 2] {
    let view = |side: Side| {
        let (our_pair, opp_pair) = match side {
            Side::Home => (home_pair, away_pair),
            Side::Away => (away_pair, home_pair),
        };
        GameObservation {
            source: if ours == Some(side) { Source::Played } else { Source::Observed },
            our_pair,
            opp_pair,
            result: TeamResult::of(outcome, side),
        }
    };
    [view(Side::Home), view(Side::Away)]
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub played_games: u64,
    pub played_wins: u64,
    pub played_draws: u64,
    pub observed_games: u64,
    pub observed_wins: u64,
    pub observed_draws: u64,
}

impl CellCounts {
    pub fn has_evidence(&self) -> bool {
        self.played_games + self.observed_games > 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvidenceCounts {
    n_pairs: usize,
    cells: Vec<CellCounts>,
}

impl EvidenceCounts {
    pub fn new(n_pairs: usize) -> Result<Self, PriorError> {
        if n_pairs == 0 {
            return Err(PriorError::Empty);
        }
        Ok(EvidenceCounts { n_pairs, cells: vec![CellCounts::default(); n_pairs * n_pairs] })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    fn check(&self, index: usize) -> Result<(), PriorError> {
        if index < self.n_pairs {
            Ok(())
        } else {
            Err(PriorError::PairOutOfRange { index, n_pairs: self.n_pairs })
        }
    }

    pub fn cell(&self, x: usize, y: usize) -> Result<&CellCounts, PriorError> {
        self.check(x)?;
        self.check(y)?;
        Ok(&self.cells[x * self.n_pairs + y])
    }

    /// In-place form of [`record_observation`].
    pub fn record(&mut self, obs: &GameObservation) -> Result<(), PriorError> {
        self.check(obs.our_pair)?;
        self.check(obs.opp_pair)?;
        let c = &mut self.cells[obs.our_pair * self.n_pairs + obs.opp_pair];
        let (games, wins, draws) = match obs.source {
            Source::Played => (&mut c.played_games, &mut c.played_wins, &mut c.played_draws),
            Source::Observed => (&mut c.observed_games, &mut c.observed_wins, &mut c.observed_draws),
        };
        *games += 1;
        match obs.result {
            TeamResult::Win => *wins += 1,
            TeamResult::Draw => *draws += 1,
            TeamResult::Loss => {}
        }
        Ok(())
    }
}

pub fn record_observation(counts: &EvidenceCounts, obs: &GameObservation) -> Result<EvidenceCounts, PriorError> {
    let mut next = counts.clone();
    next.record(obs)?;
    Ok(next)
}

/// How a draw enters the win rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawCredit {
    /// A draw is a game without a win.
    #[default]
    None,
    Half,
}

/// Weight of one cell. `fallback` is returned when neither source has
/// games (1 for a fresh matrix, the carried-over value otherwise).
pub fn compute_weight(cell: &CellCounts, credit: DrawCredit, fallback: f64) -> f64 {
    let rate = |games: u64, wins: u64, draws: u64| {
        (games > 0).then(|| {
            let credit = match credit {
                DrawCredit::None => 0.0,
                DrawCredit::Half => 0.5 * draws as f64,
            };
            (wins as f64 + credit) / games as f64
        })
    };
    match (
        rate(cell.played_games, cell.played_wins, cell.played_draws),
        rate(cell.observed_games, cell.observed_wins, cell.observed_draws),
    ) {
        (Some(p), Some(o)) => (p + o) / 2.0,
        (Some(r), None) | (None, Some(r)) => r,
        (None, None) => fallback,
    }
}

/// Square matrix of non-negative weights, row = our pair.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    n_pairs: usize,
    w: Vec<f64>,
}

pub fn init_weights(n_pairs: usize) -> Result<WeightMatrix, PriorError> {
    WeightMatrix::from_entries(n_pairs, vec![1.0; n_pairs * n_pairs])
}

impl WeightMatrix {
    /// Row-major entries, e.g. a matrix carried over from last season.
    pub fn from_entries(n_pairs: usize, w: Vec<f64>) -> Result<Self, PriorError> {
        if n_pairs == 0 {
            return Err(PriorError::Empty);
        }
        if w.len() != n_pairs * n_pairs {
            return Err(PriorError::Shape { expected: n_pairs * n_pairs, found: w.len() });
        }
        if let Some(&bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(PriorError::InvalidWeight(bad));
        }
        Ok(WeightMatrix { n_pairs, w })
    }

    pub fn n_pairs(&self) -> usize {
        self.n_pairs
    }

    pub fn entries(&self) -> &[f64] {
        &self.w
    }

    pub fn get(&self, x: usize, y: usize) -> Result<f64, PriorError> {
        for index in [x, y] {
            if index >= self.n_pairs {
                return Err(PriorError::PairOutOfRange { index, n_pairs: self.n_pairs });
            }
        }
        Ok(self.w[x * self.n_pairs + y])
    }

    /// Classifier inputs for a match between the two pairs.
    pub fn features(&self, home_pair: usize, away_pair: usize) -> Result<PriorFeatures, PriorError> {
        Ok(PriorFeatures { home_vs_away: self.get(home_pair, away_pair)?, away_vs_home: self.get(away_pair, home_pair)? })
    }
}

/// Weights from the evidence, falling back to `init` where a cell is empty.
pub fn compute_weights(counts: &EvidenceCounts, init: &WeightMatrix, credit: DrawCredit) -> Result<WeightMatrix, PriorError> {
    if counts.n_pairs != init.n_pairs {
        return Err(PriorError::Shape { expected: init.n_pairs, found: counts.n_pairs });
    }
    let w = counts.cells.iter().zip(&init.w).map(|(c, &f)| compute_weight(c, credit, f)).collect();
    WeightMatrix::from_entries(counts.n_pairs, w)
}

/// Evidence plus the matrix it refines.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorKnowledge {
    pub init: WeightMatrix,
    pub counts: EvidenceCounts,
    pub draw_credit: DrawCredit,
}

impl PriorKnowledge {
    pub fn new(init: WeightMatrix, draw_credit: DrawCredit) -> Self {
        let counts = EvidenceCounts::new(init.n_pairs).expect("matrix is non-empty");
        PriorKnowledge { init, counts, draw_credit }
    }

    pub fn record(&mut self, obs: &GameObservation) -> Result<(), PriorError> {
        self.counts.record(obs)
    }

    pub fn weights(&self) -> WeightMatrix {
        compute_weights(&self.counts, &self.init, self.draw_credit).expect("shapes agree by construction")
    }
}

/// Scalar payoffs of our actions (indexed by pair) against opposing pair
/// `y`, each scaled by its weight.
pub fn apply_weights(payoffs: &[f64], weights: &WeightMatrix, y: usize) -> Result<Vec<f64>, PriorError> {
    if payoffs.len() != weights.n_pairs {
        return Err(PriorError::Shape { expected: weights.n_pairs, found: payoffs.len() });
    }
    payoffs.iter().enumerate().map(|(x, v)| Ok(v * weights.get(x, y)?)).collect()
}

pub const WEIGHTS_HEADER: &str = "our_pair,opp_pair,weight,played_games,played_wins,observed_games,observed_wins";

pub fn write_weights_csv<W: io::Write>(mut out: W, weights: &WeightMatrix, counts: &EvidenceCounts) -> io::Result<()> {
    if weights.n_pairs != counts.n_pairs {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "weights and counts differ in size"));
    }
    writeln!(out, "{WEIGHTS_HEADER}")?;
    let n = weights.n_pairs;
    for x in 0..n {
        for y in 0..n {
            let c = &counts.cells[x * n + y];
            writeln!(
                out,
                "{x},{y},{},{},{},{},{}",
                weights.w[x * n + y],
                c.played_games,
                c.played_wins,
                c.observed_games,
                c.observed_wins
            )?;
        }
    }
    Ok(())
}

/// Reads the `weight` column of a weights CSV back into a matrix, e.g. to
/// carry it into the next season. Every cell must appear exactly once.
pub fn read_weights_csv<R: io::Read>(input: R) -> Result<WeightMatrix, PriorError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let parse_err = |line: usize, message: String| PriorError::Parse { line, message };
    let header = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != WEIGHTS_HEADER {
        return Err(parse_err(1, format!("expected header `{WEIGHTS_HEADER}`")));
    }
    let mut cells = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        let idx = |k: usize| rec[k].trim().parse::<usize>().map_err(|_| parse_err(line, format!("bad pair index {:?}", &rec[k])));
        let w = rec[2].trim().parse::<f64>().map_err(|_| parse_err(line, format!("bad weight {:?}", &rec[2])))?;
        cells.push((line, idx(0)?, idx(1)?, w));
    }
    let n = (cells.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != cells.len() {
        return Err(parse_err(0, format!("{} rows do not form a square matrix", cells.len())));
    }
    let mut w = vec![None; n * n];
    for (line, x, y, v) in cells {
        if x >= n || y >= n {
            return Err(parse_err(line, format!("pair ({x}, {y}) out of range for {n} pairs")));
        }
        if w[x * n + y].replace(v).is_some() {
            return Err(parse_err(line, format!("duplicate cell ({x}, {y})")));
        }
    }
    WeightMatrix::from_entries(n, w.into_iter().map(|v| v.expect("n*n distinct cells fill the matrix")).collect())
}
