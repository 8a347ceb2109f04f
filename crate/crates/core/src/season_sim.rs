//! Monte-Carlo simulation of the rest of a season.
//!
//! Each replicate samples every unplayed fixture once from its predicted
//! outcome distribution, adds the points to those already banked, and
//! ranks the table with a replicate-specific tie-break. Replicate `i` is a
//! pure function of the seed derived from `(base_seed, i)`, and replicates
//! are merged by adding integer counts, so the result does not depend on how
//! many threads run them or in which order.

use std::io;

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use thiserror::Error;

use crate::league::{
    points_for, rank_table, Fixture, LeagueError, Outcome, SeasonState, Schedule, Side, StandingsTable, TeamIdx,
};
use crate::outcome::{FixturePredictor, ModelError, OutcomeDistribution};
use crate::seed::{self, tag, SimRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Consistency(#[from] LeagueError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("team {0} is not in the distribution")]
    UnknownTeam(TeamIdx),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationConfig {
    pub n_replicates: usize,
    pub base_seed: u64,
    /// Worker threads; `None` uses the global pool, `Some(1)` runs inline.
    pub workers: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig { n_replicates: 100_000, base_seed: 0, workers: None }
    }
}

impl SimulationConfig {
    pub fn new(n_replicates: usize, base_seed: u64) -> Self {
        SimulationConfig { n_replicates, base_seed, workers: None }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n_replicates == 0 {
            return Err(SimError::Config("n_replicates must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(SimError::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seed of replicate `index` under `base_seed`.
pub fn replicate_seed(base_seed: u64, index: usize) -> u64 {
    seed::derive(base_seed, &[tag::REPLICATE, index as u64])
}

/// Finishing-position counts: `count(team, rank)` replicates ended with
/// `team` in `rank` (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionDistribution {
    n_teams: usize,
    n_replicates: u64,
    counts: Vec<u64>,
}

impl PositionDistribution {
    /// Build from a row-major `[team][rank]` count table. Each row must add
    /// up to `n_replicates`.
    pub fn from_counts(n_teams: usize, n_replicates: u64, counts: Vec<u64>) -> Result<Self, SimError> {
        if counts.len() != n_teams * n_teams || n_replicates == 0 {
            return Err(SimError::Config(format!("expected {n_teams}x{n_teams} counts over a positive replicate count")));
        }
        let d = PositionDistribution { n_teams, n_replicates, counts };
        if (0..n_teams).any(|t| d.row_counts(t).iter().sum::<u64>() != n_replicates) {
            return Err(SimError::Config("every team must finish somewhere in every replicate".into()));
        }
        Ok(d)
    }

    pub fn n_teams(&self) -> usize {
        self.n_teams
    }

    pub fn n_replicates(&self) -> u64 {
        self.n_replicates
    }

    pub fn count(&self, team: TeamIdx, rank: usize) -> u64 {
        self.counts[team * self.n_teams + rank - 1]
    }

    pub fn row_counts(&self, team: TeamIdx) -> &[u64] {
        &self.counts[team * self.n_teams..(team + 1) * self.n_teams]
    }

    pub fn prob(&self, team: TeamIdx, rank: usize) -> f64 {
        self.count(team, rank) as f64 / self.n_replicates as f64
    }

    /// `P(rank)` for ranks 1..=n, indexed from 0.
    pub fn row(&self, team: TeamIdx) -> Result<Vec<f64>, SimError> {
        if team >= self.n_teams {
            return Err(SimError::UnknownTeam(team));
        }
        Ok(self.row_counts(team).iter().map(|&c| c as f64 / self.n_replicates as f64).collect())
    }

    /// Every row and every column of the count table adds up to the number
    /// of replicates.
    pub fn is_doubly_stochastic(&self) -> bool {
        let n = self.n_teams;
        let rows = (0..n).all(|t| self.row_counts(t).iter().sum::<u64>() == self.n_replicates);
        let cols = (1..=n).all(|r| (0..n).map(|t| self.count(t, r)).sum::<u64>() == self.n_replicates);
        rows && cols
    }

    /// Most likely rank; ties go to the better rank.
    pub fn modal_rank(&self, team: TeamIdx) -> Result<usize, SimError> {
        if team >= self.n_teams {
            return Err(SimError::UnknownTeam(team));
        }
        let row = self.row_counts(team);
        let mut best = 0;
        for (i, &c) in row.iter().enumerate() {
            if c > row[best] {
                best = i;
            }
        }
        Ok(best + 1)
    }

    pub fn merge(&mut self, other: &PositionDistribution) {
        assert_eq!(self.n_teams, other.n_teams, "merging distributions of different leagues");
        self.n_replicates += other.n_replicates;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

/// Mean finishing rank of `team`.
pub fn expected_position(d: &PositionDistribution, team: TeamIdx) -> Result<f64, SimError> {
    Ok(d.row(team)?.iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum())
}

/// For each week's distribution, the mean over teams of
/// |actual rank - modal predicted rank|.
pub fn position_difference_curve(actual_ranks: &[usize], weekly: &[PositionDistribution]) -> Result<Vec<f64>, SimError> {
    difference_curve(actual_ranks, weekly, |d, t| Ok(d.modal_rank(t)? as f64))
}

/// As [`position_difference_curve`] but predicting with the expected rank.
pub fn expected_difference_curve(actual_ranks: &[usize], weekly: &[PositionDistribution]) -> Result<Vec<f64>, SimError> {
    difference_curve(actual_ranks, weekly, expected_position)
}

fn difference_curve(
    actual: &[usize],
    weekly: &[PositionDistribution],
    predicted: impl Fn(&PositionDistribution, TeamIdx) -> Result<f64, SimError>,
) -> Result<Vec<f64>, SimError> {
    weekly
        .iter()
        .map(|d| {
            let total = actual
                .iter()
                .enumerate()
                .map(|(t, &rank)| Ok((rank as f64 - predicted(d, t)?).abs()))
                .sum::<Result<f64, SimError>>()?;
            Ok(total / actual.len() as f64)
        })
        .collect()
}

/// Rank counts conditioned on each team's result in one probed week:
/// `count(team, result, rank)` with results seen from the team's side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeekProbe {
    pub week: usize,
    n_teams: usize,
    counts: Vec<u64>,
}

/// Result from one team's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TeamResult {
    Win = 0,
    Draw = 1,
    Loss = 2,
}

impl TeamResult {
    pub fn of(outcome: Outcome, side: Side) -> TeamResult {
        match outcome {
            Outcome::Draw => TeamResult::Draw,
            o if o.won_by(side) => TeamResult::Win,
            _ => TeamResult::Loss,
        }
    }
}

impl WeekProbe {
    fn new(week: usize, n_teams: usize) -> Self {
        WeekProbe { week, n_teams, counts: vec![0; n_teams * 3 * n_teams] }
    }

    fn idx(&self, team: TeamIdx, result: TeamResult, rank: usize) -> usize {
        (team * 3 + result as usize) * self.n_teams + rank - 1
    }

    pub fn count(&self, team: TeamIdx, result: TeamResult, rank: usize) -> u64 {
        self.counts[self.idx(team, result, rank)]
    }

    /// P(final rank <= `rank_hi` | team's result in the probed week), or
    /// `None` when that result never occurred.
    pub fn conditional_at_or_better(&self, team: TeamIdx, result: TeamResult, rank_hi: usize) -> Option<f64> {
        let total: u64 = (1..=self.n_teams).map(|r| self.count(team, result, r)).sum();
        if total == 0 {
            return None;
        }
        let hit: u64 = (1..=rank_hi.min(self.n_teams)).map(|r| self.count(team, result, r)).sum();
        Some(hit as f64 / total as f64)
    }

    fn merge(&mut self, other: &WeekProbe) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationOutput {
    pub distribution: PositionDistribution,
    pub probe: Option<WeekProbe>,
}

struct Prepared {
    n_teams: usize,
    banked: Vec<u32>,
    remaining: Vec<(Fixture, OutcomeDistribution)>,
}

fn prepare(
    schedule: &Schedule,
    state: &SeasonState,
    predict: impl Fn(usize, &Fixture) -> Result<OutcomeDistribution, SimError>,
) -> Result<Prepared, SimError> {
    if state.len() != schedule.len() {
        return Err(SimError::Config(format!(
            "season state has {} slots for {} fixtures",
            state.len(),
            schedule.len()
        )));
    }
    let mut remaining = Vec::with_capacity(schedule.len() - state.n_completed());
    for (i, f) in schedule.fixtures().iter().enumerate() {
        if state.outcome(i).is_none() {
            remaining.push((*f, predict(i, f)?));
        }
    }
    Ok(Prepared { n_teams: schedule.n_teams(), banked: state.points(schedule), remaining })
}

/// One replicate: final points and ranks, plus each team's result in the
/// probed week when asked.
fn run_replicate(prep: &Prepared, replicate_seed: u64, probe_week: Option<usize>, week_results: &mut [Option<TeamResult>]) -> (Vec<u32>, Vec<usize>) {
    let mut rng = SimRng::seed_from_u64(replicate_seed);
    let mut points = prep.banked.clone();
    for (f, d) in &prep.remaining {
        let o = d.sample_with(rng.gen::<f64>());
        points[f.home] += points_for(o, Side::Home);
        points[f.away] += points_for(o, Side::Away);
        if Some(f.week) == probe_week {
            week_results[f.home] = Some(TeamResult::of(o, Side::Home));
            week_results[f.away] = Some(TeamResult::of(o, Side::Away));
        }
    }
    let ranks = rank_table(&points, seed::derive(replicate_seed, &[tag::TIE_BREAK]));
    (points, ranks)
}

/// Sample one replicate season from the current state.
pub fn sample_replicate<P: FixturePredictor + ?Sized>(
    schedule: &Schedule,
    state: &SeasonState,
    predictor: &P,
    replicate_seed: u64,
) -> Result<StandingsTable, SimError> {
    let prep = prepare(schedule, state, |_, f| Ok(predictor.predict(f)?))?;
    let mut scratch = vec![None; prep.n_teams];
    let (points, ranks) = run_replicate(&prep, replicate_seed, None, &mut scratch);
    Ok(StandingsTable::from_ranks(&points, &ranks))
}

/// Finishing-position distribution over `config.n_replicates` replicates.
pub fn simulate_remaining<P: FixturePredictor + ?Sized>(
    schedule: &Schedule,
    state: &SeasonState,
    predictor: &P,
    config: &SimulationConfig,
) -> Result<PositionDistribution, SimError> {
    let prep = prepare(schedule, state, |_, f| Ok(predictor.predict(f)?))?;
    Ok(run(&prep, config, None)?.distribution)
}

/// As [`simulate_remaining`] with outcome distributions already computed
/// for every fixture (indexed like `schedule.fixtures()`), optionally
/// probing one week.
pub fn simulate_with_predictions(
    schedule: &Schedule,
    state: &SeasonState,
    predictions: &[OutcomeDistribution],
    config: &SimulationConfig,
    probe_week: Option<usize>,
) -> Result<SimulationOutput, SimError> {
    if predictions.len() != schedule.len() {
        return Err(SimError::Config(format!("{} predictions for {} fixtures", predictions.len(), schedule.len())));
    }
    let prep = prepare(schedule, state, |i, _| Ok(predictions[i]))?;
    run(&prep, config, probe_week)
}

fn run(prep: &Prepared, config: &SimulationConfig, probe_week: Option<usize>) -> Result<SimulationOutput, SimError> {
    config.validate()?;
    let n = prep.n_teams;
    let empty = || {
        (PositionDistribution { n_teams: n, n_replicates: 0, counts: vec![0; n * n] }, probe_week.map(|w| WeekProbe::new(w, n)))
    };
    let add = |mut acc: (PositionDistribution, Option<WeekProbe>), i: usize| {
        let mut week_results = vec![None; n];
        let (_, ranks) = run_replicate(prep, replicate_seed(config.base_seed, i), probe_week, &mut week_results);
        acc.0.n_replicates += 1;
        for (team, &rank) in ranks.iter().enumerate() {
            acc.0.counts[team * n + rank - 1] += 1;
            if let (Some(probe), Some(result)) = (acc.1.as_mut(), week_results[team]) {
                let k = probe.idx(team, result, rank);
                probe.counts[k] += 1;
            }
        }
        acc
    };
    let merge = |mut a: (PositionDistribution, Option<WeekProbe>), b: (PositionDistribution, Option<WeekProbe>)| {
        a.0.merge(&b.0);
        if let (Some(pa), Some(pb)) = (a.1.as_mut(), b.1.as_ref()) {
            pa.merge(pb);
        }
        a
    };
    let parallel = || (0..config.n_replicates).into_par_iter().fold(empty, add).reduce(empty, merge);
    let (distribution, probe) = match config.workers {
        Some(1) => (0..config.n_replicates).fold(empty(), add),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| SimError::Config(e.to_string()))?
            .install(parallel),
        None => parallel(),
    };
    Ok(SimulationOutput { distribution, probe })
}

/// `team_id,rank,probability` rows after a `# n_replicates=..,base_seed=..`
/// header line.
pub fn write_distribution_csv<W: io::Write>(
    mut w: W,
    team_ids: &[String],
    d: &PositionDistribution,
    base_seed: u64,
) -> io::Result<()> {
    writeln!(w, "# n_replicates={},base_seed={}", d.n_replicates(), base_seed)?;
    writeln!(w, "team_id,rank,probability")?;
    for (t, id) in team_ids.iter().enumerate() {
        for rank in 1..=d.n_teams() {
            writeln!(w, "{},{},{}", id, rank, d.prob(t, rank))?;
        }
    }
    Ok(())
}
