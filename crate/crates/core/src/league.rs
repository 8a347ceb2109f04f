//! Teams, fixtures, results and standings for a double round-robin league.

use std::collections::HashMap;
use std::fmt;
use std::io;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{self, tag};

/// Index of a team within its [`League`].
pub type TeamIdx = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeagueError {
    #[error("a league needs an even number of at least two teams, got {0} (byes are not supported)")]
    OddTeamCount(usize),
    #[error("duplicate team id {0:?}")]
    DuplicateTeam(String),
    #[error("team {id:?}: {what} must be positive, got {value}")]
    InvalidStrength { id: String, what: &'static str, value: f64 },
    #[error("unknown team {0:?}")]
    UnknownTeam(String),
    #[error("team index {0} is out of range")]
    TeamOutOfRange(usize),
    #[error("fixture in week {week} pits team {team} against itself")]
    SelfFixture { week: usize, team: TeamIdx },
    #[error("fixture {home} v {away} is scheduled twice")]
    DuplicateFixture { home: TeamIdx, away: TeamIdx },
    #[error("team {team} plays more than once in week {week}")]
    DoubleBooked { week: usize, team: TeamIdx },
    #[error("result for week {week}, {home} v {away} does not match a scheduled fixture")]
    UnscheduledResult { week: usize, home: TeamIdx, away: TeamIdx },
    #[error("fixture {home} v {away} has more than one result")]
    DuplicateResult { home: TeamIdx, away: TeamIdx },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Team {
    pub id: String,
    pub name: String,
    pub attack: f64,
    pub defence: f64,
    /// Additive home-advantage feature. Zero is allowed so that the
    /// predictor's home/away symmetry can be exercised.
    pub home_advantage: f64,
}

impl Team {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        attack: f64,
        defence: f64,
        home_advantage: f64,
    ) -> Result<Self, LeagueError> {
        let id = id.into();
        for (what, value) in [("attack", attack), ("defence", defence)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(LeagueError::InvalidStrength { id, what, value });
            }
        }
        if !(home_advantage >= 0.0 && home_advantage.is_finite()) {
            return Err(LeagueError::InvalidStrength { id, what: "home advantage", value: home_advantage });
        }
        Ok(Team { id, name: name.into(), attack, defence, home_advantage })
    }

    /// A team with neutral strengths, used before any fitting has happened.
    pub fn neutral(id: impl Into<String>) -> Self {
        let id = id.into();
        Team { name: id.clone(), id, attack: 1.0, defence: 1.0, home_advantage: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct League {
    teams: Vec<Team>,
    by_id: HashMap<String, TeamIdx>,
}

impl League {
    pub fn new(teams: Vec<Team>) -> Result<Self, LeagueError> {
        let mut by_id = HashMap::with_capacity(teams.len());
        for (idx, team) in teams.iter().enumerate() {
            if by_id.insert(team.id.clone(), idx).is_some() {
                return Err(LeagueError::DuplicateTeam(team.id.clone()));
            }
        }
        Ok(League { teams, by_id })
    }

    pub fn teams(&self) -> &[Team] {
        &self.teams
    }

    pub fn len(&self) -> usize {
        self.teams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teams.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<TeamIdx, LeagueError> {
        self.by_id.get(id).copied().ok_or_else(|| LeagueError::UnknownTeam(id.to_string()))
    }

    pub fn team(&self, idx: TeamIdx) -> Result<&Team, LeagueError> {
        self.teams.get(idx).ok_or(LeagueError::TeamOutOfRange(idx))
    }

    /// Same ids and order, new strengths.
    pub fn with_teams(&self, teams: Vec<Team>) -> Result<Self, LeagueError> {
        League::new(teams)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fixture {
    pub week: usize,
    pub home: TeamIdx,
    pub away: TeamIdx,
}

impl Fixture {
    pub fn side_of(&self, team: TeamIdx) -> Option<Side> {
        if team == self.home {
            Some(Side::Home)
        } else if team == self.away {
            Some(Side::Away)
        } else {
            None
        }
    }

    pub fn team(&self, side: Side) -> TeamIdx {
        match side {
            Side::Home => self.home,
            Side::Away => self.away,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }
}

/// Result of a completed fixture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    HomeWin,
    Draw,
    AwayWin,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::HomeWin, Outcome::Draw, Outcome::AwayWin];

    /// Class index: 0 home win, 1 draw, 2 away win.
    pub fn index(self) -> usize {
        match self {
            Outcome::HomeWin => 0,
            Outcome::Draw => 1,
            Outcome::AwayWin => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Outcome> {
        Outcome::ALL.get(i).copied()
    }

    pub fn code(self) -> char {
        match self {
            Outcome::HomeWin => 'H',
            Outcome::Draw => 'D',
            Outcome::AwayWin => 'A',
        }
    }

    pub fn from_code(code: &str) -> Option<Outcome> {
        match code.trim() {
            "H" => Some(Outcome::HomeWin),
            "D" => Some(Outcome::Draw),
            "A" => Some(Outcome::AwayWin),
            _ => None,
        }
    }

    /// Whether `side` won this match.
    pub fn won_by(self, side: Side) -> bool {
        matches!((self, side), (Outcome::HomeWin, Side::Home) | (Outcome::AwayWin, Side::Away))
    }

    /// The same result seen with home and away swapped.
    pub fn swapped(self) -> Outcome {
        match self {
            Outcome::HomeWin => Outcome::AwayWin,
            Outcome::Draw => Outcome::Draw,
            Outcome::AwayWin => Outcome::HomeWin,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// League points earned by `side` for `outcome`.
pub fn points_for(outcome: Outcome, side: Side) -> u32 {
    match (outcome, side) {
        (Outcome::Draw, _) => 1,
        (o, s) if o.won_by(s) => 3,
        _ => 0,
    }
}

/// A validated fixture list: no self-fixtures, no repeated ordered pairs and
/// nobody playing twice in one week.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    n_teams: usize,
    n_weeks: usize,
    fixtures: Vec<Fixture>,
    by_pair: HashMap<(TeamIdx, TeamIdx), usize>,
}

impl Schedule {
    /// Fixtures are kept sorted by (week, home, away).
    pub fn new(n_teams: usize, mut fixtures: Vec<Fixture>) -> Result<Self, LeagueError> {
        fixtures.sort();
        let n_weeks = fixtures.iter().map(|f| f.week + 1).max().unwrap_or(0);
        let mut by_pair = HashMap::with_capacity(fixtures.len());
        let mut busy = vec![usize::MAX; n_teams];
        for (i, f) in fixtures.iter().enumerate() {
            for t in [f.home, f.away] {
                if t >= n_teams {
                    return Err(LeagueError::TeamOutOfRange(t));
                }
            }
            if f.home == f.away {
                return Err(LeagueError::SelfFixture { week: f.week, team: f.home });
            }
            if by_pair.insert((f.home, f.away), i).is_some() {
                return Err(LeagueError::DuplicateFixture { home: f.home, away: f.away });
            }
            for t in [f.home, f.away] {
                if busy[t] == f.week {
                    return Err(LeagueError::DoubleBooked { week: f.week, team: t });
                }
                busy[t] = f.week;
            }
        }
        Ok(Schedule { n_teams, n_weeks, fixtures, by_pair })
    }

    pub fn n_teams(&self) -> usize {
        self.n_teams
    }

    pub fn n_weeks(&self) -> usize {
        self.n_weeks
    }

    pub fn fixtures(&self) -> &[Fixture] {
        &self.fixtures
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    /// Index of the fixture with this home and away team, if scheduled.
    pub fn find(&self, home: TeamIdx, away: TeamIdx) -> Option<usize> {
        self.by_pair.get(&(home, away)).copied()
    }

    /// Indices of the fixtures played in `week`.
    pub fn week_fixtures(&self, week: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.fixtures.partition_point(|f| f.week < week);
        let end = self.fixtures.partition_point(|f| f.week <= week);
        start..end
    }
}

/// Double round-robin by the circle method over a seeded shuffle of the
/// teams. The second half of the season replays the first with venues
/// swapped, so every ordered pair occurs exactly once.
pub fn generate_schedule(n_teams: usize, seed: u64) -> Result<Schedule, LeagueError> {
    if n_teams < 2 || n_teams % 2 != 0 {
        return Err(LeagueError::OddTeamCount(n_teams));
    }
    let mut order: Vec<TeamIdx> = (0..n_teams).collect();
    order.shuffle(&mut seed::stream(seed, &[tag::SCHEDULE]));

    let rounds = n_teams - 1;
    let half = n_teams / 2;
    let fixed = order[0];
    let mut ring: Vec<TeamIdx> = order[1..].to_vec();
    let mut fixtures = Vec::with_capacity(n_teams * (n_teams - 1));
    for round in 0..rounds {
        for i in 0..half {
            let (a, b) = if i == 0 { (fixed, ring[0]) } else { (ring[i], ring[rounds - i]) };
            let (home, away) = if (round + i) % 2 == 0 { (a, b) } else { (b, a) };
            fixtures.push(Fixture { week: round, home, away });
            fixtures.push(Fixture { week: round + rounds, home: away, away: home });
        }
        ring.rotate_right(1);
    }
    Schedule::new(n_teams, fixtures)
}

/// Outcomes of the completed fixtures, aligned with a schedule's fixture list.
#[derive(Clone, Debug, PartialEq)]
pub struct SeasonState {
    outcomes: Vec<Option<Outcome>>,
}

impl SeasonState {
    pub fn empty(schedule: &Schedule) -> Self {
        SeasonState { outcomes: vec![None; schedule.len()] }
    }

    /// Attach results to their fixtures. A result must name a scheduled
    /// fixture (same week, home and away) and appear at most once.
    pub fn from_results<I>(schedule: &Schedule, results: I) -> Result<Self, LeagueError>
    where
        I: IntoIterator<Item = (Fixture, Outcome)>,
    {
        let mut state = SeasonState::empty(schedule);
        for (f, outcome) in results {
            state.record(schedule, f, outcome)?;
        }
        Ok(state)
    }

    pub fn record(&mut self, schedule: &Schedule, f: Fixture, outcome: Outcome) -> Result<usize, LeagueError> {
        let idx = schedule
            .find(f.home, f.away)
            .filter(|&i| schedule.fixtures()[i].week == f.week)
            .ok_or(LeagueError::UnscheduledResult { week: f.week, home: f.home, away: f.away })?;
        if self.outcomes[idx].is_some() {
            return Err(LeagueError::DuplicateResult { home: f.home, away: f.away });
        }
        self.outcomes[idx] = Some(outcome);
        Ok(idx)
    }

    pub fn set(&mut self, fixture_idx: usize, outcome: Outcome) {
        self.outcomes[fixture_idx] = Some(outcome);
    }

    pub fn outcome(&self, fixture_idx: usize) -> Option<Outcome> {
        self.outcomes[fixture_idx]
    }

    pub fn outcomes(&self) -> &[Option<Outcome>] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn n_completed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.is_some()).count()
    }

    /// Completed fixtures paired with their outcomes.
    pub fn completed<'a>(&'a self, schedule: &'a Schedule) -> impl Iterator<Item = (Fixture, Outcome)> + 'a {
        schedule.fixtures().iter().zip(&self.outcomes).filter_map(|(f, o)| o.map(|o| (*f, o)))
    }

    /// Keep only results from weeks before `week`.
    pub fn truncated(&self, schedule: &Schedule, week: usize) -> SeasonState {
        let outcomes = schedule
            .fixtures()
            .iter()
            .zip(&self.outcomes)
            .map(|(f, o)| if f.week < week { *o } else { None })
            .collect();
        SeasonState { outcomes }
    }

    /// Points per team from the completed fixtures.
    pub fn points(&self, schedule: &Schedule) -> Vec<u32> {
        let mut points = vec![0; schedule.n_teams()];
        for (f, o) in self.completed(schedule) {
            points[f.home] += points_for(o, Side::Home);
            points[f.away] += points_for(o, Side::Away);
        }
        points
    }
}

/// 1-based ranks by descending points. Equal points are ordered by a
/// uniform random permutation drawn from `tie_break_seed`.
pub fn rank_table(points: &[u32], tie_break_seed: u64) -> Vec<usize> {
    let mut order: Vec<TeamIdx> = (0..points.len()).collect();
    order.shuffle(&mut seed::stream(tie_break_seed, &[tag::TIE_BREAK]));
    ranks_from_shuffled(points, order)
}

/// Rank with ties ordered by the position of each team in `order`.
pub(crate) fn ranks_from_shuffled(points: &[u32], mut order: Vec<TeamIdx>) -> Vec<usize> {
    // Stable sort keeps the shuffled order among equal points.
    order.sort_by(|&a, &b| points[b].cmp(&points[a]));
    let mut ranks = vec![0; points.len()];
    for (pos, team) in order.into_iter().enumerate() {
        ranks[team] = pos + 1;
    }
    ranks
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Standing {
    pub points: u32,
    pub played: u32,
    pub wins: u32,
    pub draws: u32,
    pub losses: u32,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StandingsTable {
    rows: Vec<Standing>,
}

impl StandingsTable {
    pub fn compute<I>(n_teams: usize, results: I, tie_break_seed: u64) -> Self
    where
        I: IntoIterator<Item = (Fixture, Outcome)>,
    {
        let mut rows = vec![Standing::default(); n_teams];
        for (f, o) in results {
            for side in [Side::Home, Side::Away] {
                let row = &mut rows[f.team(side)];
                row.played += 1;
                row.points += points_for(o, side);
                match o {
                    Outcome::Draw => row.draws += 1,
                    o if o.won_by(side) => row.wins += 1,
                    _ => row.losses += 1,
                }
            }
        }
        let points: Vec<u32> = rows.iter().map(|r| r.points).collect();
        for (row, rank) in rows.iter_mut().zip(rank_table(&points, tie_break_seed)) {
            row.rank = rank;
        }
        StandingsTable { rows }
    }

    pub fn from_ranks(points: &[u32], ranks: &[usize]) -> Self {
        let rows = points
            .iter()
            .zip(ranks)
            .map(|(&points, &rank)| Standing { points, rank, ..Standing::default() })
            .collect();
        StandingsTable { rows }
    }

    pub fn rows(&self) -> &[Standing] {
        &self.rows
    }

    pub fn rank(&self, team: TeamIdx) -> usize {
        self.rows[team].rank
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.rank).collect()
    }

    pub fn points(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.points).collect()
    }
}

/// One row of a fixtures CSV (`week,home_id,away_id`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureRow {
    pub line: u64,
    pub week: usize,
    pub home_id: String,
    pub away_id: String,
}

/// One row of a results CSV (`week,home_id,away_id,outcome`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResultRow {
    pub line: u64,
    pub week: usize,
    pub home_id: String,
    pub away_id: String,
    pub outcome: Outcome,
}

fn csv_err(line: u64, message: impl Into<String>) -> LeagueError {
    LeagueError::Csv { line, message: message.into() }
}

/// Read a CSV with exactly the given header, yielding each record with its
/// 1-based line number.
pub(crate) fn read_records<R: io::Read>(
    reader: R,
    header: &[&str],
) -> Result<Vec<(u64, csv::StringRecord)>, LeagueError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| csv_err(1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(csv_err(1, format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            csv_err(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push((line, rec));
    }
    Ok(out)
}

pub(crate) fn parse_week(line: u64, field: &str) -> Result<usize, LeagueError> {
    field.parse().map_err(|_| csv_err(line, format!("week {field:?} is not a non-negative integer")))
}

pub fn read_fixture_rows<R: io::Read>(reader: R) -> Result<Vec<FixtureRow>, LeagueError> {
    read_records(reader, &["week", "home_id", "away_id"])?
        .into_iter()
        .map(|(line, rec)| {
            Ok(FixtureRow { line, week: parse_week(line, &rec[0])?, home_id: rec[1].to_string(), away_id: rec[2].to_string() })
        })
        .collect()
}

pub fn read_result_rows<R: io::Read>(reader: R) -> Result<Vec<ResultRow>, LeagueError> {
    read_records(reader, &["week", "home_id", "away_id", "outcome"])?
        .into_iter()
        .map(|(line, rec)| {
            let outcome = Outcome::from_code(&rec[3])
                .ok_or_else(|| csv_err(line, format!("outcome {:?} is not one of H, D, A", &rec[3])))?;
            Ok(ResultRow { line, week: parse_week(line, &rec[0])?, home_id: rec[1].to_string(), away_id: rec[2].to_string(), outcome })
        })
        .collect()
}

pub fn write_fixtures<W: io::Write>(mut w: W, league: &League, schedule: &Schedule) -> io::Result<()> {
    writeln!(w, "week,home_id,away_id")?;
    for f in schedule.fixtures() {
        writeln!(w, "{},{},{}", f.week, league.teams()[f.home].id, league.teams()[f.away].id)?;
    }
    Ok(())
}

pub fn write_results<W: io::Write>(mut w: W, league: &League, schedule: &Schedule, state: &SeasonState) -> io::Result<()> {
    writeln!(w, "week,home_id,away_id,outcome")?;
    for (f, o) in state.completed(schedule) {
        writeln!(w, "{},{},{},{}", f.week, league.teams()[f.home].id, league.teams()[f.away].id, o)?;
    }
    Ok(())
}
