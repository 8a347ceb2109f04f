//! Loading a league from fixtures, results and (optionally) tactics CSVs.
//!
//! Teams are taken from the fixtures file in order of first appearance.
//! Every referential problem is reported with the file and line it came
//! from.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io;
use std::path::Path;

use season_core::league::{
    read_fixture_rows, read_result_rows, Fixture, League, LeagueError, SeasonState, Schedule, Team, TeamIdx,
};
use season_core::outcome::{TacticCatalog, TacticPair};

use crate::world::MatchRecord;
use crate::LabError;

pub const TACTICS_HEADER: [&str; 7] =
    ["week", "home_id", "away_id", "home_style", "home_formation", "away_style", "away_formation"];

#[derive(Clone, Debug)]
pub struct LeagueData {
    pub league: League,
    pub schedule: Schedule,
    pub state: SeasonState,
    /// Tactics per fixture, aligned with `schedule.fixtures()`.
    pub tactics: Vec<Option<(TacticPair, TacticPair)>>,
}

impl LeagueData {
    /// Completed fixtures that also have tactics.
    pub fn match_records(&self, catalog: TacticCatalog) -> Result<Vec<MatchRecord>, LabError> {
        self.schedule
            .fixtures()
            .iter()
            .enumerate()
            .filter_map(|(i, f)| Some((f, self.state.outcome(i)?, self.tactics[i]?)))
            .map(|(f, outcome, (h, a))| {
                Ok(MatchRecord { fixture: *f, outcome, home_pair: catalog.index(h)?, away_pair: catalog.index(a)? })
            })
            .collect()
    }
}

struct Named<'a> {
    file: &'a str,
}

impl Named<'_> {
    fn err(&self, line: u64, message: impl Into<String>) -> LabError {
        LabError::Ingest { file: self.file.to_string(), line, message: message.into() }
    }

    fn lift(&self, e: LeagueError) -> LabError {
        match e {
            LeagueError::Csv { line, message } => self.err(line, message),
            other => self.err(0, other.to_string()),
        }
    }
}

fn open(path: &Path) -> Result<File, LabError> {
    File::open(path).map_err(|source| LabError::Io { path: path.to_path_buf(), source })
}

pub fn ingest(
    fixtures: &Path,
    results: Option<&Path>,
    tactics: Option<&Path>,
    catalog: TacticCatalog,
) -> Result<LeagueData, LabError> {
    let name = |p: &Path| p.display().to_string();
    let results = results.map(|p| Ok::<_, LabError>((name(p), open(p)?))).transpose()?;
    let tactics = tactics.map(|p| Ok::<_, LabError>((name(p), open(p)?))).transpose()?;
    ingest_readers((&name(fixtures), open(fixtures)?), results.as_ref().map(|(n, f)| (n.as_str(), f)), tactics.as_ref().map(|(n, f)| (n.as_str(), f)), catalog)
}

/// As [`ingest`] over named readers.
pub fn ingest_readers<F: io::Read, R: io::Read, T: io::Read>(
    fixtures: (&str, F),
    results: Option<(&str, R)>,
    tactics: Option<(&str, T)>,
    catalog: TacticCatalog,
) -> Result<LeagueData, LabError> {
    let fx = Named { file: fixtures.0 };
    let rows = read_fixture_rows(fixtures.1).map_err(|e| fx.lift(e))?;

    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, TeamIdx> = HashMap::new();
    for r in &rows {
        for id in [&r.home_id, &r.away_id] {
            if !index.contains_key(id) {
                index.insert(id.clone(), ids.len());
                ids.push(id.clone());
            }
        }
    }
    let n = ids.len();
    if n < 2 || n % 2 != 0 {
        return Err(fx.err(0, format!("found {n} teams; a league needs an even number of at least two")));
    }
    let n_weeks = 2 * (n - 1);
    let mut pairs: HashMap<(TeamIdx, TeamIdx), u64> = HashMap::new();
    let mut busy: HashMap<(usize, TeamIdx), u64> = HashMap::new();
    let mut fixture_list = Vec::with_capacity(rows.len());
    for r in &rows {
        let (h, a) = (index[&r.home_id], index[&r.away_id]);
        if r.week >= n_weeks {
            return Err(fx.err(r.line, format!("week {} is outside 0..{n_weeks}", r.week)));
        }
        if h == a {
            return Err(fx.err(r.line, format!("{} is drawn against itself", r.home_id)));
        }
        if let Some(first) = pairs.insert((h, a), r.line) {
            return Err(fx.err(r.line, format!("duplicate fixture {} v {} (first on line {first})", r.home_id, r.away_id)));
        }
        for (t, id) in [(h, &r.home_id), (a, &r.away_id)] {
            if let Some(first) = busy.insert((r.week, t), r.line) {
                return Err(fx.err(r.line, format!("{id} already plays in week {} (line {first})", r.week)));
            }
        }
        fixture_list.push(Fixture { week: r.week, home: h, away: a });
    }
    let league = League::new(ids.iter().map(|id| Team::neutral(id.clone())).collect()).map_err(|e| fx.lift(e))?;
    let schedule = Schedule::new(n, fixture_list).map_err(|e| fx.lift(e))?;

    // Looks up the scheduled fixture for a (week, home, away) row.
    let locate = |named: &Named, line: u64, week: usize, home: &str, away: &str| -> Result<usize, LabError> {
        let team = |id: &str| index.get(id).copied().ok_or_else(|| named.err(line, format!("unknown team {id:?}")));
        let (h, a) = (team(home)?, team(away)?);
        match schedule.find(h, a) {
            Some(i) if schedule.fixtures()[i].week == week => Ok(i),
            _ => Err(named.err(line, format!("no fixture {home} v {away} in week {week}"))),
        }
    };

    let mut state = SeasonState::empty(&schedule);
    if let Some((file, reader)) = results {
        let rs = Named { file };
        let mut seen = HashSet::new();
        for r in read_result_rows(reader).map_err(|e| rs.lift(e))? {
            let i = locate(&rs, r.line, r.week, &r.home_id, &r.away_id)?;
            if !seen.insert(i) {
                return Err(rs.err(r.line, format!("second result for {} v {}", r.home_id, r.away_id)));
            }
            state.set(i, r.outcome);
        }
    }

    let mut tactic_rows = vec![None; schedule.len()];
    if let Some((file, reader)) = tactics {
        let ts = Named { file };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers().map_err(|e| ts.err(1, e.to_string()))?.clone();
        if header.iter().ne(TACTICS_HEADER.iter().copied()) {
            return Err(ts.err(1, format!("expected header {:?}", TACTICS_HEADER.join(","))));
        }
        for rec in rdr.records() {
            let rec = rec.map_err(|e| ts.err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |k: usize| {
                rec[k].parse::<usize>().map_err(|_| ts.err(line, format!("{} {:?} is not a non-negative integer", TACTICS_HEADER[k], &rec[k])))
            };
            let week = num(0)?;
            let i = locate(&ts, line, week, &rec[1], &rec[2])?;
            let home = TacticPair { style: num(3)?, formation: num(4)? };
            let away = TacticPair { style: num(5)?, formation: num(6)? };
            for t in [home, away] {
                catalog.check(t).map_err(|e| ts.err(line, e.to_string()))?;
            }
            if tactic_rows[i].replace((home, away)).is_some() {
                return Err(ts.err(line, format!("second tactics row for {} v {}", &rec[1], &rec[2])));
            }
        }
    }
    Ok(LeagueData { league, schedule, state, tactics: tactic_rows })
}

pub fn write_tactics<W: io::Write>(mut w: W, league: &League, records: &[MatchRecord], catalog: TacticCatalog) -> io::Result<()> {
    writeln!(w, "{}", TACTICS_HEADER.join(","))?;
    for r in records {
        let pair = |i: usize| catalog.pair(i).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()));
        let (h, a) = (pair(r.home_pair)?, pair(r.away_pair)?);
        let id = |t: TeamIdx| &league.teams()[t].id;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.fixture.week,
            id(r.fixture.home),
            id(r.fixture.away),
            h.style,
            h.formation,
            a.style,
            a.formation
        )?;
    }
    Ok(())
}
