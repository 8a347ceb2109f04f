use season_core::league::{generate_schedule, write_fixtures, write_results, League, Outcome, SeasonState, Team};
use season_core::outcome::TacticCatalog;
use season_lab::ingest::{ingest, ingest_readers, write_tactics, LeagueData};
use season_lab::report::csv_string;
use season_lab::world::World;
use season_lab::{ExperimentConfig, LabError};

fn league(n: usize) -> League {
    League::new((0..n).map(|i| Team::neutral(format!("c{i:02}"))).collect()).unwrap()
}

fn fixtures_csv(n: usize) -> String {
    let l = league(n);
    let s = generate_schedule(n, 4).unwrap();
    csv_string(|w| write_fixtures(w, &l, &s))
}

fn catalog() -> TacticCatalog {
    TacticCatalog::new(2, 2).unwrap()
}

fn load(fixtures: &str, results: Option<&str>, tactics: Option<&str>) -> Result<LeagueData, LabError> {
    ingest_readers(
        ("fixtures.csv", fixtures.as_bytes()),
        results.map(|r| ("results.csv", r.as_bytes())),
        tactics.map(|t| ("tactics.csv", t.as_bytes())),
        catalog(),
    )
}

/// Asserts an ingest error points at `file` and `line`.
fn assert_at(err: LabError, file: &str, line: u64, needle: &str) {
    match &err {
        LabError::Ingest { file: f, line: l, message } => {
            assert_eq!((f.as_str(), *l), (file, line), "{err}");
            assert!(message.contains(needle), "{message:?} lacks {needle:?}");
        }
        other => panic!("expected an ingest error, got {other}"),
    }
}

#[test]
fn twenty_team_files_load_380_fixtures() {
    let data = load(&fixtures_csv(20), None, None).unwrap();
    assert_eq!(data.league.len(), 20);
    assert_eq!(data.schedule.len(), 380);
    assert_eq!(data.schedule.n_weeks(), 38);
    assert_eq!(data.state.n_completed(), 0);
}

#[test]
fn duplicate_fixture_names_its_line() {
    let text = fixtures_csv(4);
    let mut lines: Vec<&str> = text.lines().collect();
    let second = lines[2];
    lines.push(second);
    let err = load(&(lines.join("\n") + "\n"), None, None).unwrap_err();
    assert_at(err, "fixtures.csv", lines.len() as u64, "duplicate fixture");
}

#[test]
fn out_of_range_week_is_rejected() {
    let text = fixtures_csv(4).replacen("\n0,", "\n6,", 1);
    let err = load(&text, None, None).unwrap_err();
    assert_at(err, "fixtures.csv", 2, "outside");
}

#[test]
fn result_for_an_unscheduled_fixture_is_rejected() {
    let fixtures = fixtures_csv(4);
    let first: Vec<&str> = fixtures.lines().nth(1).unwrap().split(',').collect();
    // Right teams, wrong week.
    let week: usize = first[0].parse().unwrap();
    let results = format!("week,home_id,away_id,outcome\n{},{},{},H\n", (week + 1) % 6, first[1], first[2]);
    let err = load(&fixtures, Some(&results), None).unwrap_err();
    assert_at(err, "results.csv", 2, "no fixture");
}

#[test]
fn unknown_team_in_results_is_rejected() {
    let fixtures = fixtures_csv(4);
    let results = "week,home_id,away_id,outcome\n0,c00,zz,D\n";
    let err = load(&fixtures, Some(results), None).unwrap_err();
    assert_at(err, "results.csv", 2, "unknown team");
}

#[test]
fn malformed_result_row_reports_its_line() {
    let fixtures = fixtures_csv(4);
    let first = fixtures.lines().nth(1).unwrap();
    let results = format!("week,home_id,away_id,outcome\n{first},X\n");
    let err = load(&fixtures, Some(&results), None).unwrap_err();
    assert_at(err, "results.csv", 2, "");
}

#[test]
fn tactics_outside_the_catalog_are_rejected() {
    let fixtures = fixtures_csv(4);
    let first = fixtures.lines().nth(1).unwrap();
    let tactics = format!("week,home_id,away_id,home_style,home_formation,away_style,away_formation\n{first},0,1,2,0\n");
    let err = load(&fixtures, None, Some(&tactics)).unwrap_err();
    assert_at(err, "tactics.csv", 2, "");
}

#[test]
fn files_written_from_a_world_load_back() {
    let cfg = ExperimentConfig::default();
    let world = World::generate(&cfg, 12).unwrap();
    let season = &world.current;
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name);
    std::fs::write(path("f.csv"), csv_string(|w| write_fixtures(w, &world.league, &season.schedule))).unwrap();
    std::fs::write(path("r.csv"), csv_string(|w| write_results(w, &world.league, &season.schedule, &season.state()))).unwrap();
    std::fs::write(path("t.csv"), csv_string(|w| write_tactics(w, &world.league, &season.records, world.catalog))).unwrap();

    let data = ingest(&path("f.csv"), Some(&path("r.csv")), Some(&path("t.csv")), world.catalog).unwrap();
    assert_eq!(data.schedule.len(), 380);
    assert_eq!(data.state.n_completed(), 380);
    let records = data.match_records(world.catalog).unwrap();
    assert_eq!(records.len(), 380);
    // Team order follows first appearance in the fixture file, so compare by id.
    let id = |l: &League, t: usize| l.teams()[t].id.clone();
    let mut loaded: Vec<(usize, String, String, Outcome, usize, usize)> = records
        .iter()
        .map(|r| (r.fixture.week, id(&data.league, r.fixture.home), id(&data.league, r.fixture.away), r.outcome, r.home_pair, r.away_pair))
        .collect();
    let mut original: Vec<_> = season
        .records
        .iter()
        .map(|r| (r.fixture.week, id(&world.league, r.fixture.home), id(&world.league, r.fixture.away), r.outcome, r.home_pair, r.away_pair))
        .collect();
    loaded.sort();
    original.sort();
    assert_eq!(loaded, original);
}

#[test]
fn partial_results_leave_the_rest_unplayed() {
    let l = league(6);
    let s = generate_schedule(6, 9).unwrap();
    let mut state = SeasonState::empty(&s);
    for i in s.week_fixtures(0).chain(s.week_fixtures(1)) {
        state.set(i, Outcome::Draw);
    }
    let fixtures = csv_string(|w| write_fixtures(w, &l, &s));
    let results = csv_string(|w| write_results(w, &l, &s, &state));
    let data = load(&fixtures, Some(&results), None).unwrap();
    assert_eq!(data.state.n_completed(), 6);
    assert!(data.state.points(&data.schedule).iter().all(|&p| p == 2));
}
