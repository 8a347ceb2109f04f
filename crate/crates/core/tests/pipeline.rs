//! End-to-end use of the library on a hand-built league: play half a
//! season, fit strengths, simulate the rest, read objectives and choose a
//! tactic.

use rand::Rng;
use season_core::league::{
    generate_schedule, read_fixture_rows, read_result_rows, write_fixtures, write_results, Fixture, League, Outcome,
    Schedule, SeasonState, Team,
};
use season_core::objectives::{default_bands, map_objective, objective_probabilities, ObjectiveId};
use season_core::outcome::{
    fit_strengths, ClassifierParams, FeatureLayout, FitConfig, FittedStrengths, FixturePredictor, Predictor,
    TacticCatalog,
};
use season_core::prior::{
    init_weights, observations_from_game, read_weights_csv, write_weights_csv, DrawCredit, PriorKnowledge, WeightMatrix,
};
use season_core::season_sim::{expected_position, simulate_remaining, SimulationConfig};
use season_core::seed;
use season_core::tactics::{build_payoff_table, choose_tactic, DecisionPolicy, OpponentBelief, PolicyConfig};

const N: usize = 20;

/// Team `i` has rating `1.2 - 0.12 i`, so team 0 is the strongest.
fn truth() -> FittedStrengths {
    FittedStrengths { ratings: (0..N).map(|i| 1.2 - 0.12 * i as f64).collect(), home_advantage: 0.3, draw_margin: 0.55 }
}

fn league() -> League {
    League::new((0..N).map(|i| Team::neutral(format!("t{i:02}"))).collect()).unwrap()
}

fn half_season(schedule: &Schedule) -> SeasonState {
    let truth = truth();
    let mut state = SeasonState::empty(schedule);
    for week in 0..N - 1 {
        for i in schedule.week_fixtures(week) {
            let f = schedule.fixtures()[i];
            let d = truth.predict(&f).unwrap();
            let u = seed::stream(11, &[i as u64]).gen::<f64>();
            state.set(i, d.sample_with(u));
        }
    }
    state
}

fn bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut v = Vec::new();
    f(&mut v).unwrap();
    v
}

#[test]
fn csv_round_trip_restores_the_season() {
    let league = league();
    let schedule = generate_schedule(N, 5).unwrap();
    let state = half_season(&schedule);

    let fixtures = read_fixture_rows(&bytes(|w| write_fixtures(w, &league, &schedule))[..]).unwrap();
    let rebuilt: Vec<Fixture> = fixtures
        .iter()
        .map(|r| Fixture {
            week: r.week,
            home: league.index_of(&r.home_id).unwrap(),
            away: league.index_of(&r.away_id).unwrap(),
        })
        .collect();
    let schedule2 = Schedule::new(N, rebuilt).unwrap();
    assert_eq!(schedule2, schedule);

    let results = read_result_rows(&bytes(|w| write_results(w, &league, &schedule, &state))[..]).unwrap();
    assert_eq!(results.len(), N / 2 * (N - 1));
    let state2 = SeasonState::from_results(
        &schedule,
        results.iter().map(|r| {
            let f = Fixture { week: r.week, home: league.index_of(&r.home_id).unwrap(), away: league.index_of(&r.away_id).unwrap() };
            (f, r.outcome)
        }),
    )
    .unwrap();
    assert_eq!(state2, state);
}

#[test]
fn fit_then_simulate_the_second_half() {
    let league = league();
    let schedule = generate_schedule(N, 5).unwrap();
    let state = half_season(&schedule);
    let results: Vec<(Fixture, Outcome)> = state.completed(&schedule).collect();
    let fitted = fit_strengths(&league, &results, &FitConfig::default()).unwrap();

    // Half a season cannot pin ratings down, but the order should be broadly right.
    let top: f64 = fitted.ratings[..5].iter().sum();
    let bottom: f64 = fitted.ratings[N - 5..].iter().sum();
    assert!(top > bottom + 1.0, "top {top} bottom {bottom}");

    let cfg = SimulationConfig::new(2000, 77);
    let d1 = simulate_remaining(&schedule, &state, &fitted, &cfg.with_workers(1)).unwrap();
    let d3 = simulate_remaining(&schedule, &state, &fitted, &cfg.with_workers(3)).unwrap();
    assert_eq!(d1, d3);
    assert!(d1.is_doubly_stochastic());

    let points = state.points(&schedule);
    let leader = (0..N).max_by_key(|&t| (points[t], std::cmp::Reverse(t))).unwrap();
    let trailer = (0..N).min_by_key(|&t| (points[t], t)).unwrap();
    assert!(expected_position(&d1, leader).unwrap() < expected_position(&d1, trailer).unwrap());

    let bands = default_bands(N).unwrap();
    for t in 0..N {
        let p = objective_probabilities(&d1, t, &bands).unwrap();
        let total: f64 = p.p.iter().sum::<f64>() + p.residual;
        assert!((total - 1.0).abs() < 1e-9);
        assert!(p.p.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }
    let leader_goal = map_objective(&objective_probabilities(&d1, leader, &bands).unwrap()).id;
    assert!(matches!(leader_goal, ObjectiveId::O1 | ObjectiveId::O2), "{leader_goal:?}");
}

#[test]
fn weights_survive_a_csv_round_trip_and_steer_the_choice() {
    let catalog = TacticCatalog::new(2, 2).unwrap();
    let n = catalog.n_pairs();
    let mut knowledge = PriorKnowledge::new(init_weights(n).unwrap(), DrawCredit::Half);
    // Pair 3 beats everything it meets; pair 0 loses to everything.
    for y in 0..n {
        for (x, outcome) in [(3, Outcome::HomeWin), (0, Outcome::AwayWin)] {
            for obs in observations_from_game(x, y, outcome, None) {
                knowledge.record(&obs).unwrap();
            }
        }
    }
    let weights = knowledge.weights();
    let text = bytes(|w| write_weights_csv(w, &weights, &knowledge.counts));
    let back: WeightMatrix = read_weights_csv(&text[..]).unwrap();
    assert_eq!(back, weights);

    // Uninformative classifier: every cell of the payoff table is equal, so
    // the weights alone decide.
    let predictor = Predictor::new(league(), ClassifierParams::zeros(FeatureLayout::new(catalog, false)));
    let fixture = Fixture { week: 0, home: 4, away: 9 };
    let table = build_payoff_table(&fixture, &predictor, season_core::league::Side::Home).unwrap();
    let belief = OpponentBelief::from_frequencies(&vec![1; n], 1.0);
    let cfg = PolicyConfig::default();
    let flat = choose_tactic(&table, &init_weights(n).unwrap(), DecisionPolicy::Expectimax, &belief, &cfg).unwrap();
    assert_eq!(flat.action, 0);
    let steered = choose_tactic(&table, &back, DecisionPolicy::Expectimax, &belief, &cfg).unwrap();
    assert_eq!(steered.action, 3);
    assert!((0..n).all(|y| back.get(3, y).unwrap() > back.get(0, y).unwrap()));
}
