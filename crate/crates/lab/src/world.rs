//! Synthetic leagues with known ground truth.
//!
//! A world has one history season and one current season. Team ratings are
//! log-normal and drift a little between the two. A match is an ordered
//! logit on
//!
//! ```text
//! eta = rating[home] - rating[away] + home_advantage
//!       + main[home_pair] - main[away_pair] + interaction[home_pair][away_pair]
//! ```
//!
//! with draw cutpoints at `±draw_margin`. The interaction table is
//! antisymmetric, so a pair's edge over another is the other's handicap.
//!
//! With `symmetric_tactics` the table's rows also sum to zero and favourite
//! pairs are dealt out evenly, so every pair breaks even against the
//! league's mix and a habit only matters through its main effect and through
//! how well opponents counter it.
//! Each team has a favourite style/formation pair it plays with probability
//! `habit_strength`, otherwise it picks one of the others uniformly.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use season_core::league::{
    generate_schedule, Fixture, League, Outcome, SeasonState, Schedule, StandingsTable, Team, TeamIdx,
};
use season_core::outcome::{OutcomeDistribution, TacticCatalog};
use season_core::seed::{self, tag};

use crate::config::ExperimentConfig;
use crate::LabError;

const HISTORY: u64 = 0;
const CURRENT: u64 = 1;

/// A played fixture with the tactic pairs both sides used.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchRecord {
    pub fixture: Fixture,
    pub outcome: Outcome,
    pub home_pair: usize,
    pub away_pair: usize,
}

#[derive(Clone, Debug)]
pub struct Season {
    pub schedule: Schedule,
    /// Aligned with `schedule.fixtures()`.
    pub records: Vec<MatchRecord>,
    /// True ratings in force this season.
    pub ratings: Vec<f64>,
    pub tie_break_seed: u64,
}

impl Season {
    pub fn state(&self) -> SeasonState {
        let mut s = SeasonState::empty(&self.schedule);
        for (i, r) in self.records.iter().enumerate() {
            s.set(i, r.outcome);
        }
        s
    }

    pub fn final_table(&self) -> StandingsTable {
        StandingsTable::compute(
            self.schedule.n_teams(),
            self.records.iter().map(|r| (r.fixture, r.outcome)),
            self.tie_break_seed,
        )
    }

    /// Records of fixtures in weeks before `week`.
    pub fn before_week(&self, week: usize) -> impl Iterator<Item = &MatchRecord> {
        self.records.iter().filter(move |r| r.fixture.week < week)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TrueParameters {
    pub home_advantage: f64,
    pub draw_margin: f64,
    pub main_effect: Vec<f64>,
    /// Row-major, `n_pairs × n_pairs`.
    pub interaction: Vec<f64>,
    pub habits: Vec<Vec<f64>>,
    pub history_ratings: Vec<f64>,
    pub current_ratings: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct World {
    pub seed: u64,
    pub catalog: TacticCatalog,
    pub league: League,
    pub truth: TrueParameters,
    pub history: Season,
    pub current: Season,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl World {
    pub fn generate(cfg: &ExperimentConfig, world_seed: u64) -> Result<World, LabError> {
        let catalog = TacticCatalog::new(cfg.n_styles, cfg.n_formations)?;
        let n_pairs = catalog.n_pairs();
        let n = cfg.n_teams;
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut rng = seed::stream(world_seed, &[tag::WORLD]);

        // Attack and defence are log-normal; only their product matters to
        // results, so the rating is the sum of the logs.
        let mut history_ratings: Vec<f64> =
            (0..n).map(|_| cfg.strength_sd * (normal.sample(&mut rng) + normal.sample(&mut rng))).collect();
        let mean = history_ratings.iter().sum::<f64>() / n as f64;
        history_ratings.iter_mut().for_each(|r| *r -= mean);
        let current_ratings: Vec<f64> =
            history_ratings.iter().map(|r| r + cfg.drift_sd * normal.sample(&mut rng)).collect();

        let main_effect: Vec<f64> = (0..n_pairs).map(|_| cfg.tactic_main_effect * normal.sample(&mut rng)).collect();
        let mut interaction = vec![0.0; n_pairs * n_pairs];
        for x in 0..n_pairs {
            for y in x + 1..n_pairs {
                let v = cfg.tactic_interaction * normal.sample(&mut rng);
                interaction[x * n_pairs + y] = v;
                interaction[y * n_pairs + x] = -v;
            }
        }
        if cfg.symmetric_tactics {
            // A[x][y] - (s_x - s_y) / n keeps A antisymmetric and zeroes its row sums.
            let sums: Vec<f64> = (0..n_pairs).map(|x| interaction[x * n_pairs..(x + 1) * n_pairs].iter().sum()).collect();
            for x in 0..n_pairs {
                for y in 0..n_pairs {
                    interaction[x * n_pairs + y] -= (sums[x] - sums[y]) / n_pairs as f64;
                }
            }
        }
        let favourites: Vec<usize> = if cfg.symmetric_tactics {
            let mut f: Vec<usize> = (0..n).map(|t| t % n_pairs).collect();
            f.shuffle(&mut rng);
            f
        } else {
            (0..n).map(|_| rng.gen_range(0..n_pairs)).collect()
        };
        let habits: Vec<Vec<f64>> = favourites
            .into_iter()
            .map(|fav| {
                if n_pairs == 1 {
                    return vec![1.0];
                }
                let rest = (1.0 - cfg.habit_strength) / (n_pairs - 1) as f64;
                (0..n_pairs).map(|p| if p == fav { cfg.habit_strength } else { rest }).collect()
            })
            .collect();

        let league = League::new((0..n).map(|i| Team::neutral(format!("t{i:02}"))).collect())?;
        let truth = TrueParameters {
            home_advantage: cfg.home_advantage,
            draw_margin: cfg.draw_margin,
            main_effect,
            interaction,
            habits,
            history_ratings: history_ratings.clone(),
            current_ratings: current_ratings.clone(),
        };
        let mut world = World {
            seed: world_seed,
            catalog,
            league,
            truth,
            history: Season { schedule: generate_schedule(n, 0)?, records: vec![], ratings: vec![], tie_break_seed: 0 },
            current: Season { schedule: generate_schedule(n, 0)?, records: vec![], ratings: vec![], tie_break_seed: 0 },
        };
        world.history = world.play_season(HISTORY, history_ratings)?;
        world.current = world.play_season(CURRENT, current_ratings)?;
        Ok(world)
    }

    fn play_season(&self, season: u64, ratings: Vec<f64>) -> Result<Season, LabError> {
        let n = self.league.len();
        let schedule = generate_schedule(n, seed::derive(self.seed, &[tag::SCHEDULE, season]))?;
        let records = schedule
            .fixtures()
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let key = [season, i as u64];
                let home_pair = self.habit_draw(f.home, &key, 0);
                let away_pair = self.habit_draw(f.away, &key, 1);
                let d = self.distribution(&ratings, f, home_pair, away_pair);
                let u = seed::stream(self.seed, &[tag::OUTCOME, season, i as u64]).gen::<f64>();
                MatchRecord { fixture: *f, outcome: d.sample_with(u), home_pair, away_pair }
            })
            .collect();
        Ok(Season { schedule, records, ratings, tie_break_seed: seed::derive(self.seed, &[tag::TIE_BREAK, season]) })
    }

    fn habit_draw(&self, team: TeamIdx, key: &[u64], side: u64) -> usize {
        let mut path = vec![tag::TACTIC];
        path.extend_from_slice(key);
        path.push(side);
        self.sample_habit(team, seed::stream(self.seed, &path).gen::<f64>())
    }

    /// The pair a team plays for a uniform draw `u`.
    pub fn sample_habit(&self, team: TeamIdx, u: f64) -> usize {
        let habit = &self.truth.habits[team];
        let mut acc = 0.0;
        for (p, w) in habit.iter().enumerate() {
            acc += w;
            if u < acc {
                return p;
            }
        }
        habit.len() - 1
    }

    /// Ground-truth outcome probabilities under the given ratings.
    pub fn distribution(&self, ratings: &[f64], f: &Fixture, home_pair: usize, away_pair: usize) -> OutcomeDistribution {
        let n_pairs = self.catalog.n_pairs();
        let t = &self.truth;
        let eta = ratings[f.home] - ratings[f.away]
            + t.home_advantage
            + t.main_effect[home_pair]
            - t.main_effect[away_pair]
            + t.interaction[home_pair * n_pairs + away_pair];
        let p_home = sigmoid(eta - t.draw_margin);
        let p_away = sigmoid(-t.draw_margin - eta);
        OutcomeDistribution { p_home, p_draw: (1.0 - p_home - p_away).max(0.0), p_away }
    }

    /// Teams from strongest to weakest by true current rating.
    pub fn strength_order(&self) -> Vec<TeamIdx> {
        let r = &self.truth.current_ratings;
        let mut order: Vec<TeamIdx> = (0..r.len()).collect();
        order.sort_by(|&a, &b| r[b].total_cmp(&r[a]).then(a.cmp(&b)));
        order
    }

    pub fn team_ids(&self) -> Vec<String> {
        self.league.teams().iter().map(|t| t.id.clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let cfg = ExperimentConfig::default();
        let a = World::generate(&cfg, 5).unwrap();
        let b = World::generate(&cfg, 5).unwrap();
        assert_eq!(a.current.records, b.current.records);
        assert_eq!(a.history.records, b.history.records);
        assert_ne!(a.current.records, World::generate(&cfg, 6).unwrap().current.records);
    }

    #[test]
    fn seasons_are_full_double_round_robins() {
        let w = World::generate(&ExperimentConfig::default(), 1).unwrap();
        for s in [&w.history, &w.current] {
            assert_eq!(s.records.len(), 380);
            assert_eq!(s.state().n_completed(), 380);
        }
        for h in &w.truth.habits {
            assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn interaction_is_antisymmetric() {
        let w = World::generate(&ExperimentConfig::default(), 3).unwrap();
        let n = w.catalog.n_pairs();
        for x in 0..n {
            for y in 0..n {
                assert_eq!(w.truth.interaction[x * n + y], -w.truth.interaction[y * n + x]);
            }
            let row: f64 = w.truth.interaction[x * n..(x + 1) * n].iter().sum();
            assert!(row.abs() < 1e-12, "row {x} sums to {row}");
        }
        let free = ExperimentConfig { symmetric_tactics: false, ..ExperimentConfig::default() };
        let w = World::generate(&free, 3).unwrap();
        assert!((0..n).any(|x| w.truth.interaction[x * n..(x + 1) * n].iter().sum::<f64>().abs() > 1e-6));
    }

    #[test]
    fn results_track_strength() {
        let w = World::generate(&ExperimentConfig::default(), 9).unwrap();
        let table = w.current.final_table();
        let order = w.strength_order();
        let top: f64 = order[..5].iter().map(|&t| table.rank(t) as f64).sum::<f64>() / 5.0;
        let bottom: f64 = order[15..].iter().map(|&t| table.rank(t) as f64).sum::<f64>() / 5.0;
        assert!(top < bottom, "top {top} bottom {bottom}");
    }
}
