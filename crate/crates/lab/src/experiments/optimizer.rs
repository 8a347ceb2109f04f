//! Replaying the current season with some teams using the optimizer
//! (experiment 4 and the all-teams arm).
//!
//! Each world's current season is replayed `outer_replicates` times per arm.
//! Replicate `r` draws every random number from streams keyed by
//! `(world, r, fixture, purpose)`, so arms differ only where a decision
//! differs: a team that does not optimize samples its habitual tactic with
//! the same draw in every arm, and every match consumes the same uniforms.
//!
//! An optimizing team keeps the classifier it fitted on the history season.
//! Before each week it simulates the rest of the season (with its own
//! pre-season predictions) to refresh its objective and the value of a
//! draw, then picks a tactic from its payoff table weighted by its weight
//! matrix, and plays in-match policies on the score-line chain. After the
//! week its weight matrix and opponent tactic counts absorb every result.

use std::fmt::Write as _;

use rand::Rng;

use season_core::league::{rank_table, SeasonState, Side, TeamIdx};
use season_core::objectives::{default_bands, map_objective, objective_probabilities, BandSet};
use season_core::outcome::{FixturePredictor, OutcomeDistribution, Predictor, UniformTactics};
use season_core::prior::{init_weights, observations_from_game, PriorKnowledge};
use season_core::season_sim::{simulate_with_predictions, SimulationConfig, TeamResult};
use season_core::seed::{self, tag};
use season_core::tactics::{
    build_payoff_table, choose_tactic, objective_on_track, select_policy, simulate_match_with_decisions,
    write_decision_log, DecisionLogRow, InMatchConfig, InMatchPlan, OpponentBelief, PayoffTable, PolicyConfig,
};

use super::{add_truth, par_map, world_seed};
use crate::config::ExperimentConfig;
use crate::metrics::{mean, sign_test_p};
use crate::modeling::fit_predictor;
use crate::report::{csv_string, Report};
use crate::world::World;
use crate::LabError;

/// Everything an optimizing team knows before the season starts.
pub struct Prepared<'a> {
    pub world: &'a World,
    bands: BandSet,
    policy: PolicyConfig,
    in_match: InMatchConfig,
    inner_replicates: usize,
    smoothing: f64,
    inner_predictions: Vec<OutcomeDistribution>,
    /// Per fixture, the home and away side's payoff table.
    tables: Vec<[PayoffTable; 2]>,
    /// Per team, its weight evidence after the history season.
    knowledge: Vec<PriorKnowledge>,
    /// Per team, how often it used each tactic pair in the history season.
    pair_counts: Vec<Vec<u64>>,
}

impl<'a> Prepared<'a> {
    pub fn new(cfg: &ExperimentConfig, world: &'a World) -> Result<Self, LabError> {
        let n = world.league.len();
        let n_pairs = world.catalog.n_pairs();
        let predictor: Predictor = fit_predictor(
            &world.league,
            world.catalog,
            &world.history.records,
            cfg,
            seed::derive(world.seed, &[tag::TRAIN]),
        )?;

        let mut pair_counts = vec![vec![0u64; n_pairs]; n];
        let init = init_weights(n_pairs)?;
        let mut knowledge: Vec<PriorKnowledge> = (0..n).map(|_| PriorKnowledge::new(init.clone(), cfg.draw_credit)).collect();
        for r in &world.history.records {
            pair_counts[r.fixture.home][r.home_pair] += 1;
            pair_counts[r.fixture.away][r.away_pair] += 1;
            for (t, k) in knowledge.iter_mut().enumerate() {
                for obs in observations_from_game(r.home_pair, r.away_pair, r.outcome, r.fixture.side_of(t)) {
                    k.record(&obs)?;
                }
            }
        }

        let habits: Vec<Vec<f64>> = pair_counts
            .iter()
            .map(|c| {
                let total = c.iter().sum::<u64>() as f64 + cfg.belief_smoothing * n_pairs as f64;
                c.iter().map(|&x| (x as f64 + cfg.belief_smoothing) / total).collect()
            })
            .collect();
        let marginal = UniformTactics::with_team_tactics(&predictor, &habits);
        let schedule = &world.current.schedule;
        let inner_predictions =
            schedule.fixtures().iter().map(|f| marginal.predict(f)).collect::<Result<Vec<_>, _>>()?;
        let tables = schedule
            .fixtures()
            .iter()
            .map(|f| Ok([build_payoff_table(f, &predictor, Side::Home)?, build_payoff_table(f, &predictor, Side::Away)?]))
            .collect::<Result<Vec<_>, LabError>>()?;

        Ok(Prepared {
            world,
            bands: default_bands(n)?,
            policy: cfg.policy(),
            in_match: cfg.in_match(),
            inner_replicates: cfg.inner_replicates,
            smoothing: cfg.belief_smoothing,
            inner_predictions,
            tables,
            knowledge,
            pair_counts,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Replay {
    pub ranks: Vec<usize>,
    pub decisions: Vec<DecisionLogRow>,
}

/// Replicate `rep` of the current season with `optimizers[team]` marking the
/// teams that use the optimizer.
pub fn replay_season(prep: &Prepared, optimizers: &[bool], rep: usize, log: bool) -> Result<Replay, LabError> {
    let world = prep.world;
    let schedule = &world.current.schedule;
    let fixtures = schedule.fixtures();
    let rep_key = rep as u64;
    let rep_seed = seed::derive(world.seed, &[tag::REPLICATE, rep_key]);
    let mut state = SeasonState::empty(schedule);
    let mut knowledge: Vec<Option<PriorKnowledge>> =
        optimizers.iter().zip(&prep.knowledge).map(|(&o, k)| o.then(|| k.clone())).collect();
    let mut pair_counts = prep.pair_counts.clone();
    let mut decisions = Vec::new();

    for week in 0..schedule.n_weeks() {
        let this_week: Vec<usize> = schedule.week_fixtures(week).collect();
        let needs_lookahead = this_week.iter().any(|&i| optimizers[fixtures[i].home] || optimizers[fixtures[i].away]);
        let lookahead = if needs_lookahead {
            let sim = SimulationConfig::new(prep.inner_replicates, seed::derive(rep_seed, &[tag::INNER, week as u64])).with_workers(1);
            Some(simulate_with_predictions(schedule, &state, &prep.inner_predictions, &sim, Some(week))?)
        } else {
            None
        };
        let mut played = Vec::with_capacity(this_week.len());
        for &i in &this_week {
            let f = fixtures[i];
            let mut pairs = [0usize; 2];
            let mut plans = [None; 2];
            for (k, side) in [Side::Home, Side::Away].into_iter().enumerate() {
                let team = f.team(side);
                match (&knowledge[team], &lookahead) {
                    (Some(own), Some(sim)) => {
                        let probs = objective_probabilities(&sim.distribution, team, &prep.bands)?;
                        let objective = map_objective(&probs);
                        let policy = select_policy(objective.id, &probs, &prep.policy);
                        let belief = OpponentBelief::from_frequencies(&pair_counts[f.team(side.opposite())], prep.smoothing);
                        let choice = choose_tactic(&prep.tables[i][k], &own.weights(), policy, &belief, &prep.policy)?;
                        let hi = prep.bands.band(objective.id).map_or(prep.bands.n_teams(), |b| b.hi);
                        let draw_value = sim
                            .probe
                            .as_ref()
                            .and_then(|p| p.conditional_at_or_better(team, TeamResult::Draw, hi))
                            .unwrap_or_else(|| objective_on_track(objective.id, &probs));
                        pairs[k] = choice.action;
                        plans[k] = Some(InMatchPlan { draw_value });
                        if log {
                            decisions.push(DecisionLogRow {
                                week,
                                team_id: world.league.teams()[team].id.clone(),
                                policy,
                                pair: choice.pair,
                                expected_payoff: choice.expected_payoff,
                            });
                        }
                    }
                    _ => {
                        let u = seed::stream(world.seed, &[tag::TACTIC, rep_key, i as u64, k as u64]).gen::<f64>();
                        pairs[k] = world.sample_habit(team, u);
                    }
                }
            }
            let truth = world.distribution(&world.current.ratings, &f, pairs[0], pairs[1]);
            let mut rng = seed::stream(world.seed, &[tag::MATCH, rep_key, i as u64]);
            let result = simulate_match_with_decisions(&truth, plans, &prep.in_match, &mut rng);
            state.set(i, result.outcome);
            played.push((f, pairs, result.outcome));
        }
        for (f, pairs, outcome) in played {
            pair_counts[f.home][pairs[0]] += 1;
            pair_counts[f.away][pairs[1]] += 1;
            for (team, k) in knowledge.iter_mut().enumerate() {
                if let Some(k) = k {
                    for obs in observations_from_game(pairs[0], pairs[1], outcome, f.side_of(team)) {
                        k.record(&obs)?;
                    }
                }
            }
        }
    }
    let ranks = rank_table(&state.points(schedule), seed::derive(world.seed, &[tag::TIE_BREAK, rep_key]));
    Ok(Replay { ranks, decisions })
}

/// Final ranks of every replicate, `[replicate][team]`.
fn replay_all(prep: &Prepared, optimizers: &[bool], n_reps: usize) -> Result<(Vec<Vec<usize>>, Vec<DecisionLogRow>), LabError> {
    let mut ranks = Vec::with_capacity(n_reps);
    let mut log = Vec::new();
    for rep in 0..n_reps {
        let r = replay_season(prep, optimizers, rep, rep == 0)?;
        if rep == 0 {
            log = r.decisions;
        }
        ranks.push(r.ranks);
    }
    Ok((ranks, log))
}

/// Mean final rank of each team.
pub fn expected_positions(ranks: &[Vec<usize>]) -> Vec<f64> {
    let n = ranks.first().map_or(0, |r| r.len());
    (0..n).map(|t| mean(&ranks.iter().map(|r| r[t] as f64).collect::<Vec<_>>())).collect()
}

/// The team that optimizes alone in world `index`.
pub fn optimized_team(cfg: &ExperimentConfig, world: &World, index: usize) -> Result<TeamIdx, LabError> {
    match &cfg.optimized_team {
        Some(id) => Ok(world.league.index_of(id)?),
        None => {
            let order = world.strength_order();
            let bottom = &order[order.len() - cfg.bottom_k..];
            Ok(bottom[index % bottom.len()])
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerRun {
    pub world_seed: u64,
    pub team: TeamIdx,
    pub team_id: String,
    pub baseline: Vec<Vec<usize>>,
    pub single: Vec<Vec<usize>>,
    pub all: Option<Vec<Vec<usize>>>,
    pub decisions: Vec<DecisionLogRow>,
}

impl OptimizerRun {
    /// Baseline minus optimized mean rank of the optimizing team; positive
    /// is an improvement.
    pub fn single_improvement(&self) -> f64 {
        expected_positions(&self.baseline)[self.team] - expected_positions(&self.single)[self.team]
    }

    /// Mean over teams of |all-teams − baseline| mean rank.
    pub fn all_teams_mean_abs_shift(&self) -> Option<f64> {
        let all = expected_positions(self.all.as_ref()?);
        let base = expected_positions(&self.baseline);
        Some(mean(&all.iter().zip(&base).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()))
    }
}

pub fn optimizer_world(cfg: &ExperimentConfig, world: &World, index: usize, all_teams: bool) -> Result<OptimizerRun, LabError> {
    let prep = Prepared::new(cfg, world)?;
    let n = world.league.len();
    let team = optimized_team(cfg, world, index)?;
    let (baseline, _) = replay_all(&prep, &vec![false; n], cfg.outer_replicates)?;
    let mut single_flags = vec![false; n];
    single_flags[team] = true;
    let (single, decisions) = replay_all(&prep, &single_flags, cfg.outer_replicates)?;
    let all = if all_teams { Some(replay_all(&prep, &vec![true; n], cfg.outer_replicates)?.0) } else { None };
    Ok(OptimizerRun {
        world_seed: world.seed,
        team,
        team_id: world.league.teams()[team].id.clone(),
        baseline,
        single,
        all,
        decisions,
    })
}

fn runs(cfg: &ExperimentConfig, report: &mut Report, all_teams: bool) -> Result<Vec<(World, OptimizerRun)>, LabError> {
    default_bands(cfg.n_teams)?;
    let out = par_map(cfg, cfg.n_seeds, |s| {
        let world = World::generate(cfg, world_seed(cfg, s))?;
        let run = optimizer_world(cfg, &world, s, all_teams)?;
        Ok((world, run))
    })?;
    for (s, (world, _)) in out.iter().enumerate() {
        add_truth(report, world, s);
    }
    Ok(out)
}

fn rank_histogram(ranks: &[Vec<usize>], team: TeamIdx, n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n];
    for r in ranks {
        h[r[team] - 1] += 1.0;
    }
    h.iter().map(|c| c / ranks.len() as f64).collect()
}

pub fn run_experiment4(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let mut report = Report::new("exp4", cfg);
    let out = runs(cfg, &mut report, false)?;
    let mut positions = String::from("world,team_id,baseline_expected_position,optimized_expected_position,improvement\n");
    let mut dist = String::from("world,team_id,arm,rank,probability\n");
    let mut improvements = Vec::new();
    let mut base_means = Vec::new();
    let mut opt_means = Vec::new();
    for (s, (world, run)) in out.iter().enumerate() {
        let b = expected_positions(&run.baseline)[run.team];
        let o = expected_positions(&run.single)[run.team];
        let _ = writeln!(positions, "{s},{},{b},{o},{}", run.team_id, b - o);
        for (arm, ranks) in [("baseline", &run.baseline), ("optimized", &run.single)] {
            for (k, p) in rank_histogram(ranks, run.team, world.league.len()).iter().enumerate() {
                let _ = writeln!(dist, "{s},{},{arm},{},{p}", run.team_id, k + 1);
            }
        }
        report.artifact(format!("decisions/world_{s:02}.csv"), csv_string(|w| write_decision_log(w, &run.decisions)));
        improvements.push(b - o);
        base_means.push(b);
        opt_means.push(o);
    }
    report.artifact("exp4_positions.csv", positions);
    report.artifact("exp4_distributions.csv", dist);

    let wins = improvements.iter().filter(|&&d| d > 0.0).count();
    report.metric("n_worlds", out.len());
    report.metric("outer_replicates", cfg.outer_replicates);
    report.metric("worlds_improved", wins);
    report.metric("sign_test_p", sign_test_p(wins, improvements.len()));
    report.metric("mean_improvement", mean(&improvements));
    report.metric("mean_baseline_position", mean(&base_means));
    report.metric("mean_optimized_position", mean(&opt_means));
    report.metric("relative_improvement_percent", 100.0 * mean(&improvements) / mean(&base_means));
    Ok(report)
}

pub fn run_all_teams(cfg: &ExperimentConfig) -> Result<Report, LabError> {
    let mut report = Report::new("all_teams", cfg);
    let out = runs(cfg, &mut report, true)?;
    let mut shifts = String::from("world,team_id,baseline_expected_position,all_teams_expected_position,shift\n");
    let mut per_world = String::from("world,mean_abs_shift,single_team_id,single_team_improvement,same_team_all_teams_improvement\n");
    let (mut abs_shifts, mut single_gain, mut shared_gain) = (vec![], vec![], vec![]);
    for (s, (world, run)) in out.iter().enumerate() {
        let base = expected_positions(&run.baseline);
        let all = expected_positions(run.all.as_ref().expect("all-teams arm was run"));
        for t in 0..base.len() {
            let _ = writeln!(shifts, "{s},{},{},{},{}", world.league.teams()[t].id, base[t], all[t], base[t] - all[t]);
        }
        let m = run.all_teams_mean_abs_shift().expect("all-teams arm was run");
        let single = run.single_improvement();
        let shared = base[run.team] - all[run.team];
        let _ = writeln!(per_world, "{s},{m},{},{single},{shared}", run.team_id);
        abs_shifts.push(m);
        single_gain.push(single);
        shared_gain.push(shared);
    }
    report.artifact("all_teams_shifts.csv", shifts);
    report.artifact("all_teams_per_world.csv", per_world);
    report.metric("n_worlds", out.len());
    report.metric("outer_replicates", cfg.outer_replicates);
    report.metric("mean_abs_shift", mean(&abs_shifts));
    report.metric("max_world_mean_abs_shift", abs_shifts.iter().copied().fold(0.0, f64::max));
    report.metric("mean_single_team_improvement", mean(&single_gain));
    report.metric("mean_same_team_all_teams_improvement", mean(&shared_gain));
    Ok(report)
}
