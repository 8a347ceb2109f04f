//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! fails. Runs without the libtest harness so the lines always reach the
//! console; tolerances are pinned next to each check.

use std::collections::HashSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use season_core::league::{generate_schedule, Fixture, Outcome, SeasonState, Side};
use season_core::objectives::{default_bands, map_objective, objective_probabilities_from_row, ObjectiveId};
use season_core::outcome::{
    mean_loss, mean_loss_gradient, ClassifierParams, EncodedMatch, FeatureLayout, ModelError, OutcomeDistribution,
    TacticCatalog, TacticPair, TacticPredictor, TrainingExample,
};
use season_core::prior::{compute_weight, CellCounts, DrawCredit, WeightMatrix};
use season_core::season_sim::{simulate_remaining, SimulationConfig};
use season_core::tactics::{build_payoff_table, choose_tactic, DecisionPolicy, OpponentBelief, PolicyConfig};
use season_lab::experiments::{run_all_teams, run_experiment1, run_experiment2, run_experiment3, run_experiment4};
use season_lab::report::Report;
use season_lab::ExperimentConfig;

struct Verdict {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    secs: f64,
}

fn check(id: usize, name: &'static str, f: impl FnOnce() -> (bool, String)) -> Verdict {
    let start = Instant::now();
    let (pass, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panicked: {}", msg.unwrap_or_default()))
        }
    };
    let v = Verdict { id, name, pass, detail, secs: start.elapsed().as_secs_f64() };
    println!(
        "criterion {:>2} {} {} ({:.1} s): {}",
        v.id,
        if v.pass { "PASS" } else { "FAIL" },
        v.name,
        v.secs,
        v.detail
    );
    v
}

fn schedule_correctness() -> (bool, String) {
    let mut notes = vec![];
    let mut ok = true;
    for n in [4usize, 6, 20] {
        for seed in [0u64, 17] {
            let s = generate_schedule(n, seed).expect("schedule");
            let mut pairs = HashSet::new();
            let mut busy = HashSet::new();
            let mut good = s.len() == n * (n - 1) && s.n_weeks() == 2 * (n - 1);
            for f in s.fixtures() {
                good &= f.home != f.away && f.home < n && f.away < n;
                good &= pairs.insert((f.home, f.away));
                good &= busy.insert((f.week, f.home)) && busy.insert((f.week, f.away));
            }
            // Every team in every week, every ordered pair exactly once.
            good &= busy.len() == n * s.n_weeks() && pairs.len() == n * (n - 1);
            ok &= good;
        }
        notes.push(format!("n={n}: {} fixtures", n * (n - 1)));
    }
    (ok, notes.join(", "))
}

fn rating_predictor(f: &Fixture) -> OutcomeDistribution {
    let eta = 0.1 * (f.away as f64 - f.home as f64) + 0.25;
    let home = 1.0 / (1.0 + (0.5 - eta).exp());
    let away = 1.0 / (1.0 + (0.5 + eta).exp());
    OutcomeDistribution::new(home, 1.0 - home - away, away).expect("valid")
}

fn double_stochastic() -> (bool, String) {
    let s = generate_schedule(20, 3).expect("schedule");
    let d = simulate_remaining(&s, &SeasonState::empty(&s), &rating_predictor, &SimulationConfig::new(2000, 11).with_workers(1))
        .expect("simulation");
    let rows_ok = (0..20).all(|t| d.row_counts(t).iter().sum::<u64>() == 2000);
    let cols_ok = (1..=20).all(|r| (0..20).map(|t| d.count(t, r)).sum::<u64>() == 2000);
    let ok = rows_ok && cols_ok && d.is_doubly_stochastic();
    (ok, format!("20 teams x 2000 replicates, integer row and column sums {}", if ok { "all 2000" } else { "off" }))
}

fn forced_champion() -> (bool, String) {
    let s = generate_schedule(20, 8).expect("schedule");
    let champion = 13;
    let predictor = |f: &Fixture| {
        if f.home == champion {
            OutcomeDistribution::certain(Outcome::HomeWin)
        } else if f.away == champion {
            OutcomeDistribution::certain(Outcome::AwayWin)
        } else {
            rating_predictor(f)
        }
    };
    let d = simulate_remaining(&s, &SeasonState::empty(&s), &predictor, &SimulationConfig::new(2000, 5).with_workers(1))
        .expect("simulation");
    let p = d.prob(champion, 1);
    (p == 1.0, format!("P(rank 1) = {p}"))
}

fn map_on_example_histogram() -> (bool, String) {
    let bars = [0., 0., 0., 0., 1., 1., 2., 3., 6., 8., 11., 14., 17., 21., 20., 13., 7., 5., 3., 2.];
    let total: f64 = bars.iter().sum();
    let row: Vec<f64> = bars.iter().map(|b| b / total).collect();
    let probs = objective_probabilities_from_row(&row, &default_bands(20).expect("bands")).expect("probs");
    let map = map_objective(&probs);
    (map.id == ObjectiveId::O5 && !map.at_risk, format!("MAP {} with p = {:.4}", map.id, probs.get(map.id)))
}

fn weight_oracle() -> (bool, String) {
    let cell = CellCounts { played_games: 3, played_wins: 2, observed_games: 5, observed_wins: 1, ..Default::default() };
    let w = compute_weight(&cell, DrawCredit::None, 1.0);
    let empty = compute_weight(&CellCounts::default(), DrawCredit::None, 1.0);
    let ok = (w - 13.0 / 30.0).abs() <= 1e-12 && (empty - 1.0).abs() <= 1e-12;
    (ok, format!("w = {w:.15} (13/30), no evidence = {empty}"))
}

/// Payoff cells looked up from a fixed random table.
struct TablePredictor {
    catalog: TacticCatalog,
    cells: Vec<OutcomeDistribution>,
}

impl TacticPredictor for TablePredictor {
    fn catalog(&self) -> TacticCatalog {
        self.catalog
    }

    fn predict_tactics(&self, _: &Fixture, home: TacticPair, away: TacticPair) -> Result<OutcomeDistribution, ModelError> {
        let n = self.catalog.n_pairs();
        Ok(self.cells[self.catalog.index(home)? * n + self.catalog.index(away)?])
    }
}

fn random_cell(rng: &mut ChaCha8Rng) -> OutcomeDistribution {
    let s: [f64; 3] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
    OutcomeDistribution::from_scores(s)
}

/// Every zero pattern of a 4x4 weight grid (2 styles x 2 formations against
/// the same), every policy, both sides, on several random payoff tables.
fn zero_weight_exclusion() -> (bool, String) {
    let catalog = TacticCatalog::new(2, 2).expect("catalog");
    let n = catalog.n_pairs();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = PolicyConfig::default();
    let fixture = Fixture { week: 0, home: 0, away: 1 };
    let mut decisions = 0u64;
    let mut violations = 0u64;
    for _ in 0..4 {
        let predictor = TablePredictor { catalog, cells: (0..n * n).map(|_| random_cell(&mut rng)).collect() };
        let positive: Vec<f64> = (0..n * n).map(|_| rng.gen_range(0.05..1.0)).collect();
        for side in [Side::Home, Side::Away] {
            let table = build_payoff_table(&fixture, &predictor, side).expect("table");
            for mask in 1u32..(1 << (n * n)) {
                let w: Vec<f64> = (0..n * n).map(|k| if mask >> k & 1 == 1 { positive[k] } else { 0.0 }).collect();
                let weights = WeightMatrix::from_entries(n, w.clone()).expect("weights");
                for policy in [DecisionPolicy::BestResponse, DecisionPolicy::Spiteful, DecisionPolicy::Expectimax] {
                    let choice = choose_tactic(&table, &weights, policy, &OpponentBelief::Uniform, &cfg).expect("choice");
                    let row: f64 = w[choice.action * n..(choice.action + 1) * n].iter().sum();
                    decisions += 1;
                    violations += u64::from(row == 0.0);
                }
            }
        }
    }
    (violations == 0, format!("{decisions} decisions over all 65535 non-empty masks, {violations} zero-weight picks"))
}

fn gradient_check() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for instance in 0..20 {
        let catalog = TacticCatalog::new(rng.gen_range(1..4), rng.gen_range(1..4)).expect("catalog");
        let layout = FeatureLayout::new(catalog, instance % 2 == 0);
        let n = layout.len();
        let data: Vec<TrainingExample> = (0..rng.gen_range(3..9))
            .map(|_| TrainingExample {
                features: EncodedMatch {
                    home_view: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                    away_view: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
                    home_advantage: rng.gen_range(0.0..1.0),
                },
                label: Outcome::from_index(rng.gen_range(0..3)).expect("label"),
            })
            .collect();
        let flat: Vec<f64> = (0..2 * n + 5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let params = ClassifierParams::from_flat(layout, &flat).expect("params");
        let analytic = mean_loss_gradient(&params, &data).expect("gradient");
        let h = 1e-5;
        for k in 0..flat.len() {
            let at = |d: f64| {
                let mut v = flat.clone();
                v[k] += d;
                mean_loss(&ClassifierParams::from_flat(layout, &v).expect("params"), &data).expect("loss")
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    (worst < 1e-5, format!("worst relative error {worst:.2e} over 20 instances (tolerance 1e-5, floor 1e-3)"))
}

/// Spread of each cell's probability across 30 base seeds at 1,000 and
/// 10,000 replicates. Cells averaging outside [0.02, 0.98] are skipped.
fn mc_convergence() -> (bool, String) {
    let s = generate_schedule(20, 21).expect("schedule");
    let state = SeasonState::empty(&s);
    let probs_at = |reps: usize| -> Vec<Vec<f64>> {
        (0..30u64)
            .map(|seed| {
                let d = simulate_remaining(&s, &state, &rating_predictor, &SimulationConfig::new(reps, 1000 + seed).with_workers(1))
                    .expect("simulation");
                (0..20).flat_map(|t| (1..=20).map(move |r| (t, r))).map(|(t, r)| d.prob(t, r)).collect()
            })
            .collect()
    };
    let small = probs_at(1_000);
    let large = probs_at(10_000);
    let stats = |runs: &[Vec<f64>], cell: usize| {
        let xs: Vec<f64> = runs.iter().map(|r| r[cell]).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
    };
    let expected = 10f64.sqrt();
    let (mut cells, mut outside, mut ratio_sum) = (0usize, 0usize, 0.0);
    for cell in 0..400 {
        let (m, sd_small) = stats(&small, cell);
        let (_, sd_large) = stats(&large, cell);
        if !(0.02..=0.98).contains(&m) {
            continue;
        }
        let ratio = sd_small / sd_large;
        cells += 1;
        ratio_sum += ratio;
        outside += usize::from(!(expected / 2.0..=expected * 2.0).contains(&ratio));
    }
    let mean_ratio = ratio_sum / cells as f64;
    (
        cells > 100 && outside == 0,
        format!("{cells} cells, mean sd ratio {mean_ratio:.3} vs sqrt(10) = {expected:.3}, {outside} outside factor 2"),
    )
}

fn metric(r: &Report, key: &str) -> f64 {
    r.number(key).unwrap_or_else(|| panic!("{} has no metric {key}", r.experiment))
}

fn experiment1(cfg: &ExperimentConfig) -> (bool, String) {
    let r = run_experiment1(cfg).expect("exp1");
    let (early, late, rho) = (metric(&r, "early_modal_error"), metric(&r, "late_modal_error"), metric(&r, "spearman_week_modal_error"));
    (late <= early && rho < 0.0, format!("weeks 0-5 error {early:.3}, weeks 30+ error {late:.3}, Spearman {rho:.3}"))
}

fn experiment2(cfg: &ExperimentConfig) -> (bool, String) {
    let r = run_experiment2(cfg).expect("exp2");
    let (max, oracle) = (metric(&r, "max_map_accuracy"), metric(&r, "oracle_accuracy"));
    let curve = r.get_artifact("exp2_per_world.csv").expect("per-world curve");
    let over_cap = curve
        .lines()
        .skip(1)
        .flat_map(|l| l.split(',').skip(2).map(|v| v.parse::<f64>().expect("number")).collect::<Vec<_>>())
        .filter(|&v| v > 85.0)
        .count();
    (
        max <= 85.0 && over_cap == 0 && oracle == 85.0,
        format!("highest weekly MAP accuracy {max}%, {over_cap} points above 85%, oracle {oracle}%"),
    )
}

fn experiment3(cfg: &ExperimentConfig) -> (bool, String) {
    let r = run_experiment3(cfg).expect("exp3");
    let wins = metric(&r, "worlds_with_weights_better");
    let p = metric(&r, "sign_test_p");
    let zero = metric(&r, "zero_effect_mean_difference");
    (
        wins >= 16.0 && p < 0.05 && zero.abs() < 0.005,
        format!(
            "with weights better in {wins}/20 worlds (p = {p:.2e}), accuracy {:.4} vs {:.4}; zero-effect difference {:+.4}",
            metric(&r, "accuracy_with_weights"),
            metric(&r, "accuracy_without_weights"),
            zero
        ),
    )
}

fn experiment4(exp4: &Report, all: &Report) -> (bool, String) {
    let improved = metric(exp4, "worlds_improved");
    let gain = metric(exp4, "mean_improvement");
    let shift = metric(all, "mean_abs_shift");
    let shared = metric(all, "mean_same_team_all_teams_improvement");
    (
        improved >= 16.0 && gain > 0.5 && shift < 1.0,
        format!(
            "single team improved in {improved}/20 worlds by {gain:.3} positions; all-teams mean |shift| {shift:.3} (same team alone {gain:.3} vs all {shared:.3})"
        ),
    )
}

fn byte_identical(a: &Report, b: &Report) -> bool {
    a.artifacts == b.artifacts && a.summary_json() == b.summary_json()
}

fn determinism(cfg: &ExperimentConfig, first: &Report) -> (bool, String) {
    let parallel = run_experiment4(&ExperimentConfig { workers: 2, ..cfg.clone() }).expect("exp4");
    let small = ExperimentConfig { n_seeds: 3, outer_replicates: 6, inner_replicates: 50, ..cfg.clone() };
    let runs: Vec<Report> = [1, 1, 3]
        .into_iter()
        .map(|workers| run_experiment4(&ExperimentConfig { workers, ..small.clone() }).expect("exp4"))
        .collect();
    let ok = byte_identical(first, &parallel) && byte_identical(&runs[0], &runs[1]) && byte_identical(&runs[0], &runs[2]);
    (
        ok,
        format!(
            "default config 1 vs 2 workers over {} artifacts; small config 1, 1, 3 workers over {} artifacts",
            first.artifacts.len(),
            runs[0].artifacts.len()
        ),
    )
}

fn main() {
    let cfg = ExperimentConfig::default();
    // Experiment 3's criterion asks for strong tactic effects.
    let strong = ExperimentConfig { tactic_interaction: 0.9, ..cfg.clone() };
    let mut verdicts = vec![
        check(1, "schedule correctness", schedule_correctness),
        check(2, "position distribution is doubly stochastic", double_stochastic),
        check(3, "forced champion", forced_champion),
        check(4, "MAP objective on the example histogram", map_on_example_histogram),
        check(5, "weight oracle", weight_oracle),
        check(6, "zero-weight exclusion", zero_weight_exclusion),
        check(7, "classifier gradient check", gradient_check),
        check(8, "Monte-Carlo convergence", mc_convergence),
        check(9, "experiment 1 shape", || experiment1(&cfg)),
        check(10, "experiment 2 cap", || experiment2(&cfg)),
        check(11, "experiment 3 direction", || experiment3(&strong)),
    ];
    let mut reports: Option<(Report, Report)> = None;
    verdicts.push(check(12, "experiment 4 direction", || {
        let exp4 = run_experiment4(&cfg).expect("exp4");
        let all = run_all_teams(&cfg).expect("all-teams");
        let verdict = experiment4(&exp4, &all);
        reports = Some((exp4, all));
        verdict
    }));
    verdicts.push(match &reports {
        Some((exp4, _)) => check(13, "determinism", || determinism(&cfg, exp4)),
        None => check(13, "determinism", || (false, "experiment 4 did not run".into())),
    });
    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect();
    println!("acceptance: {} of {} criteria pass", verdicts.len() - failed.len(), verdicts.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
