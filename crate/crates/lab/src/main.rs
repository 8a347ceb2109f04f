use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use season_core::league::{write_fixtures, write_results};
use season_core::objectives::{default_bands, map_objective, objective_probabilities, write_trace_csv, TraceRow};
use season_core::outcome::{fit_strengths, TacticCatalog};
use season_core::prior::{init_weights, observations_from_game, read_weights_csv, write_weights_csv, PriorKnowledge};
use season_core::season_sim::{simulate_remaining, write_distribution_csv, SimulationConfig};
use season_core::seed::{self, tag};
use season_lab::experiments::{run_all_teams, run_experiment1, run_experiment2, run_experiment3, run_experiment4, world_seed};
use season_lab::ingest::{ingest, write_tactics, LeagueData};
use season_lab::modeling::fit_config;
use season_lab::report::{csv_string, Report};
use season_lab::world::World;
use season_lab::ExperimentConfig;

/// Season simulation, fluent objectives and tactic optimization experiments.
#[derive(Parser)]
#[command(name = "season-lab", version)]
struct Cli {
    /// Flat TOML config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct LeagueInput {
    /// `week,home_id,away_id`. Without it a synthetic league is generated.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// `week,home_id,away_id,outcome` with outcome H, D or A.
    #[arg(long)]
    results: Option<PathBuf>,
    /// `week,home_id,away_id,home_style,home_formation,away_style,away_formation`.
    #[arg(long)]
    tactics: Option<PathBuf>,
    /// Last completed week when generating a synthetic league.
    #[arg(long, default_value_t = 19)]
    played_weeks: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the rest of a season and write the finishing-position distribution.
    Simulate(LeagueInput),
    /// Simulate, then write every team's objective probabilities and MAP objective.
    Objective(LeagueInput),
    /// Build a team's (or the league's) tactic weight matrix from played games.
    Weights {
        #[command(flatten)]
        input: LeagueInput,
        /// Team whose own games count as played; others are observed.
        #[arg(long)]
        team: Option<String>,
        /// Weights CSV from a previous season to start from.
        #[arg(long)]
        carry_over: Option<PathBuf>,
    },
    /// Rank-error curve of weekly forecasts.
    Exp1,
    /// Accuracy of the weekly objective.
    Exp2,
    /// Prediction with and without weight-matrix features.
    Exp3,
    /// One optimizing team against the baseline.
    Exp4,
    /// Every team optimizing at once.
    AllTeams,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads the given CSVs, or generates a world and keeps its first
/// `played_weeks` weeks of results (writing the inputs next to the output).
fn league_input(cfg: &ExperimentConfig, input: &LeagueInput, out: &Path) -> Result<LeagueData> {
    let catalog = TacticCatalog::new(cfg.n_styles, cfg.n_formations)?;
    if let Some(fixtures) = &input.fixtures {
        return Ok(ingest(fixtures, input.results.as_deref(), input.tactics.as_deref(), catalog)?);
    }
    if input.results.is_some() || input.tactics.is_some() {
        bail!("--results and --tactics need --fixtures");
    }
    let world = World::generate(cfg, world_seed(cfg, 0))?;
    let season = &world.current;
    let state = season.state().truncated(&season.schedule, input.played_weeks);
    let records: Vec<_> = season.before_week(input.played_weeks).copied().collect();
    fs::create_dir_all(out)?;
    fs::write(out.join("fixtures.csv"), csv_string(|w| write_fixtures(w, &world.league, &season.schedule)))?;
    fs::write(out.join("results.csv"), csv_string(|w| write_results(w, &world.league, &season.schedule, &state)))?;
    fs::write(out.join("tactics.csv"), csv_string(|w| write_tactics(w, &world.league, &records, catalog)))?;
    Ok(ingest(&out.join("fixtures.csv"), Some(&out.join("results.csv")), Some(&out.join("tactics.csv")), catalog)?)
}

fn simulate(cfg: &ExperimentConfig, data: &LeagueData) -> Result<season_core::season_sim::PositionDistribution> {
    let results: Vec<_> = data.state.completed(&data.schedule).collect();
    let model = fit_strengths(&data.league, &results, &fit_config(cfg)).context("fitting team strengths")?;
    let sim = SimulationConfig::new(cfg.replicates, seed::derive(cfg.seed, &[tag::REPLICATE])).with_workers(cfg.workers);
    Ok(simulate_remaining(&data.schedule, &data.state, &model, &sim)?)
}

fn write_report(report: &Report, out: &Path) -> Result<()> {
    report.write(out)?;
    println!("{}", report.summary_json().trim_end());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Simulate(input) => {
            let data = league_input(&cfg, input, out)?;
            let d = simulate(&cfg, &data)?;
            let ids: Vec<String> = data.league.teams().iter().map(|t| t.id.clone()).collect();
            fs::create_dir_all(out)?;
            let path = out.join("positions.csv");
            fs::write(&path, csv_string(|w| write_distribution_csv(w, &ids, &d, cfg.seed)))?;
            println!("wrote {}", path.display());
        }
        Command::Objective(input) => {
            let data = league_input(&cfg, input, out)?;
            let bands = default_bands(data.league.len())?;
            let d = simulate(&cfg, &data)?;
            let week = (0..data.schedule.len())
                .filter(|&i| data.state.outcome(i).is_some())
                .map(|i| data.schedule.fixtures()[i].week + 1)
                .max()
                .unwrap_or(0);
            let probs = (0..data.league.len()).map(|t| objective_probabilities(&d, t, &bands)).collect::<Result<Vec<_>, _>>()?;
            let rows = data.league.teams().iter().zip(&probs).map(|(team, p)| TraceRow {
                week,
                team_id: &team.id,
                objective: map_objective(p),
                probs: p,
            });
            fs::create_dir_all(out)?;
            let path = out.join("objectives.csv");
            fs::write(&path, csv_string(|w| write_trace_csv(w, rows)))?;
            println!("wrote {}", path.display());
        }
        Command::Weights { input, team, carry_over } => {
            let data = league_input(&cfg, input, out)?;
            let catalog = TacticCatalog::new(cfg.n_styles, cfg.n_formations)?;
            let init = match carry_over {
                Some(path) => read_weights_csv(fs::File::open(path).with_context(|| path.display().to_string())?)?,
                None => init_weights(catalog.n_pairs())?,
            };
            if init.n_pairs() != catalog.n_pairs() {
                bail!("carried-over matrix has {} pairs, the catalog {}", init.n_pairs(), catalog.n_pairs());
            }
            let me = team.as_deref().map(|id| data.league.index_of(id)).transpose()?;
            let mut knowledge = PriorKnowledge::new(init, cfg.draw_credit);
            for r in data.match_records(catalog)? {
                let ours = me.and_then(|t| r.fixture.side_of(t));
                for obs in observations_from_game(r.home_pair, r.away_pair, r.outcome, ours) {
                    knowledge.record(&obs)?;
                }
            }
            fs::create_dir_all(out)?;
            let path = out.join("weights.csv");
            fs::write(&path, csv_string(|w| write_weights_csv(w, &knowledge.weights(), &knowledge.counts)))?;
            println!("wrote {}", path.display());
        }
        Command::Exp1 => write_report(&run_experiment1(&cfg)?, out)?,
        Command::Exp2 => write_report(&run_experiment2(&cfg)?, out)?,
        Command::Exp3 => write_report(&run_experiment3(&cfg)?, out)?,
        Command::Exp4 => write_report(&run_experiment4(&cfg)?, out)?,
        Command::AllTeams => write_report(&run_all_teams(&cfg)?, out)?,
    }
    Ok(())
}
