//! Pre-match tactic selection over payoff tables and coarse in-match
//! decisions on a score-line chain.

use std::io;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::league::{Fixture, Outcome, Side};
use crate::objectives::{ObjectiveId, ObjectiveProbabilities};
use crate::outcome::{ModelError, OutcomeDistribution, TacticCatalog, TacticPair, TacticPredictor};
use crate::prior::{PriorError, WeightMatrix};
use crate::seed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TacticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Prior(#[from] PriorError),
    #[error("invalid tactic configuration: {0}")]
    Config(String),
}

/// Outcome distributions for every pairing of our action (row) with the
/// opponent's (column). Cells are from the home side's point of view.
#[derive(Clone, Debug, PartialEq)]
pub struct PayoffTable {
    pub catalog: TacticCatalog,
    pub side: Side,
    cells: Vec<OutcomeDistribution>,
}

impl PayoffTable {
    pub fn n_actions(&self) -> usize {
        self.catalog.n_pairs()
    }

    pub fn cell(&self, ours: usize, theirs: usize) -> OutcomeDistribution {
        self.cells[ours * self.n_actions() + theirs]
    }

    /// The grid against one opponent action: `grid[formation][style]`.
    pub fn grid(&self, theirs: usize) -> Vec<Vec<OutcomeDistribution>> {
        let c = self.catalog;
        (0..c.n_formations)
            .map(|f| (0..c.n_styles).map(|s| self.cell(s * c.n_formations + f, theirs)).collect())
            .collect()
    }
}

pub fn build_payoff_table<P: TacticPredictor + ?Sized>(
    fixture: &Fixture,
    predictor: &P,
    side: Side,
) -> Result<PayoffTable, TacticError> {
    let catalog = predictor.catalog();
    let n = catalog.n_pairs();
    let mut cells = Vec::with_capacity(n * n);
    for x in 0..n {
        for y in 0..n {
            let (ours, theirs) = (catalog.pair(x)?, catalog.pair(y)?);
            let d = match side {
                Side::Home => predictor.predict_tactics(fixture, ours, theirs)?,
                Side::Away => predictor.predict_tactics(fixture, theirs, ours)?,
            };
            cells.push(d);
        }
    }
    Ok(PayoffTable { catalog, side, cells })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionPolicy {
    BestResponse,
    Spiteful,
    Expectimax,
}

impl DecisionPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            DecisionPolicy::BestResponse => "best_response",
            DecisionPolicy::Spiteful => "spiteful",
            DecisionPolicy::Expectimax => "expectimax",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    /// Below this chance of meeting the objective a team is behind.
    pub on_track_low: f64,
    /// Above this it is well ahead.
    pub on_track_high: f64,
    /// Share of the best-response payoff in the expectimax mix.
    pub expectimax_weight: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig { on_track_low: 0.4, on_track_high: 0.75, expectimax_weight: 0.5 }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), TacticError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.on_track_low) && unit(self.on_track_high) && unit(self.expectimax_weight)) {
            return Err(TacticError::Config("policy thresholds and weights must lie in [0, 1]".into()));
        }
        if self.on_track_low > self.on_track_high {
            return Err(TacticError::Config("on_track_low exceeds on_track_high".into()));
        }
        Ok(())
    }
}

pub fn scalar_payoff(cell: &OutcomeDistribution, policy: DecisionPolicy, side: Side) -> f64 {
    scalar_payoff_with(cell, policy, side, PolicyConfig::default().expectimax_weight)
}

pub fn scalar_payoff_with(cell: &OutcomeDistribution, policy: DecisionPolicy, side: Side, expectimax_weight: f64) -> f64 {
    let best = cell.win(side);
    let spite = 1.0 - cell.win(side.opposite());
    match policy {
        DecisionPolicy::BestResponse => best,
        DecisionPolicy::Spiteful => spite,
        DecisionPolicy::Expectimax => expectimax_weight * best + (1.0 - expectimax_weight) * spite,
    }
}

/// Chance of finishing in the objective's band or a more ambitious one.
pub fn objective_on_track(objective: ObjectiveId, probs: &ObjectiveProbabilities) -> f64 {
    probs.ids.iter().zip(&probs.p).filter(|(&id, _)| id <= objective).map(|(_, p)| p).sum()
}

pub fn select_policy(objective: ObjectiveId, probs: &ObjectiveProbabilities, config: &PolicyConfig) -> DecisionPolicy {
    let p = objective_on_track(objective, probs);
    if p < config.on_track_low {
        DecisionPolicy::BestResponse
    } else if p > config.on_track_high {
        DecisionPolicy::Spiteful
    } else {
        DecisionPolicy::Expectimax
    }
}

/// What we expect the opponent to play.
#[derive(Clone, Debug, PartialEq)]
pub enum OpponentBelief {
    Uniform,
    /// Probabilities over the opponent's pairs.
    Distribution(Vec<f64>),
}

impl OpponentBelief {
    /// Smoothed frequencies of the pairs an opponent has been seen using.
    pub fn from_frequencies(counts: &[u64], smoothing: f64) -> Self {
        let total = counts.iter().sum::<u64>() as f64 + smoothing * counts.len() as f64;
        if total <= 0.0 {
            return OpponentBelief::Uniform;
        }
        OpponentBelief::Distribution(counts.iter().map(|&c| (c as f64 + smoothing) / total).collect())
    }

    fn probabilities(&self, n: usize) -> Result<Vec<f64>, TacticError> {
        match self {
            OpponentBelief::Uniform => Ok(vec![1.0 / n as f64; n]),
            OpponentBelief::Distribution(p) => {
                if p.len() != n {
                    return Err(TacticError::Config(format!("belief over {} actions, catalog has {n}", p.len())));
                }
                let sum: f64 = p.iter().sum();
                if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(TacticError::Config("opponent belief is not a distribution".into()));
                }
                Ok(p.clone())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TacticChoice {
    pub action: usize,
    pub pair: TacticPair,
    pub expected_payoff: f64,
}

/// Maximises the belief-averaged weighted payoff. Actions whose weight is
/// zero against every opponent action the belief allows are ruled out while
/// any other action remains. Ties go to the lowest action index.
pub fn choose_tactic(
    table: &PayoffTable,
    weights: &WeightMatrix,
    policy: DecisionPolicy,
    belief: &OpponentBelief,
    config: &PolicyConfig,
) -> Result<TacticChoice, TacticError> {
    let n = table.n_actions();
    if n == 0 {
        return Err(TacticError::Config("empty tactic catalog".into()));
    }
    if weights.n_pairs() != n {
        return Err(PriorError::Shape { expected: n, found: weights.n_pairs() }.into());
    }
    let b = belief.probabilities(n)?;
    let mut scored = Vec::with_capacity(n);
    for x in 0..n {
        let (mut value, mut mass) = (0.0, 0.0);
        for (y, &by) in b.iter().enumerate() {
            let w = weights.get(x, y)?;
            mass += by * w;
            value += by * w * scalar_payoff_with(&table.cell(x, y), policy, table.side, config.expectimax_weight);
        }
        scored.push((value, mass));
    }
    let any_positive = scored.iter().any(|&(_, m)| m > 0.0);
    let mut best: Option<usize> = None;
    for (x, &(value, mass)) in scored.iter().enumerate() {
        if any_positive && mass <= 0.0 {
            continue;
        }
        if best.map_or(true, |b| value > scored[b].0) {
            best = Some(x);
        }
    }
    let action = best.expect("at least one action is eligible");
    Ok(TacticChoice { action, pair: table.catalog.pair(action)?, expected_payoff: scored[action].0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InMatchPolicy {
    Aggressive,
    Reserved,
}

/// Score line from one team's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScoreState {
    Losing,
    Drawing,
    Winning,
}

/// Score line from the home side's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScoreLine {
    AwayLeading,
    Level,
    HomeLeading,
}

impl ScoreLine {
    fn index(self) -> usize {
        self as usize
    }

    fn from_index(i: usize) -> ScoreLine {
        [ScoreLine::AwayLeading, ScoreLine::Level, ScoreLine::HomeLeading][i]
    }

    pub fn for_side(self, side: Side) -> ScoreState {
        match (self, side) {
            (ScoreLine::Level, _) => ScoreState::Drawing,
            (ScoreLine::HomeLeading, Side::Home) | (ScoreLine::AwayLeading, Side::Away) => ScoreState::Winning,
            _ => ScoreState::Losing,
        }
    }

    pub fn outcome(self) -> Outcome {
        match self {
            ScoreLine::AwayLeading => Outcome::AwayWin,
            ScoreLine::Level => Outcome::Draw,
            ScoreLine::HomeLeading => Outcome::HomeWin,
        }
    }

    fn from_outcome(o: Outcome) -> ScoreLine {
        match o {
            Outcome::AwayWin => ScoreLine::AwayLeading,
            Outcome::Draw => ScoreLine::Level,
            Outcome::HomeWin => ScoreLine::HomeLeading,
        }
    }
}

/// Push for a better score when behind, hold when ahead. When level, hold
/// if a draw is worth at least `threshold` to the team: `draw_value` is the
/// chance of meeting the objective given a draw this week.
pub fn in_match_policy(state: ScoreState, draw_value: f64, threshold: f64) -> InMatchPolicy {
    match state {
        ScoreState::Losing => InMatchPolicy::Aggressive,
        ScoreState::Winning => InMatchPolicy::Reserved,
        ScoreState::Drawing if draw_value >= threshold => InMatchPolicy::Reserved,
        ScoreState::Drawing => InMatchPolicy::Aggressive,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InMatchConfig {
    /// Minute of each decision point.
    pub decision_minutes: Vec<u32>,
    /// Scale of the per-interval transition probabilities.
    pub volatility: f64,
    /// Probability mass a policy moves per decision.
    pub delta: f64,
    /// Extra chance of conceding per unit of `delta` when pushing forward.
    pub risk: f64,
    pub draw_threshold: f64,
}

impl Default for InMatchConfig {
    fn default() -> Self {
        InMatchConfig { decision_minutes: vec![30, 60, 80], volatility: 0.3, delta: 0.05, risk: 0.5, draw_threshold: 0.5 }
    }
}

impl InMatchConfig {
    pub fn validate(&self) -> Result<(), TacticError> {
        if ![self.volatility, self.delta, self.risk].iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(TacticError::Config("volatility, delta and risk must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A side that makes in-match decisions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InMatchPlan {
    pub draw_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchResult {
    pub outcome: Outcome,
    /// Decisions taken by the home and away side.
    pub aggressive: [u32; 2],
    pub reserved: [u32; 2],
}

/// Transition row out of `line` with no decisions applied. Moves between
/// adjacent score lines satisfy detailed balance with respect to the
/// pre-match distribution, so that distribution is stationary.
pub fn base_transition(pre: &OutcomeDistribution, line: ScoreLine, volatility: f64) -> [f64; 3] {
    let pi = [pre.p_away, pre.p_draw, pre.p_home];
    let mut row = [0.0; 3];
    match line {
        ScoreLine::Level => {
            row[0] = volatility * pi[0];
            row[2] = volatility * pi[2];
        }
        _ => row[1] = volatility * pi[1],
    }
    row[line.index()] = 1.0 - row.iter().sum::<f64>();
    row
}

/// Shifts `row` (out of `line`) by one side's policy.
///
/// Aggressive adds `delta` to the move toward a better score line and, when
/// there is a worse one, `risk * delta` to the move toward it: pushing
/// forward leaves gaps at the back. Both come out of the chance of staying
/// put, scaled down together if that chance is too small. Reserved moves
/// `delta` from the two moves back into staying put, proportionally.
pub fn apply_policy(row: &mut [f64; 3], line: ScoreLine, side: Side, policy: InMatchPolicy, delta: f64, risk: f64) {
    let stay = line.index();
    let (up, down) = match side {
        Side::Home => (stay + 1, stay.wrapping_sub(1)),
        Side::Away => (stay.wrapping_sub(1), stay + 1),
    };
    match policy {
        InMatchPolicy::Aggressive => {
            if up > 2 {
                return;
            }
            let exposed = if down <= 2 { risk * delta } else { 0.0 };
            let wanted = delta + exposed;
            if wanted <= 0.0 {
                return;
            }
            let scale = (row[stay] / wanted).min(1.0);
            row[stay] -= wanted * scale;
            row[up] += delta * scale;
            if down <= 2 {
                row[down] += exposed * scale;
            }
        }
        InMatchPolicy::Reserved => {
            let moving: f64 = (0..3).filter(|&i| i != stay).map(|i| row[i]).sum();
            if moving <= 0.0 {
                return;
            }
            let take = delta.min(moving);
            for i in (0..3).filter(|&i| i != stay) {
                row[i] -= take * row[i] / moving;
            }
            row[stay] += take;
        }
    }
}

/// Plays one match on the score-line chain. The opening state is drawn from
/// the pre-match distribution; at each decision point every side with a plan
/// picks a policy for its current score state, the policies reshape the
/// transition row and the chain takes one step.
pub fn simulate_match_with_decisions<R: Rng + ?Sized>(
    pre: &OutcomeDistribution,
    plans: [Option<InMatchPlan>; 2],
    config: &InMatchConfig,
    rng: &mut R,
) -> MatchResult {
    let mut line = ScoreLine::from_outcome(pre.sample_with(rng.gen::<f64>()));
    let mut aggressive = [0; 2];
    let mut reserved = [0; 2];
    for _ in &config.decision_minutes {
        let mut row = base_transition(pre, line, config.volatility);
        for (k, side) in [Side::Home, Side::Away].into_iter().enumerate() {
            if let Some(plan) = plans[k] {
                let policy = in_match_policy(line.for_side(side), plan.draw_value, config.draw_threshold);
                match policy {
                    InMatchPolicy::Aggressive => aggressive[k] += 1,
                    InMatchPolicy::Reserved => reserved[k] += 1,
                }
                apply_policy(&mut row, line, side, policy, config.delta, config.risk);
            }
        }
        let u = rng.gen::<f64>();
        line = if u < row[0] {
            ScoreLine::from_index(0)
        } else if u < row[0] + row[1] {
            ScoreLine::from_index(1)
        } else {
            ScoreLine::from_index(2)
        };
    }
    MatchResult { outcome: line.outcome(), aggressive, reserved }
}

/// Predicts the fixture under the chosen tactics and plays it on a stream
/// keyed by `seed`.
pub fn play_fixture<P: TacticPredictor + ?Sized>(
    fixture: &Fixture,
    tactics: (TacticPair, TacticPair),
    predictor: &P,
    plans: [Option<InMatchPlan>; 2],
    config: &InMatchConfig,
    seed: u64,
) -> Result<MatchResult, TacticError> {
    let pre = predictor.predict_tactics(fixture, tactics.0, tactics.1)?;
    let mut rng = seed::stream(seed, &[seed::tag::MATCH]);
    Ok(simulate_match_with_decisions(&pre, plans, config, &mut rng))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecisionLogRow {
    pub week: usize,
    pub team_id: String,
    pub policy: DecisionPolicy,
    pub pair: TacticPair,
    pub expected_payoff: f64,
}

pub fn write_decision_log<'a, W: io::Write>(mut out: W, rows: impl IntoIterator<Item = &'a DecisionLogRow>) -> io::Result<()> {
    writeln!(out, "week,team_id,policy,our_style,our_formation,expected_payoff")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.week,
            r.team_id,
            r.policy.as_str(),
            r.pair.style,
            r.pair.formation,
            r.expected_payoff
        )?;
    }
    Ok(())
}
