//! Experiment configuration: a flat `key = value` TOML file.
//!
//! Every key is optional and falls back to the desk-scale default. Unknown
//! keys are rejected so that a typo cannot silently leave a default in place.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use season_core::prior::DrawCredit;
use season_core::tactics::{InMatchConfig, PolicyConfig};

use crate::LabError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Root of every random stream in a run.
    pub seed: u64,
    /// Independent synthetic worlds per experiment.
    pub n_seeds: usize,
    pub workers: usize,

    pub n_teams: usize,
    pub n_styles: usize,
    pub n_formations: usize,

    /// Replicates per weekly season simulation.
    pub replicates: usize,
    /// Replicates of the optimizer's own weekly look-ahead.
    pub inner_replicates: usize,
    /// Replayed seasons per world and arm in the intervention experiments.
    pub outer_replicates: usize,

    // Synthetic generator.
    pub strength_sd: f64,
    pub home_advantage: f64,
    pub draw_margin: f64,
    pub drift_sd: f64,
    pub tactic_main_effect: f64,
    pub tactic_interaction: f64,
    /// A league where no tactic is better than another on average: the
    /// interaction matrix breaks even against a uniform mix and favourite
    /// pairs are spread evenly over the teams, so matchups only reward
    /// countering a particular opponent.
    pub symmetric_tactics: bool,
    /// Probability that a team plays its favourite style/formation pair.
    pub habit_strength: f64,

    // Model fitting.
    pub fit_iterations: usize,
    pub classifier_epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,

    // Optimizer.
    pub draw_credit: DrawCredit,
    pub on_track_low: f64,
    pub on_track_high: f64,
    pub expectimax_weight: f64,
    pub decision_minutes: Vec<u32>,
    pub volatility: f64,
    pub aggression_delta: f64,
    pub aggression_risk: f64,
    pub draw_threshold: f64,
    pub belief_smoothing: f64,
    /// Team that optimizes in the single-team arm. Unset: one of the
    /// generator's `bottom_k` weakest teams, rotating with the world seed.
    pub optimized_team: Option<String>,
    pub bottom_k: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let policy = PolicyConfig::default();
        let in_match = InMatchConfig::default();
        ExperimentConfig {
            seed: 2024,
            n_seeds: 20,
            workers: 1,
            n_teams: 20,
            n_styles: 2,
            n_formations: 2,
            replicates: 2000,
            inner_replicates: 200,
            outer_replicates: 40,
            strength_sd: 0.3,
            home_advantage: 0.3,
            draw_margin: 0.55,
            drift_sd: 0.1,
            tactic_main_effect: 0.15,
            tactic_interaction: 0.6,
            symmetric_tactics: true,
            habit_strength: 0.55,
            fit_iterations: 300,
            classifier_epochs: 40,
            learning_rate: 0.05,
            l2: 0.01,
            draw_credit: DrawCredit::None,
            on_track_low: policy.on_track_low,
            on_track_high: policy.on_track_high,
            expectimax_weight: policy.expectimax_weight,
            decision_minutes: in_match.decision_minutes,
            volatility: in_match.volatility,
            aggression_delta: in_match.delta,
            aggression_risk: in_match.risk,
            draw_threshold: in_match.draw_threshold,
            belief_smoothing: 1.0,
            optimized_team: None,
            bottom_k: 8,
        }
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if self.n_teams < 4 || self.n_teams % 2 != 0 {
            return Err(invalid(format!("n_teams must be even and at least 4, got {}", self.n_teams)));
        }
        if self.n_styles == 0 || self.n_formations == 0 {
            return Err(invalid("tactic catalogs must be non-empty"));
        }
        for (name, v) in [
            ("n_seeds", self.n_seeds),
            ("workers", self.workers),
            ("replicates", self.replicates),
            ("inner_replicates", self.inner_replicates),
            ("outer_replicates", self.outer_replicates),
            ("fit_iterations", self.fit_iterations),
            ("classifier_epochs", self.classifier_epochs),
        ] {
            if v == 0 {
                return Err(invalid(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [
            ("strength_sd", self.strength_sd),
            ("home_advantage", self.home_advantage),
            ("drift_sd", self.drift_sd),
            ("tactic_main_effect", self.tactic_main_effect),
            ("tactic_interaction", self.tactic_interaction),
            ("learning_rate", self.learning_rate),
            ("l2", self.l2),
            ("belief_smoothing", self.belief_smoothing),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(format!("{name} must be a non-negative number")));
            }
        }
        if !(self.draw_margin.is_finite() && self.draw_margin > 0.0) {
            return Err(invalid("draw_margin must be positive"));
        }
        if !(0.0..=1.0).contains(&self.habit_strength) {
            return Err(invalid("habit_strength must lie in [0, 1]"));
        }
        if self.bottom_k == 0 || self.bottom_k > self.n_teams {
            return Err(invalid("bottom_k must be between 1 and n_teams"));
        }
        self.policy().validate().map_err(|e| invalid(e.to_string()))?;
        self.in_match().validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    pub fn policy(&self) -> PolicyConfig {
        PolicyConfig {
            on_track_low: self.on_track_low,
            on_track_high: self.on_track_high,
            expectimax_weight: self.expectimax_weight,
        }
    }

    pub fn in_match(&self) -> InMatchConfig {
        InMatchConfig {
            decision_minutes: self.decision_minutes.clone(),
            volatility: self.volatility,
            delta: self.aggression_delta,
            risk: self.aggression_risk,
            draw_threshold: self.draw_threshold,
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded. The worker count is
    /// left out: results do not depend on it, so runs that differ only in
    /// parallelism share a hash and stay comparable.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(&ExperimentConfig { workers: 1, ..self.clone() }).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
