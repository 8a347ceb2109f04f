//! Season-long tactical planning for a football league.
//!
//! The crate models a season as a sequence of matches whose outcome
//! probabilities come from a trainable classifier. Remaining fixtures are
//! simulated by Monte Carlo to get each team's finishing-position
//! distribution, from which a week-by-week objective is chosen by MAP over
//! rank bands. A matrix of tactic-pair weights learned from played and
//! observed matches then reweights per-fixture payoff tables when picking
//! tactics.

pub mod league;
pub mod objectives;
pub mod outcome;
pub mod prior;
pub mod season_sim;
pub mod seed;
pub mod tactics;
