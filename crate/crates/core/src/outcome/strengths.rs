//! Team ratings from win/draw/loss results.
//!
//! Ordered logit on the rating gap: with `eta = r_home - r_away + h`,
//!
//! ```text
//! P(away win) = sigmoid(-c - eta)
//! P(draw)     = sigmoid(c - eta) - sigmoid(-c - eta)
//! P(home win) = sigmoid(eta - c)
//! ```
//!
//! Only results are observed, so attack and defence are not separately
//! identifiable; a rating `r` is reported as attack = defence = exp(r / 2).

use super::{FixturePredictor, ModelError, OutcomeDistribution};
use crate::league::{Fixture, League, Outcome, Team};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    /// Ridge penalty on the ratings; keeps an unbeaten team's rating finite.
    pub l2: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { iterations: 300, learning_rate: 2.0, l2: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FittedStrengths {
    /// Zero-mean ratings, one per team in league order.
    pub ratings: Vec<f64>,
    pub home_advantage: f64,
    /// Half-width of the draw band on the latent scale.
    pub draw_margin: f64,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn density(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// Gradient-ascent fit of ratings, shared home advantage and draw margin.
/// Every team needs at least one result.
pub fn fit_strengths(
    league: &League,
    results: &[(Fixture, Outcome)],
    config: &FitConfig,
) -> Result<FittedStrengths, ModelError> {
    let n = league.len();
    let mut games = vec![0usize; n];
    for (f, _) in results {
        for t in [f.home, f.away] {
            *games.get_mut(t).ok_or_else(|| ModelError::UnknownTeam(format!("#{t}")))? += 1;
        }
    }
    let missing: Vec<String> =
        league.teams().iter().zip(&games).filter(|(_, &g)| g == 0).map(|(t, _)| t.id.clone()).collect();
    if !missing.is_empty() {
        return Err(ModelError::TeamsWithoutResults(missing));
    }

    let mut ratings = vec![0.0; n];
    let mut home = 0.0;
    let mut margin = 0.5;
    let mut grad = vec![0.0; n];
    let scale = 1.0 / results.len() as f64;
    for _ in 0..config.iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut g_home = 0.0;
        let mut g_margin = 0.0;
        for (f, o) in results {
            let eta = ratings[f.home] - ratings[f.away] + home;
            let (d_eta, d_c) = match o {
                Outcome::HomeWin => {
                    let q = 1.0 - sigmoid(eta - margin);
                    (q, -q)
                }
                Outcome::AwayWin => {
                    let q = 1.0 - sigmoid(-margin - eta);
                    (-q, -q)
                }
                Outcome::Draw => {
                    let p = (sigmoid(margin - eta) - sigmoid(-margin - eta)).max(1e-300);
                    let (hi, lo) = (density(margin - eta), density(-margin - eta));
                    ((lo - hi) / p, (hi + lo) / p)
                }
            };
            grad[f.home] += d_eta;
            grad[f.away] -= d_eta;
            g_home += d_eta;
            g_margin += d_c;
        }
        for (r, g) in ratings.iter_mut().zip(&grad) {
            *r += config.learning_rate * (g * scale - config.l2 * *r);
        }
        home += config.learning_rate * g_home * scale;
        margin = (margin + config.learning_rate * g_margin * scale).max(1e-3);
        let mean = ratings.iter().sum::<f64>() / n as f64;
        ratings.iter_mut().for_each(|r| *r -= mean);
    }
    Ok(FittedStrengths { ratings, home_advantage: home, draw_margin: margin })
}

impl FittedStrengths {
    pub fn distribution(&self, home: usize, away: usize) -> OutcomeDistribution {
        let eta = self.ratings[home] - self.ratings[away] + self.home_advantage;
        let p_away = sigmoid(-self.draw_margin - eta);
        let p_home = sigmoid(eta - self.draw_margin);
        OutcomeDistribution { p_home, p_draw: (1.0 - p_home - p_away).max(0.0), p_away }
    }

    /// The league's teams carrying the fitted strengths. A negative fitted
    /// home advantage is reported as zero.
    pub fn apply(&self, league: &League) -> League {
        let teams = league
            .teams()
            .iter()
            .zip(&self.ratings)
            .map(|(t, r)| Team {
                id: t.id.clone(),
                name: t.name.clone(),
                attack: (r / 2.0).exp(),
                defence: (r / 2.0).exp(),
                home_advantage: self.home_advantage.max(0.0),
            })
            .collect();
        League::new(teams).expect("ids were already unique")
    }
}

impl FixturePredictor for FittedStrengths {
    fn predict(&self, fixture: &Fixture) -> Result<OutcomeDistribution, ModelError> {
        if fixture.home >= self.ratings.len() || fixture.away >= self.ratings.len() {
            return Err(ModelError::UnknownTeam(format!("#{}", fixture.home.max(fixture.away))));
        }
        Ok(self.distribution(fixture.home, fixture.away))
    }
}
