//! Multinomial logistic classifier over {home win, draw, away win}.
//!
//! Class scores share one weight vector between the two "win" classes:
//!
//! ```text
//! s_home = win . home_view + ha[0] * home_advantage + bias_win
//! s_draw = draw . (home_view + away_view) + ha[1] * home_advantage + bias_draw
//! s_away = win . away_view + ha[2] * home_advantage + bias_win
//! ```
//!
//! and probabilities are their softmax. The model is fitted by SGD on the
//! mean categorical cross-entropy `-1/N sum log p(y_i)`.

use rand::seq::SliceRandom;

use super::features::{EncodedMatch, FeatureLayout};
use super::{ModelError, OutcomeDistribution};
use crate::league::Outcome;
use crate::seed::{self, tag};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub features: EncodedMatch,
    pub label: Outcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifierParams {
    pub layout: FeatureLayout,
    pub win: Vec<f64>,
    pub draw: Vec<f64>,
    /// Home-advantage coefficients for (home, draw, away).
    pub home_advantage: [f64; 3],
    pub bias_win: f64,
    pub bias_draw: f64,
}

impl ClassifierParams {
    pub fn zeros(layout: FeatureLayout) -> Self {
        let n = layout.len();
        ClassifierParams {
            layout,
            win: vec![0.0; n],
            draw: vec![0.0; n],
            home_advantage: [0.0; 3],
            bias_win: 0.0,
            bias_draw: 0.0,
        }
    }

    pub fn n_params(&self) -> usize {
        2 * self.layout.len() + 5
    }

    /// Flattened as `[win.., draw.., home_advantage.., bias_win, bias_draw]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        v.extend_from_slice(&self.win);
        v.extend_from_slice(&self.draw);
        v.extend_from_slice(&self.home_advantage);
        v.push(self.bias_win);
        v.push(self.bias_draw);
        v
    }

    pub fn from_flat(layout: FeatureLayout, flat: &[f64]) -> Result<Self, ModelError> {
        let n = layout.len();
        if flat.len() != 2 * n + 5 {
            return Err(ModelError::FeatureMismatch { expected: 2 * n + 5, found: flat.len() });
        }
        Ok(ClassifierParams {
            layout,
            win: flat[..n].to_vec(),
            draw: flat[n..2 * n].to_vec(),
            home_advantage: [flat[2 * n], flat[2 * n + 1], flat[2 * n + 2]],
            bias_win: flat[2 * n + 3],
            bias_draw: flat[2 * n + 4],
        })
    }

    /// Visit every parameter with its flat index.
    fn for_each_mut(&mut self, mut f: impl FnMut(usize, &mut f64)) {
        let n = self.layout.len();
        self.win.iter_mut().enumerate().for_each(|(i, w)| f(i, w));
        self.draw.iter_mut().enumerate().for_each(|(i, w)| f(n + i, w));
        self.home_advantage.iter_mut().enumerate().for_each(|(i, w)| f(2 * n + i, w));
        f(2 * n + 3, &mut self.bias_win);
        f(2 * n + 4, &mut self.bias_draw);
    }

    pub fn scores(&self, x: &EncodedMatch) -> Result<[f64; 3], ModelError> {
        let n = self.layout.len();
        for view in [&x.home_view, &x.away_view] {
            if view.len() != n {
                return Err(ModelError::FeatureMismatch { expected: n, found: view.len() });
            }
        }
        let dot = |w: &[f64], v: &[f64]| w.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let ha = x.home_advantage;
        Ok([
            dot(&self.win, &x.home_view) + self.home_advantage[0] * ha + self.bias_win,
            dot(&self.draw, &x.home_view) + dot(&self.draw, &x.away_view) + self.home_advantage[1] * ha + self.bias_draw,
            dot(&self.win, &x.away_view) + self.home_advantage[2] * ha + self.bias_win,
        ])
    }

    /// Keep the strength-difference coefficients where p_home cannot fall
    /// as the home side's attack rises: own >= 0, opp <= 0 and the draw
    /// class's combined slope no steeper than own.
    fn project(&mut self) {
        let own = self.layout.own_diff();
        let opp = self.layout.opp_diff();
        self.win[own] = self.win[own].max(0.0);
        self.win[opp] = self.win[opp].min(0.0);
        let excess = self.draw[own] + self.draw[opp] - self.win[own];
        if excess > 0.0 {
            self.draw[own] -= excess / 2.0;
            self.draw[opp] -= excess / 2.0;
        }
    }

    /// Add `scale * d(-log p(label))/d(params)` into `grad` (flat layout).
    fn accumulate_gradient(&self, ex: &TrainingExample, scale: f64, grad: &mut [f64]) -> Result<(), ModelError> {
        let p = OutcomeDistribution::from_scores(self.scores(&ex.features)?).as_array();
        let mut g = p;
        g[ex.label.index()] -= 1.0;
        let n = self.layout.len();
        let x = &ex.features;
        for i in 0..n {
            grad[i] += scale * (g[0] * x.home_view[i] + g[2] * x.away_view[i]);
            grad[n + i] += scale * g[1] * (x.home_view[i] + x.away_view[i]);
        }
        for k in 0..3 {
            grad[2 * n + k] += scale * g[k] * x.home_advantage;
        }
        grad[2 * n + 3] += scale * (g[0] + g[2]);
        grad[2 * n + 4] += scale * g[1];
        Ok(())
    }
}

pub fn predict_encoded(params: &ClassifierParams, x: &EncodedMatch) -> Result<OutcomeDistribution, ModelError> {
    Ok(OutcomeDistribution::from_scores(params.scores(x)?))
}

/// Mean categorical cross-entropy over `data`.
pub fn mean_loss(params: &ClassifierParams, data: &[TrainingExample]) -> Result<f64, ModelError> {
    if data.is_empty() {
        return Err(ModelError::NoData);
    }
    let mut total = 0.0;
    for ex in data {
        let s = params.scores(&ex.features)?;
        let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_z = m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += log_z - s[ex.label.index()];
    }
    Ok(total / data.len() as f64)
}

/// Analytic gradient of [`mean_loss`] in the flat parameter layout.
pub fn mean_loss_gradient(params: &ClassifierParams, data: &[TrainingExample]) -> Result<Vec<f64>, ModelError> {
    if data.is_empty() {
        return Err(ModelError::NoData);
    }
    let mut grad = vec![0.0; params.n_params()];
    let scale = 1.0 / data.len() as f64;
    for ex in data {
        params.accumulate_gradient(ex, scale, &mut grad)?;
    }
    Ok(grad)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// L2 penalty on the feature weights (biases are not penalised).
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { epochs: 40, learning_rate: 0.05, l2: 1e-3, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    pub params: ClassifierParams,
    /// Mean training loss after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Fit by SGD, one shuffled pass over the data per epoch, with the step
/// size decaying as `learning_rate / (1 + epoch)` so late epochs settle
/// instead of bouncing around the optimum. Every class must be present.
pub fn train_classifier(
    layout: FeatureLayout,
    data: &[TrainingExample],
    config: &TrainingConfig,
) -> Result<TrainedClassifier, ModelError> {
    if data.is_empty() {
        return Err(ModelError::NoData);
    }
    for class in Outcome::ALL {
        if !data.iter().any(|ex| ex.label == class) {
            return Err(ModelError::MissingClass(class));
        }
    }
    let mut params = ClassifierParams::zeros(layout);
    // Validate shapes once up front so the loop can't fail half-way.
    for ex in data {
        params.scores(&ex.features)?;
    }
    let n_weights = 2 * layout.len() + 3;
    let mut rng = seed::stream(config.seed, &[tag::TRAIN]);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; params.n_params()];
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let step = config.learning_rate / (1.0 + epoch as f64);
        order.shuffle(&mut rng);
        for &i in &order {
            grad.iter_mut().for_each(|g| *g = 0.0);
            params.accumulate_gradient(&data[i], 1.0, &mut grad)?;
            params.for_each_mut(|k, w| {
                let decay = if k < n_weights { config.l2 * *w } else { 0.0 };
                *w -= step * (grad[k] + decay);
            });
            params.project();
        }
        epoch_losses.push(mean_loss(&params, data)?);
    }
    Ok(TrainedClassifier { params, epoch_losses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::TacticCatalog;
    use rand::{Rng, SeedableRng};

    fn layout() -> FeatureLayout {
        FeatureLayout::new(TacticCatalog::new(2, 2).unwrap(), false)
    }

    /// Home/away views built from a single strength gap; big gaps decide
    /// the winner and small ones are draws.
    fn separable_set() -> Vec<TrainingExample> {
        let l = layout();
        (0..30)
            .map(|i| {
                let gap = -1.45 + 0.1 * i as f64;
                let label = if gap > 0.5 {
                    Outcome::HomeWin
                } else if gap < -0.5 {
                    Outcome::AwayWin
                } else {
                    Outcome::Draw
                };
                let mut home_view = vec![0.0; l.len()];
                let mut away_view = vec![0.0; l.len()];
                home_view[l.own_diff()] = gap;
                home_view[l.opp_diff()] = -gap;
                away_view[l.own_diff()] = -gap;
                away_view[l.opp_diff()] = gap;
                TrainingExample { features: EncodedMatch { home_view, away_view, home_advantage: 0.0 }, label }
            })
            .collect()
    }

    #[test]
    fn uniform_start_costs_ln3() {
        let data = separable_set();
        let loss = mean_loss(&ClassifierParams::zeros(layout()), &data).unwrap();
        assert!((loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn separable_toy_set_is_learned() {
        let data = separable_set();
        let cfg = TrainingConfig { epochs: 3000, learning_rate: 0.2, l2: 0.0, seed: 5 };
        let trained = train_classifier(layout(), &data, &cfg).unwrap();
        let correct = data
            .iter()
            .filter(|ex| predict_encoded(&trained.params, &ex.features).unwrap().argmax() == ex.label)
            .count();
        assert_eq!(correct, 30);
        assert!(trained.epoch_losses.last().unwrap() <= &trained.epoch_losses[0]);
    }

    #[test]
    fn missing_class_is_an_error() {
        let data: Vec<_> = separable_set().into_iter().filter(|e| e.label == Outcome::HomeWin).collect();
        let err = train_classifier(layout(), &data, &TrainingConfig::default()).unwrap_err();
        assert_eq!(err, ModelError::MissingClass(Outcome::Draw));
        assert_eq!(train_classifier(layout(), &[], &TrainingConfig::default()).unwrap_err(), ModelError::NoData);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let l = FeatureLayout::new(TacticCatalog::new(2, 3).unwrap(), true);
        let data: Vec<_> = (0..6)
            .map(|i| TrainingExample {
                features: EncodedMatch {
                    home_view: (0..l.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    away_view: (0..l.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                    home_advantage: rng.gen_range(0.0..0.5),
                },
                label: Outcome::ALL[i % 3],
            })
            .collect();
        let flat: Vec<f64> = (0..2 * l.len() + 5).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let params = ClassifierParams::from_flat(l, &flat).unwrap();
        let g = mean_loss_gradient(&params, &data).unwrap();
        let h = 1e-5;
        for k in 0..flat.len() {
            let mut up = flat.clone();
            up[k] += h;
            let mut dn = flat.clone();
            dn[k] -= h;
            let fd = (mean_loss(&ClassifierParams::from_flat(l, &up).unwrap(), &data).unwrap()
                - mean_loss(&ClassifierParams::from_flat(l, &dn).unwrap(), &data).unwrap())
                / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-5 * fd.abs().max(1e-3), "param {k}: fd {fd} analytic {}", g[k]);
        }
    }

    proptest::proptest! {
        #[test]
        fn home_win_probability_rises_with_home_attack(
            vals in proptest::collection::vec(-2.0f64..2.0, 25),
            attack in 0.2f64..2.0,
            bump in 0.0f64..1.5,
        ) {
            use crate::league::Team;
            use crate::outcome::{predict_outcome, MatchContext, TacticPair};
            let l = FeatureLayout::new(TacticCatalog::new(2, 2).unwrap(), false);
            let mut params = ClassifierParams::from_flat(l, &vals[..2 * l.len() + 5]).unwrap();
            params.project();
            let away = Team::new("a", "A", 1.0, 0.8, 0.0).unwrap();
            let p_home = |att: f64| {
                let home = Team::new("h", "H", att, 1.1, 0.2).unwrap();
                let t = TacticPair { style: 0, formation: 1 };
                let ctx = MatchContext { home: &home, away: &away, home_tactic: t, away_tactic: t, prior: None };
                predict_outcome(&ctx, &params).unwrap().p_home
            };
            proptest::prop_assert!(p_home(attack + bump) >= p_home(attack) - 1e-12);
        }
    }
}
