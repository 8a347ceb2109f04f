//! Classification and rank statistics used by the reports.

use season_core::league::Outcome;

pub fn accuracy(predicted: &[Outcome], actual: &[Outcome]) -> f64 {
    assert_eq!(predicted.len(), actual.len(), "prediction and label counts differ");
    if actual.is_empty() {
        return 0.0;
    }
    predicted.iter().zip(actual).filter(|(p, a)| p == a).count() as f64 / actual.len() as f64
}

/// Support-weighted precision, recall and F1 over the three outcomes. A
/// class that is never predicted has precision 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn weighted_scores(predicted: &[Outcome], actual: &[Outcome]) -> WeightedScores {
    assert_eq!(predicted.len(), actual.len(), "prediction and label counts differ");
    let n = actual.len() as f64;
    let mut out = WeightedScores { precision: 0.0, recall: 0.0, f1: 0.0 };
    if actual.is_empty() {
        return out;
    }
    for class in Outcome::ALL {
        let support = actual.iter().filter(|&&a| a == class).count() as f64;
        if support == 0.0 {
            continue;
        }
        let tp = predicted.iter().zip(actual).filter(|&(&p, &a)| p == class && a == class).count() as f64;
        let predicted_n = predicted.iter().filter(|&&p| p == class).count() as f64;
        let precision = if predicted_n > 0.0 { tp / predicted_n } else { 0.0 };
        let recall = tp / support;
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let w = support / n;
        out.precision += w * precision;
        out.recall += w * recall;
        out.f1 += w * f1;
    }
    out
}

/// Ranks starting at 1, ties sharing their mean rank.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    pearson(&average_ranks(x), &average_ranks(y))
}

/// One-sided sign-test p-value: P(X >= successes) for X ~ Binomial(n, 1/2).
pub fn sign_test_p(successes: usize, n: usize) -> f64 {
    let mut p = 0.0;
    let mut c = 1.0f64;
    for k in 0..=n {
        if k > 0 {
            c = c * (n - k + 1) as f64 / k as f64;
        }
        if k >= successes {
            p += c;
        }
    }
    p / 2f64.powi(n as i32)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}
