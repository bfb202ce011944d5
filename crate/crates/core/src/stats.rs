//! Correlation statistics between prevalence and recoverability.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("degenerate input: {0} has zero variance")]
    DegenerateInput(&'static str),
    #[error("series lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooFewPoints {
            needed: 2,
            found: x.len(),
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(StatsError::DegenerateInput("x"));
    }
    if syy == 0.0 {
        return Err(StatsError::DegenerateInput("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their ranks.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
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

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Theil–Sen line: slope is the median of pairwise slopes over pairs with
/// distinct `x`; intercept is the median of `y - slope * x`.
pub fn theil_sen(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let mut slopes = Vec::new();
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[i] != x[j] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    if slopes.is_empty() {
        return Err(StatsError::DegenerateInput("x"));
    }
    let slope = median(&mut slopes);
    let mut offsets: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - slope * a).collect();
    Ok((slope, median(&mut offsets)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub slope: f64,
    pub intercept: f64,
}

/// Prevalence/recoverability summary over the scored parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceStats {
    pub points: usize,
    pub pearson_prevalence: f64,
    pub spearman_prevalence: f64,
    /// Correlations against distance from balance, `|prevalence - 0.5|`.
    pub pearson_balance: f64,
    pub spearman_balance: f64,
    /// Robust line of score against `|prevalence - 0.5|`.
    pub trend: TrendFit,
    /// `score - trend(|prevalence - 0.5|)`, in input order.
    pub residuals: Vec<f64>,
}

/// Correlates `scores` with `prevalences` and with `|prevalence - 0.5|`,
/// and fits a Theil–Sen trend of score on `|prevalence - 0.5|`.
pub fn prevalence_recoverability(prevalences: &[f64], scores: &[f64]) -> Result<PrevalenceStats, StatsError> {
    if prevalences.len() != scores.len() {
        return Err(StatsError::LengthMismatch(prevalences.len(), scores.len()));
    }
    if scores.len() < 3 {
        return Err(StatsError::TooFewPoints {
            needed: 3,
            found: scores.len(),
        });
    }
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if constant(scores) {
        return Err(StatsError::DegenerateInput("scores"));
    }
    if constant(prevalences) {
        return Err(StatsError::DegenerateInput("prevalences"));
    }
    let balance: Vec<f64> = prevalences.iter().map(|p| (p - 0.5).abs()).collect();
    if constant(&balance) {
        return Err(StatsError::DegenerateInput("|prevalence - 0.5|"));
    }
    let (slope, intercept) = theil_sen(&balance, scores)?;
    Ok(PrevalenceStats {
        points: scores.len(),
        pearson_prevalence: pearson(prevalences, scores)?,
        spearman_prevalence: spearman(prevalences, scores)?,
        pearson_balance: pearson(&balance, scores)?,
        spearman_balance: spearman(&balance, scores)?,
        residuals: balance
            .iter()
            .zip(scores)
            .map(|(b, s)| s - (intercept + slope * b))
            .collect(),
        trend: TrendFit { slope, intercept },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_known_values() {
        assert!((pearson(&[1., 2., 3.], &[2., 4., 6.]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1., 2., 3.], &[3., 2., 1.]).unwrap() + 1.0).abs() < 1e-12);
        // hand computation: mx = 3, my = 4.2, sxy = 8, sxx = 10, syy = 8.8
        let r = pearson(&[1., 2., 3., 4., 5.], &[2., 4., 5., 4., 6.]).unwrap();
        assert!((r - 8.0 / (10.0f64 * 8.8).sqrt()).abs() < 1e-12);
        assert_eq!(pearson(&[1., 1.], &[1., 2.]), Err(StatsError::DegenerateInput("x")));
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[10., 20., 10., 30.]), [1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn spearman_monotone() {
        let x = [0.1, 0.5, 0.2, 0.9];
        let y = [1.0, 50.0, 2.0, 1e6];
        assert!((spearman(&x, &y).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_increasing_in_balance_distance() {
        let prev = [0.5, 0.4, 0.75, 0.1, 0.95];
        let scores: Vec<f64> = prev.iter().map(|p: &f64| (p - 0.5).abs().powi(3) + 1.0).collect();
        let s = prevalence_recoverability(&prev, &scores).unwrap();
        assert!((s.spearman_balance - 1.0).abs() < 1e-12);
        assert_eq!(s.residuals.len(), 5);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(
            prevalence_recoverability(&[0.1, 0.2, 0.3], &[1.0, 1.0, 1.0]),
            Err(StatsError::DegenerateInput("scores"))
        );
        assert_eq!(
            prevalence_recoverability(&[0.2, 0.2, 0.2], &[1.0, 2.0, 3.0]),
            Err(StatsError::DegenerateInput("prevalences"))
        );
        assert!(matches!(
            prevalence_recoverability(&[0.2, 0.3], &[1.0, 2.0]),
            Err(StatsError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn theil_sen_exact_line_and_outlier() {
        let x = [0., 1., 2., 3., 4.];
        let (m, b) = theil_sen(&x, &[1., 3., 5., 7., 9.]).unwrap();
        assert_eq!((m, b), (2.0, 1.0));
        let (m, b) = theil_sen(&x, &[1., 3., 50., 7., 9.]).unwrap();
        assert_eq!((m, b), (2.0, 1.0));
    }

    proptest! {
        #[test]
        fn correlations_bounded_and_symmetric(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..5.0), 3..30)
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            if let Ok(r) = pearson(&x, &y) {
                prop_assert!((-1.0..=1.0).contains(&r));
                prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
            }
            if let Ok(r) = spearman(&x, &y) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
