//! Data-driven edge proposal: per-target predictor ranking by least-squares
//! F-tests or by random-forest impurity importance.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};
use thiserror::Error;

use super::forest::{self, ForestParams};
use super::Dataset;

#[derive(Debug, Error)]
pub enum DiscoverError {
    #[error("{0}")]
    InvalidArg(String),
}

/// RSS of the least-squares fit of `y` on `x` (all response columns pooled)
/// plus the numerical rank of `x`. Rank deficiency is tolerated: the SVD
/// solve picks the minimum-norm solution.
fn lstsq_rss(x: &DMatrix<f64>, y: &DMatrix<f64>) -> (f64, usize) {
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = max_sv * x.nrows().max(x.ncols()) as f64 * f64::EPSILON;
    let rank = svd.rank(eps);
    let beta = svd.solve(y, eps).expect("svd computed with u and v");
    let resid = y - x * beta;
    let rss = resid.iter().map(|e| e * e).sum();
    (rss, rank)
}

/// Dummy-coded design matrix over `predictors` (first level dropped per
/// predictor, intercept in column 0), with each predictor's column range.
fn build_design(
    data: &Dataset,
    predictors: &[usize],
) -> (DMatrix<f64>, Vec<std::ops::Range<usize>>) {
    let n = data.rows.len();
    let mut ranges = Vec::with_capacity(predictors.len());
    let mut width = 1;
    for &j in predictors {
        let d = data.cards[j] - 1;
        ranges.push(width..width + d);
        width += d;
    }
    let mut x = DMatrix::zeros(n, width);
    for r in 0..n {
        x[(r, 0)] = 1.0;
        for (pi, &j) in predictors.iter().enumerate() {
            let level = data.rows[r][j] as usize;
            if level > 0 {
                x[(r, ranges[pi].start + level - 1)] = 1.0;
            }
        }
    }
    (x, ranges)
}

/// For each target, regress the target's one-hot indicators on dummy-coded
/// predictors and rank predictors by the F-statistic of dropping their
/// coefficient group. Predictors passing the `alpha` significance filter
/// contribute edges predictor → target, at most `top_m` per target.
pub fn discover_edges_ols(
    data: &Dataset,
    targets: &[usize],
    top_m: usize,
    alpha: f64,
) -> Result<BTreeSet<(usize, usize)>, DiscoverError> {
    if top_m == 0 {
        return Err(DiscoverError::InvalidArg("top_m must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(DiscoverError::InvalidArg(format!(
            "significance level {alpha} outside (0, 1)"
        )));
    }
    if data.is_empty() {
        return Err(DiscoverError::InvalidArg("empty dataset".into()));
    }
    let n = data.rows.len();
    let mut edges = BTreeSet::new();

    for &t in targets {
        if t >= data.cards.len() {
            return Err(DiscoverError::InvalidArg(format!(
                "target index {t} out of range"
            )));
        }
        let predictors: Vec<usize> = (0..data.cards.len())
            .filter(|&j| j != t && data.cards[j] >= 2)
            .collect();
        if predictors.is_empty() {
            continue;
        }
        let m = data.cards[t];
        let mut y = DMatrix::zeros(n, m);
        for r in 0..n {
            y[(r, data.rows[r][t] as usize)] = 1.0;
        }

        let (x_full, ranges) = build_design(data, &predictors);
        let (rss_full, rank_full) = lstsq_rss(&x_full, &y);
        if rank_full < x_full.ncols() {
            log::warn!(
                "design for target `{}` is rank deficient ({} of {} columns); \
                 collinear directions dropped from the tests",
                data.labels[t],
                rank_full,
                x_full.ncols()
            );
        }
        let df_den = (n as f64 - rank_full as f64) * m as f64;
        if df_den <= 0.0 {
            log::warn!(
                "saturated design for target `{}`; skipping discovery",
                data.labels[t]
            );
            continue;
        }

        let mut ranked: Vec<(usize, f64)> = Vec::new();
        for (pi, &j) in predictors.iter().enumerate() {
            let keep: Vec<usize> = (0..x_full.ncols())
                .filter(|c| !ranges[pi].contains(c))
                .collect();
            let x_restricted = x_full.select_columns(&keep);
            let (rss_restricted, rank_restricted) = lstsq_rss(&x_restricted, &y);
            let df_num = (rank_full as f64 - rank_restricted as f64) * m as f64;
            if df_num <= 0.0 {
                log::warn!(
                    "predictor `{}` adds no independent directions for target `{}`; dropped",
                    data.labels[j],
                    data.labels[t]
                );
                continue;
            }
            let gain = (rss_restricted - rss_full).max(0.0);
            let f_stat = if rss_full < 1e-12 {
                if gain > 1e-12 {
                    f64::INFINITY
                } else {
                    0.0
                }
            } else {
                (gain / df_num) / (rss_full / df_den)
            };
            let dist = FisherSnedecor::new(df_num, df_den).map_err(|e| {
                DiscoverError::InvalidArg(format!("F distribution ({df_num}, {df_den}): {e}"))
            })?;
            if f_stat > dist.inverse_cdf(1.0 - alpha) {
                ranked.push((j, f_stat));
            }
        }
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(j, _) in ranked.iter().take(top_m) {
            edges.insert((j, t));
        }
    }
    Ok(edges)
}

/// For each target, train a classification forest on one-hot predictor
/// features and rank predictor columns by accumulated impurity decrease.
/// Columns whose importance share exceeds twice the uniform share contribute
/// edges, at most `top_m` per target. Effectively constant targets are
/// skipped with a warning.
pub fn discover_edges_rf(
    data: &Dataset,
    targets: &[usize],
    top_m: usize,
    params: &ForestParams,
) -> Result<BTreeSet<(usize, usize)>, DiscoverError> {
    if top_m == 0 {
        return Err(DiscoverError::InvalidArg("top_m must be at least 1".into()));
    }
    if params.trees == 0 || params.max_depth == 0 || params.min_leaf == 0 {
        return Err(DiscoverError::InvalidArg(
            "forest parameters must be positive".into(),
        ));
    }
    if data.is_empty() {
        return Err(DiscoverError::InvalidArg("empty dataset".into()));
    }
    let mut edges = BTreeSet::new();

    for &t in targets {
        if t >= data.cards.len() {
            return Err(DiscoverError::InvalidArg(format!(
                "target index {t} out of range"
            )));
        }
        let observed: BTreeSet<u32> = data.rows.iter().map(|r| r[t]).collect();
        if observed.len() < 2 {
            log::warn!(
                "target `{}` has a single observed level; skipped",
                data.labels[t]
            );
            continue;
        }
        let predictors: Vec<usize> = (0..data.cards.len())
            .filter(|&j| j != t && data.cards[j] >= 2)
            .collect();
        if predictors.is_empty() {
            continue;
        }
        let importances = forest::column_importances(data, t, &predictors, params);
        let total: f64 = importances.iter().sum();
        if total <= 0.0 {
            continue;
        }
        let threshold = 2.0 / predictors.len() as f64;
        let mut ranked: Vec<(usize, f64)> = predictors
            .iter()
            .zip(&importances)
            .filter(|(_, &imp)| imp / total > threshold)
            .map(|(&j, &imp)| (j, imp / total))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for &(j, _) in ranked.iter().take(top_m) {
            edges.insert((j, t));
        }
    }
    Ok(edges)
}
