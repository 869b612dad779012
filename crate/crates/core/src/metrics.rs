//! Closeness and diversity measures between a synthetic population and a
//! reference: standardized RMSE, Kullback–Leibler and Jensen–Shannon
//! divergences, entropy diversity, identity-line R², cross-member
//! association checks, and tidy marginal comparison rows. Natural logarithm
//! throughout.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::ComposedTable;
use crate::ipf::MarginalConstraint;
use crate::tabular::{normalize, tabulate, DistributionVector, RecordTable, Tabular};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("distributions share no cells")]
    EmptyUnion,
    #[error("reference mean is zero; srmse is undefined")]
    ZeroRefMean,
    #[error("divergence is infinite: mass at {cell:?} where the reference has none")]
    DivergentKl { cell: Vec<u32> },
    #[error("reference has zero variance; r² is undefined")]
    ZeroVariance,
    #[error("axes differ: {left:?} vs {right:?}")]
    AxisMismatch {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("household sizes differ: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("{0}")]
    InvalidArg(String),
}

/// Closeness of one synthetic distribution to its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub axes: Vec<String>,
    pub srmse: f64,
    pub jsd: f64,
    pub r_squared: f64,
    pub cell_count: usize,
}

/// Entropy of the joint attribute distribution of one population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityEntry {
    pub attributes: Vec<String>,
    pub entropy: f64,
    pub group_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub comparisons: Vec<ComparisonEntry>,
    pub diversity: Vec<DiversityEntry>,
}

/// One paired share for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub grouping: String,
    pub category: String,
    pub synthetic_share: f64,
    pub census_share: f64,
}

fn check_axes(
    hat: &DistributionVector,
    reference: &DistributionVector,
) -> Result<(), MetricsError> {
    if hat.axes != reference.axes {
        return Err(MetricsError::AxisMismatch {
            left: hat.axes.clone(),
            right: reference.axes.clone(),
        });
    }
    Ok(())
}

fn cell_union<'a>(
    hat: &'a DistributionVector,
    reference: &'a DistributionVector,
) -> BTreeSet<&'a Vec<u32>> {
    hat.cells.keys().chain(reference.cells.keys()).collect()
}

/// Standardized root mean squared error: RMSE over the union of occupied
/// cells, divided by the reference mean over that union.
pub fn srmse(
    hat: &DistributionVector,
    reference: &DistributionVector,
) -> Result<f64, MetricsError> {
    check_axes(hat, reference)?;
    let union = cell_union(hat, reference);
    let n = union.len();
    if n == 0 {
        return Err(MetricsError::EmptyUnion);
    }
    let mut sq = 0.0;
    let mut ref_sum = 0.0;
    for key in union {
        let x_hat = hat.get(key);
        let x = reference.get(key);
        sq += (x_hat - x) * (x_hat - x);
        ref_sum += x;
    }
    let mean = ref_sum / n as f64;
    if mean <= 0.0 {
        return Err(MetricsError::ZeroRefMean);
    }
    Ok((sq / n as f64).sqrt() / mean)
}

/// Kullback–Leibler divergence KL(hat ‖ reference), with 0·ln 0 = 0.
/// Mass where the reference is zero is an error; use [`jsd`] when supports
/// may differ.
pub fn kl_divergence(
    hat: &DistributionVector,
    reference: &DistributionVector,
) -> Result<f64, MetricsError> {
    check_axes(hat, reference)?;
    let mut total = 0.0;
    for (key, &p) in &hat.cells {
        if p <= 0.0 {
            continue;
        }
        let q = reference.get(key);
        if q <= 0.0 {
            return Err(MetricsError::DivergentKl { cell: key.clone() });
        }
        total += p * (p / q).ln();
    }
    Ok(total)
}

/// Jensen–Shannon distance: √(½·(KL(hat ‖ M) + KL(ref ‖ M))) with
/// M the even mixture. Bounded by √(ln 2); defined for any pair of
/// distributions over the same axes.
pub fn jsd(
    hat: &DistributionVector,
    reference: &DistributionVector,
) -> Result<f64, MetricsError> {
    check_axes(hat, reference)?;
    let union = cell_union(hat, reference);
    if union.is_empty() {
        return Err(MetricsError::EmptyUnion);
    }
    let mut acc = 0.0;
    for key in union {
        let p = hat.get(key);
        let q = reference.get(key);
        let m = 0.5 * (p + q);
        if p > 0.0 {
            acc += 0.5 * p * (p / m).ln();
        }
        if q > 0.0 {
            acc += 0.5 * q * (q / m).ln();
        }
    }
    Ok(acc.max(0.0).sqrt())
}

/// Entropy −Σ xᵢ ln xᵢ of the joint distribution of `attrs` over the rows.
pub fn entropy_diversity<T: Tabular + ?Sized>(
    table: &T,
    attrs: &[&str],
) -> Result<DiversityEntry, MetricsError> {
    if attrs.is_empty() {
        return Err(MetricsError::InvalidArg("no attributes given".into()));
    }
    if table.rows().is_empty() {
        return Err(MetricsError::InvalidArg("no rows to group".into()));
    }
    let counts =
        tabulate(table, attrs).map_err(|e| MetricsError::UnknownAttribute(e.to_string()))?;
    let dist = normalize(&counts).expect("non-empty tabulation");
    let entropy = -dist
        .cells
        .values()
        .filter(|p| **p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>();
    Ok(DiversityEntry {
        attributes: attrs.iter().map(|a| a.to_string()).collect(),
        entropy,
        group_count: dist.group_count,
    })
}

/// Coefficient of determination of `hat` against `reference` under the
/// identity line: 1 − Σ(x̂ᵢ − xᵢ)² / Σ(xᵢ − x̄)².
pub fn r_squared(
    hat: &DistributionVector,
    reference: &DistributionVector,
) -> Result<f64, MetricsError> {
    check_axes(hat, reference)?;
    let union = cell_union(hat, reference);
    if union.len() < 2 {
        return Err(MetricsError::InvalidArg(
            "r² needs at least two cells".into(),
        ));
    }
    let n = union.len() as f64;
    let mean: f64 = union.iter().map(|k| reference.get(k)).sum::<f64>() / n;
    let mut residual = 0.0;
    let mut variance = 0.0;
    for key in union {
        let x_hat = hat.get(key);
        let x = reference.get(key);
        residual += (x_hat - x) * (x_hat - x);
        variance += (x - mean) * (x - mean);
    }
    if variance <= f64::EPSILON {
        return Err(MetricsError::ZeroVariance);
    }
    Ok(1.0 - residual / variance)
}

/// srmse/jsd/r² of one distribution against its reference, as a report entry.
pub fn compare_distributions(
    hat: &DistributionVector,
    reference: &DistributionVector,
) -> Result<ComparisonEntry, MetricsError> {
    Ok(ComparisonEntry {
        axes: reference.axes.clone(),
        srmse: srmse(hat, reference)?,
        jsd: jsd(hat, reference)?,
        r_squared: r_squared(hat, reference)?,
        cell_count: cell_union(hat, reference).len(),
    })
}

/// Compare the joint distribution of the cross-member tuple of `attrs`
/// (every member's columns, member-major) between two composed tables of
/// the same household size.
pub fn association_check(
    synthetic: &ComposedTable,
    reference: &ComposedTable,
    attrs: &[&str],
) -> Result<ComparisonEntry, MetricsError> {
    if synthetic.size != reference.size {
        return Err(MetricsError::SizeMismatch {
            left: synthetic.size,
            right: reference.size,
        });
    }
    if attrs.is_empty() {
        return Err(MetricsError::InvalidArg("no attributes given".into()));
    }
    let axes: Vec<String> = (1..=synthetic.size)
        .flat_map(|m| attrs.iter().map(move |a| format!("{a}_{m}")))
        .collect();
    let axis_refs: Vec<&str> = axes.iter().map(String::as_str).collect();
    let dist = |t: &ComposedTable| -> Result<DistributionVector, MetricsError> {
        let counts = tabulate(t, &axis_refs)
            .map_err(|e| MetricsError::UnknownAttribute(e.to_string()))?;
        normalize(&counts).map_err(|_| MetricsError::InvalidArg("empty table".into()))
    };
    compare_distributions(&dist(synthetic)?, &dist(reference)?)
}

/// Paired synthetic/census shares for each grouping. Census shares come
/// from the constraint whose axes equal the grouping; both sides are
/// normalized within the grouping, and categories missing on one side
/// appear with share zero.
pub fn marginal_report(
    synthetic: &RecordTable,
    census_targets: &[MarginalConstraint],
    groupings: &[Vec<String>],
) -> Result<Vec<MarginalRow>, MetricsError> {
    let mut out = Vec::new();
    for grouping in groupings {
        for label in grouping {
            if synthetic.schema.find(label).is_none() {
                return Err(MetricsError::UnknownAttribute(label.clone()));
            }
        }
        let constraint = census_targets
            .iter()
            .find(|c| &c.axes == grouping)
            .ok_or_else(|| {
                MetricsError::InvalidArg(format!(
                    "no census target covers grouping {grouping:?}"
                ))
            })?;
        let axis_refs: Vec<&str> = grouping.iter().map(String::as_str).collect();
        let counts = tabulate(synthetic, &axis_refs)
            .map_err(|e| MetricsError::UnknownAttribute(e.to_string()))?;
        let syn_total = counts.total();
        let census_total = constraint.total();
        if syn_total <= 0.0 || census_total <= 0.0 {
            return Err(MetricsError::InvalidArg(format!(
                "grouping {grouping:?} has no mass to compare"
            )));
        }
        let keys: BTreeSet<&Vec<u32>> = counts
            .cells
            .keys()
            .chain(constraint.targets.keys())
            .collect();
        let grouping_name = grouping.join(" x ");
        for key in keys {
            let category = grouping
                .iter()
                .zip(key.iter())
                .map(|(label, &idx)| {
                    synthetic
                        .schema
                        .find(label)
                        .expect("checked above")
                        .category_name(idx)
                })
                .collect::<Vec<_>>()
                .join(",");
            out.push(MarginalRow {
                grouping: grouping_name.clone(),
                category,
                synthetic_share: counts.cells.get(key).copied().unwrap_or(0.0) / syn_total,
                census_share: constraint.targets.get(key).copied().unwrap_or(0.0)
                    / census_total,
            });
        }
    }
    Ok(out)
}
