//! Deterministic fitting: iterative proportional fitting on contingency
//! tables, household-weight raking against marginal targets, integerization
//! of weights, and assembly of the conditional population.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::ConditionalPopulation;
use crate::compose::ComposedTable;
use crate::tabular::{AttrLevel, ContingencyTable};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Debug, Error)]
pub enum IpfError {
    #[error("constraint `{constraint}` references unknown axis `{axis}`")]
    UnknownAxis { constraint: String, axis: String },
    #[error("constraint `{constraint}`: category {category} has a positive target but no support")]
    Infeasible { constraint: String, category: String },
    #[error("no convergence after {sweeps} sweeps; max relative deviation {deviation:.3e}")]
    NotConverged { sweeps: usize, deviation: f64 },
    #[error("{0}")]
    InvalidArg(String),
}

/// Target counts for the marginal over some attribute axes.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalConstraint {
    /// Identifier used in diagnostics (typically the source file stem).
    pub name: String,
    pub level: AttrLevel,
    pub axes: Vec<String>,
    pub targets: BTreeMap<Vec<u32>, f64>,
}

impl MarginalConstraint {
    pub fn new(
        name: impl Into<String>,
        level: AttrLevel,
        axes: Vec<String>,
        targets: BTreeMap<Vec<u32>, f64>,
    ) -> Result<Self, IpfError> {
        let name = name.into();
        if axes.is_empty() {
            return Err(IpfError::InvalidArg(format!(
                "constraint `{name}` has no axes"
            )));
        }
        let mut any_positive = false;
        for (key, &t) in &targets {
            if key.len() != axes.len() {
                return Err(IpfError::InvalidArg(format!(
                    "constraint `{name}`: category arity mismatch"
                )));
            }
            if !t.is_finite() || t < 0.0 {
                return Err(IpfError::InvalidArg(format!(
                    "constraint `{name}`: target {t} is not a finite non-negative count"
                )));
            }
            any_positive |= t > 0.0;
        }
        if !any_positive {
            return Err(IpfError::InvalidArg(format!(
                "constraint `{name}` has no positive target"
            )));
        }
        Ok(MarginalConstraint {
            name,
            level,
            axes,
            targets,
        })
    }

    pub fn total(&self) -> f64 {
        self.targets.values().sum()
    }

    fn category_label(&self, key: &[u32]) -> String {
        self.axes
            .iter()
            .zip(key)
            .map(|(a, v)| format!("{a}={v}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Composed rows with one positive weight each — the raking substrate.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSample {
    pub table: ComposedTable,
    pub weights: Vec<f64>,
}

impl WeightedSample {
    pub fn uniform(table: ComposedTable) -> Self {
        let weights = vec![1.0; table.rows.len()];
        WeightedSample { table, weights }
    }

    pub fn new(table: ComposedTable, weights: Vec<f64>) -> Result<Self, IpfError> {
        if weights.len() != table.rows.len() {
            return Err(IpfError::InvalidArg(format!(
                "{} weights for {} rows",
                weights.len(),
                table.rows.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(IpfError::InvalidArg(
                "weights must be positive and finite".into(),
            ));
        }
        Ok(WeightedSample { table, weights })
    }
}

/// An IPF result: the fitted table and how many sweeps it took.
#[derive(Debug, Clone)]
pub struct IpfFit {
    pub table: ContingencyTable,
    pub sweeps: usize,
}

fn axis_positions(
    seed: &ContingencyTable,
    constraint: &MarginalConstraint,
) -> Result<Vec<usize>, IpfError> {
    constraint
        .axes
        .iter()
        .map(|a| {
            seed.axes.iter().position(|x| x == a).ok_or_else(|| IpfError::UnknownAxis {
                constraint: constraint.name.clone(),
                axis: a.clone(),
            })
        })
        .collect()
}

fn marginal_of(
    cells: &BTreeMap<Vec<u32>, f64>,
    positions: &[usize],
) -> BTreeMap<Vec<u32>, f64> {
    let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for (key, &value) in cells {
        let cat: Vec<u32> = positions.iter().map(|&p| key[p]).collect();
        *out.entry(cat).or_default() += value;
    }
    out
}

/// Deviation of a marginal from its targets: relative where the target is
/// positive, absolute mass where the target is zero.
fn deviation(
    marginal: &BTreeMap<Vec<u32>, f64>,
    constraint: &MarginalConstraint,
) -> f64 {
    let mut worst = 0.0f64;
    for (key, &t) in &constraint.targets {
        let m = marginal.get(key).copied().unwrap_or(0.0);
        let d = if t > 0.0 { (m - t).abs() / t } else { m.abs() };
        worst = worst.max(d);
    }
    // mass in categories the targets do not mention counts as deviation
    for (key, &m) in marginal {
        if !constraint.targets.contains_key(key) {
            worst = worst.max(m.abs());
        }
    }
    worst
}

fn check_support(
    marginal: &BTreeMap<Vec<u32>, f64>,
    constraint: &MarginalConstraint,
) -> Result<(), IpfError> {
    for (key, &t) in &constraint.targets {
        if t > 0.0 && marginal.get(key).copied().unwrap_or(0.0) <= 0.0 {
            return Err(IpfError::Infeasible {
                constraint: constraint.name.clone(),
                category: constraint.category_label(key),
            });
        }
    }
    Ok(())
}

fn run_ipf(
    seed: &ContingencyTable,
    constraints: &[MarginalConstraint],
    tol: f64,
    max_iter: usize,
    exact_sweeps: Option<usize>,
) -> Result<IpfFit, IpfError> {
    if constraints.is_empty() {
        return Err(IpfError::InvalidArg("no constraints given".into()));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(IpfError::InvalidArg(
            "tolerance must be positive and max_iter at least 1".into(),
        ));
    }
    let positions: Vec<Vec<usize>> = constraints
        .iter()
        .map(|c| axis_positions(seed, c))
        .collect::<Result<_, _>>()?;
    for (c, pos) in constraints.iter().zip(&positions) {
        check_support(&marginal_of(&seed.cells, pos), c)?;
    }

    let mut cells = seed.cells.clone();
    let worst_dev = |cells: &BTreeMap<Vec<u32>, f64>| -> f64 {
        constraints
            .iter()
            .zip(&positions)
            .map(|(c, pos)| deviation(&marginal_of(cells, pos), c))
            .fold(0.0, f64::max)
    };

    let mut sweeps = 0;
    loop {
        if exact_sweeps.is_none() && worst_dev(&cells) < tol {
            return Ok(IpfFit {
                table: ContingencyTable {
                    axes: seed.axes.clone(),
                    cells,
                },
                sweeps,
            });
        }
        if sweeps >= exact_sweeps.unwrap_or(max_iter) {
            if exact_sweeps.is_some() {
                return Ok(IpfFit {
                    table: ContingencyTable {
                        axes: seed.axes.clone(),
                        cells,
                    },
                    sweeps,
                });
            }
            return Err(IpfError::NotConverged {
                sweeps,
                deviation: worst_dev(&cells),
            });
        }
        for (c, pos) in constraints.iter().zip(&positions) {
            let marginal = marginal_of(&cells, pos);
            for (key, value) in cells.iter_mut() {
                let cat: Vec<u32> = pos.iter().map(|&p| key[p]).collect();
                let t = c.targets.get(&cat).copied().unwrap_or(0.0);
                let m = marginal.get(&cat).copied().unwrap_or(0.0);
                if m > 0.0 {
                    *value *= t / m;
                } else if t > 0.0 {
                    return Err(IpfError::Infeasible {
                        constraint: c.name.clone(),
                        category: c.category_label(&cat),
                    });
                }
            }
        }
        sweeps += 1;
    }
}

/// Cyclically scale the seed's cells until every constraint's marginal is
/// within `tol` (relative). Zero seed cells stay zero; cross-product ratios
/// of the seed are preserved.
pub fn ipf_fit(
    seed: &ContingencyTable,
    constraints: &[MarginalConstraint],
    tol: f64,
    max_iter: usize,
) -> Result<IpfFit, IpfError> {
    run_ipf(seed, constraints, tol, max_iter, None)
}

/// Run exactly `sweeps` scaling sweeps without a convergence requirement —
/// the diagnostic view of the fit trajectory.
pub fn ipf_fixed_sweeps(
    seed: &ContingencyTable,
    constraints: &[MarginalConstraint],
    sweeps: usize,
) -> Result<ContingencyTable, IpfError> {
    run_ipf(seed, constraints, DEFAULT_TOL, sweeps.max(1), Some(sweeps)).map(|f| f.table)
}

/// How a raking run ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RakeReport {
    pub sweeps: usize,
    pub converged: bool,
    pub deviation: f64,
}

enum ResolvedAxes {
    /// Column index per axis.
    Household(Vec<usize>),
    /// Column indices per member (outer) and axis (inner).
    Person(Vec<Vec<usize>>),
}

fn resolve_axes(
    table: &ComposedTable,
    constraint: &MarginalConstraint,
) -> Result<ResolvedAxes, IpfError> {
    let find = |label: &str| -> Result<usize, IpfError> {
        table
            .columns
            .iter()
            .position(|c| c.label == label)
            .ok_or_else(|| IpfError::UnknownAxis {
                constraint: constraint.name.clone(),
                axis: label.to_string(),
            })
    };
    match constraint.level {
        AttrLevel::Household => Ok(ResolvedAxes::Household(
            constraint
                .axes
                .iter()
                .map(|a| find(a))
                .collect::<Result<_, _>>()?,
        )),
        AttrLevel::Person => {
            let mut members = Vec::with_capacity(table.size);
            for m in 1..=table.size {
                members.push(
                    constraint
                        .axes
                        .iter()
                        .map(|a| find(&format!("{a}_{m}")))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            Ok(ResolvedAxes::Person(members))
        }
    }
}

fn household_category(row: &[u32], cols: &[usize]) -> Vec<u32> {
    cols.iter().map(|&c| row[c]).collect()
}

/// Iteratively scale household weights toward the targets. A household
/// constraint multiplies each weight by its category's target/count ratio;
/// a person constraint applies the geometric mean of the member factors.
/// Hitting `max_iter` is reported, not fatal: mixed household- and
/// person-level targets are often not exactly satisfiable together.
pub fn rake_household_weights(
    sample: &WeightedSample,
    constraints: &[MarginalConstraint],
    tol: f64,
    max_iter: usize,
) -> Result<(WeightedSample, RakeReport), IpfError> {
    if constraints.is_empty() {
        return Err(IpfError::InvalidArg("no constraints given".into()));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(IpfError::InvalidArg(
            "tolerance must be positive and max_iter at least 1".into(),
        ));
    }
    let table = &sample.table;
    let resolved: Vec<ResolvedAxes> = constraints
        .iter()
        .map(|c| resolve_axes(table, c))
        .collect::<Result<_, _>>()?;

    let counts = |weights: &[f64], axes: &ResolvedAxes| -> BTreeMap<Vec<u32>, f64> {
        let mut out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        match axes {
            ResolvedAxes::Household(cols) => {
                for (row, &w) in table.rows.iter().zip(weights) {
                    *out.entry(household_category(row, cols)).or_default() += w;
                }
            }
            ResolvedAxes::Person(members) => {
                for (row, &w) in table.rows.iter().zip(weights) {
                    for cols in members {
                        *out.entry(household_category(row, cols)).or_default() += w;
                    }
                }
            }
        }
        out
    };

    for (c, axes) in constraints.iter().zip(&resolved) {
        check_support(&counts(&sample.weights, axes), c)?;
    }

    let mut weights = sample.weights.clone();
    let worst_dev = |weights: &[f64]| -> f64 {
        constraints
            .iter()
            .zip(&resolved)
            .map(|(c, axes)| deviation(&counts(weights, axes), c))
            .fold(0.0, f64::max)
    };

    let mut sweeps = 0;
    loop {
        let dev = worst_dev(&weights);
        if dev < tol {
            return Ok((
                WeightedSample {
                    table: table.clone(),
                    weights,
                },
                RakeReport {
                    sweeps,
                    converged: true,
                    deviation: dev,
                },
            ));
        }
        if sweeps >= max_iter {
            log::warn!(
                "raking stopped after {sweeps} sweeps at deviation {dev:.3e} (tolerance {tol:.1e})"
            );
            return Ok((
                WeightedSample {
                    table: table.clone(),
                    weights,
                },
                RakeReport {
                    sweeps,
                    converged: false,
                    deviation: dev,
                },
            ));
        }
        for (c, axes) in constraints.iter().zip(&resolved) {
            let current = counts(&weights, axes);
            let factor = |cat: &Vec<u32>| -> f64 {
                let t = c.targets.get(cat).copied().unwrap_or(0.0);
                let m = current.get(cat).copied().unwrap_or(0.0);
                if m > 0.0 {
                    t / m
                } else {
                    1.0
                }
            };
            match axes {
                ResolvedAxes::Household(cols) => {
                    for (row, w) in table.rows.iter().zip(weights.iter_mut()) {
                        *w *= factor(&household_category(row, cols));
                    }
                }
                ResolvedAxes::Person(members) => {
                    let k = members.len() as f64;
                    for (row, w) in table.rows.iter().zip(weights.iter_mut()) {
                        let mut log_factor = 0.0;
                        let mut zero = false;
                        for cols in members {
                            let f = factor(&household_category(row, cols));
                            if f <= 0.0 {
                                zero = true;
                                break;
                            }
                            log_factor += f.ln();
                        }
                        *w *= if zero { 0.0 } else { (log_factor / k).exp() };
                    }
                }
            }
        }
        sweeps += 1;
    }
}

/// Largest-remainder apportionment of `target_total` proportional to
/// `weights`; remainders tie-break toward lower row index. The counts sum
/// to `target_total` exactly.
pub fn integerize(weights: &[f64], target_total: u64) -> Result<Vec<u64>, IpfError> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || sum <= 0.0 {
        return Err(IpfError::InvalidArg(
            "weights must be non-negative with a positive sum".into(),
        ));
    }
    let mut counts: Vec<u64> = Vec::with_capacity(weights.len());
    let mut fractions: Vec<(usize, f64)> = Vec::with_capacity(weights.len());
    let mut floored: u64 = 0;
    for (i, &w) in weights.iter().enumerate() {
        let share = w / sum * target_total as f64;
        let base = share.floor() as u64;
        counts.push(base);
        floored += base;
        fractions.push((i, share - base as f64));
    }
    let mut leftover = target_total - floored.min(target_total);
    fractions.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (i, _) in fractions {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    debug_assert_eq!(counts.iter().sum::<u64>(), target_total);
    Ok(counts)
}

/// Seeded alternative to largest-remainder rounding: floors are kept and the
/// leftover units are drawn without replacement with probability
/// proportional to the fractional parts.
pub fn integerize_stochastic(
    weights: &[f64],
    target_total: u64,
    seed: u64,
) -> Result<Vec<u64>, IpfError> {
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || sum <= 0.0 {
        return Err(IpfError::InvalidArg(
            "weights must be non-negative with a positive sum".into(),
        ));
    }
    let mut counts: Vec<u64> = Vec::with_capacity(weights.len());
    let mut fractions: Vec<f64> = Vec::with_capacity(weights.len());
    let mut floored: u64 = 0;
    for &w in weights {
        let share = w / sum * target_total as f64;
        let base = share.floor() as u64;
        counts.push(base);
        floored += base;
        fractions.push(share - base as f64);
    }
    let mut leftover = target_total - floored.min(target_total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while leftover > 0 {
        let mass: f64 = fractions.iter().sum();
        let pick = if mass > 0.0 {
            let mut u: f64 = rng.random::<f64>() * mass;
            let mut chosen = fractions.len() - 1;
            for (i, &f) in fractions.iter().enumerate() {
                u -= f;
                if u < 0.0 && f > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..fractions.len())
        };
        counts[pick] += 1;
        fractions[pick] = 0.0;
        leftover -= 1;
    }
    Ok(counts)
}

/// Rounding strategy for weight integerization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegerizeMode {
    LargestRemainder,
    Stochastic { seed: u64 },
}

impl IntegerizeMode {
    fn apply(&self, weights: &[f64], target: u64) -> Result<Vec<u64>, IpfError> {
        match self {
            IntegerizeMode::LargestRemainder => integerize(weights, target),
            IntegerizeMode::Stochastic { seed } => {
                integerize_stochastic(weights, target, *seed)
            }
        }
    }
}

/// Rake, integerize to `target` households (stratified when a stratifying
/// household constraint is given, with the target apportioned across strata
/// proportionally to that constraint's targets), replicate rows by their
/// counts, and keep only the conditional columns.
pub fn build_conditional_population(
    sample: &WeightedSample,
    constraints: &[MarginalConstraint],
    target: u64,
    stratify: Option<&MarginalConstraint>,
    tol: f64,
    max_iter: usize,
    mode: IntegerizeMode,
) -> Result<(ConditionalPopulation, RakeReport), IpfError> {
    let (raked, report) = rake_household_weights(sample, constraints, tol, max_iter)?;
    let table = &raked.table;

    let counts: Vec<u64> = match stratify {
        None => mode.apply(&raked.weights, target)?,
        Some(strat) => {
            if strat.level != AttrLevel::Household {
                return Err(IpfError::InvalidArg(format!(
                    "stratifying constraint `{}` must be household-level",
                    strat.name
                )));
            }
            let ResolvedAxes::Household(cols) = resolve_axes(table, strat)? else {
                unreachable!("household constraints resolve to household axes");
            };
            // split the household target across strata in proportion to the
            // constraint's targets (exact when those are whole numbers)
            let strata: Vec<(&Vec<u32>, &f64)> = strat.targets.iter().collect();
            let strata_weights: Vec<f64> = strata.iter().map(|(_, &t)| t).collect();
            let strata_targets = integerize(&strata_weights, target)?;

            let mut counts = vec![0u64; table.rows.len()];
            for ((cat, _), cat_target) in strata.iter().zip(strata_targets) {
                if cat_target == 0 {
                    continue;
                }
                let member_rows: Vec<usize> = table
                    .rows
                    .iter()
                    .enumerate()
                    .filter(|(_, row)| &household_category(row, &cols) == *cat)
                    .map(|(i, _)| i)
                    .collect();
                let member_weights: Vec<f64> =
                    member_rows.iter().map(|&i| raked.weights[i]).collect();
                if member_rows.is_empty() || member_weights.iter().sum::<f64>() <= 0.0 {
                    return Err(IpfError::Infeasible {
                        constraint: strat.name.clone(),
                        category: strat.category_label(cat),
                    });
                }
                for (&row, c) in member_rows
                    .iter()
                    .zip(mode.apply(&member_weights, cat_target)?)
                {
                    counts[row] = c;
                }
            }
            counts
        }
    };

    let mut replicated = ComposedTable {
        size: table.size,
        columns: table.columns.clone(),
        household_ids: Vec::new(),
        rows: Vec::new(),
    };
    let mut seq = 0usize;
    for (row, &count) in table.rows.iter().zip(&counts) {
        for _ in 0..count {
            replicated.household_ids.push(format!("c{}_{seq}", table.size));
            replicated.rows.push(row.clone());
            seq += 1;
        }
    }
    Ok((ConditionalPopulation::project_from(&replicated), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{AttrLevel, AttributeSpec, Schema};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid2x2(cells: [[f64; 2]; 2]) -> ContingencyTable {
        let mut t = ContingencyTable::new(vec!["R".into(), "C".into()]);
        for (i, row) in cells.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    t.add(vec![i as u32, j as u32], v);
                }
            }
        }
        t
    }

    fn row_col_constraints(rows: [f64; 2], cols: [f64; 2]) -> Vec<MarginalConstraint> {
        vec![
            MarginalConstraint::new(
                "rows",
                AttrLevel::Household,
                vec!["R".into()],
                BTreeMap::from([(vec![0u32], rows[0]), (vec![1u32], rows[1])]),
            )
            .unwrap(),
            MarginalConstraint::new(
                "cols",
                AttrLevel::Household,
                vec!["C".into()],
                BTreeMap::from([(vec![0u32], cols[0]), (vec![1u32], cols[1])]),
            )
            .unwrap(),
        ]
    }

    fn cell(t: &ContingencyTable, i: u32, j: u32) -> f64 {
        t.cells.get(&vec![i, j]).copied().unwrap_or(0.0)
    }

    #[test]
    fn hand_case_converges_in_one_sweep() {
        let seed = grid2x2([[1.0, 1.0], [1.0, 1.0]]);
        let constraints = row_col_constraints([3.0, 1.0], [2.0, 2.0]);
        let fit = ipf_fit(&seed, &constraints, 1e-8, 1000).unwrap();
        assert!(fit.sweeps <= 2, "took {} sweeps", fit.sweeps);
        assert_relative_eq!(cell(&fit.table, 0, 0), 1.5, epsilon = 1e-9);
        assert_relative_eq!(cell(&fit.table, 0, 1), 1.5, epsilon = 1e-9);
        assert_relative_eq!(cell(&fit.table, 1, 0), 0.5, epsilon = 1e-9);
        assert_relative_eq!(cell(&fit.table, 1, 1), 0.5, epsilon = 1e-9);
    }

    #[test]
    fn matching_seed_needs_zero_sweeps() {
        let seed = grid2x2([[1.5, 1.5], [0.5, 0.5]]);
        let constraints = row_col_constraints([3.0, 1.0], [2.0, 2.0]);
        let fit = ipf_fit(&seed, &constraints, 1e-8, 1000).unwrap();
        assert_eq!(fit.sweeps, 0);
        assert_eq!(fit.table.cells, seed.cells);
    }

    #[test]
    fn odds_ratio_is_preserved() {
        let seed = grid2x2([[2.0, 1.0], [1.0, 2.0]]);
        let constraints = row_col_constraints([10.0, 10.0], [10.0, 10.0]);
        let fit = ipf_fit(&seed, &constraints, 1e-10, 1000).unwrap();
        let or = cell(&fit.table, 0, 0) * cell(&fit.table, 1, 1)
            / (cell(&fit.table, 0, 1) * cell(&fit.table, 1, 0));
        assert_relative_eq!(or, 4.0, epsilon = 1e-6);

        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let cells: [[f64; 2]; 2] = [
                [rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)],
                [rng.random_range(0.1..5.0), rng.random_range(0.1..5.0)],
            ];
            let seed = grid2x2(cells);
            let or_seed = cells[0][0] * cells[1][1] / (cells[0][1] * cells[1][0]);
            let constraints = row_col_constraints(
                [rng.random_range(1.0..10.0), rng.random_range(1.0..10.0)],
                [rng.random_range(1.0..10.0), rng.random_range(1.0..10.0)],
            );
            // make the two constraint totals agree so the problem is solvable
            let scale = constraints[0].total() / constraints[1].total();
            let mut c1 = constraints[1].clone();
            for v in c1.targets.values_mut() {
                *v *= scale;
            }
            let fixed = vec![constraints[0].clone(), c1];
            let fit = ipf_fit(&seed, &fixed, 1e-10, 2000).unwrap();
            let or_fit = cell(&fit.table, 0, 0) * cell(&fit.table, 1, 1)
                / (cell(&fit.table, 0, 1) * cell(&fit.table, 1, 0));
            assert_relative_eq!(or_fit, or_seed, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn zero_cells_stay_zero() {
        let seed = grid2x2([[2.0, 0.0], [1.0, 2.0]]);
        let constraints = row_col_constraints([2.0, 3.0], [3.0, 2.0]);
        let fit = ipf_fit(&seed, &constraints, 1e-9, 1000).unwrap();
        assert_eq!(cell(&fit.table, 0, 1), 0.0);
    }

    #[test]
    fn infeasible_support_names_the_category() {
        let seed = grid2x2([[2.0, 0.0], [1.0, 0.0]]);
        // the second column has no mass but a positive target
        let constraints = row_col_constraints([2.0, 2.0], [2.0, 2.0]);
        match ipf_fit(&seed, &constraints, 1e-9, 100) {
            Err(IpfError::Infeasible {
                constraint,
                category,
            }) => {
                assert_eq!(constraint, "cols");
                assert_eq!(category, "C=1");
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_totals_never_converge() {
        let seed = grid2x2([[1.0, 1.0], [1.0, 1.0]]);
        // row targets sum to 4, column targets to 6
        let constraints = row_col_constraints([2.0, 2.0], [3.0, 3.0]);
        assert!(matches!(
            ipf_fit(&seed, &constraints, 1e-9, 25),
            Err(IpfError::NotConverged { .. })
        ));
    }

    #[test]
    fn scaled_constraint_is_exact_immediately_after_its_pass() {
        let seed = grid2x2([[0.5, 2.0], [1.25, 0.75]]);
        let constraints = row_col_constraints([3.0, 2.0], [2.5, 2.5]);
        // one sweep ends with the column pass, so columns must be exact
        let after = ipf_fixed_sweeps(&seed, &constraints, 1).unwrap();
        let col0 = cell(&after, 0, 0) + cell(&after, 1, 0);
        let col1 = cell(&after, 0, 1) + cell(&after, 1, 1);
        assert_relative_eq!(col0, 2.5, epsilon = 1e-12);
        assert_relative_eq!(col1, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn kl_to_a_constrained_target_never_increases() {
        // pi satisfies the constraints exactly (targets are its marginals);
        // the divergence from pi to the running fit must fall monotonically
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..5 {
            let pi: [[f64; 2]; 2] = [
                [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)],
                [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)],
            ];
            let seed: [[f64; 2]; 2] = [
                [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)],
                [rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)],
            ];
            let constraints = row_col_constraints(
                [pi[0][0] + pi[0][1], pi[1][0] + pi[1][1]],
                [pi[0][0] + pi[1][0], pi[0][1] + pi[1][1]],
            );
            let pi_total: f64 = pi.iter().flatten().sum();
            let kl_to = |t: &ContingencyTable| -> f64 {
                let ft: f64 = t.cells.values().sum();
                let mut kl = 0.0;
                for i in 0..2u32 {
                    for j in 0..2u32 {
                        let p = pi[i as usize][j as usize] / pi_total;
                        let f = cell(t, i, j) / ft;
                        kl += p * (p / f).ln();
                    }
                }
                kl
            };
            let mut last = f64::INFINITY;
            for sweeps in 1..=8 {
                let t = ipf_fixed_sweeps(&grid2x2(seed), &constraints, sweeps).unwrap();
                let kl = kl_to(&t);
                assert!(
                    kl <= last + 1e-12,
                    "kl rose from {last} to {kl} at sweep {sweeps}"
                );
                last = kl;
            }
        }
    }

    // ---- raking ----

    fn sample_table(
        hh_labels: &[&str],
        hh_cards: &[usize],
        person_labels: &[&str],
        person_cards: &[usize],
        k: usize,
        rows: Vec<Vec<u32>>,
    ) -> ComposedTable {
        let mut attrs = Vec::new();
        for (l, &c) in hh_labels.iter().zip(hh_cards) {
            let levels: Vec<String> = (0..c).map(|i| format!("v{i}")).collect();
            let refs: Vec<&str> = levels.iter().map(String::as_str).collect();
            attrs.push(AttributeSpec::categorical(
                *l,
                &refs,
                AttrLevel::Household,
                true,
            ));
        }
        for (l, &c) in person_labels.iter().zip(person_cards) {
            let levels: Vec<String> = (0..c).map(|i| format!("v{i}")).collect();
            let refs: Vec<&str> = levels.iter().map(String::as_str).collect();
            attrs.push(AttributeSpec::categorical(
                *l,
                &refs,
                AttrLevel::Person,
                true,
            ));
        }
        let schema = Schema::new(attrs).unwrap();
        let mut t = ComposedTable::empty(&schema, k);
        t.household_ids = (0..rows.len()).map(|i| format!("h{i}")).collect();
        t.rows = rows;
        t
    }

    #[test]
    fn single_household_constraint_is_exact_in_one_pass() {
        let table = sample_table(
            &["A"],
            &[2],
            &[],
            &[],
            1,
            vec![vec![0], vec![0], vec![1]],
        );
        let sample = WeightedSample::uniform(table);
        let c = MarginalConstraint::new(
            "area",
            AttrLevel::Household,
            vec!["A".into()],
            BTreeMap::from([(vec![0u32], 6.0), (vec![1u32], 3.0)]),
        )
        .unwrap();
        let (raked, report) = rake_household_weights(&sample, &[c], 1e-12, 50).unwrap();
        assert!(report.converged);
        assert_eq!(report.sweeps, 1);
        assert_relative_eq!(raked.weights[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(raked.weights[2], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_constraints_on_balanced_sample_equalize_weights() {
        // all four (A, B) combinations present once; uniform targets
        let rows = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let table = sample_table(&["A", "B"], &[2, 2], &[], &[], 1, rows);
        let sample = WeightedSample::new(table, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let ca = MarginalConstraint::new(
            "a",
            AttrLevel::Household,
            vec!["A".into()],
            BTreeMap::from([(vec![0u32], 10.0), (vec![1u32], 10.0)]),
        )
        .unwrap();
        let cb = MarginalConstraint::new(
            "b",
            AttrLevel::Household,
            vec!["B".into()],
            BTreeMap::from([(vec![0u32], 10.0), (vec![1u32], 10.0)]),
        )
        .unwrap();
        let (raked, report) =
            rake_household_weights(&sample, &[ca, cb], 1e-10, 500).unwrap();
        assert!(report.converged);
        // raking preserves the seed's interaction structure, and these
        // targets force both margins to 10/10; the odds ratio of the seed
        // weights (1·4)/(2·3) = 2/3 is preserved rather than flattened
        let or = raked.weights[0] * raked.weights[3] / (raked.weights[1] * raked.weights[2]);
        assert_relative_eq!(or, 2.0 / 3.0, epsilon = 1e-6);
        let a0 = raked.weights[0] + raked.weights[1];
        assert_relative_eq!(a0, 10.0, epsilon = 1e-8);
    }

    #[test]
    fn person_constraint_with_identical_households_scales_uniformly() {
        // two identical 2-person households, person attribute P
        let rows = vec![vec![0, 0, 1], vec![0, 0, 1]];
        let table = sample_table(&["A"], &[2], &["P"], &[2], 2, rows);
        let sample = WeightedSample::uniform(table);
        let c = MarginalConstraint::new(
            "p",
            AttrLevel::Person,
            vec!["P".into()],
            BTreeMap::from([(vec![0u32], 6.0), (vec![1u32], 6.0)]),
        )
        .unwrap();
        let (raked, report) = rake_household_weights(&sample, &[c], 1e-10, 100).unwrap();
        assert!(report.converged);
        assert_relative_eq!(raked.weights[0], raked.weights[1], epsilon = 1e-12);
        // 2 households × weight 3 → 6 persons in each category
        assert_relative_eq!(raked.weights[0], 3.0, epsilon = 1e-8);
    }

    #[test]
    fn rake_reports_nonconvergence_instead_of_failing() {
        // contradictory household targets over the same axis set can never
        // both hold; the run must end with a report, not an error
        let rows = vec![vec![0], vec![1]];
        let table = sample_table(&["A"], &[2], &[], &[], 1, rows);
        let sample = WeightedSample::uniform(table);
        let c1 = MarginalConstraint::new(
            "first",
            AttrLevel::Household,
            vec!["A".into()],
            BTreeMap::from([(vec![0u32], 4.0), (vec![1u32], 1.0)]),
        )
        .unwrap();
        let c2 = MarginalConstraint::new(
            "second",
            AttrLevel::Household,
            vec!["A".into()],
            BTreeMap::from([(vec![0u32], 1.0), (vec![1u32], 4.0)]),
        )
        .unwrap();
        let (_, report) = rake_household_weights(&sample, &[c1, c2], 1e-9, 20).unwrap();
        assert!(!report.converged);
        assert!(report.deviation > 0.0);
    }

    // ---- integerization ----

    #[test]
    fn integerize_hand_cases() {
        assert_eq!(integerize(&[1.0, 1.0], 4).unwrap(), vec![2, 2]);
        assert_eq!(integerize(&[1.0, 1.0, 1.0], 4).unwrap(), vec![2, 1, 1]);
        assert_eq!(integerize(&[0.4, 0.6], 0).unwrap(), vec![0, 0]);
        assert!(integerize(&[0.0, 0.0], 3).is_err());
    }

    proptest! {
        #[test]
        fn integerize_sums_exactly(
            weights in proptest::collection::vec(0.0f64..100.0, 1..40),
            target in 0u64..5000,
        ) {
            prop_assume!(weights.iter().sum::<f64>() > 0.0);
            let counts = integerize(&weights, target).unwrap();
            prop_assert_eq!(counts.iter().sum::<u64>(), target);
        }

        #[test]
        fn stochastic_integerize_sums_exactly(
            weights in proptest::collection::vec(0.01f64..100.0, 1..40),
            target in 0u64..5000,
            seed in 0u64..1000,
        ) {
            let counts = integerize_stochastic(&weights, target, seed).unwrap();
            prop_assert_eq!(counts.iter().sum::<u64>(), target);
            let again = integerize_stochastic(&weights, target, seed).unwrap();
            prop_assert_eq!(counts, again);
        }
    }

    // ---- conditional population ----

    #[test]
    fn trivial_targets_reproduce_the_projected_sample() {
        let rows = vec![vec![0, 0, 1], vec![1, 1, 0], vec![0, 1, 1]];
        let table = sample_table(&["A"], &[2], &["P"], &[2], 2, rows);
        let sample = WeightedSample::uniform(table.clone());
        // targets equal to the sample's own counts: A=0 twice, A=1 once
        let c = MarginalConstraint::new(
            "area",
            AttrLevel::Household,
            vec!["A".into()],
            BTreeMap::from([(vec![0u32], 2.0), (vec![1u32], 1.0)]),
        )
        .unwrap();
        let (pop, report) = build_conditional_population(
            &sample,
            std::slice::from_ref(&c),
            3,
            None,
            1e-9,
            100,
            IntegerizeMode::LargestRemainder,
        )
        .unwrap();
        assert!(report.converged);
        assert_eq!(pop.rows, ConditionalPopulation::project_from(&table).rows);
    }

    #[test]
    fn stratified_counts_match_targets_exactly() {
        let rows = vec![
            vec![0, 0, 0],
            vec![0, 1, 1],
            vec![1, 0, 1],
            vec![1, 1, 0],
        ];
        let table = sample_table(&["A"], &[2], &["P"], &[2], 2, rows);
        let sample = WeightedSample::uniform(table);
        let strat = MarginalConstraint::new(
            "area",
            AttrLevel::Household,
            vec!["A".into()],
            BTreeMap::from([(vec![0u32], 7.0), (vec![1u32], 3.0)]),
        )
        .unwrap();
        let (pop, _) = build_conditional_population(
            &sample,
            std::slice::from_ref(&strat),
            10,
            Some(&strat),
            1e-9,
            100,
            IntegerizeMode::LargestRemainder,
        )
        .unwrap();
        assert_eq!(pop.rows.len(), 10);
        let a0 = pop.rows.iter().filter(|r| r[0] == 0).count();
        assert_eq!(a0, 7, "stratum A=0 must hold exactly its target");
        // only conditional columns survive
        assert_eq!(
            pop.columns.iter().map(|c| c.label.clone()).collect::<Vec<_>>(),
            vec!["A", "P_1", "P_2"]
        );
    }
}
