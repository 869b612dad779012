//! Conditional probability tables over a fixed DAG, and row generation
//! conditioned on pre-supplied root attributes.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::{ComposedColumn, ComposedTable};
use crate::dag::Dag;
use crate::tabular::Tabular;

#[derive(Debug, Error)]
pub enum BnError {
    #[error("smoothing alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("model nodes do not match table columns")]
    LabelMismatch,
    #[error("model is for {expected}-person households, input is for {found}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("column `{column}` holds level {value}, beyond its {card} levels")]
    LevelOutOfRange {
        column: String,
        value: u32,
        card: usize,
    },
    #[error("conditional column `{0}` missing from the provided rows")]
    MissingConditional(String),
    #[error("column `{0}` is not a conditional attribute of this model")]
    UnexpectedConditional(String),
    #[error("conditional node `{node}` has non-conditional parent `{parent}`")]
    RootsViolation { node: String, parent: String },
    #[error("model document is not usable: {0}")]
    Corrupt(String),
}

/// One node's conditional distribution, sparsely keyed by parent
/// configuration. Configurations never observed fall back to uniform.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    /// Parent node indices, ascending; the configuration code is the
    /// mixed-radix encoding of the parent values in this order.
    pub parents: Vec<usize>,
    pub levels: usize,
    pub table: BTreeMap<u64, Vec<f64>>,
}

impl Cpt {
    pub fn prob(&self, config: u64, level: u32) -> f64 {
        match self.table.get(&config) {
            Some(dist) => dist[level as usize],
            None => 1.0 / self.levels as f64,
        }
    }

    pub fn dist(&self, config: u64) -> Option<&[f64]> {
        self.table.get(&config).map(Vec::as_slice)
    }
}

/// A fitted generator: structure, per-node CPTs, and the column metadata
/// needed to emit composed tables.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    pub dag: Dag,
    pub columns: Vec<ComposedColumn>,
    pub household_size: usize,
    pub cpts: Vec<Cpt>,
    pub alpha: f64,
}

impl BayesNet {
    pub fn cards(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.spec.cardinality()).collect()
    }

    /// Free parameters: Σ over nodes of (levels − 1) · parent configurations.
    pub fn param_count(&self) -> u128 {
        let cards = self.cards();
        self.cpts
            .iter()
            .enumerate()
            .map(|(v, cpt)| {
                let q: u128 = cpt.parents.iter().map(|&p| cards[p] as u128).product();
                (cards[v] as u128 - 1) * q
            })
            .sum()
    }

    fn config_code(&self, cards: &[usize], values: &[u32], v: usize) -> u64 {
        let mut code = 0u64;
        for &p in &self.cpts[v].parents {
            code = code * cards[p] as u64 + values[p] as u64;
        }
        code
    }
}

fn check_columns(net: &BayesNet, data: &ComposedTable) -> Result<(), BnError> {
    if net.columns.len() != data.columns.len()
        || net
            .columns
            .iter()
            .zip(&data.columns)
            .any(|(a, b)| a.label != b.label)
    {
        return Err(BnError::LabelMismatch);
    }
    Ok(())
}

fn check_row(columns: &[ComposedColumn], cards: &[usize], row: &[u32]) -> Result<(), BnError> {
    for (i, &v) in row.iter().enumerate() {
        if v as usize >= cards[i] {
            return Err(BnError::LevelOutOfRange {
                column: columns[i].label.clone(),
                value: v,
                card: cards[i],
            });
        }
    }
    Ok(())
}

/// Fit smoothed conditional probability tables on `data` under `dag`:
/// P(v = ℓ | config) = (count + alpha) / (config total + alpha · levels).
pub fn fit_cpts(dag: &Dag, data: &ComposedTable, alpha: f64) -> Result<BayesNet, BnError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(BnError::InvalidAlpha(alpha));
    }
    if dag.labels() != data.column_labels().as_slice() {
        return Err(BnError::LabelMismatch);
    }
    let cards = data.column_cardinalities();
    for row in &data.rows {
        check_row(&data.columns, &cards, row)?;
    }

    let mut cpts = Vec::with_capacity(cards.len());
    for v in 0..cards.len() {
        let parents = dag.parents(v);
        let r = cards[v];
        let mut counts: BTreeMap<u64, Vec<u32>> = BTreeMap::new();
        for row in &data.rows {
            let mut code = 0u64;
            for &p in &parents {
                code = code * cards[p] as u64 + row[p] as u64;
            }
            counts.entry(code).or_insert_with(|| vec![0; r])[row[v] as usize] += 1;
        }
        let table: BTreeMap<u64, Vec<f64>> = counts
            .into_iter()
            .map(|(code, cells)| {
                let total: u32 = cells.iter().sum();
                let denom = f64::from(total) + alpha * r as f64;
                let dist = cells
                    .into_iter()
                    .map(|c| (f64::from(c) + alpha) / denom)
                    .collect();
                (code, dist)
            })
            .collect();
        cpts.push(Cpt {
            parents,
            levels: r,
            table,
        });
    }
    Ok(BayesNet {
        dag: dag.clone(),
        columns: data.columns.clone(),
        household_size: data.size,
        cpts,
        alpha,
    })
}

/// Joint log-likelihood of `data` under the fitted model (natural log).
pub fn log_likelihood(net: &BayesNet, data: &ComposedTable) -> Result<f64, BnError> {
    check_columns(net, data)?;
    let cards = net.cards();
    let mut total = 0.0;
    for row in &data.rows {
        check_row(&net.columns, &cards, row)?;
        for v in 0..cards.len() {
            let code = net.config_code(&cards, row, v);
            total += net.cpts[v].prob(code, row[v]).ln();
        }
    }
    Ok(total)
}

/// The pre-supplied root attributes for a full synthetic population: one row
/// per household to generate, carrying only the conditional columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPopulation {
    pub household_size: usize,
    pub columns: Vec<ComposedColumn>,
    pub rows: Vec<Vec<u32>>,
}

impl ConditionalPopulation {
    /// Restrict a composed table to its conditional columns.
    pub fn project_from(table: &ComposedTable) -> Self {
        let keep: Vec<usize> = table
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.spec.is_conditional)
            .map(|(i, _)| i)
            .collect();
        ConditionalPopulation {
            household_size: table.size,
            columns: keep.iter().map(|&i| table.columns[i].clone()).collect(),
            rows: table
                .rows
                .iter()
                .map(|row| keep.iter().map(|&i| row[i]).collect())
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl Tabular for ConditionalPopulation {
    fn column_labels(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.label.clone()).collect()
    }

    fn column_cardinalities(&self) -> Vec<usize> {
        self.columns.iter().map(|c| c.spec.cardinality()).collect()
    }

    fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }
}

/// Generate one composed row per conditional row: conditional cells are
/// copied verbatim, everything else is sampled in topological order from
/// the CPTs. Row `i` draws from its own RNG stream, so the result is
/// independent of scheduling and bit-reproducible for a given seed.
pub fn sample_conditional(
    net: &BayesNet,
    conditional: &ConditionalPopulation,
    seed: u64,
) -> Result<ComposedTable, BnError> {
    if conditional.household_size != net.household_size {
        return Err(BnError::SizeMismatch {
            expected: net.household_size,
            found: conditional.household_size,
        });
    }
    let cards = net.cards();
    let n_nodes = net.columns.len();

    // map provided columns onto model nodes, 1:1 with the conditional set
    let mut source_of = vec![usize::MAX; n_nodes];
    for (ci, col) in conditional.columns.iter().enumerate() {
        let v = net
            .columns
            .iter()
            .position(|c| c.label == col.label)
            .ok_or_else(|| BnError::UnexpectedConditional(col.label.clone()))?;
        if !net.columns[v].spec.is_conditional {
            return Err(BnError::UnexpectedConditional(col.label.clone()));
        }
        source_of[v] = ci;
    }
    for (v, col) in net.columns.iter().enumerate() {
        if col.spec.is_conditional && source_of[v] == usize::MAX {
            return Err(BnError::MissingConditional(col.label.clone()));
        }
    }
    // conditional nodes act as roots: nothing sampled may feed them
    for (v, col) in net.columns.iter().enumerate() {
        if !col.spec.is_conditional {
            continue;
        }
        for p in net.dag.parents(v) {
            if !net.columns[p].spec.is_conditional {
                return Err(BnError::RootsViolation {
                    node: col.label.clone(),
                    parent: net.columns[p].label.clone(),
                });
            }
        }
    }
    let cond_cards: Vec<usize> = conditional
        .columns
        .iter()
        .map(|c| c.spec.cardinality())
        .collect();
    for row in &conditional.rows {
        if row.len() != conditional.columns.len() {
            return Err(BnError::LabelMismatch);
        }
        check_row(&conditional.columns, &cond_cards, row)?;
    }

    let order: Vec<usize> = net
        .dag
        .topological_order()
        .into_iter()
        .filter(|&v| !net.columns[v].spec.is_conditional)
        .collect();

    let rows: Vec<Vec<u32>> = conditional
        .rows
        .par_iter()
        .enumerate()
        .map(|(i, cond_row)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut values = vec![0u32; n_nodes];
            for v in 0..n_nodes {
                if source_of[v] != usize::MAX {
                    values[v] = cond_row[source_of[v]];
                }
            }
            for &v in &order {
                let code = net.config_code(&cards, &values, v);
                let u: f64 = rng.random();
                values[v] = match net.cpts[v].dist(code) {
                    Some(dist) => {
                        let mut cum = 0.0;
                        let mut picked = dist.len() - 1;
                        for (level, &p) in dist.iter().enumerate() {
                            cum += p;
                            if u < cum {
                                picked = level;
                                break;
                            }
                        }
                        picked as u32
                    }
                    // unseen configuration: uniform fallback
                    None => ((u * cards[v] as f64) as usize).min(cards[v] - 1) as u32,
                };
            }
            values
        })
        .collect();

    let household_ids = (0..rows.len())
        .map(|i| format!("g{}_{}", net.household_size, i))
        .collect();
    Ok(ComposedTable {
        size: net.household_size,
        columns: net.columns.clone(),
        household_ids,
        rows,
    })
}

/// On-disk model format. Parent configurations are decoded into per-parent
/// level tuples so documents are self-describing and diffable.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub household_size: usize,
    pub alpha: f64,
    pub columns: Vec<ComposedColumn>,
    pub edges: Vec<[String; 2]>,
    pub cpts: Vec<CptDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CptDocument {
    pub node: String,
    pub parents: Vec<String>,
    pub rows: Vec<CptRowDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CptRowDocument {
    pub config: Vec<u32>,
    pub p: Vec<f64>,
}

pub const MODEL_FORMAT: &str = "popsynth-model";
pub const MODEL_VERSION: u32 = 1;

impl BayesNet {
    pub fn to_document(&self) -> ModelDocument {
        let cards = self.cards();
        let cpts = self
            .cpts
            .iter()
            .enumerate()
            .map(|(v, cpt)| {
                let rows = cpt
                    .table
                    .iter()
                    .map(|(&code, dist)| CptRowDocument {
                        config: decode_config(code, &cpt.parents, &cards),
                        p: dist.clone(),
                    })
                    .collect();
                CptDocument {
                    node: self.columns[v].label.clone(),
                    parents: cpt
                        .parents
                        .iter()
                        .map(|&p| self.columns[p].label.clone())
                        .collect(),
                    rows,
                }
            })
            .collect();
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            household_size: self.household_size,
            alpha: self.alpha,
            columns: self.columns.clone(),
            edges: self
                .dag
                .edges()
                .map(|(u, v)| {
                    [
                        self.columns[u].label.clone(),
                        self.columns[v].label.clone(),
                    ]
                })
                .collect(),
            cpts,
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self, BnError> {
        if doc.format != MODEL_FORMAT {
            return Err(BnError::Corrupt(format!(
                "unexpected format tag `{}`",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(BnError::Corrupt(format!(
                "unsupported model version {}",
                doc.version
            )));
        }
        if !(doc.alpha > 0.0 && doc.alpha.is_finite()) {
            return Err(BnError::InvalidAlpha(doc.alpha));
        }
        let labels: Vec<String> = doc.columns.iter().map(|c| c.label.clone()).collect();
        let index_of = |label: &str| -> Result<usize, BnError> {
            labels
                .iter()
                .position(|l| l == label)
                .ok_or_else(|| BnError::Corrupt(format!("unknown node `{label}`")))
        };
        let mut dag = Dag::new(labels.clone())
            .map_err(|e| BnError::Corrupt(e.to_string()))?;
        for [from, to] in &doc.edges {
            dag.add_edge(index_of(from)?, index_of(to)?)
                .map_err(|e| BnError::Corrupt(e.to_string()))?;
        }
        let cards: Vec<usize> = doc.columns.iter().map(|c| c.spec.cardinality()).collect();

        if doc.cpts.len() != labels.len() {
            return Err(BnError::Corrupt(format!(
                "{} cpts for {} nodes",
                doc.cpts.len(),
                labels.len()
            )));
        }
        let mut cpts = Vec::with_capacity(doc.cpts.len());
        for (v, cd) in doc.cpts.iter().enumerate() {
            if cd.node != labels[v] {
                return Err(BnError::Corrupt(format!(
                    "cpt {v} is for `{}`, expected `{}`",
                    cd.node, labels[v]
                )));
            }
            let parents: Vec<usize> = cd
                .parents
                .iter()
                .map(|p| index_of(p))
                .collect::<Result<_, _>>()?;
            if parents != dag.parents(v) {
                return Err(BnError::Corrupt(format!(
                    "cpt parents for `{}` disagree with the edges",
                    cd.node
                )));
            }
            let r = cards[v];
            let mut table = BTreeMap::new();
            for row in &cd.rows {
                if row.config.len() != parents.len() || row.p.len() != r {
                    return Err(BnError::Corrupt(format!(
                        "malformed cpt row for `{}`",
                        cd.node
                    )));
                }
                let sum: f64 = row.p.iter().sum();
                if (sum - 1.0).abs() > 1e-9 || row.p.iter().any(|&p| p <= 0.0) {
                    return Err(BnError::Corrupt(format!(
                        "cpt row for `{}` is not a smoothed distribution",
                        cd.node
                    )));
                }
                let mut code = 0u64;
                for (&p, &val) in parents.iter().zip(&row.config) {
                    if val as usize >= cards[p] {
                        return Err(BnError::Corrupt(format!(
                            "cpt config for `{}` holds out-of-range level {val}",
                            cd.node
                        )));
                    }
                    code = code * cards[p] as u64 + val as u64;
                }
                table.insert(code, row.p.clone());
            }
            cpts.push(Cpt {
                parents,
                levels: r,
                table,
            });
        }
        Ok(BayesNet {
            dag,
            columns: doc.columns.clone(),
            household_size: doc.household_size,
            cpts,
            alpha: doc.alpha,
        })
    }
}

fn decode_config(code: u64, parents: &[usize], cards: &[usize]) -> Vec<u32> {
    let mut rest = code;
    let mut out = vec![0u32; parents.len()];
    for (slot, &p) in parents.iter().enumerate().rev() {
        let card = cards[p] as u64;
        out[slot] = (rest % card) as u32;
        rest /= card;
    }
    out
}
