//! Schemas, record tables, contingency tables and distribution vectors.
//!
//! Everything downstream of ingestion is purely categorical: continuous
//! attributes are binned once when records are read and all later stages see
//! bin indices. Contingency cells are stored as reals so the same table type
//! can carry fractional IPF weights.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for Σ x_i = 1 checks on distribution vectors.
pub const PROPORTION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TabularError {
    #[error("invalid attribute `{label}`: {reason}")]
    InvalidSpec { label: String, reason: String },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("attribute `{label}` is not continuous")]
    NotContinuous { label: String },
    #[error("value {value} out of range [{min}, {max}] for attribute `{label}`")]
    OutOfRange {
        label: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("cannot normalize a contingency table with zero total count")]
    EmptyTable,
    #[error("projection axis set must be non-empty")]
    EmptyProjection,
    #[error("row {row} has {found} cells, expected {expected}")]
    RowArity {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("row {row}, attribute `{label}`: index {index} out of {cardinality} categories")]
    CellRange {
        row: usize,
        label: String,
        index: u32,
        cardinality: usize,
    },
}

/// Whether an attribute describes the household or one of its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttrLevel {
    Household,
    Person,
}

/// Categorical levels or a continuous range with binning edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttributeKind {
    Categorical {
        levels: Vec<String>,
    },
    Continuous {
        min: f64,
        max: f64,
        bin_edges: Vec<f64>,
    },
}

/// Declaration of a single attribute: label, value space and role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub label: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
    pub level: AttrLevel,
    #[serde(default)]
    pub is_conditional: bool,
}

impl AttributeSpec {
    pub fn categorical(
        label: impl Into<String>,
        levels: &[&str],
        level: AttrLevel,
        is_conditional: bool,
    ) -> Self {
        AttributeSpec {
            label: label.into(),
            kind: AttributeKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
            },
            level,
            is_conditional,
        }
    }

    pub fn continuous(
        label: impl Into<String>,
        bin_edges: &[f64],
        level: AttrLevel,
        is_conditional: bool,
    ) -> Self {
        AttributeSpec {
            label: label.into(),
            kind: AttributeKind::Continuous {
                min: *bin_edges.first().unwrap_or(&0.0),
                max: *bin_edges.last().unwrap_or(&0.0),
                bin_edges: bin_edges.to_vec(),
            },
            level,
            is_conditional,
        }
    }

    /// Number of categories (levels, or bins for continuous attributes).
    pub fn cardinality(&self) -> usize {
        match &self.kind {
            AttributeKind::Categorical { levels } => levels.len(),
            AttributeKind::Continuous { bin_edges, .. } => bin_edges.len().saturating_sub(1),
        }
    }

    /// Display name for a category index: the level string, or the bin range.
    pub fn category_name(&self, index: u32) -> String {
        match &self.kind {
            AttributeKind::Categorical { levels } => levels
                .get(index as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{index}")),
            AttributeKind::Continuous { bin_edges, .. } => {
                let lo = bin_edges.get(index as usize).copied().unwrap_or(f64::NAN);
                let hi = bin_edges
                    .get(index as usize + 1)
                    .copied()
                    .unwrap_or(f64::NAN);
                format!("[{lo},{hi})")
            }
        }
    }

    /// Index of a named categorical level.
    pub fn level_index(&self, name: &str) -> Option<u32> {
        match &self.kind {
            AttributeKind::Categorical { levels } => {
                levels.iter().position(|l| l == name).map(|i| i as u32)
            }
            AttributeKind::Continuous { .. } => None,
        }
    }

    fn validate(&self) -> Result<(), TabularError> {
        let fail = |reason: &str| TabularError::InvalidSpec {
            label: self.label.clone(),
            reason: reason.to_string(),
        };
        if self.label.is_empty() {
            return Err(fail("empty label"));
        }
        match &self.kind {
            AttributeKind::Categorical { levels } => {
                if levels.is_empty() {
                    return Err(fail("no levels declared"));
                }
                let unique: BTreeSet<&String> = levels.iter().collect();
                if unique.len() != levels.len() {
                    return Err(fail("duplicate levels"));
                }
            }
            AttributeKind::Continuous {
                min,
                max,
                bin_edges,
            } => {
                if bin_edges.len() < 2 {
                    return Err(fail("need at least two bin edges"));
                }
                if !bin_edges.windows(2).all(|w| w[0] < w[1]) {
                    return Err(fail("bin edges must be strictly increasing"));
                }
                if bin_edges[0] != *min || bin_edges[bin_edges.len() - 1] != *max {
                    return Err(fail("first/last bin edge must equal min/max"));
                }
            }
        }
        Ok(())
    }
}

/// Bin a continuous value: `bin_edges[i] <= value < bin_edges[i+1]`, with the
/// last bin closed on the right.
pub fn bin_continuous(value: f64, spec: &AttributeSpec) -> Result<usize, TabularError> {
    let AttributeKind::Continuous {
        min,
        max,
        bin_edges,
    } = &spec.kind
    else {
        return Err(TabularError::NotContinuous {
            label: spec.label.clone(),
        });
    };
    if !(value >= *min && value <= *max) {
        return Err(TabularError::OutOfRange {
            label: spec.label.clone(),
            value,
            min: *min,
            max: *max,
        });
    }
    if value == *max {
        return Ok(bin_edges.len() - 2);
    }
    // partition_point returns the count of edges <= value; the bin is one less
    let i = bin_edges.partition_point(|e| *e <= value);
    Ok(i - 1)
}

/// An ordered set of attribute declarations with unique labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    attributes: Vec<AttributeSpec>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSpec>) -> Result<Self, TabularError> {
        let mut seen = BTreeSet::new();
        for attr in &attributes {
            attr.validate()?;
            if !seen.insert(attr.label.clone()) {
                return Err(TabularError::InvalidSchema(format!(
                    "duplicate attribute label `{}`",
                    attr.label
                )));
            }
        }
        if !attributes
            .iter()
            .any(|a| a.level == AttrLevel::Household)
        {
            return Err(TabularError::InvalidSchema(
                "at least one household-level attribute is required".into(),
            ));
        }
        Ok(Schema { attributes })
    }

    pub fn attributes(&self) -> &[AttributeSpec] {
        &self.attributes
    }

    pub fn household_attrs(&self) -> impl Iterator<Item = &AttributeSpec> {
        self.attributes
            .iter()
            .filter(|a| a.level == AttrLevel::Household)
    }

    pub fn person_attrs(&self) -> impl Iterator<Item = &AttributeSpec> {
        self.attributes
            .iter()
            .filter(|a| a.level == AttrLevel::Person)
    }

    pub fn find(&self, label: &str) -> Option<&AttributeSpec> {
        self.attributes.iter().find(|a| a.label == label)
    }

    /// Position of `label` among attributes of its own level, used to index
    /// household/person record cells.
    pub fn level_index_of(&self, label: &str) -> Option<(AttrLevel, usize)> {
        let attr = self.find(label)?;
        let idx = self
            .attributes
            .iter()
            .filter(|a| a.level == attr.level)
            .position(|a| a.label == label)?;
        Some((attr.level, idx))
    }
}

/// Columns addressable by label, with rows of category indices. Implemented
/// by plain record tables and by composed household-person tables.
pub trait Tabular {
    fn column_labels(&self) -> Vec<String>;
    fn column_cardinalities(&self) -> Vec<usize>;
    fn rows(&self) -> &[Vec<u32>];

    fn column_index(&self, label: &str) -> Option<usize> {
        self.column_labels().iter().position(|l| l == label)
    }
}

/// A flat table of category-index rows over a schema.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordTable {
    pub schema: Schema,
    pub rows: Vec<Vec<u32>>,
}

impl RecordTable {
    pub fn new(schema: Schema, rows: Vec<Vec<u32>>) -> Result<Self, TabularError> {
        let cards: Vec<usize> = schema.attributes().iter().map(|a| a.cardinality()).collect();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cards.len() {
                return Err(TabularError::RowArity {
                    row: r,
                    found: row.len(),
                    expected: cards.len(),
                });
            }
            for (c, (&cell, &card)) in row.iter().zip(&cards).enumerate() {
                if cell as usize >= card {
                    return Err(TabularError::CellRange {
                        row: r,
                        label: schema.attributes()[c].label.clone(),
                        index: cell,
                        cardinality: card,
                    });
                }
            }
        }
        Ok(RecordTable { schema, rows })
    }
}

impl Tabular for RecordTable {
    fn column_labels(&self) -> Vec<String> {
        self.schema
            .attributes()
            .iter()
            .map(|a| a.label.clone())
            .collect()
    }

    fn column_cardinalities(&self) -> Vec<usize> {
        self.schema
            .attributes()
            .iter()
            .map(|a| a.cardinality())
            .collect()
    }

    fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }
}

/// Sparse cross-tabulation: category tuple to non-negative real count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub axes: Vec<String>,
    pub cells: BTreeMap<Vec<u32>, f64>,
}

impl ContingencyTable {
    pub fn new(axes: Vec<String>) -> Self {
        ContingencyTable {
            axes,
            cells: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, key: Vec<u32>, count: f64) {
        debug_assert_eq!(key.len(), self.axes.len());
        *self.cells.entry(key).or_insert(0.0) += count;
    }

    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    /// Marginalize onto a subset of axes (given in the caller's order).
    pub fn project(&self, axes: &[&str]) -> Result<ContingencyTable, TabularError> {
        if axes.is_empty() {
            return Err(TabularError::EmptyProjection);
        }
        let indices: Vec<usize> = axes
            .iter()
            .map(|a| {
                self.axes
                    .iter()
                    .position(|x| x == a)
                    .ok_or_else(|| TabularError::UnknownAxis(a.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let mut out = ContingencyTable::new(axes.iter().map(|a| a.to_string()).collect());
        for (key, &count) in &self.cells {
            let sub: Vec<u32> = indices.iter().map(|&i| key[i]).collect();
            out.add(sub, count);
        }
        Ok(out)
    }
}

/// Cross-tabulate rows of `table` over the named axes. Cell counts are the
/// number of matching rows, so the totals equal the row count.
pub fn tabulate<T: Tabular + ?Sized>(
    table: &T,
    axes: &[&str],
) -> Result<ContingencyTable, TabularError> {
    let labels = table.column_labels();
    let indices: Vec<usize> = axes
        .iter()
        .map(|a| {
            labels
                .iter()
                .position(|l| l == a)
                .ok_or_else(|| TabularError::UnknownAxis(a.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut out = ContingencyTable::new(axes.iter().map(|a| a.to_string()).collect());
    for row in table.rows() {
        let key: Vec<u32> = indices.iter().map(|&i| row[i]).collect();
        out.add(key, 1.0);
    }
    Ok(out)
}

/// Normalized cell proportions over a joint category space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionVector {
    pub axes: Vec<String>,
    pub cells: BTreeMap<Vec<u32>, f64>,
    /// Number of distinct occupied cells.
    pub group_count: usize,
}

impl DistributionVector {
    /// Build directly from proportions; callers must pass a normalized map.
    pub fn from_cells(
        axes: Vec<String>,
        cells: BTreeMap<Vec<u32>, f64>,
    ) -> Result<Self, TabularError> {
        let total: f64 = cells.values().sum();
        if cells.is_empty() || (total - 1.0).abs() > PROPORTION_TOL {
            return Err(TabularError::EmptyTable);
        }
        let group_count = cells.len();
        Ok(DistributionVector {
            axes,
            cells,
            group_count,
        })
    }

    pub fn get(&self, key: &[u32]) -> f64 {
        self.cells.get(key).copied().unwrap_or(0.0)
    }

    /// Marginalize onto a subset of axes.
    pub fn project(&self, axes: &[&str]) -> Result<DistributionVector, TabularError> {
        if axes.is_empty() {
            return Err(TabularError::EmptyProjection);
        }
        let indices: Vec<usize> = axes
            .iter()
            .map(|a| {
                self.axes
                    .iter()
                    .position(|x| x == a)
                    .ok_or_else(|| TabularError::UnknownAxis(a.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let mut cells: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (key, &p) in &self.cells {
            let sub: Vec<u32> = indices.iter().map(|&i| key[i]).collect();
            *cells.entry(sub).or_insert(0.0) += p;
        }
        let group_count = cells.len();
        Ok(DistributionVector {
            axes: axes.iter().map(|a| a.to_string()).collect(),
            cells,
            group_count,
        })
    }
}

/// Convert counts to proportions; errors on an all-zero table.
pub fn normalize(table: &ContingencyTable) -> Result<DistributionVector, TabularError> {
    let total = table.total();
    if total <= 0.0 {
        return Err(TabularError::EmptyTable);
    }
    let cells: BTreeMap<Vec<u32>, f64> = table
        .cells
        .iter()
        .map(|(k, &v)| (k.clone(), v / total))
        .collect();
    let group_count = cells.len();
    Ok(DistributionVector {
        axes: table.axes.clone(),
        cells,
        group_count,
    })
}
