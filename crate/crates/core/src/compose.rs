//! Household-size-specific household-person tables.
//!
//! For every household of size k, member attributes are appended to the
//! household attributes as suffixed columns (`AGEP_1`, `AGEP_2`, ...), one
//! row per household. Households larger than the configured threshold bypass
//! model training and are replicated directly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tabular::{AttrLevel, AttributeSpec, Schema, Tabular};

#[derive(Debug, Error)]
pub enum ComposeError {
    #[error("person references unknown household `{household_id}`")]
    DanglingPerson { household_id: String },
    #[error("duplicate household id `{household_id}`")]
    DuplicateHousehold { household_id: String },
    #[error("household `{household_id}`: expected {expected} {level:?} cells, found {found}")]
    AttrArity {
        household_id: String,
        level: AttrLevel,
        expected: usize,
        found: usize,
    },
    #[error("household size must be at least 1")]
    InvalidSize,
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("stratum `{attribute}`={category} has a positive target but no overflow households")]
    EmptyStratum { attribute: String, category: String },
    #[error("malformed composed columns: {0}")]
    MalformedColumns(String),
}

/// A household row: opaque id plus household-level category indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HouseholdRecord {
    pub household_id: String,
    pub attrs: Vec<u32>,
}

/// A person row: owning household id plus person-level category indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonRecord {
    pub household_id: String,
    pub attrs: Vec<u32>,
}

/// One column of a composed table: either a household attribute or a member
/// attribute carrying its 1-based member slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposedColumn {
    pub label: String,
    /// None for household attributes, Some(i) for member i's attributes.
    pub member: Option<usize>,
    pub spec: AttributeSpec,
}

/// One row per k-person household: household attributes followed by k blocks
/// of member attributes in a canonical member order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedTable {
    pub size: usize,
    pub columns: Vec<ComposedColumn>,
    pub household_ids: Vec<String>,
    pub rows: Vec<Vec<u32>>,
}

impl ComposedTable {
    /// Canonical column layout for `schema` at household size `k`.
    pub fn layout(schema: &Schema, k: usize) -> Vec<ComposedColumn> {
        let mut columns: Vec<ComposedColumn> = schema
            .household_attrs()
            .map(|a| ComposedColumn {
                label: a.label.clone(),
                member: None,
                spec: a.clone(),
            })
            .collect();
        for i in 1..=k {
            for a in schema.person_attrs() {
                columns.push(ComposedColumn {
                    label: format!("{}_{}", a.label, i),
                    member: Some(i),
                    spec: a.clone(),
                });
            }
        }
        columns
    }

    pub fn empty(schema: &Schema, k: usize) -> Self {
        ComposedTable {
            size: k,
            columns: Self::layout(schema, k),
            household_ids: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Labels of the conditional columns in table order: conditional
    /// household attributes plus every member slot of conditional person
    /// attributes.
    pub fn conditional_labels(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.spec.is_conditional)
            .map(|c| c.label.clone())
            .collect()
    }

    /// Verify the household-block-then-member-blocks structure against a
    /// schema; malformed suffix columns are rejected here.
    pub fn check_structure(&self, schema: &Schema) -> Result<(), ComposeError> {
        let expected = Self::layout(schema, self.size);
        if self.columns.len() != expected.len() {
            return Err(ComposeError::MalformedColumns(format!(
                "expected {} columns for size {}, found {}",
                expected.len(),
                self.size,
                self.columns.len()
            )));
        }
        for (got, want) in self.columns.iter().zip(&expected) {
            if got.label != want.label || got.member != want.member {
                return Err(ComposeError::MalformedColumns(format!(
                    "expected column `{}`, found `{}`",
                    want.label, got.label
                )));
            }
        }
        Ok(())
    }
}

impl Tabular for ComposedTable {
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

/// Canonical member ordering inside a composed row.
///
/// Members sort by the named attribute's category index descending (age, so
/// slot 1 is the oldest member), then by the remaining person attributes
/// lexicographically, then by input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberOrdering {
    pub order_by: Option<String>,
}

impl MemberOrdering {
    pub fn by_descending(label: impl Into<String>) -> Self {
        MemberOrdering {
            order_by: Some(label.into()),
        }
    }

    pub fn input_order() -> Self {
        MemberOrdering { order_by: None }
    }

    fn sort_members(
        &self,
        members: &mut Vec<(usize, Vec<u32>)>,
        schema: &Schema,
    ) -> Result<(), ComposeError> {
        let primary = match &self.order_by {
            None => None,
            Some(label) => {
                let idx = schema
                    .person_attrs()
                    .position(|a| &a.label == label)
                    .ok_or_else(|| ComposeError::UnknownAttribute(label.clone()))?;
                Some(idx)
            }
        };
        members.sort_by(|(pos_a, a), (pos_b, b)| {
            if let Some(p) = primary {
                match b[p].cmp(&a[p]) {
                    std::cmp::Ordering::Equal => {}
                    other => return other,
                }
            }
            let rest = |v: &[u32]| -> Vec<u32> {
                v.iter()
                    .enumerate()
                    .filter(|(i, _)| Some(*i) != primary)
                    .map(|(_, &x)| x)
                    .collect()
            };
            rest(a).cmp(&rest(b)).then(pos_a.cmp(pos_b))
        });
        Ok(())
    }
}

impl Default for MemberOrdering {
    fn default() -> Self {
        MemberOrdering::input_order()
    }
}

/// Composition result: the table plus the number of zero-member households
/// that had to be skipped.
#[derive(Debug)]
pub struct ComposeOutput {
    pub table: ComposedTable,
    pub skipped_empty: usize,
}

fn group_members<'a>(
    households: &[HouseholdRecord],
    persons: &'a [PersonRecord],
) -> Result<BTreeMap<&'a str, Vec<(usize, &'a PersonRecord)>>, ComposeError> {
    let mut known: BTreeMap<&str, ()> = BTreeMap::new();
    for h in households {
        if known.insert(h.household_id.as_str(), ()).is_some() {
            return Err(ComposeError::DuplicateHousehold {
                household_id: h.household_id.clone(),
            });
        }
    }
    let mut groups: BTreeMap<&str, Vec<(usize, &PersonRecord)>> = BTreeMap::new();
    for (pos, p) in persons.iter().enumerate() {
        if !known.contains_key(p.household_id.as_str()) {
            return Err(ComposeError::DanglingPerson {
                household_id: p.household_id.clone(),
            });
        }
        groups.entry(p.household_id.as_str()).or_default().push((pos, p));
    }
    Ok(groups)
}

/// Build the size-k composed table: one row per household with exactly k
/// members, members ordered canonically and attributes suffixed `_1..k`.
pub fn compose_households(
    households: &[HouseholdRecord],
    persons: &[PersonRecord],
    k: usize,
    ordering: &MemberOrdering,
    schema: &Schema,
) -> Result<ComposeOutput, ComposeError> {
    if k == 0 {
        return Err(ComposeError::InvalidSize);
    }
    let hh_len = schema.household_attrs().count();
    let p_len = schema.person_attrs().count();
    let groups = group_members(households, persons)?;

    let mut table = ComposedTable::empty(schema, k);
    let mut skipped_empty = 0usize;
    for h in households {
        if h.attrs.len() != hh_len {
            return Err(ComposeError::AttrArity {
                household_id: h.household_id.clone(),
                level: AttrLevel::Household,
                expected: hh_len,
                found: h.attrs.len(),
            });
        }
        let members = groups.get(h.household_id.as_str());
        let count = members.map_or(0, |m| m.len());
        if count == 0 {
            skipped_empty += 1;
            continue;
        }
        if count != k {
            continue;
        }
        let mut ordered: Vec<(usize, Vec<u32>)> = members
            .unwrap()
            .iter()
            .map(|(pos, p)| (*pos, p.attrs.clone()))
            .collect();
        for (_, attrs) in &ordered {
            if attrs.len() != p_len {
                return Err(ComposeError::AttrArity {
                    household_id: h.household_id.clone(),
                    level: AttrLevel::Person,
                    expected: p_len,
                    found: attrs.len(),
                });
            }
        }
        ordering.sort_members(&mut ordered, schema)?;
        let mut row = h.attrs.clone();
        for (_, attrs) in ordered {
            row.extend(attrs);
        }
        table.household_ids.push(h.household_id.clone());
        table.rows.push(row);
    }
    Ok(ComposeOutput {
        table,
        skipped_empty,
    })
}

/// One size bucket of the split: the households of that exact size together
/// with their members, both in input order.
#[derive(Debug, Clone, Default)]
pub struct Bucket {
    pub households: Vec<HouseholdRecord>,
    pub persons: Vec<PersonRecord>,
}

/// Outcome of partitioning a population by household size.
#[derive(Debug, Default)]
pub struct SplitResult {
    pub buckets: BTreeMap<usize, Bucket>,
    pub overflow: Bucket,
    /// Households with no members; excluded from every bucket.
    pub empty_households: Vec<HouseholdRecord>,
}

/// Partition households by exact size up to `threshold`; larger households
/// land in the overflow set.
pub fn split_by_size(
    households: &[HouseholdRecord],
    persons: &[PersonRecord],
    threshold: usize,
) -> Result<SplitResult, ComposeError> {
    if threshold == 0 {
        return Err(ComposeError::InvalidSize);
    }
    let groups = group_members(households, persons)?;
    let mut result = SplitResult::default();
    for h in households {
        let members = groups.get(h.household_id.as_str());
        let size = members.map_or(0, |m| m.len());
        if size == 0 {
            result.empty_households.push(h.clone());
            continue;
        }
        let bucket = if size <= threshold {
            result.buckets.entry(size).or_default()
        } else {
            &mut result.overflow
        };
        bucket.households.push(h.clone());
        bucket
            .persons
            .extend(members.unwrap().iter().map(|(_, p)| (*p).clone()));
    }
    Ok(result)
}

/// Deterministically replicate overflow households to meet per-stratum
/// targets. Copies are apportioned as evenly as possible across the
/// stratum's households (equal-weight largest remainder, remainders to the
/// earliest input rows), each copy receiving a fresh household id.
pub fn replicate_large(
    overflow: &Bucket,
    targets: &BTreeMap<u32, u64>,
    stratum_label: &str,
    schema: &Schema,
    id_prefix: &str,
) -> Result<Bucket, ComposeError> {
    let (level, stratum_idx) = schema
        .level_index_of(stratum_label)
        .ok_or_else(|| ComposeError::UnknownAttribute(stratum_label.to_string()))?;
    if level != AttrLevel::Household {
        return Err(ComposeError::UnknownAttribute(format!(
            "{stratum_label} is not a household attribute"
        )));
    }
    let spec = schema.find(stratum_label).unwrap();
    let groups = group_members(&overflow.households, &overflow.persons)?;

    let mut by_stratum: BTreeMap<u32, Vec<&HouseholdRecord>> = BTreeMap::new();
    for h in &overflow.households {
        by_stratum.entry(h.attrs[stratum_idx]).or_default().push(h);
    }

    let mut out = Bucket::default();
    let mut seq = 0usize;
    for (&category, &target) in targets {
        if target == 0 {
            continue;
        }
        let Some(pool) = by_stratum.get(&category) else {
            return Err(ComposeError::EmptyStratum {
                attribute: stratum_label.to_string(),
                category: spec.category_name(category),
            });
        };
        let n = pool.len() as u64;
        for (i, h) in pool.iter().enumerate() {
            let copies = target / n + u64::from((i as u64) < target % n);
            for _ in 0..copies {
                let new_id = format!("{id_prefix}{seq}");
                seq += 1;
                out.households.push(HouseholdRecord {
                    household_id: new_id.clone(),
                    attrs: h.attrs.clone(),
                });
                if let Some(members) = groups.get(h.household_id.as_str()) {
                    for (_, p) in members {
                        out.persons.push(PersonRecord {
                            household_id: new_id.clone(),
                            attrs: p.attrs.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Split a composed table back into household and person records, using the
/// table's own household ids.
pub fn decompose(composed: &ComposedTable) -> Result<(Vec<HouseholdRecord>, Vec<PersonRecord>), ComposeError> {
    let mut hh_cols = Vec::new();
    let mut member_cols: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, col) in composed.columns.iter().enumerate() {
        match col.member {
            None => {
                if col.spec.level != AttrLevel::Household {
                    return Err(ComposeError::MalformedColumns(format!(
                        "column `{}` has no member suffix but is person-level",
                        col.label
                    )));
                }
                hh_cols.push(i);
            }
            Some(m) => {
                if m == 0 || m > composed.size {
                    return Err(ComposeError::MalformedColumns(format!(
                        "column `{}` references member {m} of a {}-person household",
                        col.label, composed.size
                    )));
                }
                member_cols.entry(m).or_default().push(i);
            }
        }
    }
    if composed.size > 0 {
        let widths: Vec<usize> = member_cols.values().map(|v| v.len()).collect();
        if member_cols.len() != composed.size || widths.iter().any(|&w| w != widths[0]) {
            return Err(ComposeError::MalformedColumns(
                "member blocks are incomplete or uneven".into(),
            ));
        }
    }

    let mut households = Vec::with_capacity(composed.rows.len());
    let mut persons = Vec::new();
    for (r, row) in composed.rows.iter().enumerate() {
        let id = composed
            .household_ids
            .get(r)
            .cloned()
            .unwrap_or_else(|| format!("h{}_{r}", composed.size));
        households.push(HouseholdRecord {
            household_id: id.clone(),
            attrs: hh_cols.iter().map(|&i| row[i]).collect(),
        });
        for cols in member_cols.values() {
            persons.push(PersonRecord {
                household_id: id.clone(),
                attrs: cols.iter().map(|&i| row[i]).collect(),
            });
        }
    }
    Ok((households, persons))
}
