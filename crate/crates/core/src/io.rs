//! File formats: CSV for records, composed tables, constraint targets and
//! weights; DOT for graphs; JSON for models and reports. Categorical cells
//! are written as their level strings and continuous cells as bin midpoints,
//! so a written file re-bins to the identical category indices on read.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

use crate::bn::{BayesNet, BnError, ConditionalPopulation, ModelDocument};
use crate::compose::{ComposedTable, HouseholdRecord, PersonRecord};
use crate::dag::{Dag, DagError};
use crate::ipf::{IpfError, MarginalConstraint};
use crate::tabular::{bin_continuous, AttributeKind, AttributeSpec, Schema, TabularError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Tabular(#[from] TabularError),
    #[error(transparent)]
    Graph(#[from] DagError),
    #[error(transparent)]
    Model(#[from] BnError),
    #[error(transparent)]
    Constraint(#[from] IpfError),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("column `{column}`: unknown value `{value}`")]
    UnknownValue { column: String, value: String },
    #[error("{0}")]
    Malformed(String),
}

/// Text form of a category index: the level string, or the bin midpoint
/// (which re-bins to the same index).
pub fn value_string(spec: &AttributeSpec, index: u32) -> String {
    match &spec.kind {
        AttributeKind::Categorical { levels } => levels
            .get(index as usize)
            .cloned()
            .unwrap_or_else(|| format!("#{index}")),
        AttributeKind::Continuous { bin_edges, .. } => {
            let lo = bin_edges[index as usize];
            let hi = bin_edges[index as usize + 1];
            format!("{}", (lo + hi) / 2.0)
        }
    }
}

/// Inverse of [`value_string`]: map a cell's text back to its category index.
pub fn parse_value(spec: &AttributeSpec, text: &str) -> Result<u32, IoError> {
    match &spec.kind {
        AttributeKind::Categorical { .. } => {
            spec.level_index(text).ok_or_else(|| IoError::UnknownValue {
                column: spec.label.clone(),
                value: text.to_string(),
            })
        }
        AttributeKind::Continuous { .. } => {
            let v: f64 = text.parse().map_err(|_| IoError::UnknownValue {
                column: spec.label.clone(),
                value: text.to_string(),
            })?;
            Ok(bin_continuous(v, spec)? as u32)
        }
    }
}

fn header_positions(
    headers: &csv::StringRecord,
    wanted: &[String],
) -> Result<Vec<usize>, IoError> {
    wanted
        .iter()
        .map(|w| {
            headers
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| IoError::MissingColumn(w.clone()))
        })
        .collect()
}

// ---- household / person records ----

fn write_records(
    path: &Path,
    specs: &[&AttributeSpec],
    ids: impl Iterator<Item = String>,
    rows: impl Iterator<Item = Vec<u32>>,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["household_id".to_string()];
    header.extend(specs.iter().map(|s| s.label.clone()));
    w.write_record(&header)?;
    for (id, row) in ids.zip(rows) {
        let mut record = vec![id];
        record.extend(
            specs
                .iter()
                .zip(&row)
                .map(|(spec, &v)| value_string(spec, v)),
        );
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn read_records(
    path: &Path,
    specs: &[&AttributeSpec],
) -> Result<Vec<(String, Vec<u32>)>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let id_pos = headers
        .iter()
        .position(|h| h == "household_id")
        .ok_or_else(|| IoError::MissingColumn("household_id".into()))?;
    let labels: Vec<String> = specs.iter().map(|s| s.label.clone()).collect();
    let positions = header_positions(&headers, &labels)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let id = record
            .get(id_pos)
            .ok_or_else(|| IoError::Malformed("short row".into()))?
            .to_string();
        let row = positions
            .iter()
            .zip(specs)
            .map(|(&pos, spec)| {
                let text = record
                    .get(pos)
                    .ok_or_else(|| IoError::Malformed("short row".into()))?;
                parse_value(spec, text)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        out.push((id, row));
    }
    Ok(out)
}

pub fn write_households(
    path: &Path,
    schema: &Schema,
    records: &[HouseholdRecord],
) -> Result<(), IoError> {
    let specs: Vec<&AttributeSpec> = schema.household_attrs().collect();
    write_records(
        path,
        &specs,
        records.iter().map(|r| r.household_id.clone()),
        records.iter().map(|r| r.attrs.clone()),
    )
}

pub fn read_households(path: &Path, schema: &Schema) -> Result<Vec<HouseholdRecord>, IoError> {
    let specs: Vec<&AttributeSpec> = schema.household_attrs().collect();
    Ok(read_records(path, &specs)?
        .into_iter()
        .map(|(household_id, attrs)| HouseholdRecord {
            household_id,
            attrs,
        })
        .collect())
}

pub fn write_persons(
    path: &Path,
    schema: &Schema,
    records: &[PersonRecord],
) -> Result<(), IoError> {
    let specs: Vec<&AttributeSpec> = schema.person_attrs().collect();
    write_records(
        path,
        &specs,
        records.iter().map(|r| r.household_id.clone()),
        records.iter().map(|r| r.attrs.clone()),
    )
}

pub fn read_persons(path: &Path, schema: &Schema) -> Result<Vec<PersonRecord>, IoError> {
    let specs: Vec<&AttributeSpec> = schema.person_attrs().collect();
    Ok(read_records(path, &specs)?
        .into_iter()
        .map(|(household_id, attrs)| PersonRecord {
            household_id,
            attrs,
        })
        .collect())
}

// ---- composed tables ----

pub fn write_composed(path: &Path, table: &ComposedTable) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["household_id".to_string()];
    header.extend(table.columns.iter().map(|c| c.label.clone()));
    w.write_record(&header)?;
    for (id, row) in table.household_ids.iter().zip(&table.rows) {
        let mut record = vec![id.clone()];
        record.extend(
            table
                .columns
                .iter()
                .zip(row)
                .map(|(c, &v)| value_string(&c.spec, v)),
        );
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_composed(path: &Path, schema: &Schema, k: usize) -> Result<ComposedTable, IoError> {
    let columns = ComposedTable::layout(schema, k);
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let id_pos = headers
        .iter()
        .position(|h| h == "household_id")
        .ok_or_else(|| IoError::MissingColumn("household_id".into()))?;
    let labels: Vec<String> = columns.iter().map(|c| c.label.clone()).collect();
    let positions = header_positions(&headers, &labels)?;
    let mut table = ComposedTable {
        size: k,
        columns,
        household_ids: Vec::new(),
        rows: Vec::new(),
    };
    for record in r.records() {
        let record = record?;
        table.household_ids.push(
            record
                .get(id_pos)
                .ok_or_else(|| IoError::Malformed("short row".into()))?
                .to_string(),
        );
        let row = positions
            .iter()
            .zip(&table.columns)
            .map(|(&pos, c)| {
                let text = record
                    .get(pos)
                    .ok_or_else(|| IoError::Malformed("short row".into()))?;
                parse_value(&c.spec, text)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        table.rows.push(row);
    }
    Ok(table)
}

// ---- conditional populations ----

pub fn write_conditional_population(
    path: &Path,
    pop: &ConditionalPopulation,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = pop.columns.iter().map(|c| c.label.clone()).collect();
    w.write_record(&header)?;
    for row in &pop.rows {
        let record: Vec<String> = pop
            .columns
            .iter()
            .zip(row)
            .map(|(c, &v)| value_string(&c.spec, v))
            .collect();
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_conditional_population(
    path: &Path,
    schema: &Schema,
    k: usize,
) -> Result<ConditionalPopulation, IoError> {
    let columns: Vec<_> = ComposedTable::layout(schema, k)
        .into_iter()
        .filter(|c| c.spec.is_conditional)
        .collect();
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let labels: Vec<String> = columns.iter().map(|c| c.label.clone()).collect();
    let positions = header_positions(&headers, &labels)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = positions
            .iter()
            .zip(&columns)
            .map(|(&pos, c)| {
                let text = record
                    .get(pos)
                    .ok_or_else(|| IoError::Malformed("short row".into()))?;
                parse_value(&c.spec, text)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        rows.push(row);
    }
    Ok(ConditionalPopulation {
        household_size: k,
        columns,
        rows,
    })
}

// ---- marginal constraint targets ----

/// Read a targets CSV: one column per axis holding category values, plus a
/// `target` column with the desired count. The constraint's level is the
/// common level of its axes.
pub fn read_constraint(
    path: &Path,
    schema: &Schema,
    name: &str,
) -> Result<MarginalConstraint, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let target_pos = headers
        .iter()
        .position(|h| h == "target")
        .ok_or_else(|| IoError::MissingColumn("target".into()))?;
    let axes: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_pos)
        .map(|(_, h)| h.to_string())
        .collect();
    if axes.is_empty() {
        return Err(IoError::Malformed(format!(
            "constraint `{name}` has no category columns"
        )));
    }
    let specs: Vec<&AttributeSpec> = axes
        .iter()
        .map(|a| {
            schema
                .find(a)
                .ok_or_else(|| IoError::MissingColumn(a.clone()))
        })
        .collect::<Result<_, _>>()?;
    let level = specs[0].level;
    if specs.iter().any(|s| s.level != level) {
        return Err(IoError::Malformed(format!(
            "constraint `{name}` mixes household and person attributes"
        )));
    }
    let positions = header_positions(&headers, &axes)?;
    let mut targets = std::collections::BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let key = positions
            .iter()
            .zip(&specs)
            .map(|(&pos, spec)| {
                let text = record
                    .get(pos)
                    .ok_or_else(|| IoError::Malformed("short row".into()))?;
                parse_value(spec, text)
            })
            .collect::<Result<Vec<u32>, _>>()?;
        let target: f64 = record
            .get(target_pos)
            .ok_or_else(|| IoError::Malformed("short row".into()))?
            .parse()
            .map_err(|_| IoError::Malformed(format!("constraint `{name}`: bad target")))?;
        if targets.insert(key, target).is_some() {
            return Err(IoError::Malformed(format!(
                "constraint `{name}` repeats a category"
            )));
        }
    }
    Ok(MarginalConstraint::new(name, level, axes, targets)?)
}

pub fn write_constraint(
    path: &Path,
    schema: &Schema,
    constraint: &MarginalConstraint,
) -> Result<(), IoError> {
    let specs: Vec<&AttributeSpec> = constraint
        .axes
        .iter()
        .map(|a| {
            schema
                .find(a)
                .ok_or_else(|| IoError::MissingColumn(a.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut w = csv::Writer::from_path(path)?;
    let mut header = constraint.axes.clone();
    header.push("target".into());
    w.write_record(&header)?;
    for (key, target) in &constraint.targets {
        let mut record: Vec<String> = specs
            .iter()
            .zip(key)
            .map(|(spec, &v)| value_string(spec, v))
            .collect();
        record.push(format!("{target}"));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// One weight per composed row, keyed by household id.
pub fn write_weights(path: &Path, ids: &[String], weights: &[f64]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["household_id", "weight"])?;
    for (id, weight) in ids.iter().zip(weights) {
        w.write_record([id.as_str(), &format!("{weight}")])?;
    }
    w.flush()?;
    Ok(())
}

// ---- DOT graphs ----

pub fn dag_to_dot(dag: &Dag) -> String {
    let mut s = String::from("digraph {\n");
    for label in dag.labels() {
        s.push_str(&format!("  \"{label}\";\n"));
    }
    for (u, v) in dag.edges() {
        s.push_str(&format!(
            "  \"{}\" -> \"{}\";\n",
            dag.label(u),
            dag.label(v)
        ));
    }
    s.push_str("}\n");
    s
}

fn strip_block_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("/*") {
        out.push_str(&rest[..start]);
        match rest[start..].find("*/") {
            Some(end) => rest = &rest[start + end + 2..],
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

fn unquote(token: &str) -> Result<String, IoError> {
    let token = token.trim();
    if let Some(inner) = token.strip_prefix('"').and_then(|t| t.strip_suffix('"')) {
        if inner.contains('"') || inner.is_empty() {
            return Err(IoError::Malformed(format!("bad dot identifier {token}")));
        }
        return Ok(inner.to_string());
    }
    if !token.is_empty()
        && token
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    {
        return Ok(token.to_string());
    }
    Err(IoError::Malformed(format!("bad dot identifier `{token}`")))
}

/// Parse a digraph in the subset of DOT that [`dag_to_dot`] emits (node and
/// edge statements, quoted or bare identifiers, optional attribute lists,
/// `->` chains). Cyclic input fails with the offending cycle spelled out.
pub fn dag_from_dot(text: &str) -> Result<Dag, IoError> {
    let cleaned = strip_block_comments(text);
    let no_line_comments: String = cleaned
        .lines()
        .map(|l| {
            let l = l.split("//").next().unwrap_or("");
            l.split('#').next().unwrap_or("")
        })
        .collect::<Vec<_>>()
        .join("\n");
    let open = no_line_comments
        .find('{')
        .ok_or_else(|| IoError::Malformed("no graph body".into()))?;
    let close = no_line_comments
        .rfind('}')
        .ok_or_else(|| IoError::Malformed("unterminated graph body".into()))?;
    let head = &no_line_comments[..open];
    if !head.contains("digraph") {
        return Err(IoError::Malformed(
            "only directed graphs are supported".into(),
        ));
    }
    let body = &no_line_comments[open + 1..close];

    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let intern = |labels: &mut Vec<String>, name: String| -> usize {
        match labels.iter().position(|l| l == &name) {
            Some(i) => i,
            None => {
                labels.push(name);
                labels.len() - 1
            }
        }
    };
    for statement in body.split([';', '\n']) {
        let mut statement = statement.trim();
        if let Some(i) = statement.find('[') {
            statement = statement[..i].trim();
        }
        if statement.is_empty() {
            continue;
        }
        let first_word = statement.split_whitespace().next().unwrap_or("");
        if matches!(first_word, "graph" | "node" | "edge") || statement.contains('=') {
            // defaults and attribute assignments carry no structure
            continue;
        }
        let parts: Vec<&str> = statement.split("->").collect();
        if parts.len() == 1 {
            let name = unquote(parts[0])?;
            intern(&mut labels, name);
        } else {
            let ids: Vec<usize> = parts
                .iter()
                .map(|p| unquote(p).map(|n| intern(&mut labels, n)))
                .collect::<Result<_, _>>()?;
            for pair in ids.windows(2) {
                edges.push((pair[0], pair[1]));
            }
        }
    }
    Ok(Dag::from_edges(labels, edges)?)
}

pub fn write_dot(path: &Path, dag: &Dag) -> Result<(), IoError> {
    fs::write(path, dag_to_dot(dag))?;
    Ok(())
}

pub fn read_dot(path: &Path) -> Result<Dag, IoError> {
    dag_from_dot(&fs::read_to_string(path)?)
}

// ---- JSON ----

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn write_model(path: &Path, net: &BayesNet) -> Result<(), IoError> {
    write_json(path, &net.to_document())
}

pub fn read_model(path: &Path) -> Result<BayesNet, IoError> {
    let doc: ModelDocument = read_json(path)?;
    Ok(BayesNet::from_document(&doc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::AttrLevel;
    use std::collections::BTreeMap;
    use tempfile::tempdir;

    fn test_schema() -> Schema {
        Schema::new(vec![
            AttributeSpec::categorical("AREA", &["north", "south"], AttrLevel::Household, true),
            AttributeSpec::continuous("INC", &[0.0, 25.0, 60.0, 150.0], AttrLevel::Household, false),
            AttributeSpec::categorical("AGE", &["young", "old"], AttrLevel::Person, true),
        ])
        .unwrap()
    }

    #[test]
    fn household_records_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("households.csv");
        let schema = test_schema();
        let records = vec![
            HouseholdRecord {
                household_id: "h1".into(),
                attrs: vec![0, 2],
            },
            HouseholdRecord {
                household_id: "h2".into(),
                attrs: vec![1, 0],
            },
        ];
        write_households(&path, &schema, &records).unwrap();
        let back = read_households(&path, &schema).unwrap();
        assert_eq!(back, records);
        // the continuous column is written as a midpoint, not an index
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("105"), "expected bin midpoint in {text}");
    }

    #[test]
    fn person_records_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("persons.csv");
        let schema = test_schema();
        let records = vec![
            PersonRecord {
                household_id: "h1".into(),
                attrs: vec![0],
            },
            PersonRecord {
                household_id: "h1".into(),
                attrs: vec![1],
            },
        ];
        write_persons(&path, &schema, &records).unwrap();
        assert_eq!(read_persons(&path, &schema).unwrap(), records);
    }

    #[test]
    fn composed_tables_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("composed_2.csv");
        let schema = test_schema();
        let mut table = ComposedTable::empty(&schema, 2);
        table.household_ids = vec!["h1".into(), "h2".into()];
        table.rows = vec![vec![0, 1, 0, 1], vec![1, 2, 1, 1]];
        write_composed(&path, &table).unwrap();
        let back = read_composed(&path, &schema, 2).unwrap();
        assert_eq!(back, table);
    }

    #[test]
    fn conditional_population_round_trips() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("condpop_2.csv");
        let schema = test_schema();
        let mut table = ComposedTable::empty(&schema, 2);
        table.household_ids = vec!["h1".into()];
        table.rows = vec![vec![0, 1, 0, 1]];
        let pop = ConditionalPopulation::project_from(&table);
        write_conditional_population(&path, &pop).unwrap();
        let back = read_conditional_population(&path, &schema, 2).unwrap();
        assert_eq!(back, pop);
        // non-conditional INC must not appear
        let text = fs::read_to_string(&path).unwrap();
        assert!(!text.contains("INC"));
    }

    #[test]
    fn constraints_round_trip_and_reject_mixed_levels() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("hh_area.csv");
        let schema = test_schema();
        let constraint = MarginalConstraint::new(
            "hh_area",
            AttrLevel::Household,
            vec!["AREA".into()],
            BTreeMap::from([(vec![0u32], 120.0), (vec![1u32], 80.0)]),
        )
        .unwrap();
        write_constraint(&path, &schema, &constraint).unwrap();
        let back = read_constraint(&path, &schema, "hh_area").unwrap();
        assert_eq!(back, constraint);

        let mixed = dir.path().join("mixed.csv");
        fs::write(&mixed, "AREA,AGE,target\nnorth,young,5\n").unwrap();
        assert!(matches!(
            read_constraint(&mixed, &schema, "mixed"),
            Err(IoError::Malformed(_))
        ));
    }

    #[test]
    fn dot_round_trips_with_isolated_nodes() {
        let dag = Dag::from_edges(
            vec!["A".into(), "B".into(), "LONE".into()],
            vec![(0usize, 1usize)],
        )
        .unwrap();
        let text = dag_to_dot(&dag);
        let back = dag_from_dot(&text).unwrap();
        assert_eq!(back.labels(), dag.labels());
        assert_eq!(
            back.edges().collect::<Vec<_>>(),
            dag.edges().collect::<Vec<_>>()
        );
    }

    #[test]
    fn dot_import_accepts_foreign_style() {
        let text = r#"
            // produced elsewhere
            digraph G {
                rankdir=LR [style=dotted]
                A -> B -> C;
                "D E" [label="spaced"];
                C -> "D E"
            }
        "#;
        let dag = dag_from_dot(text).unwrap();
        assert_eq!(dag.node_count(), 4);
        assert_eq!(dag.edge_count(), 3);
        assert!(dag.has_edge(
            dag.node_index("C").unwrap(),
            dag.node_index("D E").unwrap()
        ));
    }

    #[test]
    fn cyclic_dot_is_rejected_with_the_cycle() {
        let text = "digraph { A -> B; B -> C; C -> A; }";
        match dag_from_dot(text) {
            Err(IoError::Graph(e)) => {
                let message = e.to_string();
                assert!(message.contains('A') && message.contains('C'), "{message}");
            }
            other => panic!("expected a cycle error, got {other:?}"),
        }
    }

    #[test]
    fn undirected_graphs_are_rejected() {
        assert!(dag_from_dot("graph { A -- B; }").is_err());
    }

    #[test]
    fn model_json_round_trips_through_files() {
        use crate::bn::fit_cpts;
        use crate::dag::Dag;
        let schema = test_schema();
        let mut table = ComposedTable::empty(&schema, 1);
        table.household_ids = (0..6).map(|i| format!("h{i}")).collect();
        table.rows = vec![
            vec![0, 0, 0],
            vec![0, 1, 1],
            vec![1, 2, 0],
            vec![1, 0, 1],
            vec![0, 2, 0],
            vec![1, 1, 1],
        ];
        let labels: Vec<String> = table.columns.iter().map(|c| c.label.clone()).collect();
        let dag = Dag::from_edges(labels, vec![(0usize, 2usize)]).unwrap();
        let net = fit_cpts(&dag, &table, 1.0).unwrap();

        let dir = tempdir().unwrap();
        let path = dir.path().join("model_1.json");
        write_model(&path, &net).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn weights_csv_has_one_row_per_household() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("weights.csv");
        write_weights(
            &path,
            &["h1".to_string(), "h2".to_string()],
            &[1.25, 3.5],
        )
        .unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "household_id,weight\nh1,1.25\nh2,3.5\n");
    }
}
