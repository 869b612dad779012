//! Orchestration of the full synthesis flow. Each stage reads its inputs
//! from the artifact directory and persists everything it produces there,
//! so running the stages one at a time through the CLI is byte-identical
//! to a single `run_pipeline` call. Failures name the stage and a digest
//! of the input files, which pins down what the run was looking at.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bn::{fit_cpts, sample_conditional};
use crate::compose::{
    compose_households, decompose, replicate_large, split_by_size, Bucket, HouseholdRecord,
    MemberOrdering, PersonRecord,
};
use crate::config::{conditional_guard, expand_edge_pairs, IntegerizeChoice, PipelineConfig};
use crate::dag::{build_dags, cross_validate, select_best, DagMethod, Dataset, LearnOptions, ScoredDag};
use crate::io;
use crate::ipf::{build_conditional_population, integerize, IntegerizeMode, MarginalConstraint, WeightedSample};
use crate::metrics::{
    association_check, compare_distributions, entropy_diversity, marginal_report, MarginalRow,
    MetricsReport,
};
use crate::seed::derive_seed;
use crate::tabular::{normalize, tabulate, AttrLevel, AttributeSpec, RecordTable, Schema};

type BoxError = Box<dyn std::error::Error>;

/// A stage failure, carrying which stage fell over and the digest of the
/// input files the run was started from.
#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub digest: String,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "stage `{}` failed on inputs {}: {}",
            self.stage, self.digest, self.message
        )
    }
}

impl std::error::Error for PipelineError {}

/// What one stage produced: artifact paths plus human-readable notes.
#[derive(Debug, Clone, Default)]
pub struct StageReport {
    pub stage: &'static str,
    pub artifacts: Vec<PathBuf>,
    pub notes: Vec<String>,
}

impl StageReport {
    fn new(stage: &'static str) -> Self {
        StageReport {
            stage,
            ..Default::default()
        }
    }

    fn artifact(&mut self, path: PathBuf) {
        self.artifacts.push(path);
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }
}

/// Cross-validated summary of one structure, as persisted by `learn-dag`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodScore {
    pub method: DagMethod,
    pub edge_count: usize,
    /// Directed edges as (parent, child) column labels.
    pub edges: Vec<(String, String)>,
    pub mean_aic: f64,
    pub std_aic: f64,
    pub fold_scores: Vec<f64>,
}

impl MethodScore {
    fn from_scored(s: &ScoredDag) -> Self {
        MethodScore {
            method: s.method,
            edge_count: s.dag.edge_count(),
            edges: s
                .dag
                .edges()
                .map(|(u, v)| (s.dag.label(u).to_string(), s.dag.label(v).to_string()))
                .collect(),
            mean_aic: s.mean_aic,
            std_aic: s.std_aic,
            fold_scores: s.fold_scores.clone(),
        }
    }
}

/// Which structure won the cross-validation for one household size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeSelection {
    pub size: usize,
    pub folds: usize,
    pub chosen: DagMethod,
    /// Every candidate, best first.
    pub ranking: Vec<MethodScore>,
}

fn inputs_digest(config: &PipelineConfig) -> String {
    let mut hasher = Sha256::new();
    for path in [&config.inputs.households, &config.inputs.persons] {
        match fs::read(config.resolve(path)) {
            Ok(bytes) => hasher.update(&bytes),
            Err(_) => return "unavailable".into(),
        }
    }
    let digest = hasher.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

fn wrap<T>(
    stage: &'static str,
    config: &PipelineConfig,
    result: Result<T, BoxError>,
) -> Result<T, PipelineError> {
    result.map_err(|e| PipelineError {
        stage,
        digest: inputs_digest(config),
        message: e.to_string(),
    })
}

fn composed_path(out: &Path, size: usize) -> PathBuf {
    out.join(format!("composed_{size}.csv"))
}

/// Household sizes with a composed table in the artifact directory.
fn composed_sizes(out: &Path) -> Result<Vec<usize>, BoxError> {
    let mut sizes = Vec::new();
    let entries = fs::read_dir(out).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            format!(
                "no composed tables under {} — run the compose stage first",
                out.display()
            )
        } else {
            e.to_string()
        }
    })?;
    for entry in entries {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(k) = name
            .strip_prefix("composed_")
            .and_then(|r| r.strip_suffix(".csv"))
            .and_then(|r| r.parse::<usize>().ok())
        {
            sizes.push(k);
        }
    }
    if sizes.is_empty() {
        return Err(format!(
            "no composed tables under {} — run the compose stage first",
            out.display()
        )
        .into());
    }
    sizes.sort_unstable();
    Ok(sizes)
}

fn member_ordering(config: &PipelineConfig) -> MemberOrdering {
    match &config.compose.order_by {
        Some(label) => MemberOrdering::by_descending(label.clone()),
        None => MemberOrdering::input_order(),
    }
}

/// Split the input sample into per-size composed tables plus the overflow
/// bucket of households above the threshold.
pub fn stage_compose(config: &PipelineConfig, out: &Path) -> Result<StageReport, PipelineError> {
    wrap("compose", config, compose_inner(config, out))
}

fn compose_inner(config: &PipelineConfig, out: &Path) -> Result<StageReport, BoxError> {
    let schema = config.schema()?;
    fs::create_dir_all(out)?;
    let households = io::read_households(&config.resolve(&config.inputs.households), &schema)?;
    let persons = io::read_persons(&config.resolve(&config.inputs.persons), &schema)?;
    let split = split_by_size(&households, &persons, config.compose.threshold)?;
    let ordering = member_ordering(config);

    let mut report = StageReport::new("compose");
    for (&size, bucket) in &split.buckets {
        let composed =
            compose_households(&bucket.households, &bucket.persons, size, &ordering, &schema)?;
        let path = composed_path(out, size);
        io::write_composed(&path, &composed.table)?;
        report.note(format!(
            "size {size}: {} households composed",
            composed.table.rows.len()
        ));
        report.artifact(path);
    }
    let overflow_households = out.join("overflow_households.csv");
    let overflow_persons = out.join("overflow_persons.csv");
    io::write_households(&overflow_households, &schema, &split.overflow.households)?;
    io::write_persons(&overflow_persons, &schema, &split.overflow.persons)?;
    report.note(format!(
        "overflow: {} households above size {}",
        split.overflow.households.len(),
        config.compose.threshold
    ));
    if !split.empty_households.is_empty() {
        log::warn!(
            "{} households have no members and were dropped",
            split.empty_households.len()
        );
        report.note(format!(
            "dropped {} member-less households",
            split.empty_households.len()
        ));
    }
    report.artifact(overflow_households);
    report.artifact(overflow_persons);
    Ok(report)
}

/// Build the candidate structures for every composed size, cross-validate
/// them, and persist one DOT file and one scored summary per method plus
/// the per-size selection.
pub fn stage_learn_dag(config: &PipelineConfig, out: &Path) -> Result<StageReport, PipelineError> {
    wrap("learn-dag", config, learn_dag_inner(config, out))
}

fn learn_dag_inner(config: &PipelineConfig, out: &Path) -> Result<StageReport, BoxError> {
    let schema = config.schema()?;
    let mut report = StageReport::new("learn-dag");
    for size in composed_sizes(out)? {
        let table = io::read_composed(&composed_path(out, size), &schema, size)?;
        let rows = table.rows.len();
        if rows < 2 {
            return Err(format!(
                "size {size}: {rows} composed row(s) — too few to cross-validate"
            )
            .into());
        }
        let folds = config.cv.folds.min(rows);
        if folds < config.cv.folds {
            log::warn!(
                "size {size}: clamping cv folds from {} to the {rows} available rows",
                config.cv.folds
            );
            report.note(format!("size {size}: cv folds clamped to {folds}"));
        }

        let focused = expand_edge_pairs(&table.columns, &config.dag.focused_edges)?;
        let mut forbidden = expand_edge_pairs(&table.columns, &config.dag.forbidden_edges)?;
        forbidden.extend(conditional_guard(&table.columns));
        let opts = LearnOptions {
            focused,
            forbidden,
            top_m: config.dag.discovery.top_m,
            ols_alpha: config.dag.discovery.ols_alpha,
            forest: config
                .dag
                .discovery
                .forest_params(derive_seed(config.master_seed, "forest", size as u64)),
        };
        let data = Dataset::from_tabular(&table);
        let built = build_dags(&data, &config.dag.methods, &opts)?;

        let cv_seed = derive_seed(config.master_seed, "cv", size as u64);
        let mut scored = Vec::with_capacity(built.len());
        for b in built {
            let cv = cross_validate(&b.dag, &table, folds, cv_seed, config.cv.alpha)?;
            scored.push(ScoredDag {
                method: b.method,
                dag: b.dag,
                mean_aic: cv.mean,
                std_aic: cv.std,
                fold_scores: cv.folds,
            });
        }
        for s in &scored {
            let stem = format!("dag_{}_{size}", s.method.file_stem());
            let dot = out.join(format!("{stem}.dot"));
            io::write_dot(&dot, &s.dag)?;
            let summary = out.join(format!("{stem}.json"));
            io::write_json(&summary, &MethodScore::from_scored(s))?;
            report.artifact(dot);
            report.artifact(summary);
        }

        let chosen = select_best(&scored)?.method;
        let mut ranking = scored;
        ranking.sort_by(|a, b| {
            b.mean_aic
                .total_cmp(&a.mean_aic)
                .then(a.dag.edge_count().cmp(&b.dag.edge_count()))
                .then(a.method.cmp(&b.method))
        });
        let selection = SizeSelection {
            size,
            folds,
            chosen,
            ranking: ranking.iter().map(MethodScore::from_scored).collect(),
        };
        let path = out.join(format!("selection_{size}.json"));
        io::write_json(&path, &selection)?;
        report.note(format!(
            "size {size}: {chosen} selected (mean score {:.3})",
            selection.ranking[0].mean_aic
        ));
        report.artifact(path);
    }
    Ok(report)
}

/// Fit the conditional probability tables of each size's selected
/// structure on its composed table.
pub fn stage_fit(config: &PipelineConfig, out: &Path) -> Result<StageReport, PipelineError> {
    wrap("fit", config, fit_inner(config, out))
}

fn fit_inner(config: &PipelineConfig, out: &Path) -> Result<StageReport, BoxError> {
    let schema = config.schema()?;
    let mut report = StageReport::new("fit");
    for size in composed_sizes(out)? {
        let table = io::read_composed(&composed_path(out, size), &schema, size)?;
        let selection: SizeSelection = io::read_json(&out.join(format!("selection_{size}.json")))?;
        let dot = out.join(format!("dag_{}_{size}.dot", selection.chosen.file_stem()));
        let dag = io::read_dot(&dot)?;
        let net = fit_cpts(&dag, &table, config.generation.alpha)?;
        let path = out.join(format!("model_{size}.json"));
        io::write_model(&path, &net)?;
        report.note(format!(
            "size {size}: fitted {} on {} rows ({} parameters)",
            selection.chosen,
            table.rows.len(),
            net.param_count()
        ));
        report.artifact(path);
    }
    Ok(report)
}

/// The marginal constraints configured for one household size, with the
/// stratifying one (if any) singled out.
fn constraints_for_size(
    config: &PipelineConfig,
    schema: &Schema,
    size: usize,
) -> Result<(Vec<MarginalConstraint>, Option<MarginalConstraint>), BoxError> {
    let mut all = Vec::new();
    let mut stratify = None;
    for section in config.constraints.iter().filter(|c| c.size == size) {
        let path = config.resolve(&section.file);
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| section.file.display().to_string());
        let constraint = io::read_constraint(&path, schema, &name)?;
        if section.stratify {
            stratify = Some(constraint.clone());
        }
        all.push(constraint);
    }
    Ok((all, stratify))
}

/// How many households size `size` should contribute: the stratifying
/// constraint's total, or the first household-level constraint's total.
fn size_target(
    constraints: &[MarginalConstraint],
    stratify: Option<&MarginalConstraint>,
    size: usize,
) -> Result<u64, BoxError> {
    let total = stratify
        .or_else(|| constraints.iter().find(|c| c.level == AttrLevel::Household))
        .map(MarginalConstraint::total)
        .ok_or_else(|| {
            format!("size {size}: no household-level constraint fixes the household total")
        })?;
    Ok(total.round() as u64)
}

/// Rake each composed sample against its marginal constraints and expand
/// the integerized weights into the conditional population.
pub fn stage_condpop(config: &PipelineConfig, out: &Path) -> Result<StageReport, PipelineError> {
    wrap("condpop", config, condpop_inner(config, out))
}

fn condpop_inner(config: &PipelineConfig, out: &Path) -> Result<StageReport, BoxError> {
    let schema = config.schema()?;
    let mut report = StageReport::new("condpop");
    for size in composed_sizes(out)? {
        let table = io::read_composed(&composed_path(out, size), &schema, size)?;
        let (constraints, stratify) = constraints_for_size(config, &schema, size)?;
        if constraints.is_empty() {
            return Err(format!(
                "size {size}: composed table exists but no marginal constraints are configured"
            )
            .into());
        }
        let target = size_target(&constraints, stratify.as_ref(), size)?;
        let mode = match config.ipf.integerize {
            IntegerizeChoice::LargestRemainder => IntegerizeMode::LargestRemainder,
            IntegerizeChoice::Stochastic => IntegerizeMode::Stochastic {
                seed: derive_seed(config.master_seed, "integerize", size as u64),
            },
        };
        let (condpop, rake) = build_conditional_population(
            &WeightedSample::uniform(table),
            &constraints,
            target,
            stratify.as_ref(),
            config.ipf.tol,
            config.ipf.max_iter,
            mode,
        )?;
        let path = out.join(format!("condpop_{size}.csv"));
        io::write_conditional_population(&path, &condpop)?;
        let rake_path = out.join(format!("rake_{size}.json"));
        io::write_json(&rake_path, &rake)?;
        report.note(format!(
            "size {size}: {} households raked in {} sweeps{}",
            condpop.len(),
            rake.sweeps,
            if rake.converged {
                String::new()
            } else {
                format!(" (NOT converged, deviation {:.3e})", rake.deviation)
            }
        ));
        report.artifact(path);
        report.artifact(rake_path);
    }
    Ok(report)
}

/// Sample the non-conditional attributes for every conditional row, fold in
/// the replicated overflow households, and write the flat population.
pub fn stage_generate(config: &PipelineConfig, out: &Path) -> Result<StageReport, PipelineError> {
    wrap("generate", config, generate_inner(config, out))
}

fn generate_inner(config: &PipelineConfig, out: &Path) -> Result<StageReport, BoxError> {
    let schema = config.schema()?;
    let mut report = StageReport::new("generate");
    let mut all_households = Vec::new();
    let mut all_persons = Vec::new();
    for size in composed_sizes(out)? {
        let net = io::read_model(&out.join(format!("model_{size}.json")))?;
        let condpop =
            io::read_conditional_population(&out.join(format!("condpop_{size}.csv")), &schema, size)?;
        let synthetic = sample_conditional(
            &net,
            &condpop,
            derive_seed(config.master_seed, "generate", size as u64),
        )?;
        let path = out.join(format!("synthetic_{size}.csv"));
        io::write_composed(&path, &synthetic)?;
        let (households, persons) = decompose(&synthetic)?;
        report.note(format!("size {size}: {} households generated", households.len()));
        all_households.extend(households);
        all_persons.extend(persons);
        report.artifact(path);
    }

    let overflow = Bucket {
        households: io::read_households(&out.join("overflow_households.csv"), &schema)?,
        persons: io::read_persons(&out.join("overflow_persons.csv"), &schema)?,
    };
    match &config.replication {
        Some(replication) => {
            let path = config.resolve(&replication.targets);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let constraint = io::read_constraint(&path, &schema, &name)?;
            if constraint.axes.len() != 1 || constraint.level != AttrLevel::Household {
                return Err(format!(
                    "replication targets `{name}` must cover exactly one household attribute"
                )
                .into());
            }
            let targets: BTreeMap<u32, u64> = constraint
                .targets
                .iter()
                .map(|(key, &t)| (key[0], t.round() as u64))
                .collect();
            let replicated =
                replicate_large(&overflow, &targets, &constraint.axes[0], &schema, "r")?;
            report.note(format!(
                "overflow: {} households replicated from {}",
                replicated.households.len(),
                overflow.households.len()
            ));
            all_households.extend(replicated.households);
            all_persons.extend(replicated.persons);
        }
        None if !overflow.households.is_empty() => {
            log::warn!(
                "{} overflow households but no replication targets configured; they are left out",
                overflow.households.len()
            );
            report.note(format!(
                "overflow: {} households dropped (no replication targets)",
                overflow.households.len()
            ));
        }
        None => {}
    }

    let households_path = out.join("households.csv");
    let persons_path = out.join("persons.csv");
    io::write_households(&households_path, &schema, &all_households)?;
    io::write_persons(&persons_path, &schema, &all_persons)?;
    report.note(format!(
        "population: {} households, {} persons",
        all_households.len(),
        all_persons.len()
    ));
    report.artifact(households_path);
    report.artifact(persons_path);
    Ok(report)
}

fn household_subschema(schema: &Schema) -> Result<Schema, BoxError> {
    let attrs: Vec<AttributeSpec> = schema.household_attrs().cloned().collect();
    Ok(Schema::new(attrs)?)
}

fn household_table(
    schema: &Schema,
    households: &[HouseholdRecord],
) -> Result<RecordTable, BoxError> {
    let sub = household_subschema(schema)?;
    let rows = households.iter().map(|h| h.attrs.clone()).collect();
    Ok(RecordTable::new(sub, rows)?)
}

/// One row per person carrying both its own attributes and its household's,
/// in schema order.
fn joined_person_table(
    schema: &Schema,
    households: &[HouseholdRecord],
    persons: &[PersonRecord],
) -> Result<RecordTable, BoxError> {
    let by_id: BTreeMap<&str, &Vec<u32>> = households
        .iter()
        .map(|h| (h.household_id.as_str(), &h.attrs))
        .collect();
    let mut hh_pos: BTreeMap<&str, usize> = BTreeMap::new();
    let mut p_pos: BTreeMap<&str, usize> = BTreeMap::new();
    for attr in schema.attributes() {
        match attr.level {
            AttrLevel::Household => hh_pos.insert(attr.label.as_str(), hh_pos.len()),
            AttrLevel::Person => p_pos.insert(attr.label.as_str(), p_pos.len()),
        };
    }
    let mut rows = Vec::with_capacity(persons.len());
    for person in persons {
        let hh = by_id.get(person.household_id.as_str()).ok_or_else(|| {
            format!("person references unknown household `{}`", person.household_id)
        })?;
        let row = schema
            .attributes()
            .iter()
            .map(|attr| match attr.level {
                AttrLevel::Household => hh[hh_pos[attr.label.as_str()]],
                AttrLevel::Person => person.attrs[p_pos[attr.label.as_str()]],
            })
            .collect();
        rows.push(row);
    }
    Ok(RecordTable::new(schema.clone(), rows)?)
}

fn is_household_grouping(schema: &Schema, grouping: &[String]) -> bool {
    grouping.iter().all(|label| {
        schema
            .find(label)
            .map(|a| a.level == AttrLevel::Household)
            .unwrap_or(false)
    })
}

/// Score the generated population: reference comparisons, cross-member
/// association, entropy diversity, and the census marginal report.
pub fn stage_validate(config: &PipelineConfig, out: &Path) -> Result<StageReport, PipelineError> {
    wrap("validate", config, validate_inner(config, out))
}

fn validate_inner(config: &PipelineConfig, out: &Path) -> Result<StageReport, BoxError> {
    let schema = config.schema()?;
    let mut report = StageReport::new("validate");
    let households = io::read_households(&out.join("households.csv"), &schema)?;
    let persons = io::read_persons(&out.join("persons.csv"), &schema)?;
    let syn_households = household_table(&schema, &households)?;
    let syn_persons = joined_person_table(&schema, &households, &persons)?;

    let mut metrics = MetricsReport::default();

    let reference = match (
        &config.metrics.reference_households,
        &config.metrics.reference_persons,
    ) {
        (Some(h), Some(p)) => Some((
            io::read_households(&config.resolve(h), &schema)?,
            io::read_persons(&config.resolve(p), &schema)?,
        )),
        (None, None) => None,
        _ => {
            return Err("reference_households and reference_persons must be given together".into())
        }
    };

    if let Some((ref_households, ref_persons)) = &reference {
        let ref_hh_table = household_table(&schema, ref_households)?;
        let ref_p_table = joined_person_table(&schema, ref_households, ref_persons)?;
        for grouping in &config.metrics.comparisons {
            let axes: Vec<&str> = grouping.iter().map(String::as_str).collect();
            let (hat, reference) = if is_household_grouping(&schema, grouping) {
                (
                    normalize(&tabulate(&syn_households, &axes)?)?,
                    normalize(&tabulate(&ref_hh_table, &axes)?)?,
                )
            } else {
                (
                    normalize(&tabulate(&syn_persons, &axes)?)?,
                    normalize(&tabulate(&ref_p_table, &axes)?)?,
                )
            };
            metrics.comparisons.push(compare_distributions(&hat, &reference)?);
        }

        if !config.metrics.association.is_empty() {
            let attrs: Vec<&str> = config.metrics.association.iter().map(String::as_str).collect();
            let split = split_by_size(ref_households, ref_persons, config.compose.threshold)?;
            let ordering = member_ordering(config);
            for size in composed_sizes(out)? {
                if size < 2 {
                    continue;
                }
                let Some(bucket) = split.buckets.get(&size) else {
                    report.note(format!(
                        "size {size}: no reference households, association skipped"
                    ));
                    continue;
                };
                let reference_composed = compose_households(
                    &bucket.households,
                    &bucket.persons,
                    size,
                    &ordering,
                    &schema,
                )?;
                let synthetic =
                    io::read_composed(&out.join(format!("synthetic_{size}.csv")), &schema, size)?;
                metrics
                    .comparisons
                    .push(association_check(&synthetic, &reference_composed.table, &attrs)?);
            }
        }
    } else if !config.metrics.comparisons.is_empty() || !config.metrics.association.is_empty() {
        report.note("no reference population configured; comparisons skipped");
    }

    for set in &config.metrics.diversity {
        let attrs: Vec<&str> = set.iter().map(String::as_str).collect();
        metrics.diversity.push(entropy_diversity(&syn_persons, &attrs)?);
    }

    let metrics_path = out.join("metrics.json");
    io::write_json(&metrics_path, &metrics)?;
    report.note(format!(
        "{} comparisons, {} diversity entries",
        metrics.comparisons.len(),
        metrics.diversity.len()
    ));
    report.artifact(metrics_path);

    if !config.metrics.groupings.is_empty() {
        let mut census = Vec::new();
        for file in &config.metrics.targets {
            let path = config.resolve(file);
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            census.push(io::read_constraint(&path, &schema, &name)?);
        }
        let (hh_groupings, person_groupings): (Vec<_>, Vec<_>) = config
            .metrics
            .groupings
            .iter()
            .cloned()
            .partition(|g| is_household_grouping(&schema, g));
        let mut rows = marginal_report(&syn_households, &census, &hh_groupings)?;
        rows.extend(marginal_report(&syn_persons, &census, &person_groupings)?);

        let dir = out.join("marginal_report");
        fs::create_dir_all(&dir)?;
        let mut by_grouping: BTreeMap<String, Vec<&MarginalRow>> = BTreeMap::new();
        for row in &rows {
            by_grouping
                .entry(row.grouping.replace(" x ", "_"))
                .or_default()
                .push(row);
        }
        for (name, rows) in by_grouping {
            let path = dir.join(format!("{name}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["grouping", "category", "synthetic_share", "census_share"])?;
            for row in rows {
                w.write_record([
                    row.grouping.as_str(),
                    row.category.as_str(),
                    &format!("{}", row.synthetic_share),
                    &format!("{}", row.census_share),
                ])?;
            }
            w.flush()?;
            report.artifact(path);
        }
    }
    Ok(report)
}

/// Run every stage in order against one artifact directory.
pub fn run_pipeline(config: &PipelineConfig, out: &Path) -> Result<Vec<StageReport>, PipelineError> {
    Ok(vec![
        stage_compose(config, out)?,
        stage_learn_dag(config, out)?,
        stage_fit(config, out)?,
        stage_condpop(config, out)?,
        stage_generate(config, out)?,
        stage_validate(config, out)?,
    ])
}

/// The no-model yardstick: replicate the input sample uniformly to the same
/// per-size household targets the pipeline uses, with no raking and no
/// generation. A synthesis run is only worth its cost if it beats this.
pub fn replication_baseline(
    config: &PipelineConfig,
) -> Result<(Vec<HouseholdRecord>, Vec<PersonRecord>), PipelineError> {
    wrap("baseline", config, baseline_inner(config))
}

fn baseline_inner(
    config: &PipelineConfig,
) -> Result<(Vec<HouseholdRecord>, Vec<PersonRecord>), BoxError> {
    let schema = config.schema()?;
    let households = io::read_households(&config.resolve(&config.inputs.households), &schema)?;
    let persons = io::read_persons(&config.resolve(&config.inputs.persons), &schema)?;
    let split = split_by_size(&households, &persons, config.compose.threshold)?;

    let mut out_households = Vec::new();
    let mut out_persons = Vec::new();
    for (&size, bucket) in &split.buckets {
        let (constraints, stratify) = constraints_for_size(config, &schema, size)?;
        if constraints.is_empty() {
            continue;
        }
        let target = size_target(&constraints, stratify.as_ref(), size)?;
        let by_id: BTreeMap<&str, Vec<&PersonRecord>> = {
            let mut map: BTreeMap<&str, Vec<&PersonRecord>> = BTreeMap::new();
            for p in &bucket.persons {
                map.entry(p.household_id.as_str()).or_default().push(p);
            }
            map
        };
        let counts = integerize(&vec![1.0; bucket.households.len()], target)?;
        let mut seq = 0usize;
        for (household, count) in bucket.households.iter().zip(counts) {
            for _ in 0..count {
                let id = format!("b{size}_{seq}");
                seq += 1;
                out_households.push(HouseholdRecord {
                    household_id: id.clone(),
                    attrs: household.attrs.clone(),
                });
                for p in &by_id[household.household_id.as_str()] {
                    out_persons.push(PersonRecord {
                        household_id: id.clone(),
                        attrs: p.attrs.clone(),
                    });
                }
            }
        }
    }

    if let Some(replication) = &config.replication {
        let path = config.resolve(&replication.targets);
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let constraint = io::read_constraint(&path, &schema, &name)?;
        let targets: BTreeMap<u32, u64> = constraint
            .targets
            .iter()
            .map(|(key, &t)| (key[0], t.round() as u64))
            .collect();
        let replicated = replicate_large(&split.overflow, &targets, &constraint.axes[0], &schema, "br")?;
        out_households.extend(replicated.households);
        out_persons.extend(replicated.persons);
    }
    Ok((out_households, out_persons))
}

/// The set difference used by the tests: attribute combinations present in
/// one person-level table and absent from another, over all schema columns.
pub fn novel_combinations(
    schema: &Schema,
    in_population: (&[HouseholdRecord], &[PersonRecord]),
    not_in: (&[HouseholdRecord], &[PersonRecord]),
) -> Result<BTreeSet<Vec<u32>>, PipelineError> {
    let inner = || -> Result<BTreeSet<Vec<u32>>, BoxError> {
        let a = joined_person_table(schema, in_population.0, in_population.1)?;
        let b = joined_person_table(schema, not_in.0, not_in.1)?;
        let a: BTreeSet<Vec<u32>> = a.rows.into_iter().collect();
        let b: BTreeSet<Vec<u32>> = b.rows.into_iter().collect();
        Ok(a.difference(&b).cloned().collect())
    };
    inner().map_err(|e| PipelineError {
        stage: "novel-combinations",
        digest: "n/a".into(),
        message: e.to_string(),
    })
}
