//! Pipeline configuration: one TOML file declaring the attribute schema,
//! input files, structure-learning setup, fitting targets and the
//! validation plan. Paths inside the file are resolved relative to the
//! file's own directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compose::ComposedColumn;
use crate::dag::{DagMethod, ForestParams};
use crate::tabular::{AttrLevel, AttributeSpec, Schema, TabularError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Schema(#[from] TabularError),
    #[error("unknown attribute `{0}`")]
    UnknownLabel(String),
    #[error("{0}")]
    Invalid(String),
}

fn default_methods() -> Vec<DagMethod> {
    DagMethod::ALL.to_vec()
}

fn default_threshold() -> usize {
    5
}

fn default_folds() -> usize {
    5
}

fn default_alpha() -> f64 {
    1.0
}

fn default_top_m() -> usize {
    2
}

fn default_ols_alpha() -> f64 {
    0.01
}

fn default_rf_trees() -> usize {
    50
}

fn default_rf_depth() -> usize {
    8
}

fn default_rf_min_leaf() -> usize {
    5
}

fn default_tol() -> f64 {
    crate::ipf::DEFAULT_TOL
}

fn default_max_iter() -> usize {
    crate::ipf::DEFAULT_MAX_ITER
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputsSection {
    pub households: PathBuf,
    pub persons: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComposeSection {
    /// Household sizes up to this bound get their own composed table and
    /// model; larger households are replicated from the sample instead.
    #[serde(default = "default_threshold")]
    pub threshold: usize,
    /// Person attribute whose descending value orders members within a
    /// household; omitted = keep input order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_by: Option<String>,
}

impl Default for ComposeSection {
    fn default() -> Self {
        ComposeSection {
            threshold: default_threshold(),
            order_by: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoverySection {
    #[serde(default = "default_top_m")]
    pub top_m: usize,
    #[serde(default = "default_ols_alpha")]
    pub ols_alpha: f64,
    #[serde(default = "default_rf_trees")]
    pub rf_trees: usize,
    #[serde(default = "default_rf_depth")]
    pub rf_depth: usize,
    #[serde(default = "default_rf_min_leaf")]
    pub rf_min_leaf: usize,
}

impl Default for DiscoverySection {
    fn default() -> Self {
        DiscoverySection {
            top_m: default_top_m(),
            ols_alpha: default_ols_alpha(),
            rf_trees: default_rf_trees(),
            rf_depth: default_rf_depth(),
            rf_min_leaf: default_rf_min_leaf(),
        }
    }
}

impl DiscoverySection {
    pub fn forest_params(&self, seed: u64) -> ForestParams {
        ForestParams {
            trees: self.rf_trees,
            max_depth: self.rf_depth,
            min_leaf: self.rf_min_leaf,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DagSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<DagMethod>,
    /// Domain-knowledge edges between attribute labels; person attributes
    /// expand to one edge per member.
    #[serde(default)]
    pub focused_edges: Vec<(String, String)>,
    #[serde(default)]
    pub forbidden_edges: Vec<(String, String)>,
    #[serde(default)]
    pub discovery: DiscoverySection,
}

impl Default for DagSection {
    fn default() -> Self {
        DagSection {
            methods: default_methods(),
            focused_edges: Vec::new(),
            forbidden_edges: Vec::new(),
            discovery: DiscoverySection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSection {
    #[serde(default = "default_folds")]
    pub folds: usize,
    /// Laplace smoothing used when fitting fold models.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            folds: default_folds(),
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSection {
    /// Laplace smoothing used when fitting the final model.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

impl Default for GenerationSection {
    fn default() -> Self {
        GenerationSection {
            alpha: default_alpha(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IntegerizeChoice {
    #[default]
    LargestRemainder,
    Stochastic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpfSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub integerize: IntegerizeChoice,
}

impl Default for IpfSection {
    fn default() -> Self {
        IpfSection {
            tol: default_tol(),
            max_iter: default_max_iter(),
            integerize: IntegerizeChoice::default(),
        }
    }
}

/// One marginal-targets file, applied to the composed sample of `size`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSection {
    pub file: PathBuf,
    pub size: usize,
    /// The stratifying constraint also apportions the household total, so
    /// its categories come out exact after integerization.
    #[serde(default)]
    pub stratify: bool,
}

/// Replication targets for households above the composition threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSection {
    pub targets: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_households: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_persons: Option<PathBuf>,
    /// Census marginal files backing the report groupings: household-level
    /// groupings count households, anything else counts persons.
    #[serde(default)]
    pub targets: Vec<PathBuf>,
    /// Marginal-report groupings (each must match a target file's axes).
    #[serde(default)]
    pub groupings: Vec<Vec<String>>,
    /// Attribute sets compared against the reference population
    /// (SRMSE / Jensen-Shannon distance / R²); needs reference files.
    #[serde(default)]
    pub comparisons: Vec<Vec<String>>,
    /// Attribute sets for entropy diversity.
    #[serde(default)]
    pub diversity: Vec<Vec<String>>,
    /// Person attributes for cross-member association checks.
    #[serde(default)]
    pub association: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub master_seed: u64,
    pub inputs: InputsSection,
    pub attributes: Vec<AttributeSpec>,
    #[serde(default)]
    pub compose: ComposeSection,
    #[serde(default)]
    pub dag: DagSection,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub generation: GenerationSection,
    #[serde(default)]
    pub ipf: IpfSection,
    #[serde(default)]
    pub constraints: Vec<ConstraintSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replication: Option<ReplicationSection>,
    #[serde(default)]
    pub metrics: MetricsSection,
    /// Directory the config was loaded from; input paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut config: PipelineConfig = toml::from_str(&text)?;
        config.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Resolve a configured path against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn schema(&self) -> Result<Schema, ConfigError> {
        Ok(Schema::new(self.attributes.clone())?)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let schema = self.schema()?;
        if self.compose.threshold < 1 {
            return Err(ConfigError::Invalid(
                "compose.threshold must be at least 1".into(),
            ));
        }
        if let Some(order_by) = &self.compose.order_by {
            match schema.find(order_by) {
                Some(a) if a.level == AttrLevel::Person => {}
                Some(_) => {
                    return Err(ConfigError::Invalid(format!(
                        "compose.order_by `{order_by}` must be a person attribute"
                    )))
                }
                None => return Err(ConfigError::UnknownLabel(order_by.clone())),
            }
        }
        if self.dag.methods.is_empty() {
            return Err(ConfigError::Invalid("dag.methods is empty".into()));
        }
        for (a, b) in self
            .dag
            .focused_edges
            .iter()
            .chain(&self.dag.forbidden_edges)
        {
            for label in [a, b] {
                if schema.find(label).is_none() {
                    return Err(ConfigError::UnknownLabel(label.clone()));
                }
            }
            if a == b {
                return Err(ConfigError::Invalid(format!(
                    "edge `{a}` -> `{b}` is a self-loop"
                )));
            }
        }
        if self.cv.folds < 2 {
            return Err(ConfigError::Invalid("cv.folds must be at least 2".into()));
        }
        for (name, alpha) in [("cv.alpha", self.cv.alpha), ("generation.alpha", self.generation.alpha)] {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(ConfigError::Invalid(format!(
                    "{name} must be positive and finite"
                )));
            }
        }
        if !(self.ipf.tol > 0.0) || self.ipf.max_iter == 0 {
            return Err(ConfigError::Invalid(
                "ipf.tol must be positive and ipf.max_iter at least 1".into(),
            ));
        }
        if !(self.dag.discovery.ols_alpha > 0.0 && self.dag.discovery.ols_alpha < 1.0) {
            return Err(ConfigError::Invalid(
                "dag.discovery.ols_alpha must lie in (0, 1)".into(),
            ));
        }
        if self.dag.discovery.top_m == 0 {
            return Err(ConfigError::Invalid(
                "dag.discovery.top_m must be at least 1".into(),
            ));
        }
        let mut stratified: BTreeSet<usize> = BTreeSet::new();
        for c in &self.constraints {
            if c.size < 1 {
                return Err(ConfigError::Invalid(format!(
                    "constraint `{}` has size 0",
                    c.file.display()
                )));
            }
            if c.stratify && !stratified.insert(c.size) {
                return Err(ConfigError::Invalid(format!(
                    "size {} has more than one stratifying constraint",
                    c.size
                )));
            }
        }
        for grouping in self
            .metrics
            .groupings
            .iter()
            .chain(&self.metrics.comparisons)
            .chain(&self.metrics.diversity)
        {
            if grouping.is_empty() {
                return Err(ConfigError::Invalid("empty attribute grouping".into()));
            }
            for label in grouping {
                if schema.find(label).is_none() {
                    return Err(ConfigError::UnknownLabel(label.clone()));
                }
            }
        }
        for label in &self.metrics.association {
            match schema.find(label) {
                Some(a) if a.level == AttrLevel::Person => {}
                Some(_) => {
                    return Err(ConfigError::Invalid(format!(
                        "association attribute `{label}` must be person-level"
                    )))
                }
                None => return Err(ConfigError::UnknownLabel(label.clone())),
            }
        }
        Ok(())
    }
}

/// Translate attribute-level edge pairs into composed-column index pairs:
/// household→household is one edge, household→person fans out to every
/// member, person→person connects the attributes within each member, and
/// person→household runs from every member's column.
pub fn expand_edge_pairs(
    columns: &[ComposedColumn],
    pairs: &[(String, String)],
) -> Result<BTreeSet<(usize, usize)>, ConfigError> {
    let matches = |label: &str| -> Vec<(usize, Option<usize>)> {
        columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.spec.label == label)
            .map(|(i, c)| (i, c.member))
            .collect()
    };
    let mut out = BTreeSet::new();
    for (src, dst) in pairs {
        let sources = matches(src);
        let dests = matches(dst);
        if sources.is_empty() {
            return Err(ConfigError::UnknownLabel(src.clone()));
        }
        if dests.is_empty() {
            return Err(ConfigError::UnknownLabel(dst.clone()));
        }
        for &(si, sm) in &sources {
            for &(di, dm) in &dests {
                // within-member only, when both ends are person attributes
                if let (Some(a), Some(b)) = (sm, dm) {
                    if a != b {
                        continue;
                    }
                }
                if si != di {
                    out.insert((si, di));
                }
            }
        }
    }
    Ok(out)
}

/// Edges that would give a conditional column a non-conditional parent.
/// Forbidding them keeps conditional attributes roots of the learned
/// structure (conditional→conditional edges stay legal).
pub fn conditional_guard(columns: &[ComposedColumn]) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for (c, col) in columns.iter().enumerate() {
        if !col.spec.is_conditional {
            continue;
        }
        for (u, source) in columns.iter().enumerate() {
            if u != c && !source.spec.is_conditional {
                out.insert((u, c));
            }
        }
    }
    out
}
