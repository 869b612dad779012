//! Synthesis of full-size household-person populations from microdata samples.
//!
//! The library is organized around the stages of the synthesis pipeline:
//!
//! * [`tabular`] — schemas, categorical record tables, sparse contingency
//!   tables and distribution vectors shared by every other module.
//! * [`compose`] — household-size-specific household-person table
//!   construction and large-household replication.
//! * [`dag`] — structure learning over composed tables: hill climbing with
//!   AIC scoring, edge constraints, OLS/random-forest edge discovery, and
//!   cross-validated method selection.
//! * [`bn`] — conditional probability tables fitted on a DAG and conditional
//!   row generation seeded by provided root attributes.
//! * [`ipf`] — iterative proportional fitting, household weight raking
//!   against marginal targets, integerization and conditional-population
//!   construction.
//! * [`metrics`] — SRMSE, KL, Jensen-Shannon distance, entropy diversity,
//!   R² joint fitness, marginal reports and member-association checks.
//! * [`fixture`] — a seeded desk-scale ground-truth population generator
//!   used for end-to-end validation.
//! * [`pipeline`] — configuration and orchestration of the full flow.

pub mod bn;
pub mod compose;
pub mod config;
pub mod dag;
pub mod fixture;
pub mod io;
pub mod ipf;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod tabular;

pub use bn::{BayesNet, ConditionalPopulation, Cpt};
pub use compose::{ComposedColumn, ComposedTable, HouseholdRecord, MemberOrdering, PersonRecord};
pub use config::PipelineConfig;
pub use dag::{Dag, DagMethod, Dataset, EdgeConstraints, LearnOptions, ScoredDag};
pub use fixture::{FixtureFiles, FixtureSpec};
pub use ipf::{MarginalConstraint, WeightedSample};
pub use metrics::MetricsReport;
pub use pipeline::{run_pipeline, PipelineError, StageReport};
pub use seed::derive_seed;
pub use tabular::{
    AttrLevel, AttributeKind, AttributeSpec, ContingencyTable, DistributionVector, RecordTable,
    Schema,
};
