//! Self-contained test bed: draws a ground-truth population from a fixed
//! household model, takes a biased subsample standing in for a survey, and
//! writes the census-style marginal files plus a ready-to-run pipeline
//! config next to them. Everything is a pure function of the parameters and
//! the seed, so a test bed can be regenerated bit-for-bit anywhere.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::compose::{HouseholdRecord, PersonRecord};
use crate::config::{
    ComposeSection, ConstraintSection, CvSection, DagSection, GenerationSection, InputsSection,
    IpfSection, MetricsSection, PipelineConfig, ReplicationSection,
};
use crate::io::{self, IoError};
use crate::ipf::{IpfError, MarginalConstraint};
use crate::tabular::{AttrLevel, AttributeSpec, Schema};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Files(#[from] IoError),
    #[error(transparent)]
    Constraint(#[from] IpfError),
    #[error("invalid fixture spec: {0}")]
    Invalid(String),
}

pub const AREAS: [&str; 4] = ["north", "south", "east", "west"];
pub const INCOMES: [&str; 3] = ["low", "mid", "high"];
pub const VEHICLES: [&str; 3] = ["none", "one", "twoplus"];
pub const AGES: [&str; 5] = ["child", "young", "adult", "middle", "senior"];
pub const RACES: [&str; 2] = ["majority", "minority"];
pub const SEXES: [&str; 2] = ["female", "male"];

/// The generating model: household size, then area -> income -> vehicles at
/// the household level; the head's age and race depend on the area, the
/// second member's age on the head's, later members skew young. Race runs
/// in families and couples tend to mix sexes.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub size_probs: [f64; 7],
    pub area_probs: [f64; 4],
    pub income_given_area: [[f64; 3]; 4],
    pub vehicles_given_income: [[f64; 3]; 3],
    pub head_age_given_area: [[f64; 5]; 4],
    pub partner_age_given_head: [[f64; 5]; 5],
    pub child_age_probs: [f64; 5],
    pub race_given_area: [[f64; 2]; 4],
    /// Probability that a non-head member shares the head's race.
    pub race_cluster: f64,
    /// Probability that the second member's sex differs from the head's.
    pub sex_flip: f64,
}

impl Default for GroundTruth {
    fn default() -> Self {
        GroundTruth {
            size_probs: [0.27, 0.33, 0.17, 0.12, 0.06, 0.035, 0.015],
            area_probs: [0.35, 0.30, 0.20, 0.15],
            income_given_area: [
                [0.20, 0.45, 0.35],
                [0.35, 0.45, 0.20],
                [0.45, 0.40, 0.15],
                [0.55, 0.35, 0.10],
            ],
            vehicles_given_income: [
                [0.45, 0.45, 0.10],
                [0.15, 0.55, 0.30],
                [0.05, 0.35, 0.60],
            ],
            head_age_given_area: [
                [0.0, 0.30, 0.35, 0.20, 0.15],
                [0.0, 0.20, 0.30, 0.30, 0.20],
                [0.0, 0.15, 0.30, 0.30, 0.25],
                [0.0, 0.10, 0.25, 0.30, 0.35],
            ],
            partner_age_given_head: [
                [0.30, 0.30, 0.20, 0.10, 0.10],
                [0.15, 0.60, 0.20, 0.05, 0.00],
                [0.35, 0.15, 0.40, 0.08, 0.02],
                [0.30, 0.05, 0.15, 0.40, 0.10],
                [0.05, 0.02, 0.08, 0.25, 0.60],
            ],
            child_age_probs: [0.70, 0.20, 0.06, 0.03, 0.01],
            race_given_area: [[0.70, 0.30], [0.80, 0.20], [0.85, 0.15], [0.60, 0.40]],
            race_cluster: 0.9,
            sex_flip: 0.7,
        }
    }
}

impl GroundTruth {
    fn validate(&self) -> Result<(), FixtureError> {
        let mut rows: Vec<&[f64]> = vec![
            &self.size_probs,
            &self.area_probs,
            &self.child_age_probs,
        ];
        rows.extend(self.income_given_area.iter().map(|r| r.as_slice()));
        rows.extend(self.vehicles_given_income.iter().map(|r| r.as_slice()));
        rows.extend(self.head_age_given_area.iter().map(|r| r.as_slice()));
        rows.extend(self.partner_age_given_head.iter().map(|r| r.as_slice()));
        rows.extend(self.race_given_area.iter().map(|r| r.as_slice()));
        for row in rows {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(FixtureError::Invalid(
                    "probabilities must be finite and non-negative".into(),
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(FixtureError::Invalid(format!(
                    "probability row sums to {total}, expected 1"
                )));
            }
        }
        for (name, p) in [("race_cluster", self.race_cluster), ("sex_flip", self.sex_flip)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(FixtureError::Invalid(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// What to generate: how many persons the true population should hold, the
/// survey's sampling fraction, how strongly each area is over- or
/// under-surveyed, and the household-size bound the config will compose.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub population_persons: u64,
    /// Baseline inclusion probability of a truth household in the sample.
    pub sample_fraction: f64,
    /// Per-area multiplier on the sampling fraction, indexed like `AREAS`.
    pub area_bias: [f64; 4],
    /// Composition threshold written into the generated config.
    pub threshold: usize,
    pub ground_truth: GroundTruth,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        // the default bias doubles north's sample share and nearly erases
        // west; the multipliers average out to 1 under the area weights so
        // share ratios read directly as multipliers
        FixtureSpec {
            population_persons: 50_000,
            sample_fraction: 0.05,
            area_bias: [2.0, 0.48, 0.48, 0.4],
            threshold: 5,
            ground_truth: GroundTruth::default(),
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<(), FixtureError> {
        if self.population_persons == 0 {
            return Err(FixtureError::Invalid("population_persons is zero".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(FixtureError::Invalid(format!(
                "sample_fraction must lie in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        if self.area_bias.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(FixtureError::Invalid(
                "area_bias multipliers must be positive and finite".into(),
            ));
        }
        if self.threshold < 1 {
            return Err(FixtureError::Invalid("threshold must be at least 1".into()));
        }
        self.ground_truth.validate()
    }
}

/// Schema shared by the truth, the sample and the generated config. Area,
/// age and race are the conditioning attributes the pipeline carries over
/// from the fitted population; everything else is left to the model.
pub fn fixture_schema() -> Schema {
    Schema::new(vec![
        AttributeSpec::categorical("AREA", &AREAS, AttrLevel::Household, true),
        AttributeSpec::categorical("HHINC", &INCOMES, AttrLevel::Household, false),
        AttributeSpec::categorical("VEH", &VEHICLES, AttrLevel::Household, false),
        AttributeSpec::categorical("AGE", &AGES, AttrLevel::Person, true),
        AttributeSpec::categorical("RACE", &RACES, AttrLevel::Person, true),
        AttributeSpec::categorical("SEX", &SEXES, AttrLevel::Person, false),
    ])
    .expect("fixture schema is well-formed")
}

/// Paths and row counts of one generated test bed.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureFiles {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub truth_households: PathBuf,
    pub truth_persons: PathBuf,
    pub sample_households: PathBuf,
    pub sample_persons: PathBuf,
    pub truth_household_count: usize,
    pub truth_person_count: usize,
    pub sample_household_count: usize,
    pub sample_person_count: usize,
}

fn pick(rng: &mut ChaCha8Rng, probs: &[f64]) -> u32 {
    let draw: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if draw < acc {
            return i as u32;
        }
    }
    (probs.len() - 1) as u32
}

type Household = (HouseholdRecord, Vec<PersonRecord>);

fn generate_truth(spec: &FixtureSpec, rng: &mut ChaCha8Rng) -> Vec<Household> {
    let gt = &spec.ground_truth;
    let mut out = Vec::new();
    let mut persons = 0u64;
    while persons < spec.population_persons {
        let id = format!("t{}", out.len() + 1);
        let size = pick(rng, &gt.size_probs) as usize + 1;
        let area = pick(rng, &gt.area_probs);
        let income = pick(rng, &gt.income_given_area[area as usize]);
        let vehicles = pick(rng, &gt.vehicles_given_income[income as usize]);

        let head_age = pick(rng, &gt.head_age_given_area[area as usize]);
        let head_race = pick(rng, &gt.race_given_area[area as usize]);
        let head_sex = pick(rng, &[0.5, 0.5]);
        let mut members = vec![(head_age, head_race, head_sex)];
        for m in 1..size {
            let age = if m == 1 {
                pick(rng, &gt.partner_age_given_head[head_age as usize])
            } else {
                pick(rng, &gt.child_age_probs)
            };
            let race = if rng.random::<f64>() < gt.race_cluster {
                head_race
            } else {
                1 - head_race
            };
            let sex = if m == 1 {
                if rng.random::<f64>() < gt.sex_flip {
                    1 - head_sex
                } else {
                    head_sex
                }
            } else {
                pick(rng, &[0.5, 0.5])
            };
            members.push((age, race, sex));
        }

        let household = HouseholdRecord {
            household_id: id.clone(),
            attrs: vec![area, income, vehicles],
        };
        let people = members
            .into_iter()
            .map(|(age, race, sex)| PersonRecord {
                household_id: id.clone(),
                attrs: vec![age, race, sex],
            })
            .collect::<Vec<_>>();
        persons += people.len() as u64;
        out.push((household, people));
    }
    out
}

fn draw_sample(truth: &[Household], spec: &FixtureSpec, rng: &mut ChaCha8Rng) -> Vec<Household> {
    truth
        .iter()
        .filter(|(h, _)| {
            let p = spec.sample_fraction * spec.area_bias[h.attrs[0] as usize];
            p >= 1.0 || rng.random::<f64>() < p
        })
        .cloned()
        .collect()
}

fn area_constraint(name: &str, counts: &[u64; 4]) -> Result<MarginalConstraint, IpfError> {
    let targets: BTreeMap<Vec<u32>, f64> = counts
        .iter()
        .enumerate()
        .map(|(i, &n)| (vec![i as u32], n as f64))
        .collect();
    MarginalConstraint::new(name, AttrLevel::Household, vec!["AREA".into()], targets)
}

fn age_constraint(name: &str, counts: &[u64; 5]) -> Result<MarginalConstraint, IpfError> {
    let targets: BTreeMap<Vec<u32>, f64> = counts
        .iter()
        .enumerate()
        .map(|(i, &n)| (vec![i as u32], n as f64))
        .collect();
    MarginalConstraint::new(name, AttrLevel::Person, vec!["AGE".into()], targets)
}

/// Generate a complete test bed under `dir`: the true population
/// (`truth_*.csv`), the biased survey sample (`sample_*.csv`), per-size and
/// whole-population marginal files tabulated from the truth
/// (`marginals/*.csv`), and a `pipeline.toml` wiring them together.
pub fn make_fixture(
    spec: &FixtureSpec,
    seed: u64,
    dir: &Path,
) -> Result<FixtureFiles, FixtureError> {
    spec.validate()?;
    let schema = fixture_schema();
    let marginals = dir.join("marginals");
    fs::create_dir_all(&marginals)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = generate_truth(spec, &mut rng);
    let sample = draw_sample(&truth, spec, &mut rng);

    // tabulate the census side from the truth: per composable size, one
    // household file over AREA and one person file over AGE; everything
    // above the threshold shares a single replication-targets file
    let mut size_area: BTreeMap<usize, [u64; 4]> = BTreeMap::new();
    let mut size_age: BTreeMap<usize, [u64; 5]> = BTreeMap::new();
    let mut overflow_area = [0u64; 4];
    let mut total_area = [0u64; 4];
    let mut total_age = [0u64; 5];
    for (household, people) in &truth {
        let area = household.attrs[0] as usize;
        total_area[area] += 1;
        for p in people {
            total_age[p.attrs[0] as usize] += 1;
        }
        if people.len() <= spec.threshold {
            size_area.entry(people.len()).or_default()[area] += 1;
            let ages = size_age.entry(people.len()).or_default();
            for p in people {
                ages[p.attrs[0] as usize] += 1;
            }
        } else {
            overflow_area[area] += 1;
        }
    }

    let truth_households: Vec<HouseholdRecord> = truth.iter().map(|(h, _)| h.clone()).collect();
    let truth_persons: Vec<PersonRecord> =
        truth.iter().flat_map(|(_, p)| p.iter().cloned()).collect();
    let sample_households: Vec<HouseholdRecord> = sample.iter().map(|(h, _)| h.clone()).collect();
    let sample_persons: Vec<PersonRecord> =
        sample.iter().flat_map(|(_, p)| p.iter().cloned()).collect();

    let files = FixtureFiles {
        dir: dir.to_path_buf(),
        config: dir.join("pipeline.toml"),
        truth_households: dir.join("truth_households.csv"),
        truth_persons: dir.join("truth_persons.csv"),
        sample_households: dir.join("sample_households.csv"),
        sample_persons: dir.join("sample_persons.csv"),
        truth_household_count: truth_households.len(),
        truth_person_count: truth_persons.len(),
        sample_household_count: sample_households.len(),
        sample_person_count: sample_persons.len(),
    };

    io::write_households(&files.truth_households, &schema, &truth_households)?;
    io::write_persons(&files.truth_persons, &schema, &truth_persons)?;
    io::write_households(&files.sample_households, &schema, &sample_households)?;
    io::write_persons(&files.sample_persons, &schema, &sample_persons)?;

    let mut constraints = Vec::new();
    for (&size, counts) in &size_area {
        let name = format!("hh_area_size_{size}");
        let path = marginals.join(format!("{name}.csv"));
        io::write_constraint(&path, &schema, &area_constraint(&name, counts)?)?;
        constraints.push(ConstraintSection {
            file: PathBuf::from(format!("marginals/{name}.csv")),
            size,
            stratify: true,
        });
        let name = format!("person_age_size_{size}");
        let path = marginals.join(format!("{name}.csv"));
        io::write_constraint(&path, &schema, &age_constraint(&name, &size_age[&size])?)?;
        constraints.push(ConstraintSection {
            file: PathBuf::from(format!("marginals/{name}.csv")),
            size,
            stratify: false,
        });
    }
    let replication = if overflow_area.iter().any(|&n| n > 0) {
        let c = area_constraint("hh_area_overflow", &overflow_area)?;
        io::write_constraint(&marginals.join("hh_area_overflow.csv"), &schema, &c)?;
        Some(ReplicationSection {
            targets: PathBuf::from("marginals/hh_area_overflow.csv"),
        })
    } else {
        None
    };
    io::write_constraint(
        &marginals.join("hh_area.csv"),
        &schema,
        &area_constraint("hh_area", &total_area)?,
    )?;
    io::write_constraint(
        &marginals.join("person_age.csv"),
        &schema,
        &age_constraint("person_age", &total_age)?,
    )?;

    let config = PipelineConfig {
        master_seed: seed,
        inputs: InputsSection {
            households: "sample_households.csv".into(),
            persons: "sample_persons.csv".into(),
        },
        attributes: schema.attributes().to_vec(),
        compose: ComposeSection {
            threshold: spec.threshold,
            order_by: Some("AGE".into()),
        },
        dag: DagSection {
            focused_edges: vec![
                ("AREA".into(), "AGE".into()),
                ("AGE".into(), "SEX".into()),
            ],
            ..Default::default()
        },
        cv: CvSection::default(),
        generation: GenerationSection::default(),
        ipf: IpfSection::default(),
        constraints,
        replication,
        metrics: MetricsSection {
            reference_households: Some("truth_households.csv".into()),
            reference_persons: Some("truth_persons.csv".into()),
            targets: vec![
                "marginals/hh_area.csv".into(),
                "marginals/person_age.csv".into(),
            ],
            groupings: vec![vec!["AREA".into()], vec!["AGE".into()]],
            comparisons: vec![
                vec!["AREA".into(), "AGE".into(), "RACE".into()],
                vec!["AREA".into()],
                vec!["AGE".into()],
                vec!["HHINC".into()],
                vec!["VEH".into()],
            ],
            diversity: vec![
                vec!["AGE".into(), "RACE".into()],
                vec![
                    "HHINC".into(),
                    "VEH".into(),
                    "AGE".into(),
                    "RACE".into(),
                    "SEX".into(),
                ],
            ],
            association: vec!["AGE".into()],
        },
        base_dir: dir.to_path_buf(),
    };
    fs::write(&files.config, config.to_toml_string())?;

    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;
    use std::collections::BTreeSet;

    fn small_spec(persons: u64) -> FixtureSpec {
        FixtureSpec {
            population_persons: persons,
            ..FixtureSpec::default()
        }
    }

    fn read_dir_sorted(dir: &Path) -> Vec<PathBuf> {
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        paths.sort();
        paths
    }

    #[test]
    fn same_seed_reproduces_every_file() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        make_fixture(&small_spec(3_000), 42, a.path()).unwrap();
        make_fixture(&small_spec(3_000), 42, b.path()).unwrap();
        let mut compared = 0;
        for (pa, pb) in read_dir_sorted(a.path()).iter().zip(read_dir_sorted(b.path()).iter()) {
            assert_eq!(pa.file_name(), pb.file_name());
            if pa.is_dir() {
                for (ma, mb) in read_dir_sorted(pa).iter().zip(read_dir_sorted(pb).iter()) {
                    assert_eq!(ma.file_name(), mb.file_name());
                    assert_eq!(fs::read(ma).unwrap(), fs::read(mb).unwrap());
                    compared += 1;
                }
            } else {
                assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
                compared += 1;
            }
        }
        assert!(compared >= 7, "only {compared} files compared");
    }

    #[test]
    fn full_fraction_and_uniform_bias_reproduce_the_truth() {
        let dir = tempfile::tempdir().unwrap();
        let spec = FixtureSpec {
            sample_fraction: 1.0,
            area_bias: [1.0; 4],
            ..small_spec(2_000)
        };
        let files = make_fixture(&spec, 7, dir.path()).unwrap();
        assert_eq!(files.sample_household_count, files.truth_household_count);
        assert_eq!(
            fs::read(&files.truth_households).unwrap(),
            fs::read(&files.sample_households).unwrap()
        );
        assert_eq!(
            fs::read(&files.truth_persons).unwrap(),
            fs::read(&files.sample_persons).unwrap()
        );
    }

    #[test]
    fn marginal_files_conserve_the_truth_totals() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(4_000);
        let files = make_fixture(&spec, 9, dir.path()).unwrap();
        let schema = fixture_schema();

        let mut household_total = 0.0;
        let mut person_total = 0.0;
        for size in 1..=spec.threshold {
            let hh = dir
                .path()
                .join(format!("marginals/hh_area_size_{size}.csv"));
            let c = io::read_constraint(&hh, &schema, &format!("hh_area_size_{size}")).unwrap();
            household_total += c.total();
            let pp = dir
                .path()
                .join(format!("marginals/person_age_size_{size}.csv"));
            let c = io::read_constraint(&pp, &schema, &format!("person_age_size_{size}")).unwrap();
            person_total += c.total();
        }
        let overflow = dir.path().join("marginals/hh_area_overflow.csv");
        let overflow = io::read_constraint(&overflow, &schema, "hh_area_overflow").unwrap();
        household_total += overflow.total();

        assert_eq!(household_total, files.truth_household_count as f64);
        // per-size person files only cover composable sizes
        let whole = io::read_constraint(
            &dir.path().join("marginals/person_age.csv"),
            &schema,
            "person_age",
        )
        .unwrap();
        assert_eq!(whole.total(), files.truth_person_count as f64);
        assert!(person_total <= whole.total());
        let hh_whole = io::read_constraint(
            &dir.path().join("marginals/hh_area.csv"),
            &schema,
            "hh_area",
        )
        .unwrap();
        assert_eq!(hh_whole.total(), files.truth_household_count as f64);
        assert!(files.truth_person_count as u64 >= spec.population_persons);
    }

    #[test]
    fn area_sampling_follows_the_bias_within_three_sigma() {
        let dir = tempfile::tempdir().unwrap();
        let spec = small_spec(40_000);
        let files = make_fixture(&spec, 13, dir.path()).unwrap();
        let schema = fixture_schema();
        let truth = io::read_households(&files.truth_households, &schema).unwrap();
        let sample = io::read_households(&files.sample_households, &schema).unwrap();

        for area in 0..4 {
            let n = truth.iter().filter(|h| h.attrs[0] == area).count() as f64;
            let k = sample.iter().filter(|h| h.attrs[0] == area).count() as f64;
            let p = spec.sample_fraction * spec.area_bias[area as usize];
            let sigma = (n * p * (1.0 - p)).sqrt();
            assert!(
                (k - n * p).abs() <= 3.0 * sigma,
                "area {area}: {k} sampled of {n}, expected {} ± {}",
                n * p,
                3.0 * sigma
            );
        }
    }

    #[test]
    fn undersampling_leaves_truth_combinations_out_of_the_sample() {
        let dir = tempfile::tempdir().unwrap();
        let files = make_fixture(&small_spec(20_000), 11, dir.path()).unwrap();
        let schema = fixture_schema();
        let combos = |households: &Path, persons: &Path| -> BTreeSet<Vec<u32>> {
            let households = io::read_households(households, &schema).unwrap();
            let by_id: BTreeMap<&str, &Vec<u32>> = households
                .iter()
                .map(|h| (h.household_id.as_str(), &h.attrs))
                .collect();
            io::read_persons(persons, &schema)
                .unwrap()
                .iter()
                .map(|p| {
                    let mut key = by_id[p.household_id.as_str()].clone();
                    key.extend(&p.attrs);
                    key
                })
                .collect()
        };
        let truth = combos(&files.truth_households, &files.truth_persons);
        let sample = combos(&files.sample_households, &files.sample_persons);
        assert!(sample.is_subset(&truth));
        let missed: Vec<_> = truth.difference(&sample).collect();
        assert!(
            !missed.is_empty(),
            "expected the biased sample to miss some truth combinations"
        );
    }

    #[test]
    fn generated_config_loads_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let files = make_fixture(&small_spec(3_000), 5, dir.path()).unwrap();
        let config = PipelineConfig::from_path(&files.config).unwrap();
        assert_eq!(config.master_seed, 5);
        assert_eq!(config.compose.threshold, 5);
        assert_eq!(config.constraints.len(), 10);
        assert!(config.replication.is_some());
        assert_eq!(config.schema().unwrap(), fixture_schema());
        assert!(config
            .resolve(&config.inputs.households)
            .starts_with(dir.path()));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_fraction = FixtureSpec {
            sample_fraction: 0.0,
            ..FixtureSpec::default()
        };
        let bad_bias = FixtureSpec {
            area_bias: [1.0, 1.0, 0.0, 1.0],
            ..FixtureSpec::default()
        };
        let mut bad_probs = FixtureSpec::default();
        bad_probs.ground_truth.size_probs[0] += 0.5;
        let dir = tempfile::tempdir().unwrap();
        for spec in [bad_fraction, bad_bias, bad_probs] {
            assert!(matches!(
                make_fixture(&spec, 1, dir.path()),
                Err(FixtureError::Invalid(_))
            ));
        }
    }
}
