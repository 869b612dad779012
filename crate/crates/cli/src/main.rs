//! `popsynth` — drive the population synthesis pipeline from the shell.
//!
//! Exit codes: 0 on success, 1 when a stage fails on its data, 2 on usage
//! errors (clap's default).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use popsynth_core::config::PipelineConfig;
use popsynth_core::fixture::{make_fixture, FixtureSpec};
use popsynth_core::pipeline::{
    run_pipeline, stage_compose, stage_condpop, stage_fit, stage_generate, stage_learn_dag,
    stage_validate, StageReport,
};

#[derive(Parser)]
#[command(name = "popsynth", version, about = "Synthesize full-size household-person populations from a weighted sample")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageArgs {
    /// Pipeline configuration (TOML); relative paths inside resolve
    /// against its directory
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Artifact directory shared by all stages
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Override the configured master seed
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a self-contained test bed: a ground-truth population, a
    /// biased sample, marginal files, and a ready-to-run pipeline.toml
    Fixture {
        /// Directory to generate into
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        #[arg(long, value_name = "U64", default_value_t = 0)]
        seed: u64,
        /// Approximate person count of the true population
        #[arg(long, default_value_t = 50_000)]
        persons: u64,
        /// Sampling fraction of the biased sample, in (0, 1]
        #[arg(long, default_value_t = 0.05)]
        fraction: f64,
        /// Per-area sampling multipliers as four comma-separated values
        /// (north, south, east, west)
        #[arg(long, value_delimiter = ',')]
        bias: Option<Vec<f64>>,
        /// Household sizes up to this bound get their own model
        #[arg(long, default_value_t = 5)]
        threshold: usize,
    },
    /// Split the input sample into per-size composed tables
    Compose(StageArgs),
    /// Learn, score and select the per-size structures
    #[command(name = "learn-dag")]
    LearnDag(StageArgs),
    /// Fit the selected structures' probability tables
    Fit(StageArgs),
    /// Rake the sample to the marginal targets and integerize
    Condpop(StageArgs),
    /// Sample the synthetic population and replicate the overflow
    Generate(StageArgs),
    /// Score the synthetic population and write the reports
    Validate(StageArgs),
    /// Run every stage in order
    Run(StageArgs),
}

fn load_config(args: &StageArgs) -> Result<PipelineConfig, Box<dyn std::error::Error>> {
    let mut config = PipelineConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    Ok(config)
}

fn print_report(report: &StageReport) {
    for note in &report.notes {
        println!("[{}] {}", report.stage, note);
    }
    println!("[{}] {} artifacts written", report.stage, report.artifacts.len());
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Fixture {
            out,
            seed,
            persons,
            fraction,
            bias,
            threshold,
        } => {
            let mut spec = FixtureSpec {
                population_persons: persons,
                sample_fraction: fraction,
                threshold,
                ..FixtureSpec::default()
            };
            if let Some(bias) = bias {
                if bias.len() != 4 {
                    return Err("--bias needs exactly four comma-separated multipliers".into());
                }
                spec.area_bias = [bias[0], bias[1], bias[2], bias[3]];
            }
            let files = make_fixture(&spec, seed, &out)?;
            println!(
                "truth: {} households / {} persons; sample: {} households / {} persons",
                files.truth_household_count,
                files.truth_person_count,
                files.sample_household_count,
                files.sample_person_count
            );
            println!("config: {}", files.config.display());
        }
        Command::Compose(args) => print_report(&stage_compose(&load_config(&args)?, &args.out)?),
        Command::LearnDag(args) => {
            print_report(&stage_learn_dag(&load_config(&args)?, &args.out)?)
        }
        Command::Fit(args) => print_report(&stage_fit(&load_config(&args)?, &args.out)?),
        Command::Condpop(args) => print_report(&stage_condpop(&load_config(&args)?, &args.out)?),
        Command::Generate(args) => print_report(&stage_generate(&load_config(&args)?, &args.out)?),
        Command::Validate(args) => print_report(&stage_validate(&load_config(&args)?, &args.out)?),
        Command::Run(args) => {
            for report in run_pipeline(&load_config(&args)?, &args.out)? {
                print_report(&report);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
