//! Argument parsing and command implementations for the `atrisk` binary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use atrisk_core::course::{classify_cohort, write_verdicts, CourseSchema};
use atrisk_core::datagen::{
    export_csv, generate_cohort, read_csv_file, CohortSpec, CorrelationTargets,
};
use atrisk_core::eval::{descriptive_stats, make_testing_sets, run_protocol, EvalParams, ModelKind};
use atrisk_core::report::write_evaluation;
use atrisk_core::StudentRecord;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "atrisk", version, about = "Weekly early warning for students at risk of failing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort as CSV.
    Simulate(SimulateArgs),
    /// Descriptive statistics of a cohort.
    Stats(StatsArgs),
    /// Flag at-risk students in one week.
    Predict(PredictArgs),
    /// Run the replicated cross-validation and write tables and plots.
    Evaluate(EvaluateArgs),
    /// Print the default schema as TOML.
    Schema(SchemaArgs),
}

#[derive(Debug, Args)]
pub struct SchemaOpt {
    /// Course schema (TOML); the built-in default when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

impl SchemaOpt {
    fn load(&self) -> Result<CourseSchema> {
        let schema = match &self.schema {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading schema {}", path.display()))?;
                CourseSchema::from_toml(&text).with_context(|| format!("parsing schema {}", path.display()))?
            }
            None => CourseSchema::default(),
        };
        schema.validate()?;
        Ok(schema)
    }
}

/// Generator knobs; any of them selects the generator as the data source.
#[derive(Debug, Args, Default)]
pub struct GeneratorArgs {
    /// Number of students to generate.
    #[arg(long)]
    pub size: Option<usize>,
    /// Expected share of students passing the exam.
    #[arg(long)]
    pub pass_rate: Option<f64>,
    /// Target correlation of quiz grades with the final grade.
    #[arg(long)]
    pub quiz_target: Option<f64>,
    /// Target correlation of semester attendance with the final grade.
    #[arg(long)]
    pub attendance_target: Option<f64>,
    /// Target correlation of e-test scores with the final grade.
    #[arg(long)]
    pub etest_target: Option<f64>,
    /// Noise between latent ability and the final grade.
    #[arg(long)]
    pub final_noise: Option<f64>,
    /// Prefix of generated student ids.
    #[arg(long)]
    pub id_prefix: Option<String>,
}

impl GeneratorArgs {
    fn any(&self) -> bool {
        self.size.is_some()
            || self.pass_rate.is_some()
            || self.quiz_target.is_some()
            || self.attendance_target.is_some()
            || self.etest_target.is_some()
            || self.final_noise.is_some()
            || self.id_prefix.is_some()
    }

    fn spec(&self, schema: &CourseSchema, seed: u64) -> CohortSpec {
        let base = CohortSpec::default();
        let targets = CorrelationTargets {
            quiz: self.quiz_target.unwrap_or(base.targets.quiz),
            attendance: self.attendance_target.unwrap_or(base.targets.attendance),
            etest: self.etest_target.unwrap_or(base.targets.etest),
        };
        CohortSpec {
            size: self.size.unwrap_or(base.size),
            pass_rate: self.pass_rate.unwrap_or(base.pass_rate),
            final_noise: self.final_noise.unwrap_or(base.final_noise),
            id_prefix: self.id_prefix.clone().unwrap_or_else(|| base.id_prefix.clone()),
            targets,
            layout: schema.layout.clone(),
            seed,
            ..base
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub schema: SchemaOpt,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A cohort read from `--data`, or generated when `--data` is absent.
#[derive(Debug, Args)]
pub struct DataSource {
    /// Cohort CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Seed for the generator and every other random step.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl DataSource {
    fn load(&self, schema: &CourseSchema) -> Result<Vec<StudentRecord>> {
        match &self.data {
            Some(_) if self.generator.any() => {
                bail!("--data cannot be combined with generator flags; pick one data source")
            }
            Some(path) => read_csv(path, schema),
            None => Ok(generate_cohort(&self.generator.spec(schema, self.seed))?),
        }
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub schema: SchemaOpt,
    #[command(flatten)]
    pub source: DataSource,
    /// Weeks at which cumulative attendance is correlated with the final grade.
    #[arg(long, value_delimiter = ',', default_value = "4,8,12,17")]
    pub weeks: Vec<u32>,
    /// Output directory for `stats.csv` and `stats.txt`; text to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub schema: SchemaOpt,
    /// Training cohort CSV (students with known outcomes).
    #[arg(long)]
    pub data: PathBuf,
    /// Current students to classify.
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub week: u32,
    /// At-risk cutoff on the posterior failure probability; overrides the schema.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Accepted for symmetry with the other commands; prediction is deterministic.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Verdict CSV; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub schema: SchemaOpt,
    #[command(flatten)]
    pub source: DataSource,
    #[arg(long, value_delimiter = ',', default_value = "bnc,knn,lda")]
    pub models: Vec<String>,
    /// Number of testing sets.
    #[arg(long, default_value_t = 15)]
    pub sets: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// BNC cutoff; overrides the schema.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Neighbours for kNN.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Output TOML; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_csv(path: &Path, schema: &CourseSchema) -> Result<Vec<StudentRecord>> {
    read_csv_file(path, &schema.layout).with_context(|| format!("reading {}", path.display()))
}

fn with_cutoff(mut schema: CourseSchema, cutoff: Option<f64>) -> Result<CourseSchema> {
    if let Some(p) = cutoff {
        schema.cutoff = p;
        schema.validate()?;
    }
    Ok(schema)
}

/// Writes to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(path) => {
            let mut file = io::BufWriter::new(
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
            );
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Stats(args) => stats(&args),
        Command::Predict(args) => predict(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Schema(args) => emit(args.out.as_deref(), |w| {
            w.write_all(CourseSchema::default().to_toml()?.as_bytes())?;
            Ok(())
        }),
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let schema = args.schema.load()?;
    let cohort = generate_cohort(&args.generator.spec(&schema, args.seed))?;
    emit(args.out.as_deref(), |w| Ok(export_csv(w, &cohort)?))
}

fn stats(args: &StatsArgs) -> Result<()> {
    let schema = args.schema.load()?;
    let cohort = args.source.load(&schema)?;
    let report = descriptive_stats(&cohort, &schema.layout, &args.weeks)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            emit(Some(&dir.join("stats.csv")), |w| Ok(report.write_csv(w)?))?;
            fs::write(dir.join("stats.txt"), report.to_text())?;
        }
        None => emit(None, |w| Ok(w.write_all(report.to_text().as_bytes())?))?,
    }
    Ok(())
}

fn predict(args: &PredictArgs) -> Result<()> {
    let schema = with_cutoff(args.schema.load()?, args.cutoff)?;
    schema.check_week(args.week)?;
    let training = read_csv(&args.data, &schema)?;
    let test = read_csv(&args.test, &schema)?;
    let verdicts = classify_cohort(&schema, &training, &test, args.week)?;
    emit(args.out.as_deref(), |w| Ok(write_verdicts(w, &verdicts)?))
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let schema = with_cutoff(args.schema.load()?, args.cutoff)?;
    let mut models = Vec::new();
    for name in &args.models {
        let kind: ModelKind = name.trim().to_lowercase().parse()?;
        if !models.contains(&kind) {
            models.push(kind);
        }
    }
    if args.sets == 0 {
        bail!("--sets must be at least 1");
    }
    let params = EvalParams {
        beta: args.beta,
        k: args.k,
        ..EvalParams::default()
    };
    let cohort = args.source.load(&schema)?;
    let sets = make_testing_sets(&cohort, args.sets, args.folds, args.source.seed)?;
    let results = run_protocol(&schema, &cohort, &sets, &models, &params)?;
    let written = write_evaluation(&args.out, &results)?;
    emit(None, |w| {
        for path in &written {
            writeln!(w, "{}", path.display())?;
        }
        Ok(())
    })
}
