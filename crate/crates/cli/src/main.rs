use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use cfp::multiindex::IndexRule;
use cfp::orthopoly::Density;
use cfp::study::{
    run_design, study_approx, study_condition, verify_oned, DesignConfig, Method, StudyConfig,
    Target, VerifyConfig,
};
use clap::{Args, Parser, Subcommand};

/// Christoffel-weighted approximate Fekete point designs.
#[derive(Parser)]
#[command(name = "cfp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select one design and print it as JSON, optionally fitting a target.
    Design(DesignArgs),
    /// Batch studies; CSV output.
    #[command(subcommand)]
    Study(StudyCommand),
    /// Verification reports; CSV output.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Condition numbers of the least-squares matrices.
    Cond(StudyArgs),
    /// Validation errors for a built-in target.
    Approx {
        #[arg(long, default_value = "exp_negsumsq")]
        target: Target,
        #[command(flatten)]
        study: StudyArgs,
    },
    /// Validation errors for the diffusion benchmark (uniform parameters).
    Elliptic(StudyArgs),
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// One-dimensional optimality checks; exits with status 1 if any row fails.
    Oned(OnedArgs),
}

/// Study settings. Precedence: built-in defaults, then `--config`, then flags.
#[derive(Args, Default)]
struct StudyArgs {
    /// Config file with one `key = value` per line; `#` starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<Density>,
    #[arg(long, short = 'd')]
    dim: Option<usize>,
    /// TD (total degree) or HC (hyperbolic cross).
    #[arg(long)]
    index: Option<IndexRule>,
    #[arg(long)]
    degree_min: Option<usize>,
    #[arg(long)]
    degree_max: Option<usize>,
    /// Samples per basis function; M = ceil(oversampling * N).
    #[arg(long)]
    oversampling: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Candidate set size.
    #[arg(long)]
    m_tilde: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of CFP,AFP,MC.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    /// Validation samples per trial.
    #[arg(long)]
    n_val: Option<usize>,
    /// Diffusivity amplitude for the diffusion target.
    #[arg(long)]
    sigma: Option<f64>,
    /// Finite-difference grid size for the diffusion target (odd).
    #[arg(long)]
    grid_points: Option<usize>,
    /// d = 1 only: seed each candidate set with a full level set.
    #[arg(long)]
    level_set_start: bool,
    /// Write output here instead of stdout.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

impl StudyArgs {
    fn resolve(&self) -> Result<StudyConfig> {
        let mut cfg = StudyConfig::default();
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_text(&text)
                .with_context(|| format!("in {}", path.display()))?;
        }
        if let Some(v) = self.family {
            cfg.family = v;
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.index {
            cfg.index = v;
        }
        if let Some(v) = self.degree_min {
            cfg.degree_min = v;
        }
        if let Some(v) = self.degree_max {
            cfg.degree_max = v;
        }
        if let Some(v) = self.oversampling {
            cfg.oversampling = v;
        }
        if let Some(v) = self.trials {
            cfg.trials = v;
        }
        if let Some(v) = self.m_tilde {
            cfg.m_tilde = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.methods {
            cfg.methods = v.clone();
        }
        if let Some(v) = self.n_val {
            cfg.n_val = v;
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.grid_points {
            cfg.grid_points = v;
        }
        if self.level_set_start {
            cfg.level_set_start = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DesignArgs {
    /// Total degree (or hyperbolic-cross level) of the fit index set.
    #[arg(long)]
    degree: usize,
    #[arg(long, default_value = "CFP")]
    method: Method,
    /// Fit this target on the design and report its validation error.
    #[arg(long)]
    target: Option<Target>,
    #[command(flatten)]
    study: StudyArgs,
}

#[derive(Args)]
struct OnedArgs {
    #[arg(long, default_value = "uniform")]
    family: Density,
    /// Largest N checked (at most 40).
    #[arg(long, default_value_t = 10)]
    n_max: usize,
    /// Random starting points per N besides the roots of phi_N.
    #[arg(long, default_value_t = 5)]
    random_starts: usize,
    /// Evenly spaced extra candidates after the level set.
    #[arg(long, default_value_t = 64)]
    distractors: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Design(args) => {
            let cfg = args.study.resolve()?;
            let design = DesignConfig::from_study(&cfg, args.degree, args.method, args.target);
            let out = run_design(&design)?;
            let mut json = serde_json::to_string_pretty(&out)?;
            json.push('\n');
            emit(args.study.out.as_ref(), &json)?;
        }
        Command::Study(StudyCommand::Cond(args)) => {
            let table = study_condition(&args.resolve()?)?;
            emit(args.out.as_ref(), &table.to_csv())?;
        }
        Command::Study(StudyCommand::Approx { target, study }) => {
            let table = study_approx(&study.resolve()?, target)?;
            emit(study.out.as_ref(), &table.to_csv())?;
        }
        Command::Study(StudyCommand::Elliptic(args)) => {
            let table = study_approx(&args.resolve()?, Target::Elliptic)?;
            emit(args.out.as_ref(), &table.to_csv())?;
        }
        Command::Verify(VerifyCommand::Oned(args)) => {
            let cfg = VerifyConfig {
                family: args.family,
                n_max: args.n_max,
                random_starts: args.random_starts,
                distractors: args.distractors,
                seed: args.seed,
            };
            let report = verify_oned(&cfg)?;
            emit(args.out.as_ref(), &report.to_csv())?;
            let failed = report.failures().count();
            eprintln!("{} checks, {failed} failed", report.rows.len());
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
