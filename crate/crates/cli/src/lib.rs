//! Scenario-driven front end for `blowup-core`: reads a TOML scenario, runs
//! one command and writes `report.json`, `timing.json` and CSV traces.

pub mod commands;
pub mod config;
pub mod report;

use anyhow::{Context as _, Result};
use blowup_core::Variant;
use clap::{Parser, ValueEnum};
use config::ScenarioConfig;
use report::{Outcome, Report, Sink, Timing};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Closed-form constants only.
    Predict,
    /// Large solution profiles.
    Solve,
    /// Solve, fit `β`, `C` and `ξ`, compare with the predictions.
    VerifyFirstOrder,
    /// Fit `χ` on a `p = 2` problem with a class coefficient.
    VerifySecondOrder,
    /// Karamata limits of a boundary weight.
    KaramataProbe,
    /// Keller–Osserman classification over a `(p, q)` grid.
    KoCheck,
    /// Numerator-variant adjudication on pure-power cases.
    Adjudicate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Predict => "predict",
            Command::Solve => "solve",
            Command::VerifyFirstOrder => "verify-first-order",
            Command::VerifySecondOrder => "verify-second-order",
            Command::KaramataProbe => "karamata-probe",
            Command::KoCheck => "ko-check",
            Command::Adjudicate => "adjudicate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Theorem,
    Proof,
    Matched,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Theorem => Variant::TheoremNumerator2,
            VariantArg::Proof => Variant::ProofNumeratorP,
            VariantArg::Matched => Variant::Matched,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "blowup", version, about = "Boundary blow-up rates: predict, solve, fit and judge")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory [default: scenario `out`, else out/<name>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent solves; 0 uses every core.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Numerator variant for `ξ` [default: scenario `variant`, else theorem].
    #[arg(long, value_enum)]
    pub variant: Option<VariantArg>,
    /// e.g. `exponent=0.01,constant=0.1`.
    #[arg(long)]
    pub tolerance_overrides: Option<String>,
    /// Also write the tabulated transform `φ` as CSV.
    #[arg(long)]
    pub dump_phi: bool,
}

/// Result of [`run`]: the report as written and its location.
pub struct RunOutput {
    pub report: Report,
    pub out_dir: PathBuf,
}

/// Loads and validates the scenario, runs the command and writes every
/// output file. Errors returned here happen before a report exists.
pub fn run(cli: &Cli) -> Result<RunOutput> {
    let t0 = Instant::now();
    let (mut cfg, bytes) = ScenarioConfig::load(&cli.config)?;
    if let Some(spec) = &cli.tolerance_overrides {
        cfg.override_tolerances(spec)?;
    }
    let variant = match (cli.variant, &cfg.variant) {
        (Some(v), _) => v.into(),
        (None, Some(v)) => Variant::parse(v)?,
        (None, None) => Variant::TheoremNumerator2,
    };
    cfg.validate(cli.command).with_context(|| format!("invalid scenario {}", cli.config.display()))?;

    let out_dir = cli.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(&cfg.name));
    let sink = Sink::create(&out_dir)?;
    let mut report = Report::new(cli.command.name(), cfg.clone(), &bytes, variant);
    let mut timing = Timing { command: cli.command.name().into(), jobs: cli.jobs, ..Timing::default() };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build()?;
    let cx = commands::Context { config: &cfg, variant, dump_phi: cli.dump_phi };
    pool.install(|| commands::execute(cli.command, &cx, &mut report, &sink, &mut timing))?;

    report.finish();
    sink.json("report.json", &report)?;
    timing.total_seconds = t0.elapsed().as_secs_f64();
    sink.json(report::TIMING_FILE, &timing)?;
    Ok(RunOutput { report, out_dir })
}

pub fn exit_code(outcome: Outcome) -> i32 {
    outcome.exit_code()
}
