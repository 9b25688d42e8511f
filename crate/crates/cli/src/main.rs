//! `onebit-mimo`: regenerate figure and table data from JSON configurations.
//!
//! Exit codes: 0 success, 1 computation or I/O failure, 2 invalid
//! configuration, 3 enumeration budget exceeded.

mod config;
mod figures;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::ExperimentConfig;
use onebit_mimo::power_model::{breakeven_bandwidth_with_kappa, dbm_to_watts, DEFAULT_KAPPA};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Budget(String),
    #[error(transparent)]
    Compute(onebit_mimo::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl From<onebit_mimo::Error> for CliError {
    fn from(e: onebit_mimo::Error) -> Self {
        match e {
            onebit_mimo::Error::Budget { .. } => Self::Budget(e.to_string()),
            other => Self::Compute(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Budget(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "onebit-mimo", version, about = "Spectral efficiency of 1-bit quantized MIMO links")]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one figure or table and write `<figure_id>.csv`.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a configuration and report its enumeration cost without computing.
    Validate { config: PathBuf },
    /// Bandwidth above which 1-bit converters save power.
    Breakeven {
        #[arg(long, allow_negative_numbers = true)]
        pt_dbm: f64,
        #[arg(long)]
        eta: f64,
        /// Converter figure of merit in pJ per conversion step.
        #[arg(long)]
        fom_pj: f64,
        /// Full-resolution converter bits.
        #[arg(long)]
        bits: u32,
        #[arg(long, default_value_t = 2)]
        n_adc: u32,
        #[arg(long, default_value_t = DEFAULT_KAPPA)]
        kappa: f64,
    },
}

fn load(path: &Path) -> Result<(String, ExperimentConfig), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    Ok((text, cfg))
}

fn run(path: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let (text, cfg) = load(path)?;
    let plan = cfg.plan()?;
    if let Some(v) = plan.estimate().violation {
        return Err(CliError::Budget(v));
    }
    let computed = figures::compute(&plan)?;
    for w in &computed.warnings {
        eprintln!("warning: {w}");
    }
    let dir = out.or_else(|| plan.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let name = plan.figure_id.name();
    let header = output::Header {
        figure_id: &name,
        config_sha256: &output::config_hash(&text),
        seed: plan.seed,
    };
    let written = output::write_table(&dir, &header, &computed.table)?;
    println!("{}", written.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let (_, cfg) = load(path)?;
    let plan = cfg.plan()?;
    let est = plan.estimate();
    let report = json!({
        "figure_id": plan.figure_id,
        "seed": plan.seed,
        "seed_defaulted": plan.seed_defaulted,
        "budget_bits": est.budget_bits,
        "terms_per_evaluation": est.max_terms_per_evaluation,
        "total_terms": est.total_terms,
        "runtime_class": est.runtime_class,
        "antennas": est.lines,
        "accepted": est.violation.is_none(),
        "reason": est.violation,
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?);
    match est.violation {
        Some(v) => Err(CliError::Budget(v)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Run { config, out } => run(&config, out),
        Command::Validate { config } => validate(&config),
        Command::Breakeven {
            pt_dbm,
            eta,
            fom_pj,
            bits,
            n_adc,
            kappa,
        } => breakeven_bandwidth_with_kappa(dbm_to_watts(pt_dbm), eta, fom_pj * 1e-12, bits, n_adc, kappa)
            .map_err(|e| CliError::Config(e.to_string()))
            .map(|b| {
                let report = json!({
                    "threshold_hz": b,
                    "inputs": {"pt_dbm": pt_dbm, "eta": eta, "fom_pj": fom_pj, "bits": bits, "n_adc": n_adc, "kappa": kappa},
                });
                println!("{report}");
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
