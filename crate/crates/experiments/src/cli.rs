//! Command-line front end. Flags override the configuration file; each flag
//! can also be set through an `SBEQ_`-prefixed environment variable.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{fast_bath_defaults, slow_bath_defaults, Config, ConfigError, Setup};
use crate::jobs::{check_discontinuity_section, run_discontinuity, run_pimc};
use crate::output::{write_json, write_table};
use crate::phase::{phase_records, run_phase_diagram, PhasePlan, PHASE_COLUMNS};
use crate::psi::{psi_records, run_psi_scan, PsiPlan, PSI_COLUMNS};
use crate::sweep::{run_sweep, sweep_records, SweepPlan, SWEEP_COLUMNS};

#[derive(Debug, Parser)]
#[command(name = "sbeq", version, about = "Spin-boson equilibrium experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file.
    #[arg(long, global = true, env = "SBEQ_CONFIG")]
    pub config: Option<PathBuf>,

    /// Output file; standard output when absent.
    #[arg(long, global = true, env = "SBEQ_OUT")]
    pub out: Option<PathBuf>,

    /// Base Monte Carlo seed.
    #[arg(long, global = true, env = "SBEQ_SEED")]
    pub seed: Option<u64>,

    /// Worker threads; all cores when absent.
    #[arg(long, global = true, env = "SBEQ_THREADS")]
    pub threads: Option<usize>,

    /// Omit the generation time so reruns are byte-identical.
    #[arg(long, global = true, env = "SBEQ_NO_HEADER_TIMESTAMP")]
    pub no_header_timestamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// ⟨σz⟩ along a γ or ω_c grid for several methods (CSV).
    Sweep,
    /// The self-consistency residual Ψ(B) with its roots (CSV).
    PsiScan,
    /// Relative errors against a reference over a (γ, ω_c) grid (CSV).
    PhaseDiagram,
    /// One path-integral Monte Carlo estimate (JSON).
    Pimc,
    /// Jump of the variational renormalization constant in γ (JSON).
    Discontinuity,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] sbeq::Error),
    #[error("{0} of {1} rows failed; see the flags column")]
    RowFailures(usize, usize),
    #[error("output error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) | RunError::RowFailures(..) => 3,
            RunError::Io(_) => 1,
        }
    }
}

fn failures(failed: usize, total: usize) -> Result<(), RunError> {
    if failed == 0 {
        Ok(())
    } else {
        Err(RunError::RowFailures(failed, total))
    }
}

pub fn run(cli: &Cli) -> Result<(), RunError> {
    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::Invalid("--threads must be >= 1".into()).into());
        }
        // Fails only if a pool already exists, in which case it is reused.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let mut pimc = config.pimc;
    if let Some(seed) = cli.seed {
        pimc.seed = seed;
    }
    let pimc = pimc.settings()?;
    let out = cli.out.as_deref().or(config.out.as_deref());
    let stamp = !cli.no_header_timestamp;

    match cli.command {
        Command::Sweep => {
            let (m, b) = fast_bath_defaults();
            let setup = Setup::resolve(&config, m, b)?;
            let plan = SweepPlan::new(setup, &config.sweep.clone().unwrap_or_default(), pimc)?;
            let rows = run_sweep(&plan);
            write_table(out, stamp, &SWEEP_COLUMNS, &sweep_records(&plan, &rows))?;
            failures(rows.iter().filter(|r| r.failed).count(), rows.len())
        }
        Command::PsiScan => {
            let (m, b) = slow_bath_defaults();
            let setup = Setup::resolve(&config, m, b)?;
            let plan = PsiPlan::new(setup, &config.psi_scan.clone().unwrap_or_default())?;
            let rows = run_psi_scan(&plan)?;
            write_table(out, stamp, &PSI_COLUMNS, &psi_records(&plan, &rows))?;
            Ok(())
        }
        Command::PhaseDiagram => {
            let (m, b) = fast_bath_defaults();
            let setup = Setup::resolve(&config, m, b)?;
            let plan = PhasePlan::new(setup, &config.phase_diagram.clone().unwrap_or_default(), pimc)?;
            let rows = run_phase_diagram(&plan);
            write_table(out, stamp, &PHASE_COLUMNS, &phase_records(&plan, &rows))?;
            failures(rows.iter().filter(|r| r.failed).count(), rows.len())
        }
        Command::Pimc => {
            let (m, b) = fast_bath_defaults();
            let setup = Setup::resolve(&config, m, b)?;
            write_json(out, stamp, &run_pimc(&setup, &pimc)?)?;
            Ok(())
        }
        Command::Discontinuity => {
            let (m, b) = slow_bath_defaults();
            let setup = Setup::resolve(&config, m, b)?;
            let section = config.discontinuity.clone().unwrap_or_default();
            check_discontinuity_section(&section)?;
            write_json(out, stamp, &run_discontinuity(&setup, &section)?)?;
            Ok(())
        }
    }
}
