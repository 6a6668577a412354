//! Command-line front end: JSON run configuration in, CSV or a gate report out.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::gates::{run_suite, GateReport, SuiteOptions};
use crate::model::{
    gaussian_state_moments, validate_config, GaussianMoments, GaussianState, MeasurementConfig,
};
use crate::optimize::{default_sweep_grid, thermal_sweep, SearchOptions, SweepResult};
use crate::oracle::BathGrid;
use crate::pipeline::{Evaluator, TimeGrid};
use crate::propagator::DynamicsMode;
use crate::uncertainty::UncertaintyPoint;

pub const UNCERTAINTY_HEADER: &str =
    "t,var_x,var_p,u_sq,bound,sigma1_sq,sigma2_sq,xi1_sq,xi2_sq,det_a";
pub const SWEEP_HEADER: &str = "inv_beta,t_opt,u_sq_min";

/// Slack allowed when re-checking `u_sq >= bound` in an emitted file.
const CHAIN_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateSpec {
    pub system: GaussianState,
    pub pointers: [GaussianState; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateOptions {
    pub discrete_modes: usize,
    pub discrete_grid: BathGrid,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            discrete_modes: 400,
            discrete_grid: BathGrid::Tangent,
        }
    }
}

/// Everything a run depends on. All fields default to the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub measurement: MeasurementConfig,
    pub state: StateSpec,
    pub mode: DynamicsMode,
    pub time_grid: TimeGrid,
    pub search: SearchOptions,
    /// Thermal energies of the `sweep` command.
    pub sweep: Vec<f64>,
    pub validate: ValidateOptions,
    /// Output file; stdout when absent. Not echoed, so re-runs into
    /// different files stay byte-identical.
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            measurement: MeasurementConfig::default(),
            state: StateSpec::default(),
            mode: DynamicsMode::Renormalized,
            time_grid: TimeGrid::default(),
            search: SearchOptions::default(),
            sweep: default_sweep_grid(),
            validate: ValidateOptions::default(),
            output: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn moments(&self) -> Result<GaussianMoments, CliError> {
        gaussian_state_moments(self.state.system, self.state.pointers).map_err(CliError::from)
    }

    /// `# ` lines naming the tool version and echoing this configuration.
    pub fn echo(&self) -> String {
        let json = serde_json::to_string(self).expect("run config serialises");
        format!(
            "# {} {}\n# config: {json}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("i/o: {0}")]
    Io(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numerical: {0}")]
    Numerical(Error),
    #[error("gate failure: {0}")]
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Gate(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "thermal-pointer",
    version,
    about = "Simultaneous position/momentum measurement in a thermal bath"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; defaults apply to missing fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (overrides the config); stdout otherwise.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// raw or renormalized (overrides the config).
    #[arg(long, global = true)]
    pub mode: Option<DynamicsMode>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// U²(t) and its bound on the configured time grid.
    Uncertainty,
    /// Optimal time at the configured thermal energy.
    Optimize,
    /// Optimal time for each thermal energy of the sweep grid.
    Sweep,
    /// Run the self-check gates.
    Validate,
}

fn row(fields: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

pub fn uncertainty_csv(cfg: &RunConfig) -> Result<String, CliError> {
    let measurement = validate_config(cfg.measurement)?;
    let times = cfg.time_grid.points()?;
    if let Some(w) = measurement.cutoff_warning(cfg.time_grid.stop) {
        log::warn!("{w}");
    }
    let ev = Evaluator::new(measurement, cfg.moments()?, cfg.mode)?;
    let points = times
        .par_iter()
        .map(|&t| ev.point(t))
        .collect::<crate::error::Result<Vec<UncertaintyPoint>>>()?;
    let mut out = cfg.echo();
    out.push_str(UNCERTAINTY_HEADER);
    out.push('\n');
    for p in &points {
        out.push_str(&row(&[
            p.t,
            p.var_inferred_x,
            p.var_inferred_p,
            p.u_sq,
            p.bound,
            p.sigma1_sq,
            p.sigma2_sq,
            p.xi1_sq,
            p.xi2_sq,
            p.det_a,
        ]));
        out.push('\n');
    }
    Ok(out)
}

/// Re-reads an uncertainty CSV and checks `u_sq >= bound` on every row.
pub fn check_uncertainty_csv(text: &str) -> Result<(), CliError> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    if lines.next() != Some(UNCERTAINTY_HEADER) {
        return Err(CliError::Gate("unexpected header".into()));
    }
    for (i, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Gate(format!("row {i}: {e}")))?;
        if v.len() != 10 {
            return Err(CliError::Gate(format!("row {i}: {} fields", v.len())));
        }
        if v[3] < v[4] - CHAIN_SLACK {
            return Err(CliError::Gate(format!(
                "row {i} (t = {}): u_sq {} below bound {}",
                v[0], v[3], v[4]
            )));
        }
    }
    Ok(())
}

fn sweep_csv_from(cfg: &RunConfig, result: &SweepResult) -> String {
    let mut out = cfg.echo();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for p in &result.points {
        out.push_str(&row(&[p.inv_beta, p.t_opt, p.u_sq_min]));
        out.push('\n');
    }
    for p in &result.points {
        if p.boundary {
            writeln!(
                out,
                "# flag inv_beta={}: minimum on search boundary",
                p.inv_beta
            )
            .unwrap();
        }
        if p.multiple_minima {
            writeln!(
                out,
                "# flag inv_beta={}: competing minima within degeneracy",
                p.inv_beta
            )
            .unwrap();
        }
    }
    out
}

fn sweep_over(cfg: &RunConfig, inv_betas: &[f64]) -> Result<String, CliError> {
    let measurement = validate_config(cfg.measurement)?;
    let result = thermal_sweep(
        &measurement,
        &cfg.moments()?,
        cfg.mode,
        inv_betas,
        &cfg.search,
    )?;
    Ok(sweep_csv_from(cfg, &result))
}

pub fn optimize_csv(cfg: &RunConfig) -> Result<String, CliError> {
    sweep_over(cfg, &[cfg.measurement.inv_beta])
}

pub fn sweep_csv(cfg: &RunConfig) -> Result<String, CliError> {
    sweep_over(cfg, &cfg.sweep)
}

/// Runs the gates; `bound` can be swapped to check that the suite bites.
pub fn validate_report(
    cfg: &RunConfig,
    bound: crate::gates::BoundFn,
) -> Result<(String, Vec<GateReport>), CliError> {
    let measurement = validate_config(cfg.measurement)?;
    let opts = SuiteOptions {
        discrete_modes: cfg.validate.discrete_modes,
        discrete_grid: cfg.validate.discrete_grid,
        bound,
    };
    let reports = run_suite(&measurement, &cfg.moments()?, &opts)?;
    let mut out = cfg.echo();
    for r in &reports {
        out.push_str(&r.line());
        out.push('\n');
    }
    Ok((out, reports))
}

fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Applies the command-line overrides and runs one command.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let out = cfg.output.clone();
    match cli.command {
        Command::Uncertainty => {
            let text = uncertainty_csv(&cfg)?;
            check_uncertainty_csv(&text)?;
            emit(&text, out.as_deref())
        }
        Command::Optimize => emit(&optimize_csv(&cfg)?, out.as_deref()),
        Command::Sweep => emit(&sweep_csv(&cfg)?, out.as_deref()),
        Command::Validate => {
            let (text, reports) = validate_report(&cfg, crate::uncertainty::lower_bound)?;
            emit(&text, out.as_deref())?;
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed)
                .map(|r| r.name.as_str())
                .collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Gate(failed.join(", ")))
            }
        }
    }
}
