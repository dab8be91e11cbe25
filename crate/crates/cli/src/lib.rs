//! Driver for the `branched` command-line tool: run configuration defaults,
//! artifact writing and the individual checks behind each command.

pub mod commands;

use branched_core::domain::ConfigSpec;
use branched_core::io::{svg_line_plot, AssertionResult, Command, RunConfig, RunManifest, Series, Table, RUN_SCHEMA_VERSION};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unknown tolerance names or a malformed configuration file.
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] branched_core::Error),
}

impl CliError {
    /// Exit status: 2 for usage and configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(branched_core::Error::InvalidConfig(_)) => 2,
            CliError::Core(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Default tolerances of a command; `--tol` may only override these names.
pub fn default_tolerances(command: Command) -> BTreeMap<String, f64> {
    let pairs: &[(&str, f64)] = match command {
        Command::KernelCheck => &[
            ("kappa3", 1e-14),
            ("h0_unit", 1e-14),
            ("homogeneity", 1e-12),
            ("constants_runtime_s", 1.0),
            ("i0_modulus", 1e-8),
            ("i1_closed_form", 1e-6),
            ("integrals_runtime_s", 10.0),
            ("correction_order_deviation", 0.3),
            ("gamma_fit", 1e-6),
        ],
        Command::Solve => &[("min_eigenvalue", 0.0), ("eigenvalue_drift", 0.2), ("decay_exponent_deviation", 0.05)],
        Command::Fit => &[("min_order", 1.0), ("residual_exponent_deviation", 0.3)],
        Command::PCheck => &[
            ("route_agreement", 1e-2),
            ("slope_deviation", 2e-2),
            ("potential_agreement", 1e-2),
            ("line_runtime_s", 60.0),
        ],
        Command::DerivativeCheck => &[("max_relative_error", 5e-2), ("refinement_ratio", 1.0)],
        Command::Newton => &[("min_reduction", 10.0), ("max_ratio_spread", 3.0)],
        Command::OracleCompare => &[("a_agreement", 1e-2), ("p_agreement", 1e-2), ("runtime_s", 300.0)],
    };
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Default resolution ladder of a command (coarse to fine).
pub fn default_resolutions(command: Command) -> Vec<f64> {
    match command {
        Command::KernelCheck | Command::PCheck => vec![],
        Command::Solve => vec![1.0 / 64.0, 1.0 / 128.0],
        Command::Fit => vec![1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0],
        Command::DerivativeCheck => vec![1.0 / 128.0, 1.0 / 256.0],
        Command::Newton => vec![1.0 / 128.0],
        Command::OracleCompare => vec![1.0 / 256.0],
    }
}

/// Run configuration with every setting at its default.
pub fn default_run_config(command: Command) -> RunConfig {
    RunConfig {
        schema_version: RUN_SCHEMA_VERSION,
        command,
        config: None,
        out: PathBuf::from("out").join(command.name()),
        tolerances: default_tolerances(command),
        resolutions: default_resolutions(command),
        seed: 20240601,
        single_thread: false,
    }
}

/// Loads the branch configuration named by the run, or builds the default.
pub fn load_spec(run: &RunConfig, default: impl Fn(f64) -> ConfigSpec) -> CliResult<ConfigSpec> {
    let spacing = run.resolutions.first().copied().unwrap_or(1.0 / 64.0);
    match &run.config {
        None => Ok(default(spacing)),
        Some(path) => {
            let text = read_config(path)?;
            Ok(ConfigSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?)
        }
    }
}

pub(crate) fn read_config(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

/// Collects assertions and artifacts of one run.
pub struct Context<'a> {
    pub run: &'a RunConfig,
    pub manifest: RunManifest,
    started: Instant,
}

impl<'a> Context<'a> {
    fn new(run: &'a RunConfig) -> CliResult<Self> {
        std::fs::create_dir_all(&run.out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", run.out.display())))?;
        Ok(Self {
            run,
            manifest: RunManifest::new(run.clone(), serde_json::Value::Null),
            started: Instant::now(),
        })
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.run.tolerance(name)
    }

    pub fn set_input<T: serde::Serialize>(&mut self, input: &T) {
        self.manifest.input = serde_json::to_value(input).unwrap_or(serde_json::Value::Null);
    }

    pub fn check(&mut self, a: AssertionResult) {
        self.manifest.assertions.push(a);
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> CliResult<()> {
        table.write(&self.run.out.join(name))?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<()> {
        std::fs::write(self.run.out.join(name), text).map_err(branched_core::Error::from)?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_plot(&mut self, name: &str, title: &str, x: &str, y: &str, series: &[Series], log: bool) -> CliResult<()> {
        self.write_text(name, &svg_line_plot(title, x, y, series, log, log))
    }

    fn finish(mut self) -> CliResult<RunManifest> {
        self.manifest.wall_time_s = self.started.elapsed().as_secs_f64();
        self.manifest.write(&self.run.out)?;
        Ok(self.manifest)
    }
}

/// Runs one command, writing its artifacts and `manifest.json` to `run.out`.
pub fn run(run: &RunConfig) -> CliResult<RunManifest> {
    if run.schema_version != RUN_SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "schema_version {} is not supported (expected {RUN_SCHEMA_VERSION})",
            run.schema_version
        )));
    }
    if run.single_thread {
        // a pool configured earlier in this process is kept
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    let mut ctx = Context::new(run)?;
    match run.command {
        Command::KernelCheck => commands::kernel_check(&mut ctx)?,
        Command::Solve => commands::solve(&mut ctx)?,
        Command::Fit => commands::fit(&mut ctx)?,
        Command::PCheck => commands::p_check(&mut ctx)?,
        Command::DerivativeCheck => commands::derivative_check(&mut ctx)?,
        Command::Newton => commands::newton(&mut ctx)?,
        Command::OracleCompare => commands::oracle_compare(&mut ctx)?,
    }
    ctx.finish()
}
