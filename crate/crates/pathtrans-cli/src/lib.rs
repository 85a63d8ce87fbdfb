//! Scenario-driven front end for `pathtrans`.
//!
//! `pathtrans run|verify|converge --scenario FILE` reads a TOML scenario,
//! applies command-line overrides, and writes `trajectory_*.csv` files and a
//! `report.json` to the output directory. The exit status is 0 when every
//! check passes, 1 when a check fails and 2 on configuration or numeric
//! errors.

pub mod commands;
pub mod report;
pub mod scenario;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::CliError;
pub use report::Report;
pub use scenario::{ConfigError, Overrides, Scenario, Setup};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

const DEFAULT_OUT: &str = "out";

#[derive(Debug, Parser)]
#[command(name = "pathtrans", version, about = "Parallel transport on decorated path-space bundles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a transport and write its trajectories.
    Run {
        #[command(flatten)]
        common: Common,
        /// lift, transport, dec-transport, hat-transport or holonomy.
        #[arg(long = "command")]
        what: Option<String>,
    },
    /// Run a verification suite against the scenario tolerances.
    Verify {
        #[command(flatten)]
        common: Common,
        /// lie, omega, Omega, categorical, stokes, reduction or all.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Estimate the convergence order of a check over grid refinements.
    Converge {
        #[command(flatten)]
        common: Common,
        /// stokes, endpoint-shift, reduction or flat.
        #[arg(long)]
        check: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_name = "FILE")]
    pub scenario: PathBuf,
    /// Number of t-nodes.
    #[arg(long, value_name = "N")]
    pub grid_t: Option<usize>,
    /// Number of s-nodes.
    #[arg(long, value_name = "N")]
    pub grid_s: Option<usize>,
    #[arg(long, value_parser = ["rk4mk", "rk4proj", "euler"])]
    pub integrator: Option<String>,
    #[arg(long, value_parser = ["full", "proj", "pullback"])]
    pub b1_mode: Option<String>,
    #[arg(long, value_name = "K")]
    pub refinements: Option<usize>,
    #[arg(long, value_name = "S")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long, env = "PATHTRANS_THREADS", value_name = "N")]
    pub threads: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid_t: self.grid_t,
            grid_s: self.grid_s,
            integrator: self.integrator.clone(),
            b1_mode: self.b1_mode.clone(),
            refinements: self.refinements,
            seed: self.seed,
            out: self.out.as_ref().map(|p| p.display().to_string()),
        }
    }
}

/// Which command to execute and on what.
#[derive(Clone, Copy, Debug)]
pub enum Action<'a> {
    Run(&'a str),
    Verify(&'a str),
    Converge(&'a str),
}

/// Executes an action on a scenario; CSVs are written only when `out` is given.
pub fn execute(sc: &Scenario, action: Action<'_>, out: Option<&Path>) -> Result<Report, CliError> {
    let setup = sc.build()?;
    match action {
        Action::Run(c) => commands::run(sc, &setup, c, out),
        Action::Verify(s) => commands::verify(sc, &setup, s),
        Action::Converge(c) => commands::converge(sc, &setup, c),
    }
}

fn configure_threads(threads: Option<usize>) {
    if let Some(n) = threads.filter(|&n| n > 0) {
        // A pool that already exists (repeated calls in one process) is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn dispatch(cli: &Cli) -> Result<(Report, PathBuf), CliError> {
    let (common, kind) = match &cli.command {
        Command::Run { common, .. } => (common, "run"),
        Command::Verify { common, .. } => (common, "verify"),
        Command::Converge { common, .. } => (common, "converge"),
    };
    configure_threads(common.threads);
    let mut sc = Scenario::load(&common.scenario)?;
    sc.apply(&common.overrides());
    let action = match &cli.command {
        Command::Run { what, .. } => Action::Run(what.as_deref().unwrap_or(&sc.run.command)),
        Command::Verify { suite, .. } => Action::Verify(suite.as_deref().unwrap_or(&sc.verify.suite)),
        Command::Converge { check, .. } => Action::Converge(check.as_deref().unwrap_or(&sc.converge.check)),
    };
    let out = PathBuf::from(sc.output.clone().unwrap_or_else(|| DEFAULT_OUT.to_string()));
    std::fs::create_dir_all(&out).map_err(|source| CliError::Io {
        path: out.display().to_string(),
        source,
    })?;
    let report = execute(&sc, action, (kind == "run").then_some(out.as_path()))?;
    report.write(&out).map_err(|source| CliError::Io {
        path: out.join("report.json").display().to_string(),
        source,
    })?;
    Ok((report, out))
}

fn summarize(report: &Report, out: &Path) {
    for c in &report.checks {
        println!(
            "[{}] {}: residual {:.3e} (tolerance {:.1e})",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.residual,
            c.tolerance
        );
    }
    for c in &report.convergence {
        let slope = c.slope.map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
        let want = c
            .expected_slope
            .map_or_else(|| "floor".to_string(), |e| format!("{e} ± {}", c.slope_tolerance));
        println!(
            "[{}] {} convergence: residuals {:?} at N={:?}, slope {slope} (want {want}){}",
            if c.pass { "PASS" } else { "FAIL" },
            c.check,
            c.residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>(),
            c.grids,
            if c.floor_reached { ", floor reached" } else { "" }
        );
    }
    println!("report written to {}", out.join("report.json").display());
}

/// Parses arguments, runs the command and returns the process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok((report, out)) => {
            summarize(&report, &out);
            if report.pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
