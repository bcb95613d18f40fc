//! The `riot` command line.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use riot_core::Method;

use crate::check::run_checks;
use crate::config::ExperimentSpec;
use crate::error::HarnessError;
use crate::exec::{resolve_threads, Pool, WORKERS_ENV};
use crate::grid::{report_rows, result_table, run_cell, run_grid};
use crate::output::{ensure_dir, fmt_f64, write_manifest, Table};
use crate::problem::{spinup_truth, Experiment};
use crate::spectrum::spectrum_report;
use crate::sweep::{rank_sweep, sweep_table};

#[derive(Debug, Parser)]
#[command(name = "riot", version, about = "Lorenz-96 incremental 4D-Var twin experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Run only this seed instead of the configured list.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Threads; results do not depend on it.
    #[arg(long, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    /// Output directory; defaults to `output_dir` from the config, then `riot-out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the spun-up truth state.
    Spinup(Common),
    /// Run one solver of the grid.
    Run {
        #[command(flatten)]
        common: Common,
        /// Index into the configured solver list.
        #[arg(long, default_value_t = 0)]
        solver: usize,
    },
    /// Run every solver on every seed.
    Grid(Common),
    /// Error-vs-rank sweep against dense oracles (needs a `[sweep]` table).
    Sweep(Common),
    /// First-outer-loop Hessian spectrum and DOFs.
    Eigs {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "riot")]
        method: String,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        oversample: usize,
        /// Also compute the exact spectrum by dense assembly.
        #[arg(long)]
        exact: bool,
    },
    /// Adjoint, tangent-linear and dense-oracle self-tests.
    Check {
        #[arg(long, env = WORKERS_ENV)]
        workers: Option<usize>,
    },
}

struct Session {
    exp: Experiment,
    pool: Pool,
    seeds: Vec<u64>,
    out: PathBuf,
}

impl Session {
    fn open(c: &Common) -> Result<Self, HarnessError> {
        let mut spec = ExperimentSpec::load(&c.config)?;
        if let Some(s) = c.seed {
            spec.seeds = vec![s];
            spec.validate()?;
        }
        if spec.seeds.is_empty() {
            return Err(HarnessError::Config("no seeds configured".into()));
        }
        let out = c
            .out
            .clone()
            .or_else(|| spec.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("riot-out"));
        ensure_dir(&out)?;
        let pool = Pool::new(resolve_threads(c.workers), spec.ledger_workers);
        let seeds = spec.seeds.clone();
        Ok(Session {
            exp: Experiment::new(spec)?,
            pool,
            seeds,
            out,
        })
    }

    fn finish(&self, command: &str, tables: &[(&str, &Table)]) -> Result<(), HarnessError> {
        for (name, t) in tables {
            t.write(&self.out.join(name))?;
        }
        let names: Vec<&str> = tables.iter().map(|(n, _)| *n).collect();
        write_manifest(&self.out, command, &self.exp.spec, &self.seeds, &names)?;
        Ok(())
    }
}

fn truth_table(spec: &ExperimentSpec) -> Result<Table, HarnessError> {
    let truth = spinup_truth(spec)?;
    Ok(Table::new(
        &["site", "value"],
        truth.iter().enumerate().map(|(i, v)| vec![i.to_string(), fmt_f64(*v)]).collect(),
    ))
}

fn execute(cmd: Command, stdout: &mut dyn Write) -> Result<(), HarnessError> {
    let started = Instant::now();
    let say = |stdout: &mut dyn Write, msg: String| {
        let _ = writeln!(stdout, "{msg}");
    };
    match cmd {
        Command::Spinup(c) => {
            let s = Session::open(&c)?;
            s.finish("spinup", &[("truth.csv", &truth_table(&s.exp.spec)?)])?;
            say(stdout, format!("wrote {}", s.out.join("truth.csv").display()));
        }
        Command::Run { common, solver } => {
            let s = Session::open(&common)?;
            let spec_solver = s.exp.spec.solvers.get(solver).cloned().ok_or_else(|| {
                HarnessError::Config(format!(
                    "solver index {solver} out of range ({} configured)",
                    s.exp.spec.solvers.len()
                ))
            })?;
            let mut rows = Vec::new();
            for &seed in &s.seeds {
                let report = run_cell(&s.exp, &spec_solver, seed, &s.pool)?;
                rows.extend(report_rows(&s.exp.spec.window.label, &spec_solver, seed, &report));
            }
            let mut spec = s.exp.spec.clone();
            spec.solvers = vec![spec_solver];
            let s = Session { exp: Experiment { spec, ..s.exp }, ..s };
            s.finish("run", &[("results.csv", &result_table(&rows))])?;
            say(stdout, format!("{} rows -> {}", rows.len(), s.out.join("results.csv").display()));
        }
        Command::Grid(c) => {
            let s = Session::open(&c)?;
            let rows = run_grid(&s.exp, &s.pool);
            let failed = rows.iter().filter(|r| matches!(r.body, crate::grid::RowBody::Failed(_))).count();
            s.finish("grid", &[("results.csv", &result_table(&rows))])?;
            say(
                stdout,
                format!("{} rows ({failed} failed cells) -> {}", rows.len(), s.out.join("results.csv").display()),
            );
        }
        Command::Sweep(c) => {
            let s = Session::open(&c)?;
            let sw = s
                .exp
                .spec
                .sweep
                .clone()
                .ok_or_else(|| HarnessError::Config("missing [sweep] table".into()))?;
            let problem = s.exp.build_problem(s.seeds[0])?;
            let (_, rows) = rank_sweep(&problem, &sw.ranks, &sw.oversample, &sw.sketch_seeds, &s.pool)?;
            s.finish("sweep", &[("sweep.csv", &sweep_table(&rows))])?;
            say(stdout, format!("{} rows -> {}", rows.len(), s.out.join("sweep.csv").display()));
        }
        Command::Eigs {
            common,
            method,
            m,
            oversample,
            exact,
        } => {
            let s = Session::open(&common)?;
            let method = Method::from_name(&method)
                .ok_or_else(|| HarnessError::Config(format!("unknown method `{method}`")))?;
            let seed = s.seeds[0];
            let problem = s.exp.build_problem(seed)?;
            let rep = spectrum_report(&problem, method, m, oversample, seed, exact, &s.pool)?;
            let dofs = Table::new(
                &["method", "m", "oversample", "seed", "dofs", "exact_dofs"],
                vec![vec![
                    method.name().to_string(),
                    m.to_string(),
                    oversample.to_string(),
                    seed.to_string(),
                    fmt_f64(rep.dofs),
                    rep.exact_dofs.map(fmt_f64).unwrap_or_default(),
                ]],
            );
            s.finish("eigs", &[("spectrum.csv", &rep.table()), ("dofs.csv", &dofs)])?;
            say(stdout, format!("DOFs {:.4} ({} eigenvalues)", rep.dofs, rep.estimates.len()));
        }
        Command::Check { workers } => {
            let pool = Pool::new(resolve_threads(workers), 0);
            let results = run_checks(&pool)?;
            let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name).collect();
            for c in &results {
                say(stdout, format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            if !failed.is_empty() {
                return Err(HarnessError::Check(failed.join(", ")));
            }
        }
    }
    eprintln!("elapsed {:.3}s", started.elapsed().as_secs_f64());
    Ok(())
}

/// Parses `args` (program name first), runs the command and maps errors to
/// exit codes: 2 usage, 3 config, 4 io, 5 numerical, 6 failed self-test.
pub fn cli_main<I, T>(args: I, stdout: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riot: {} error: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}

