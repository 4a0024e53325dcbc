//! `vilenkin`: run inequality sweeps, the sharpness construction, identity
//! checks and transform timings, writing CSV or JSON reports.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vilenkin_core::harness::{
    run_bench, run_counterexample, run_hardy_littlewood, run_identities, run_paley,
    run_strong_convergence, Experiment, ExperimentConfig, DEFAULT_GRID_CAP,
};
use vilenkin_core::VilenkinError;

#[derive(Parser)]
#[command(
    name = "vilenkin",
    version,
    about = "Fourier analysis experiments on bounded Vilenkin groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weighted coefficient sums against the Hardy quasinorm (0 < p <= 2)
    Hardy(Common),
    /// Lacunary square sums against the Hardy quasinorm (0 < p <= 1)
    Paley(Common),
    /// Weighted partial-sum norms (p < 1) or log-averages (p = 1)
    Strong(Common),
    /// Sharpness construction and its divergence report
    Counterexample(Common),
    /// Transform, orthonormality, kernel and counting identities
    Identities(Common),
    /// Fast vs quadratic transform timings
    Bench(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    /// Radix spec, repeated cyclically (e.g. "2" or "2,3,4")
    #[arg(long, default_value = "2")]
    radix: String,
    /// Number of radix positions A
    #[arg(long, default_value_t = 10)]
    resolution: usize,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Weight: log | loglog | pow:BETA | file:PATH
    #[arg(long, default_value = "log")]
    phi: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Largest admissible grid size M_A
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    grid_cap: u64,
}

impl Common {
    fn config(&self, experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            radix: self.radix.clone(),
            resolution: self.resolution,
            p: self.p,
            phi: self.phi.clone(),
            trials: self.trials,
            seed: self.seed,
            out: self.out.clone(),
            grid_cap: self.grid_cap,
        }
    }
}

enum Failure {
    Error(VilenkinError),
    Invariant(String),
}

impl From<VilenkinError> for Failure {
    fn from(e: VilenkinError) -> Self {
        Self::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Error(e.into())
    }
}

fn emit<T: Serialize>(
    common: &Common,
    report: &T,
    csv: impl FnOnce(&mut dyn Write) -> vilenkin_core::Result<()>,
) -> Result<(), Failure> {
    let mut out: Box<dyn Write> = match &common.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match common.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, report).map_err(VilenkinError::from)?;
            writeln!(out)?;
        }
        Format::Csv => csv(&mut out)?,
    }
    out.flush()?;
    Ok(())
}

fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Hardy(c) | Command::Paley(c) | Command::Strong(c) => {
            let (exp, runner): (_, fn(&ExperimentConfig) -> _) = match command {
                Command::Hardy(_) => (Experiment::Hardy, run_hardy_littlewood),
                Command::Paley(_) => (Experiment::Paley, run_paley),
                _ => (Experiment::Strong, run_strong_convergence),
            };
            let report = runner(&c.config(exp))?;
            emit(c, &report, |w| report.write_csv(w))?;
            if let Some(t) = report.first_invalid() {
                return Err(Failure::Invariant(format!(
                    "non-finite or negative ratio in trial {}",
                    t.trial
                )));
            }
        }
        Command::Counterexample(c) => {
            let report = run_counterexample(&c.config(Experiment::Counterexample))?;
            emit(c, &report, |w| report.divergence.write_csv(w))?;
            for notice in &report.divergence.notices {
                eprintln!("notice: {notice}");
            }
            if let Some(name) = report.first_failure() {
                return Err(Failure::Invariant(name));
            }
        }
        Command::Identities(c) => {
            let report = run_identities(&c.config(Experiment::Identities))?;
            emit(c, &report, |w| {
                writeln!(w, "check,value,passed")?;
                let t = &report.transform;
                writeln!(w, "transform_max_error,{},{}", t.max_error, t.passed)?;
                if let Some(g) = &report.gram {
                    writeln!(w, "gram_max_deviation,{},{}", g.max_deviation, g.passed)?;
                }
                let k = &report.kernels;
                writeln!(
                    w,
                    "kernel_closed_form_error,{},{}",
                    k.closed_form_error, k.passed
                )?;
                if let Some(e) = k.factorization_error {
                    writeln!(w, "kernel_factorization_error,{e},{}", k.passed)?;
                }
                writeln!(
                    w,
                    "shift_failures,{},{}",
                    k.shift_failures,
                    k.shift_failures == 0
                )?;
                for b in &report.bands {
                    writeln!(
                        w,
                        "band_{}_count,{},{}",
                        b.k, b.enumerated, b.lower_bound_ok
                    )?;
                    writeln!(
                        w,
                        "band_{}_product_form,{},{}",
                        b.k,
                        b.product_form,
                        b.enumerated == b.product_form
                    )?;
                    writeln!(
                        w,
                        "band_{}_printed_form,{},{}",
                        b.k,
                        b.printed_form,
                        b.enumerated as f64 == b.printed_form
                    )?;
                }
                Ok(())
            })?;
            if let Some(name) = report.first_failure() {
                return Err(Failure::Invariant(name));
            }
        }
        Command::Bench(c) => {
            let report = run_bench(&c.config(Experiment::Bench))?;
            emit(c, &report, |w| {
                writeln!(w, "resolution,size,fast_seconds,naive_seconds,max_error")?;
                for r in &report.rows {
                    let naive = r.naive_seconds.map(|s| s.to_string()).unwrap_or_default();
                    writeln!(
                        w,
                        "{},{},{},{naive},{}",
                        r.resolution, r.size, r.fast_seconds, r.max_error
                    )?;
                }
                Ok(())
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(name)) => {
            eprintln!("invariant failed: {name}");
            ExitCode::from(1)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
