//! `chainphase`: dose efficiency of interferometric phase estimation from the
//! command line.
//!
//! Exit codes: 0 success, 1 usage or domain error, 2 validation failure,
//! 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chainphase::chain::ci_optimal_taus;
use chainphase::figures::{figure_with_grid, AbsorptionGrid, FigureName};
use chainphase::optimizer::{optimize_taus, OptimizerConfig};
use chainphase::schemes::{Family, SchemeSpec, DEFAULT_EPSILON};
use chainphase::sweep::{reports_table, run_sweep, SweepConfig};
use chainphase::table::{Cell, OutputFormat, Table};
use chainphase::validate::{run_validation, Mutation, ValidateOptions};
use chainphase::{chain::ci_xi, Error, LossBudget};

#[derive(Parser)]
#[command(name = "chainphase", version, about = "Dose efficiency of interferometric phase estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one scheme and print J, d, xi and xi / xi_QL.
    #[command(allow_negative_numbers = true)]
    Efficiency {
        /// One of sp, noon, mp, sqz, mpsqz, cic, cio.
        #[arg(long, value_parser = parse_family)]
        family: Family,
        /// NOON state size.
        #[arg(long)]
        n: Option<usize>,
        /// Number of passes or chain stages.
        #[arg(long)]
        m: Option<usize>,
        /// Photons in the squeezing; `inf` for the infinite-squeezing bound.
        #[arg(long)]
        nsq: Option<f64>,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Write the data behind one comparison figure.
    #[command(allow_negative_numbers = true)]
    Figure {
        /// fig1a, fig1b or fig3.
        #[arg(value_parser = parse_figure)]
        name: FigureName,
        /// Smallest absorption probability 1 - eta.
        #[arg(long, default_value_t = AbsorptionGrid::default().lo)]
        lo: f64,
        /// Largest absorption probability 1 - eta.
        #[arg(long, default_value_t = AbsorptionGrid::default().hi)]
        hi: f64,
        /// Number of log-spaced grid points.
        #[arg(long, default_value_t = AbsorptionGrid::default().points)]
        points: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a sweep described by a TOML file.
    Sweep {
        /// TOML sweep description.
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_path` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `output_format` from the config.
        #[arg(long)]
        format: Option<Format>,
    },
    /// Numerically optimize the chain's beamsplitter schedule.
    #[command(allow_negative_numbers = true)]
    Optimize {
        /// Number of chain stages.
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Number of runs; later runs start from a perturbed first result.
        #[arg(long, default_value_t = OptimizerConfig::default().restarts)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Budget of coordinate sweeps per run.
        #[arg(long, default_value_t = OptimizerConfig::default().max_iters)]
        max_iters: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the self-consistency checks.
    Validate {
        /// Single epsilon only; skips the convergence-rate check.
        #[arg(long)]
        quick: bool,
        /// Corrupt the dose formula to check that the harness notices.
        #[arg(long, hide = true)]
        mutate: bool,
    },
}

#[derive(Args)]
struct BudgetArgs {
    /// Sample transmissivity per pass.
    #[arg(long)]
    eta: f64,
    /// Preparation efficiency.
    #[arg(long, default_value_t = 1.0)]
    eta_p: f64,
    /// Round-trip efficiency between passes.
    #[arg(long, default_value_t = 1.0)]
    eta_rt: f64,
    /// Detection efficiency.
    #[arg(long, default_value_t = 1.0)]
    eta_d: f64,
}

impl BudgetArgs {
    fn budget(&self) -> chainphase::Result<LossBudget> {
        LossBudget::new(self.eta, self.eta_p, self.eta_rt, self.eta_d)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_figure(s: &str) -> Result<FigureName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Validation(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(io) => Failure::Io(io.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(text.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| Failure::Io(format!("cannot write to stdout: {e}"))),
    }
}

fn emit_table(table: &Table, output: &OutputArgs, out: &mut dyn Write) -> Result<(), Failure> {
    emit(&table.render(output.format.into()), output.out.as_deref(), out)
}

fn efficiency(
    family: Family,
    n: Option<usize>,
    m: Option<usize>,
    nsq: Option<f64>,
    budget: &BudgetArgs,
    output: &OutputArgs,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let spec = SchemeSpec {
        family,
        n,
        m,
        n_sq: nsq,
        budget: budget.budget()?,
    };
    let report = spec.evaluate()?;
    emit_table(&reports_table(&[report]), output, out)
}

fn optimize(
    m: usize,
    budget: &LossBudget,
    config: &OptimizerConfig,
    output: &OutputArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let result = optimize_taus(m, budget, config)?;
    let prescription = ci_optimal_taus(m, budget, DEFAULT_EPSILON)?;
    let xi_prescription = ci_xi(&prescription, budget)?.xi;
    let prescription = prescription.scaled(result.best_taus.norm() / prescription.norm())?;
    if !result.converged {
        log::warn!("optimizer did not converge within {} sweeps", config.max_iters);
    }
    let _ = writeln!(
        err,
        "best_xi = {:.11e}, prescription_xi = {:.11e}, converged = {}, sweeps = {}",
        result.best_xi, xi_prescription, result.converged, result.iterations_used
    );
    let mut table = Table::new(["k", "tau_optimized", "tau_prescription"]);
    for (k, (t, p)) in result
        .best_taus
        .taus()
        .iter()
        .zip(prescription.taus())
        .enumerate()
    {
        table.push(vec![Cell::from(k), (*t).into(), (*p).into()]);
    }
    emit_table(&table, output, out)
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Efficiency {
            family,
            n,
            m,
            nsq,
            budget,
            output,
        } => efficiency(family, n, m, nsq, &budget, &output, out),
        Command::Figure {
            name,
            lo,
            hi,
            points,
            output,
        } => {
            let table = figure_with_grid(name, &AbsorptionGrid { lo, hi, points })?;
            emit_table(&table, &output, out)
        }
        Command::Sweep {
            config,
            out: out_path,
            format,
        } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Failure::Io(format!("cannot read {}: {e}", config.display())))?;
            let mut cfg = SweepConfig::from_toml(&text)?;
            if let Some(path) = out_path {
                cfg.output_path = path;
            }
            if let Some(format) = format {
                cfg.output_format = format.into();
            }
            let table = run_sweep(&cfg)?;
            emit(&table.render(cfg.output_format), Some(&cfg.output_path), out)
        }
        Command::Optimize {
            m,
            budget,
            restarts,
            seed,
            max_iters,
            output,
        } => {
            let config = OptimizerConfig {
                restarts,
                seed,
                max_iters,
                ..OptimizerConfig::default()
            };
            optimize(m, &budget.budget()?, &config, &output, out, err)
        }
        Command::Validate { quick, mutate } => {
            let mutation = if mutate {
                Mutation::ExtraTauInDose
            } else {
                Mutation::None
            };
            let report = run_validation(&ValidateOptions { quick, mutation })?;
            let _ = write!(out, "{report}");
            if report.all_passed() {
                Ok(())
            } else {
                Err(Failure::Validation("validation failed".into()))
            }
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
fn execute<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 1;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = execute(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    ExitCode::from(code)
}
