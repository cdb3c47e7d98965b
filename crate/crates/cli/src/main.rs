use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fedcarbon::exec::{with_threads, Exec};
use fedcarbon::fedsim::PartitionMode;
use fedcarbon::runner::{
    self, break_even_ee, load_config, preset, run_analysis, run_simulation, write_csv, write_jsonl,
    ExperimentConfig, Format, ResultRow, RunError, RunMode,
};
use fedcarbon::Scheme;

/// Energy and carbon footprints of centralized, federated and
/// consensus-driven federated learning.
#[derive(Debug, Parser)]
#[command(name = "fedcarbon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form footprints over a parameter sweep.
    Analyze(Common),
    /// Train each scheme to the target loss and bill the logged events.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Directory for per-scheme JSON-lines event logs.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Override the configured data partition.
        #[arg(long, value_enum)]
        partition: Option<PartitionArg>,
    },
    /// Link efficiency at which two schemes emit the same carbon.
    Breakeven {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "FL")]
        scheme_a: Scheme,
        #[arg(long, default_value = "CL")]
        scheme_b: Scheme,
        /// Rounds for scheme A (defaults to the configured `rounds`).
        #[arg(long)]
        n_a: Option<usize>,
        /// Rounds for scheme B (defaults to the configured `rounds`).
        #[arg(long)]
        n_b: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Bundled configuration: fig3a, fig3b, fig3c or table3.
    #[arg(long)]
    preset: Option<String>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Run without the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PartitionArg {
    Iid,
    LabelShard,
}

impl Common {
    fn load(&self) -> runner::Result<ExperimentConfig> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), None) => load_config(path)?,
            (None, Some(name)) => preset(name)?,
            _ => unreachable!("clap enforces exactly one source"),
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        for w in config.fleet.warnings().into_iter().chain(config.links.warnings()) {
            eprintln!("warning: {w}");
        }
        Ok(config)
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    fn format(&self) -> Format {
        match self.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        }
    }

    fn in_pool<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self.threads {
            Some(t) => with_threads(t, f),
            None => f(),
        }
    }
}

fn open_out(path: Option<&Path>) -> runner::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            RunError::Output(format!("cannot write {}: {e}", p.display()))
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit(rows: &[ResultRow], common: &Common) -> runner::Result<()> {
    if rows.is_empty() {
        return Err(RunError::Output("no rows to write".into()));
    }
    let out = open_out(common.out.as_deref())?;
    match common.format() {
        Format::Csv => write_csv(rows, out),
        Format::Jsonl => write_jsonl(rows, out),
    }
}

fn analyze(common: &Common) -> runner::Result<()> {
    let config = common.load()?;
    let rows = common.in_pool(|| run_analysis(&config, None, common.exec()))?;
    emit(&rows, common)
}

fn simulate(
    common: &Common,
    events: Option<&Path>,
    partition: Option<PartitionArg>,
) -> runner::Result<()> {
    let mut config = common.load()?;
    if let (Some(p), Some(learner)) = (partition, config.learner.as_mut()) {
        learner.partition.mode = match p {
            PartitionArg::Iid => PartitionMode::Iid,
            PartitionArg::LabelShard => PartitionMode::LabelShard,
        };
    }
    let output = common.in_pool(|| run_simulation(&config, common.exec()))?;
    for run in &output.runs {
        let status = if run.trace.target_reached { "reached" } else { "not reached" };
        eprintln!(
            "{}: {} rounds, target {status}, final loss {:.4}, oracle ok",
            run.scheme,
            run.trace.final_round(),
            run.trace.final_loss().unwrap_or(f64::NAN)
        );
    }
    if let Some(dir) = events {
        fs::create_dir_all(dir)?;
        for run in &output.runs {
            let path = dir.join(format!("events-{}.jsonl", run.scheme));
            let mut out = BufWriter::new(File::create(&path)?);
            run.trace.write_events_jsonl(&mut out)?;
            out.flush()?;
        }
    }
    emit(&output.rows(), common)
}

fn breakeven(
    common: &Common,
    a: Scheme,
    b: Scheme,
    n_a: Option<usize>,
    n_b: Option<usize>,
) -> runner::Result<()> {
    let config = common.load()?;
    let base = match config.mode()? {
        RunMode::Fixed(n) => Some(n),
        RunMode::Learn { .. } => None,
    };
    let missing = || RunError::Config {
        path: "rounds".into(),
        message: "give --n-a/--n-b or a configuration with fixed `rounds`".into(),
    };
    let n_a = n_a.or(base).ok_or_else(missing)?;
    let n_b = n_b.or(base).ok_or_else(missing)?;
    let mut out = open_out(common.out.as_deref())?;
    match break_even_ee(&config, a, b, n_a, n_b)? {
        Some(be) => writeln!(
            out,
            "{a} (n={n_a}) vs {b} (n={n_b}): break-even EE = {:.6e} bit/J (bisection {:.6e}); {} emits less below it\n  {a}: {:.6e}/EE + {:.6e} g\n  {b}: {:.6e}/EE + {:.6e} g",
            be.ee,
            be.ee_bisection,
            be.cheaper_below,
            be.line_a.a,
            be.line_a.b,
            be.line_b.a,
            be.line_b.b,
        )?,
        None => writeln!(out, "{a} (n={n_a}) vs {b} (n={n_b}): no positive break-even EE")?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(common) => analyze(common),
        Command::Simulate {
            common,
            events,
            partition,
        } => simulate(common, events.as_deref(), *partition),
        Command::Breakeven {
            common,
            scheme_a,
            scheme_b,
            n_a,
            n_b,
        } => breakeven(common, *scheme_a, *scheme_b, *n_a, *n_b),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
