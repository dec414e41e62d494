//! Command-line front end.
//!
//! Every subcommand is a pure function of its flags. Relative output paths
//! are resolved against `MCERR_OUT_DIR` when that variable is set.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::estimators::{counterexample, EstimateReport};
use crate::experiments::{run_convergence, run_ensemble, run_stability};
use crate::moment_core::CentralAccumulator;
use crate::output::to_json;
use crate::sampling::DistributionSpec;

pub const OUT_DIR_ENV: &str = "MCERR_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "mcerr",
    version,
    about = "Monte Carlo estimates with first- and second-order errors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate from a weight file (one number per line, `-` for stdin).
    Estimate(EstimateArgs),
    /// Per-N convergence trace of one stream.
    Converge(ConvergeArgs),
    /// Replica ensemble with histograms and Gaussian overlays.
    Ensemble(EnsembleArgs),
    /// 0/1-weight stream for which the unbiased E4 turns negative.
    Counterexample(CounterexampleArgs),
    /// Cancellation stress test on offset weights.
    Stability(StabilityArgs),
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, short)]
    pub input: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub dist: DistributionSpec,
    #[arg(long, alias = "n-max")]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    #[arg(long)]
    pub dist: DistributionSpec,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Directory for `<prefix>_e1.csv`, `<prefix>_e2.csv` and `<prefix>_summary.json`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, default_value = "ensemble")]
    pub prefix: String,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CounterexampleArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub b: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value_t = 1e8, allow_negative_numbers = true)]
    pub offset: f64,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Estimation(#[from] crate::error::Error),
    #[error("line {line}: cannot parse '{text}' as a finite number")]
    Malformed { line: usize, text: String },
    #[error("input contains no weights")]
    EmptyInput,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

fn io_err(path: impl AsRef<Path>) -> impl FnOnce(io::Error) -> CliError {
    let path = path.as_ref().display().to_string();
    move |source| CliError::Io { path, source }
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let path = resolve(path);
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io_err(parent))?;
            }
            fs::write(&path, text).map_err(io_err(&path))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(io_err("<stdout>")),
    }
}

/// Streams weights line by line into an accumulator.
pub fn accumulate_weights<R: Read>(reader: R) -> Result<CentralAccumulator, CliError> {
    let mut acc = CentralAccumulator::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(io_err("<input>"))?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        match text.parse::<f64>() {
            Ok(w) if w.is_finite() => acc.push(w),
            _ => {
                return Err(CliError::Malformed {
                    line: i + 1,
                    text: text.to_string(),
                })
            }
        }
    }
    if acc.n() == 0 {
        return Err(CliError::EmptyInput);
    }
    Ok(acc)
}

#[derive(Serialize)]
struct EnsembleSummaryFile<'a> {
    generator: &'static str,
    version: &'static str,
    #[serde(flatten)]
    result: &'a crate::experiments::EnsembleResult,
    hist_e1_out_of_range: u64,
    hist_e2_out_of_range: u64,
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Estimate(args) => {
            let acc = if args.input == "-" {
                accumulate_weights(io::stdin().lock())?
            } else {
                let file = fs::File::open(&args.input).map_err(io_err(&args.input))?;
                accumulate_weights(file)?
            };
            let report = EstimateReport::from_accumulator(&acc);
            emit(args.out.as_deref(), &to_json(&report), stdout)
        }
        Command::Converge(args) => {
            let trace = run_convergence(args.dist, args.n, args.seed, args.stride)?;
            let text = match args.format {
                Format::Csv => trace.to_csv(),
                Format::Json => to_json(&trace),
            };
            emit(args.out.as_deref(), &text, stdout)
        }
        Command::Ensemble(args) => {
            let compute = || run_ensemble(args.dist, args.n, args.replicas, args.seed, args.bins);
            let result = match args.threads {
                Some(t) => rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| crate::error::Error::Config(e.to_string()))?
                    .install(compute)?,
                None => compute()?,
            };
            let dir = resolve(&args.out_dir);
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
            for (quantity, hist) in [("e1", &result.hist_e1), ("e2", &result.hist_e2)] {
                let path = dir.join(format!("{}_{quantity}.csv", args.prefix));
                let csv = hist.to_csv(&result.histogram_meta(quantity));
                fs::write(&path, csv).map_err(io_err(&path))?;
            }
            let summary = to_json(&EnsembleSummaryFile {
                generator: crate::sampling::GENERATOR,
                version: crate::output::VERSION,
                result: &result,
                hist_e1_out_of_range: result.hist_e1.out_of_range,
                hist_e2_out_of_range: result.hist_e2.out_of_range,
            });
            let path = dir.join(format!("{}_summary.json", args.prefix));
            fs::write(&path, &summary).map_err(io_err(&path))?;
            stdout
                .write_all(summary.as_bytes())
                .map_err(io_err("<stdout>"))
        }
        Command::Counterexample(args) => {
            let c = counterexample(args.n, args.b)?;
            emit(args.out.as_deref(), &to_json(&c), stdout)
        }
        Command::Stability(args) => {
            let report = run_stability(args.offset, args.n, args.seed)?;
            emit(args.out.as_deref(), &to_json(&report), stdout)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_weights_skipping_comments() {
        let acc = accumulate_weights("# header\n0\n\n0\n 1 \n1\n".as_bytes()).unwrap();
        assert_eq!(acc.n(), 4);
        assert_eq!(acc.mean(), 0.5);
    }

    #[test]
    fn malformed_line_is_named() {
        let err = accumulate_weights("1\n2\nabc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CliError::Malformed { line: 3, .. }));
        assert!(err.to_string().contains("line 3"));
        assert!(matches!(
            accumulate_weights("1\ninf\n".as_bytes()),
            Err(CliError::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            accumulate_weights("# nothing\n\n".as_bytes()),
            Err(CliError::EmptyInput)
        ));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn invalid_spec_rejected_at_parse_time() {
        let r = Cli::try_parse_from(["mcerr", "converge", "--dist", "power:0.5", "--n", "100"]);
        assert!(r.is_err());
    }
}
