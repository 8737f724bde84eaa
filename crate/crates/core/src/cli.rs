//! Command-line front end.
//!
//! Exit status: 0 on success, 1 on invalid input, 2 when a verification is
//! inconclusive and 3 when it fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::divergence::oracle_chi2;
use crate::error::{Error, Result};
use crate::fourierweights::{verify_remainder_scaling, verify_star_decay, DensityVariant, ScalingConfig, VerificationStatus};
use crate::gaussmodel::{sample_unknown_mask_model, BitMatrix, Calibration, ModelParams};
use crate::rng::stream;
use crate::signedstats::{run_test, StatisticRegistry};
use crate::sweep::{csv_string, run_sweep, write_outputs, SweepConfig};

/// Environment variable that sets the worker count when `--threads` is absent.
pub const THREADS_ENV: &str = "MASKRGG_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "maskrgg", version, about = "Masked bipartite Gaussian random geometric graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: MASKRGG_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    /// Packed binary matrix layout.
    Bits,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Reference,
    Standard,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long)]
    d: usize,
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.n, self.m, self.p, self.q, self.d)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw one observed matrix from the masked model.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        /// Also write the mask here.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        /// Also write the row latents here (binary layout).
        #[arg(long)]
        latents_r: Option<PathBuf>,
        /// Also write the column latents here (binary layout).
        #[arg(long)]
        latents_l: Option<PathBuf>,
    },
    /// Evaluate a statistic on a matrix file.
    Stat {
        #[arg(long)]
        statistic: String,
        /// Matrix in the binary layout, or CSV when the name ends in `.csv`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        p: f64,
    },
    /// Two-sided test of a matrix file against the Bernoulli null.
    Test {
        #[arg(long)]
        statistic: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long)]
        p: f64,
        /// Mask density of the null mask for mask-restricted statistics.
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Null draws (default: ceil(100 / alpha)).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run a power sweep from a JSON configuration.
    Sweep,
    /// Check the decay of the leading-term residual in the dimension.
    VerifyLambda {
        #[arg(long, default_value_t = 2)]
        alpha_size: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [64usize, 256, 1024])]
        d: Vec<usize>,
        #[arg(long, default_value_t = 3.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        #[arg(long, default_value_t = 50)]
        draws: usize,
        #[arg(long, default_value_t = 2_000_000)]
        samples: usize,
        #[arg(long, value_enum, default_value_t = Variant::Reference)]
        variant: Variant,
    },
    /// Check the decay of unconditional star signed weights.
    VerifyStars {
        #[arg(long, default_value_t = 2)]
        ell: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 400])]
        d: Vec<usize>,
        #[arg(long, default_value_t = 4_000_000)]
        samples: usize,
    },
    /// Compare sampled chi-square divergences with the pattern expansion.
    OracleChi2 {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2_000_000)]
        outcome_draws: usize,
        #[arg(long, default_value_t = 1_000_000)]
        latent_draws: usize,
    },
    /// Print the connection threshold for density `p` in dimension `d`.
    CalibrateTau {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        d: usize,
    },
}

/// Parses `argv` (including the program name), runs the command and
/// returns the exit status.
pub fn cli_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

fn threads(global: &Global) -> Result<Option<usize>> {
    if let Some(t) = global.threads {
        return Ok(Some(t));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn emit(global: &Global, text: &str) -> Result<()> {
    match &global.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(global: &Global, value: &T) -> Result<()> {
    emit(global, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn read_matrix(path: &Path) -> Result<BitMatrix> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        BitMatrix::from_csv_str(&std::fs::read_to_string(path)?)
    } else {
        BitMatrix::read_binary(path)
    }
}

fn status_code(status: VerificationStatus) -> i32 {
    match status {
        VerificationStatus::Pass => EXIT_OK,
        VerificationStatus::Inconclusive => EXIT_INCONCLUSIVE,
        VerificationStatus::Fail => EXIT_FAILED,
    }
}

fn run(cli: Cli) -> Result<i32> {
    let global = cli.global;
    let threads = threads(&global)?;
    if threads == Some(0) {
        return Err(Error::invalid("threads must be at least 1"));
    }
    if let Command::Sweep = cli.command {
        return run_sweep_command(&global, threads);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    pool.install(|| run_command(&global, cli.command))
}

fn run_command(global: &Global, command: Command) -> Result<i32> {
    let seed = global.seed.unwrap_or(0);
    match command {
        Command::Sample {
            model,
            mask_out,
            latents_r,
            latents_l,
        } => {
            let params = model.params()?;
            let cal = params.calibrate()?;
            let mut rng = stream(seed, &[]);
            let s = sample_unknown_mask_model(&params, &cal, &mut rng)?;
            let write = |m: &BitMatrix, path: Option<&PathBuf>| -> Result<()> {
                match (global.format.unwrap_or(Format::Bits), path) {
                    (Format::Csv, Some(p)) => std::fs::write(p, m.to_csv_string())?,
                    (Format::Csv, None) => emit(global, &m.to_csv_string())?,
                    (Format::Bits, Some(p)) => m.write_binary(p)?,
                    (Format::Bits, None) => return Err(Error::invalid("binary output needs --out")),
                    (Format::Json, _) => return Err(Error::invalid("matrices are written as bits or csv")),
                }
                Ok(())
            };
            write(&s.m, global.out.as_ref())?;
            if let Some(p) = mask_out {
                write(&s.mask, Some(&p))?;
            }
            if let Some(p) = latents_r {
                s.x_r.write_binary(p)?;
            }
            if let Some(p) = latents_l {
                s.x_l.write_binary(p)?;
            }
            Ok(EXIT_OK)
        }
        Command::Stat {
            statistic,
            input,
            mask,
            p,
        } => {
            let stat = StatisticRegistry::default().get(&statistic)?;
            let m = read_matrix(&input)?;
            let mask = mask.as_deref().map(read_matrix).transpose()?;
            let value = stat.evaluate(&m, mask.as_ref(), p)?;
            if global.format == Some(Format::Json) {
                emit_json(global, &serde_json::json!({ "statistic": statistic, "value": value }))?;
            } else {
                emit(global, &format!("{value}\n"))?;
            }
            Ok(EXIT_OK)
        }
        Command::Test {
            statistic,
            input,
            mask,
            p,
            q,
            alpha,
            trials,
        } => {
            let stat = StatisticRegistry::default().get(&statistic)?;
            let m = read_matrix(&input)?;
            let mask = mask.as_deref().map(read_matrix).transpose()?;
            let trials = trials.unwrap_or_else(|| crate::signedstats::min_null_trials(alpha));
            let report = run_test(stat.as_ref(), &m, mask.as_ref(), p, q, alpha, trials, seed)?;
            emit_json(global, &report)?;
            Ok(EXIT_OK)
        }
        Command::Sweep => unreachable!("handled before the pool is built"),
        Command::VerifyLambda {
            alpha_size,
            d,
            rho,
            p,
            draws,
            samples,
            variant,
        } => {
            let config = match &global.config {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => ScalingConfig {
                    alpha_size,
                    d_grid: d,
                    rho,
                    p,
                    draws,
                    samples,
                    seed,
                    variant: match variant {
                        Variant::Reference => DensityVariant::ReferenceVariance,
                        Variant::Standard => DensityVariant::Standard,
                    },
                },
            };
            let report = verify_remainder_scaling(&config)?;
            emit_json(global, &report)?;
            Ok(status_code(report.status))
        }
        Command::VerifyStars { ell, p, d, samples } => {
            let report = verify_star_decay(ell, p, &d, samples, seed)?;
            emit_json(global, &report)?;
            Ok(status_code(report.status))
        }
        Command::OracleChi2 {
            model,
            outcome_draws,
            latent_draws,
        } => {
            let report = oracle_chi2(&model.params()?, outcome_draws, latent_draws, seed)?;
            emit_json(global, &report)?;
            let inconclusive = report.contrast.unknown.inconclusive || report.contrast.known.inconclusive;
            let agree = report.unknown_z <= 3.0 && report.known_z.is_none_or(|z| z <= 3.0);
            Ok(if inconclusive {
                EXIT_INCONCLUSIVE
            } else if agree {
                EXIT_OK
            } else {
                EXIT_FAILED
            })
        }
        Command::CalibrateTau { p, d } => {
            let cal = Calibration::new(p, d)?;
            if global.format == Some(Format::Json) {
                emit_json(global, &cal)?;
            } else {
                emit(global, &format!("{:?}\n", cal.tau))?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn run_sweep_command(global: &Global, threads: Option<usize>) -> Result<i32> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| Error::invalid("sweep needs --config"))?;
    let mut config = SweepConfig::load(path)?;
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    if threads.is_some() {
        config.threads = threads;
    }
    if let Some(out) = &global.out {
        config.output = Some(out.clone());
    }
    let result = run_sweep(&config)?;
    match (global.format.unwrap_or(Format::Csv), &config.output) {
        (Format::Csv, Some(out)) => {
            write_outputs(&result, out)?;
        }
        (Format::Csv, None) => emit(global, &csv_string(&result.rows)?)?,
        (Format::Json, Some(out)) => std::fs::write(out, serde_json::to_string_pretty(&result)? + "\n")?,
        (Format::Json, None) => emit_json(global, &result)?,
        (Format::Bits, _) => return Err(Error::invalid("sweep output is csv or json")),
    }
    Ok(EXIT_OK)
}
