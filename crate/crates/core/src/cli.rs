//! The `kwm` command line. JSON goes to stdout, diagnostics to stderr.
//! Exit codes: 0 success, 1 verification failure, 2 usage or domain error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::baselines::{compare_all, BaselineQuery, CSV_COLUMNS};
use crate::calibration::{Calibration, CalibrationGrid};
use crate::combinatorics::{format_rational, parse_rational, rational_to_f64, Rational};
use crate::error::{Error, Result};
use crate::exact_moments::{
    exact_moment_het_threepoint, exact_moment_iid_threepoint, exact_moment_symmetrized_binomial,
    render_moment, HeterogeneousQuery, MomentQuery, DEFAULT_DIGITS,
};
use crate::kwise_sim::{build_family, empirical_tails, exhaustive_tails, TailEstimate};
use crate::sharp_bounds::{sharp_bound, tail_bound_unclamped, BoundQuery, ConstantMode};
use crate::sweep::{run_sweep, SweepGrid};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "kwm", version, about = "Moment and tail bounds for sums of k-wise independent bounded variables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the sharp bound M(n, sigma2, d) and optionally a tail bound.
    Bound(BoundArgs),
    /// Exact moment of a named extremal law, as a reduced fraction.
    Exact(ExactArgs),
    /// Compare M against the baseline bounds.
    Compare(CompareArgs),
    /// Run a verification suite; exit 1 on any failure.
    Verify(VerifyArgs),
    /// Monte Carlo (or exhaustive) tails of a k-wise independent sum.
    Simulate(SimulateArgs),
    /// Write CSV sweeps of bound surfaces and curves.
    Sweep(SweepArgs),
    /// Refit the calibration constants on the default grid.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Unit,
    Calibrated,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    n: u64,
    /// Average variance, as a decimal or "num/den".
    #[arg(long)]
    sigma2: String,
    #[arg(long)]
    d: u32,
    /// Independence order; defaults to d.
    #[arg(long)]
    k: Option<u32>,
    /// Evaluate the tail bound at this deviation.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, value_enum, default_value_t = ModeArg::Unit)]
    mode: ModeArg,
    /// Constant of the tail bound; defaults to 1 in unit mode and to the
    /// calibrated tail constant in calibrated mode.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dist {
    Threepoint,
    Het,
    Symbinom,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[arg(long, value_enum)]
    dist: Dist,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    d: u32,
    #[arg(long)]
    sigma2: Option<String>,
    /// Comma-separated per-summand variances (het only).
    #[arg(long = "sigma2-list")]
    sigma2_list: Option<String>,
    /// Bernoulli parameter (symbinom only).
    #[arg(long)]
    p: Option<String>,
    /// Significant digits in the decimal renderings.
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    digits: usize,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    d: u32,
    #[arg(long)]
    sigma2: String,
    #[arg(long)]
    mu: Option<String>,
    /// Also write the row to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Number of random cases (suites with a random component).
    #[arg(long)]
    cases: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment config JSON: {n, k, sigma2, p, trials, t_list, seed}.
    #[arg(long)]
    config: PathBuf,
    /// Also write the rows to this CSV file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// e.g. "n=pow2:0:10;d=2:16:2;sigma2=log2:-20:0:1"
    #[arg(long)]
    grid: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Write the calibration file here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Date recorded in the provenance (defaults to today, UTC).
    #[arg(long)]
    date: Option<String>,
}

/// Experiment configuration for `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n: u64,
    pub k: u32,
    pub sigma2: f64,
    pub p: u64,
    pub trials: u64,
    pub t_list: Vec<f64>,
    pub seed: u64,
    /// Enumerate every polynomial instead of sampling.
    #[serde(default)]
    pub exhaustive: bool,
    /// Tail constant; defaults to the calibrated one (1 without calibration).
    #[serde(default)]
    pub c: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BoundOutput {
    #[serde(rename = "M")]
    m: f64,
    regime: String,
    branch: String,
    mode: ConstantMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    tail_at_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SimulationOutput {
    n: u64,
    k: u32,
    p: u64,
    m: u64,
    sigma2: f64,
    sigma2_hat: String,
    seed: u64,
    rows: Vec<TailEstimate>,
}

enum Outcome {
    Ok,
    VerifyFailed,
}

/// Runs the CLI on `args` (including the program name), writing results to
/// `out`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let text = e.to_string();
                    eprintln!("{}", text.lines().next().unwrap_or("invalid arguments"));
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::VerifyFailed) => EXIT_VERIFY_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Bound(a) => cmd_bound(a, out),
        Command::Exact(a) => cmd_exact(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Calibrate(a) => cmd_calibrate(a, out),
    }
}

fn emit<S: Serialize>(out: &mut dyn Write, value: &S) -> Result<Outcome> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(Outcome::Ok)
}

fn parse_f64(flag: &str, s: &str) -> Result<f64> {
    parse_rational(s)
        .map(|r| rational_to_f64(&r))
        .map_err(|e| Error::invalid(format!("--{flag}: {e}")))
}

fn cmd_bound(a: BoundArgs, out: &mut dyn Write) -> Result<Outcome> {
    let sigma2 = parse_f64("sigma2", &a.sigma2)?;
    let q = BoundQuery::new(a.n, sigma2, a.d, a.k.unwrap_or(a.d))?;
    let calibration = match a.mode {
        ModeArg::Calibrated => Calibration::load_or_warn(),
        ModeArg::Unit => None,
    };
    let mode = match (a.mode, &calibration) {
        (ModeArg::Calibrated, Some(_)) => ConstantMode::Calibrated,
        _ => ConstantMode::Unit,
    };
    let result = sharp_bound(&q, mode, calibration.as_ref());
    let c = a
        .c
        .unwrap_or_else(|| calibration.as_ref().map_or(1.0, |cal| cal.tail_constant));
    let tail_at_t = a
        .t
        .map(|t| tail_bound_unclamped(&q, t, c).map(|v| v.min(1.0)))
        .transpose()?;
    emit(
        out,
        &BoundOutput {
            m: result.value,
            regime: result.regime.to_string(),
            branch: result.branch_expression,
            mode: result.constant_mode,
            c: tail_at_t.map(|_| c),
            tail_at_t,
        },
    )
}

fn require<'a, T>(value: &'a Option<T>, flag: &str, dist: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::invalid(format!("--dist {dist} requires --{flag}")))
}

fn forbid<T>(value: &Option<T>, flag: &str, dist: &str) -> Result<()> {
    match value {
        Some(_) => Err(Error::invalid(format!("--{flag} does not apply to --dist {dist}"))),
        None => Ok(()),
    }
}

fn cmd_exact(a: ExactArgs, out: &mut dyn Write) -> Result<Outcome> {
    let value: Rational = match a.dist {
        Dist::Threepoint => {
            forbid(&a.sigma2_list, "sigma2-list", "threepoint")?;
            forbid(&a.p, "p", "threepoint")?;
            let n = *require(&a.n, "n", "threepoint")?;
            let s2 = parse_rational(require(&a.sigma2, "sigma2", "threepoint")?)?;
            exact_moment_iid_threepoint(&MomentQuery::new(n, a.d, s2)?)
        }
        Dist::Het => {
            forbid(&a.sigma2, "sigma2", "het")?;
            forbid(&a.p, "p", "het")?;
            let list = require(&a.sigma2_list, "sigma2-list", "het")?
                .split(',')
                .map(|s| parse_rational(s.trim()))
                .collect::<Result<Vec<_>>>()?;
            if let Some(n) = a.n {
                if n as usize != list.len() {
                    return Err(Error::invalid(format!(
                        "--n {n} does not match the {} entries of --sigma2-list",
                        list.len()
                    )));
                }
            }
            exact_moment_het_threepoint(&HeterogeneousQuery::new(a.d, list)?)
        }
        Dist::Symbinom => {
            forbid(&a.sigma2, "sigma2", "symbinom")?;
            forbid(&a.sigma2_list, "sigma2-list", "symbinom")?;
            let n = *require(&a.n, "n", "symbinom")?;
            let p = parse_rational(require(&a.p, "p", "symbinom")?)?;
            exact_moment_symmetrized_binomial(n, &p, a.d)?
        }
    };
    emit(out, &render_moment(&value, a.d, a.digits))
}

fn cmd_compare(a: CompareArgs, out: &mut dyn Write) -> Result<Outcome> {
    let sigma2 = parse_f64("sigma2", &a.sigma2)?;
    let mu = a.mu.as_deref().map(|m| parse_f64("mu", m)).transpose()?;
    let row = compare_all(&BaselineQuery::new(a.n, a.d, sigma2, mu)?);
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(CSV_COLUMNS)?;
        w.write_record(row.csv_record())?;
        w.flush()?;
    }
    emit(out, &row)
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> Result<Outcome> {
    let report = run_suite(a.suite, a.seed, a.cases)?;
    emit(out, &report)?;
    if report.passed() {
        Ok(Outcome::Ok)
    } else {
        eprintln!("{} of {} checks failed in suite {}", report.failures.len(), report.cases, report.suite);
        Ok(Outcome::VerifyFailed)
    }
}

pub fn load_simulation_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: SimulationConfig = serde_json::from_str(&text)?;
    if config.t_list.is_empty() {
        return Err(Error::invalid("t_list must not be empty"));
    }
    if let Some(t) = config.t_list.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::invalid(format!("t = {t} must be a non-negative number")));
    }
    Ok(config)
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<Outcome> {
    let config = load_simulation_config(&a.config)?;
    let family = build_family(config.n, config.k, config.sigma2, config.p)?;
    let c = match config.c {
        Some(c) if c > 0.0 => c,
        Some(c) => return Err(Error::invalid(format!("c = {c} must be positive"))),
        None => Calibration::load_or_warn().map_or(1.0, |cal| cal.tail_constant),
    };
    let rows = if config.exhaustive {
        exhaustive_tails(&family, &config.t_list, c)?
    } else {
        empirical_tails(&family, &config.t_list, config.trials, config.seed, c)?
    };
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_path(path)?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    emit(
        out,
        &SimulationOutput {
            n: family.n,
            k: family.k,
            p: family.prime,
            m: family.m_pos,
            sigma2: config.sigma2,
            sigma2_hat: format_rational(&family.sigma2_hat()),
            seed: config.seed,
            rows,
        },
    )
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<Outcome> {
    let grid = SweepGrid::parse(&a.grid)?;
    let calibration = Calibration::load_or_warn();
    let result = run_sweep(&grid, &a.out, calibration.as_ref())?;
    emit(out, &result)
}

fn cmd_calibrate(a: CalibrateArgs, out: &mut dyn Write) -> Result<Outcome> {
    let date = a
        .date
        .unwrap_or_else(|| chrono::Utc::now().format("%Y-%m-%d").to_string());
    let cal = Calibration::fit(&CalibrationGrid::default(), date)?;
    if let Some(path) = &a.out {
        cal.save(path)?;
        eprintln!("wrote {}", path.display());
    }
    emit(out, &cal)
}
