//! CSV front end: figure sweeps, bound tables, simulated runs and Haar
//! sampling.
//!
//! Angles are radians unless `--degrees` is given; grids are
//! `start:stop:count` (inclusive endpoints) and lists are comma-separated.
//! Output goes to `--out` or stdout. Every number is written with 12
//! significant digits so reruns are byte-identical.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use thiserror::Error;

use crate::chsh::{
    classical_bound, haar_sample_s, quantum_bounds, s_parameter, ThetaParam, XiParam,
    CIRELSON_BOUND,
};
use crate::expsim::{replicate_estimate, NoiseModel};
use crate::sampling::derive_seed;

pub const DEFAULT_GRID_POINTS: usize = 181;
pub const DEFAULT_PAIRS_PER_SETTING: u64 = 100_000;
pub const DEFAULT_SAMPLE_COUNT: usize = 100_000;

/// Curve parameters used when no list is given.
pub const DEFAULT_CURVES: [f64; 5] = [0.0, FRAC_PI_8, FRAC_PI_4, 3.0 * FRAC_PI_8, FRAC_PI_2];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot read config {}: {source}", path.display())]
    Config {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] crate::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Inclusive evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> CliResult<Self> {
        if count < 2 {
            return Err(CliError::Usage(format!(
                "grid count must be at least 2, got {count}"
            )));
        }
        if !(start.is_finite() && stop.is_finite()) || start >= stop {
            return Err(CliError::Usage(format!(
                "grid needs start < stop, got {start}:{stop}"
            )));
        }
        Ok(Self { start, stop, count })
    }

    /// `[0, π]` with 1° steps.
    pub fn default_angle() -> Self {
        Self {
            start: 0.0,
            stop: PI,
            count: DEFAULT_GRID_POINTS,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if i + 1 == self.count {
            return self.stop;
        }
        self.start + (self.stop - self.start) * (i as f64 / (self.count - 1) as f64)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    fn to_radians(self, degrees: bool) -> Self {
        if degrees {
            Self {
                start: self.start.to_radians(),
                stop: self.stop.to_radians(),
                count: self.count,
            }
        } else {
            self
        }
    }
}

impl FromStr for Grid {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, count] = parts.as_slice() else {
            return Err(CliError::Usage(format!(
                "grid must be start:stop:count, got '{s}'"
            )));
        };
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number '{t}' in grid '{s}'")))
        };
        let count = count
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("bad count '{count}' in grid '{s}'")))?;
        Grid::new(num(start)?, num(stop)?, count)
    }
}

/// Comma-separated numbers; empty lists are rejected.
pub fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    let items: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    if items.is_empty() {
        return Err(CliError::Usage(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad number '{t}' in {what} list")))
        })
        .collect()
}

/// Full (θ, ξ) surface request.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub theta_grid: Grid,
    pub xi_grid: Grid,
    pub output_path: Option<PathBuf>,
}

/// Parameters of a simulated run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub pairs_per_setting: u64,
    pub noise: NoiseModel,
    pub seed: u64,
    pub replications: u64,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.pairs_per_setting < 2 {
            return Err(CliError::Usage(
                "pairs per setting must be at least 2".into(),
            ));
        }
        if self.replications < 1 {
            return Err(CliError::Usage("replications must be at least 1".into()));
        }
        self.noise.validate()?;
        Ok(())
    }
}

/// `%.12g`-style formatting.
pub fn fmt_num(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".to_string()
    } else {
        t.to_string()
    }
}

fn row(fields: &[f64]) -> String {
    fields
        .iter()
        .map(|&v| fmt_num(v))
        .collect::<Vec<_>>()
        .join(",")
}

fn write_csv(out: Option<&Path>, header: &str, rows: &[String]) -> CliResult<()> {
    let mut text =
        String::with_capacity(rows.iter().map(|r| r.len() + 1).sum::<usize>() + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn thetas(values: &[f64]) -> CliResult<Vec<ThetaParam>> {
    values.iter().map(|&t| Ok(ThetaParam::new(t)?)).collect()
}

fn xis(values: &[f64]) -> CliResult<Vec<XiParam>> {
    values.iter().map(|&x| Ok(XiParam::new(x)?)).collect()
}

/// Rows `theta, xi, s`, θ-major.
pub fn cmd_surface(spec: &SweepSpec) -> CliResult<()> {
    let theta_values = spec.theta_grid.values();
    let xi_values = spec.xi_grid.values();
    let theta_params = thetas(&theta_values)?;
    let xi_params = xis(&xi_values)?;
    let rows: Vec<String> = theta_params
        .par_iter()
        .zip(theta_values.par_iter())
        .flat_map_iter(|(&t, &tv)| {
            xi_params
                .iter()
                .zip(xi_values.iter())
                .map(move |(&x, &xv)| row(&[tv, xv, s_parameter(t, x)]))
        })
        .collect();
    write_csv(spec.output_path.as_deref(), "theta,xi,s", &rows)
}

/// One S(ξ) curve per θ, with the classical and Tsirelson reference lines.
pub fn cmd_sweep_xi(theta_list: &[f64], xi_grid: &Grid, out: Option<&Path>) -> CliResult<()> {
    if theta_list.is_empty() {
        return Err(CliError::Usage("theta list is empty".into()));
    }
    let theta_params = thetas(theta_list)?;
    let xi_values = xi_grid.values();
    let xi_params = xis(&xi_values)?;
    let classical = classical_bound();
    let mut rows = Vec::with_capacity(theta_list.len() * xi_values.len());
    for (&t, &tv) in theta_params.iter().zip(theta_list) {
        for (&x, &xv) in xi_params.iter().zip(&xi_values) {
            rows.push(row(&[tv, xv, s_parameter(t, x), classical, CIRELSON_BOUND]));
        }
    }
    write_csv(out, "theta,xi,s,classical_limit,cirelson_limit", &rows)
}

/// One S(θ) curve per ξ, each row carrying the spectral envelope at θ.
pub fn cmd_sweep_theta(xi_list: &[f64], theta_grid: &Grid, out: Option<&Path>) -> CliResult<()> {
    if xi_list.is_empty() {
        return Err(CliError::Usage("xi list is empty".into()));
    }
    let xi_params = xis(xi_list)?;
    let theta_values = theta_grid.values();
    let theta_params = thetas(&theta_values)?;
    let envelope = theta_params
        .par_iter()
        .map(|&t| quantum_bounds(t))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(xi_list.len() * theta_values.len());
    for (&x, &xv) in xi_params.iter().zip(xi_list) {
        for ((&t, &tv), qb) in theta_params.iter().zip(&theta_values).zip(&envelope) {
            rows.push(row(&[xv, tv, s_parameter(t, x), qb.s_min, qb.s_max]));
        }
    }
    write_csv(out, "xi,theta,s,s_qmin,s_qmax", &rows)
}

/// Classical, spectral and Tsirelson bounds with the gap between the last two.
pub fn cmd_bounds(theta_grid: &Grid, out: Option<&Path>) -> CliResult<()> {
    let theta_values = theta_grid.values();
    let theta_params = thetas(&theta_values)?;
    let classical = classical_bound();
    let rows = theta_params
        .par_iter()
        .zip(theta_values.par_iter())
        .map(|(&t, &tv)| {
            let qmax = quantum_bounds(t)?.s_max;
            Ok(row(&[
                tv,
                classical,
                qmax,
                CIRELSON_BOUND,
                CIRELSON_BOUND - qmax,
            ]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    write_csv(
        out,
        "theta,classical_bound,quantum_max,cirelson,superquantum_gap",
        &rows,
    )
}

/// Simulated estimates, one row per replication, ordered by θ, ξ,
/// replication. Point `(i, j)` uses `derive_seed(seed, i·|ξ| + j)`.
pub fn cmd_simulate(
    theta_list: &[f64],
    xi_list: &[f64],
    cfg: &RunConfig,
    out: Option<&Path>,
) -> CliResult<()> {
    if theta_list.is_empty() {
        return Err(CliError::Usage("theta list is empty".into()));
    }
    if xi_list.is_empty() {
        return Err(CliError::Usage("xi list is empty".into()));
    }
    cfg.validate()?;
    let theta_params = thetas(theta_list)?;
    let xi_params = xis(xi_list)?;
    let mut rows = Vec::new();
    for (i, (&t, &tv)) in theta_params.iter().zip(theta_list).enumerate() {
        for (j, (&x, &xv)) in xi_params.iter().zip(xi_list).enumerate() {
            let point_seed = derive_seed(cfg.seed, (i * xi_list.len() + j) as u64);
            let ideal = s_parameter(t, x);
            let runs = replicate_estimate(
                t,
                x,
                cfg.pairs_per_setting,
                &cfg.noise,
                point_seed,
                cfg.replications,
            )?;
            rows.extend(
                runs.iter()
                    .map(|est| row(&[tv, xv, est.s_hat, est.std_err, ideal])),
            );
        }
    }
    write_csv(out, "theta,xi,s_hat,std_err,s_ideal", &rows)
}

/// Haar samples of `⟨B(θ)⟩` followed by a `summary` row holding the sample
/// extremes and the spectral bounds.
pub fn cmd_sample(theta: f64, n: usize, seed: u64, out: Option<&Path>) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::Usage("sample count must be at least 1".into()));
    }
    let theta = ThetaParam::new(theta)?;
    let samples = haar_sample_s(theta, n, seed)?;
    let qb = quantum_bounds(theta)?;
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rows: Vec<String> = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| format!("{i},{},,,,", fmt_num(s)))
        .collect();
    let mut summary = String::from("summary,");
    write!(summary, ",{}", row(&[min, max, qb.s_min, qb.s_max])).expect("string write");
    rows.push(summary);
    write_csv(
        out,
        "index,s_sample,sample_min,sample_max,s_qmin,s_qmax",
        &rows,
    )
}

/// Reads `key = value` lines (`#` starts a comment) over `base`.
/// Keys: `visibility`, `analyzer_offset_a`, `analyzer_offset_b`,
/// `accidental_fraction`; offsets are radians.
pub fn parse_noise_config(text: &str, base: NoiseModel) -> CliResult<NoiseModel> {
    let mut noise = base;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key = value",
                lineno + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        let v: f64 = value.parse().map_err(|_| {
            CliError::Usage(format!("config line {}: bad number '{value}'", lineno + 1))
        })?;
        match key {
            "visibility" => noise.visibility = v,
            "analyzer_offset_a" => noise.analyzer_offset_a = v,
            "analyzer_offset_b" => noise.analyzer_offset_b = v,
            "accidental_fraction" => noise.accidental_fraction = v,
            other => {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    Ok(noise)
}

#[derive(Debug, Parser)]
#[command(
    name = "chsh-bounds",
    version,
    about = "CHSH sweeps, quantum bounds and simulated coincidence runs"
)]
pub struct Cli {
    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Read angle arguments in degrees.
    #[arg(long, global = true)]
    pub degrees: bool,
    /// Noise defaults as `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// S over the full (theta, xi) grid.
    Surface {
        #[arg(long)]
        theta_grid: Option<String>,
        #[arg(long)]
        xi_grid: Option<String>,
    },
    /// S versus xi, one curve per theta.
    SweepXi {
        #[arg(long)]
        thetas: Option<String>,
        #[arg(long)]
        xi_grid: Option<String>,
    },
    /// S versus theta, one curve per xi, with the spectral envelope.
    SweepTheta {
        #[arg(long)]
        xis: Option<String>,
        #[arg(long)]
        theta_grid: Option<String>,
    },
    /// Classical, spectral and Tsirelson bounds versus theta.
    Bounds {
        #[arg(long)]
        theta_grid: Option<String>,
    },
    /// Simulated coincidence-counting estimates of S.
    Simulate {
        #[arg(long)]
        thetas: Option<String>,
        #[arg(long)]
        xis: Option<String>,
        #[arg(long, default_value_t = DEFAULT_PAIRS_PER_SETTING)]
        pairs: u64,
        #[arg(long, default_value_t = 1)]
        replications: u64,
        #[command(flatten)]
        noise: NoiseArgs,
    },
    /// Bell-operator expectations on Haar-random states.
    Sample {
        #[arg(long, default_value_t = FRAC_PI_4)]
        theta: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_COUNT)]
        n: usize,
    },
}

#[derive(Debug, Args, Clone, Copy)]
pub struct NoiseArgs {
    #[arg(long)]
    pub visibility: Option<f64>,
    /// Analyzer offset on side a (angle).
    #[arg(long, allow_hyphen_values = true)]
    pub offset_a: Option<f64>,
    /// Analyzer offset on side b (angle).
    #[arg(long, allow_hyphen_values = true)]
    pub offset_b: Option<f64>,
    #[arg(long)]
    pub accidental: Option<f64>,
}

fn grid_arg(arg: &Option<String>, degrees: bool) -> CliResult<Grid> {
    match arg {
        Some(s) => Ok(s.parse::<Grid>()?.to_radians(degrees)),
        None => Ok(Grid::default_angle()),
    }
}

fn list_arg(arg: &Option<String>, what: &str, degrees: bool) -> CliResult<Vec<f64>> {
    match arg {
        Some(s) => {
            let v = parse_list(s, what)?;
            Ok(if degrees {
                v.into_iter().map(f64::to_radians).collect()
            } else {
                v
            })
        }
        None => Ok(DEFAULT_CURVES.to_vec()),
    }
}

fn angle_arg(x: f64, degrees: bool) -> f64 {
    if degrees {
        x.to_radians()
    } else {
        x
    }
}

/// Executes parsed arguments.
pub fn run(cli: &Cli) -> CliResult<()> {
    let out = cli.out.as_deref();
    let deg = cli.degrees;
    let base_noise = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Config {
                path: path.clone(),
                source,
            })?;
            parse_noise_config(&text, NoiseModel::default())?
        }
        None => NoiseModel::default(),
    };
    match &cli.command {
        Command::Surface {
            theta_grid,
            xi_grid,
        } => cmd_surface(&SweepSpec {
            theta_grid: grid_arg(theta_grid, deg)?,
            xi_grid: grid_arg(xi_grid, deg)?,
            output_path: cli.out.clone(),
        }),
        Command::SweepXi { thetas, xi_grid } => cmd_sweep_xi(
            &list_arg(thetas, "theta", deg)?,
            &grid_arg(xi_grid, deg)?,
            out,
        ),
        Command::SweepTheta { xis, theta_grid } => {
            cmd_sweep_theta(&list_arg(xis, "xi", deg)?, &grid_arg(theta_grid, deg)?, out)
        }
        Command::Bounds { theta_grid } => cmd_bounds(&grid_arg(theta_grid, deg)?, out),
        Command::Simulate {
            thetas,
            xis,
            pairs,
            replications,
            noise,
        } => {
            let mut model = base_noise;
            if let Some(v) = noise.visibility {
                model.visibility = v;
            }
            if let Some(v) = noise.offset_a {
                model.analyzer_offset_a = angle_arg(v, deg);
            }
            if let Some(v) = noise.offset_b {
                model.analyzer_offset_b = angle_arg(v, deg);
            }
            if let Some(v) = noise.accidental {
                model.accidental_fraction = v;
            }
            let cfg = RunConfig {
                pairs_per_setting: *pairs,
                noise: model,
                seed: cli.seed,
                replications: *replications,
            };
            cmd_simulate(
                &list_arg(thetas, "theta", deg)?,
                &list_arg(xis, "xi", deg)?,
                &cfg,
                out,
            )
        }
        Command::Sample { theta, n } => cmd_sample(angle_arg(*theta, deg), *n, cli.seed, out),
    }
}

/// Process entry point: one-line diagnostic and exit status 2 on failure.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
