//! Command-line front end: argument and config parsing, SNR sweeps, figure
//! presets, CSV/JSON rendering and the `verify` runner.

use crate::asymptotics::{capacity_log, capacity_theorem1};
use crate::channel::{Channel, ChannelParams, NCase, SnrPoint};
use crate::error::Error;
use crate::montecarlo::{mc_capacity_waterfilling, McConfig};
use crate::onoff::{build_policy, rate_onoff};
use crate::verify::{render_report, run_all, VerifyLevel};
use crate::waterfilling::{capacity_exact_csit, capacity_nocsit, solve_threshold};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const CSV_HEADER: &str =
    "snr_db,snr_linear,lambda0,mu0,c_exact_csit,c_nocsit,c_asym_lambert,c_asym_log,r_onoff";
pub const CSV_MC_COLUMNS: &str = "mc_c_mean,mc_c_stderr";

/// Fading figures 1..=4 use `m_t = m_r` from this list on a 2x2 channel.
pub const FIGURE_M: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
pub const DEFAULT_FROM_DB: f64 = -60.0;
pub const DEFAULT_TO_DB: f64 = -10.0;
pub const DEFAULT_STEP_DB: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    fn scale(self) -> f64 {
        match self {
            Unit::Nats => 1.0,
            Unit::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "keyhole", version, about = "Low-SNR capacity of keyhole MIMO channels under Nakagami-m fading")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Capacity curves over an SNR grid for arbitrary channel parameters.
    Sweep(SweepArgs),
    /// Curves for one of the four 2x2 presets (m = 1/2, 1, 3/2, 2).
    Figure(FigureArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ChannelArgs {
    /// Transmit antennas.
    #[arg(long)]
    pub t: Option<u32>,
    /// Receive antennas.
    #[arg(long)]
    pub r: Option<u32>,
    /// Transmit-side Nakagami shape.
    #[arg(long)]
    pub mt: Option<f64>,
    /// Receive-side Nakagami shape.
    #[arg(long)]
    pub mr: Option<f64>,
    /// Transmit-side spread.
    #[arg(long = "omega-t")]
    pub omega_t: Option<f64>,
    /// Receive-side spread.
    #[arg(long = "omega-r")]
    pub omega_r: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GridArgs {
    /// First SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    /// Last SNR in dB (inclusive).
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    /// Grid step in dB; its sign must match the sweep direction.
    #[arg(long, allow_negative_numbers = true)]
    pub step: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed for the Monte Carlo column.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add Monte Carlo capacity columns with this many samples per point.
    #[arg(long = "mc-samples")]
    pub mc_samples: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// key=value file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Re-emit a previously written JSON document instead of computing.
    #[arg(long)]
    pub replay: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    /// Preset 1..=4.
    pub id: u8,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "fast")]
    pub level: VerifyLevel,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// Failure of a CLI invocation, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(Error),
    #[error("verification failed: {0} check(s) did not pass")]
    VerifyFailed(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::InvalidMcConfig(_) | Error::Domain { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numerical(e),
        }
    }
}

pub fn figure_params(id: u8) -> crate::Result<ChannelParams> {
    match id {
        1..=4 => ChannelParams::symmetric_2x2(FIGURE_M[usize::from(id - 1)]),
        _ => Err(Error::InvalidParams(format!("unknown figure id {id}; expected 1..=4"))),
    }
}

/// Everything needed to produce one table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub params: ChannelParams,
    pub from_db: f64,
    pub to_db: f64,
    pub step_db: f64,
    pub unit: Unit,
    pub mc_samples: Option<u64>,
    pub seed: u64,
    pub workers: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate()?;
        let (a, b, s) = (self.from_db, self.to_db, self.step_db);
        if !(a.is_finite() && b.is_finite() && s.is_finite()) {
            return Err(CliError::Usage("grid bounds and step must be finite".into()));
        }
        if s == 0.0 || (b - a) * s <= 0.0 {
            return Err(CliError::Usage(format!(
                "step {s} does not lead from {a} dB to {b} dB"
            )));
        }
        if self.grid().len() < 2 {
            return Err(CliError::Usage("the SNR grid needs at least two points".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        if let Some(n) = self.mc_samples {
            McConfig::new(n, self.seed, self.workers)?;
        }
        Ok(())
    }

    /// Grid values in dB, endpoints inclusive.
    pub fn grid(&self) -> Vec<f64> {
        let count = ((self.to_db - self.from_db) / self.step_db + 1e-9).floor();
        if !(count >= 0.0) || count > 1e6 {
            return Vec::new();
        }
        (0..=count as u64)
            .map(|k| {
                let v = self.from_db + k as f64 * self.step_db;
                (v * 1e9).round() / 1e9
            })
            .collect()
    }
}

/// One grid point of a sweep, rates in the table's unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub snr_db: f64,
    pub snr_linear: f64,
    pub lambda0: f64,
    pub mu0: f64,
    pub c_exact_csit: f64,
    pub c_nocsit: f64,
    pub c_asym_lambert: Option<f64>,
    pub c_asym_log: Option<f64>,
    pub r_onoff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_c_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_c_stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub tool: String,
    pub version: String,
    pub params: ChannelParams,
    pub n: f64,
    pub n_case: NCase,
    pub unit: Unit,
    pub from_db: f64,
    pub to_db: f64,
    pub step_db: f64,
    pub seed: u64,
    pub mc_samples: Option<u64>,
    /// Per-row diagnostics, e.g. asymptotic forms left empty.
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub meta: SweepMeta,
    pub rows: Vec<CurveRow>,
}

struct RowResult {
    row: CurveRow,
    lambda0: f64,
    flag: Option<String>,
}

fn compute_row(channel: &Channel, db: f64, scale: f64) -> crate::Result<RowResult> {
    let snr = SnrPoint::from_db(db)?;
    let sol = solve_threshold(channel, snr)?;
    let c_exact = capacity_exact_csit(channel, &sol)?;
    let c_nocsit = capacity_nocsit(channel, snr)?;
    let policy = build_policy(channel, snr, sol.lambda0)?;
    let r = rate_onoff(channel, &policy)?;
    let (lambert, log, flag) = if snr.linear < 1.0 {
        let log = capacity_log(channel, snr)?;
        match capacity_theorem1(channel, snr) {
            Ok(a) => (Some(a.c_lambert), Some(log), None),
            Err(Error::AsymptoticDomain { arg, .. }) => (
                None,
                Some(log),
                Some(format!(
                    "snr_db={db}: c_asym_lambert left empty, lower-branch argument {arg:e} is below -1/e"
                )),
            ),
            Err(e) => return Err(e),
        }
    } else {
        (
            None,
            None,
            Some(format!("snr_db={db}: asymptotic forms need SNR < 1, left empty")),
        )
    };
    Ok(RowResult {
        row: CurveRow {
            snr_db: db,
            snr_linear: snr.linear,
            lambda0: sol.lambda0,
            mu0: sol.mu0,
            c_exact_csit: c_exact * scale,
            c_nocsit: c_nocsit * scale,
            c_asym_lambert: lambert.map(|v| v * scale),
            c_asym_log: log.map(|v| v * scale),
            r_onoff: r * scale,
            mc_c_mean: None,
            mc_c_stderr: None,
        },
        lambda0: sol.lambda0,
        flag,
    })
}

/// Evaluates every grid point. Points run concurrently; rows come back in
/// grid order.
pub fn compute_sweep(spec: &SweepSpec) -> Result<SweepOutput, CliError> {
    spec.validate()?;
    let channel = Channel::new(spec.params)?;
    let scale = spec.unit.scale();
    let grid = spec.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    let results: Vec<crate::Result<RowResult>> =
        pool.install(|| grid.par_iter().map(|&db| compute_row(&channel, db, scale)).collect());

    let mut rows = Vec::with_capacity(grid.len());
    let mut flags = Vec::new();
    for (k, res) in results.into_iter().enumerate() {
        let mut r = res?;
        if let Some(samples) = spec.mc_samples {
            let mc = McConfig::new(samples, spec.seed.wrapping_add(k as u64), spec.workers)?;
            let snr = SnrPoint::from_linear(r.row.snr_linear)?;
            let est = mc_capacity_waterfilling(&spec.params, snr, r.lambda0, &mc)?;
            r.row.mc_c_mean = Some(est.capacity.mean * scale);
            r.row.mc_c_stderr = Some(est.capacity.std_error * scale);
        }
        flags.extend(r.flag);
        rows.push(r.row);
    }
    let d = channel.derived();
    Ok(SweepOutput {
        meta: SweepMeta {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            params: spec.params,
            n: d.n,
            n_case: d.n_case(),
            unit: spec.unit,
            from_db: spec.from_db,
            to_db: spec.to_db,
            step_db: spec.step_db,
            seed: spec.seed,
            mc_samples: spec.mc_samples,
            flags,
        },
        rows,
    })
}

/// `5/2`-style rendering for multiples of 1/4, decimal otherwise.
fn format_n(n: f64) -> String {
    let q = n * 4.0;
    if q == q.round() && q.abs() < 1e6 {
        let (mut num, mut den) = (q as i64, 4i64);
        while den > 1 && num % 2 == 0 {
            num /= 2;
            den /= 2;
        }
        if den == 1 {
            format!("{num}")
        } else {
            format!("{num}/{den}")
        }
    } else {
        format!("{n}")
    }
}

fn case_name(c: NCase) -> &'static str {
    match c {
        NCase::Positive => "positive",
        NCase::Zero => "zero",
        NCase::Negative => "negative",
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn render_csv(out: &SweepOutput) -> String {
    let m = &out.meta;
    let p = &m.params;
    let mut s = String::new();
    let _ = writeln!(s, "# {} {}", m.tool, m.version);
    let _ = writeln!(
        s,
        "# params t={} r={} m_t={} m_r={} omega_t={} omega_r={}",
        p.t, p.r, p.m_t, p.m_r, p.omega_t, p.omega_r
    );
    let _ = writeln!(s, "# n={} ({}) n_case={}", format_n(m.n), m.n, case_name(m.n_case));
    let _ = writeln!(
        s,
        "# unit={} from_db={} to_db={} step_db={} seed={} mc_samples={}",
        m.unit.name(),
        m.from_db,
        m.to_db,
        m.step_db,
        m.seed,
        m.mc_samples.map(|n| n.to_string()).unwrap_or_else(|| "none".into())
    );
    for f in &m.flags {
        let _ = writeln!(s, "# flag {f}");
    }
    let with_mc = m.mc_samples.is_some();
    if with_mc {
        let _ = writeln!(s, "{CSV_HEADER},{CSV_MC_COLUMNS}");
    } else {
        let _ = writeln!(s, "{CSV_HEADER}");
    }
    for r in &out.rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.snr_db,
            num(r.snr_linear),
            num(r.lambda0),
            num(r.mu0),
            num(r.c_exact_csit),
            num(r.c_nocsit),
            opt(r.c_asym_lambert),
            opt(r.c_asym_log),
            num(r.r_onoff)
        );
        if with_mc {
            let _ = write!(s, ",{},{}", opt(r.mc_c_mean), opt(r.mc_c_stderr));
        }
        s.push('\n');
    }
    s
}

pub fn render_json(out: &SweepOutput) -> String {
    let mut s = serde_json::to_string_pretty(out).expect("sweep output serializes");
    s.push('\n');
    s
}

/// Values read from a `--config` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

const CONFIG_KEYS: [&str; 15] = [
    "t",
    "r",
    "mt",
    "mr",
    "omega-t",
    "omega-r",
    "from",
    "to",
    "step",
    "unit",
    "format",
    "out",
    "seed",
    "mc-samples",
    "workers",
];

impl ConfigFile {
    /// Parses `key = value` lines; `#` starts a comment. Underscores in
    /// keys are treated as dashes.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("config line {}: expected key=value", i + 1)));
            };
            let key = k.trim().replace('_', "-");
            if !CONFIG_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("config line {}: unknown key '{}'", i + 1, k.trim())));
            }
            entries.insert(key, v.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config: invalid value '{v}' for '{key}'"))),
        }
    }

    fn get_enum<T: ValueEnum>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true)
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config: invalid value '{v}' for '{key}'"))),
        }
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

struct Resolved {
    spec: SweepSpec,
    format: Format,
    out: Option<PathBuf>,
}

fn resolve(
    channel: Option<&ChannelArgs>,
    preset: Option<ChannelParams>,
    grid: &GridArgs,
    output: &OutputArgs,
) -> Result<Resolved, CliError> {
    let cfg = match &output.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let params = match preset {
        Some(p) => p,
        None => {
            let ch = channel.cloned().unwrap_or_default();
            let need = |name: &str, v: Option<f64>| {
                v.ok_or_else(|| CliError::Usage(format!("missing --{name} (flag or config)")))
            };
            let t = ch.t.or(cfg.get("t")?).ok_or_else(|| CliError::Usage("missing --t (flag or config)".into()))?;
            let r = ch.r.or(cfg.get("r")?).ok_or_else(|| CliError::Usage("missing --r (flag or config)".into()))?;
            let mt = need("mt", ch.mt.or(cfg.get("mt")?))?;
            let mr = need("mr", ch.mr.or(cfg.get("mr")?))?;
            let omega_t = ch.omega_t.or(cfg.get("omega-t")?).unwrap_or(1.0);
            let omega_r = ch.omega_r.or(cfg.get("omega-r")?).unwrap_or(1.0);
            ChannelParams::new(t, r, mt, mr, omega_t, omega_r)?
        }
    };
    let spec = SweepSpec {
        params,
        from_db: grid.from.or(cfg.get("from")?).unwrap_or(DEFAULT_FROM_DB),
        to_db: grid.to.or(cfg.get("to")?).unwrap_or(DEFAULT_TO_DB),
        step_db: grid.step.or(cfg.get("step")?).unwrap_or(DEFAULT_STEP_DB),
        unit: output.unit.or(cfg.get_enum("unit")?).unwrap_or_default(),
        mc_samples: output.mc_samples.or(cfg.get("mc-samples")?),
        seed: output.seed.or(cfg.get("seed")?).unwrap_or(DEFAULT_SEED),
        workers: output.workers.or(cfg.get("workers")?).unwrap_or_else(default_workers),
    };
    spec.validate()?;
    Ok(Resolved {
        spec,
        format: output.format.or(cfg.get_enum("format")?).unwrap_or_default(),
        out: output.out.clone().or(cfg.get::<PathBuf>("out")?),
    })
}

fn emit(text: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render(out: &SweepOutput, format: Format) -> String {
    match format {
        Format::Csv => render_csv(out),
        Format::Json => render_json(out),
    }
}

fn replay(args: &SweepArgs, path: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let doc: SweepOutput = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not a sweep JSON document: {e}", path.display())))?;
    let format = args.output.format.unwrap_or_default();
    emit(&render(&doc, format), args.output.out.as_deref(), stdout)
}

/// Executes a parsed command line, writing results to `stdout` unless
/// `--out` is given.
pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Sweep(args) => {
            if let Some(path) = &args.replay {
                return replay(&args, path, stdout);
            }
            let r = resolve(Some(&args.channel), None, &args.grid, &args.output)?;
            let out = compute_sweep(&r.spec)?;
            emit(&render(&out, r.format), r.out.as_deref(), stdout)
        }
        Command::Figure(args) => {
            let preset = figure_params(args.id).map_err(|e| CliError::Usage(e.to_string()))?;
            let r = resolve(None, Some(preset), &args.grid, &args.output)?;
            let out = compute_sweep(&r.spec)?;
            emit(&render(&out, r.format), r.out.as_deref(), stdout)
        }
        Command::Verify(args) => {
            let workers = args.workers.unwrap_or_else(default_workers);
            if workers == 0 {
                return Err(CliError::Usage("workers must be at least 1".into()));
            }
            let results = run_all(args.level, args.seed, workers);
            stdout.write_all(render_report(&results).as_bytes())?;
            let failed = results.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                Err(CliError::VerifyFailed(failed))
            } else {
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: f64) -> SweepSpec {
        SweepSpec {
            params: ChannelParams::symmetric_2x2(m).unwrap(),
            from_db: -10.0,
            to_db: -60.0,
            step_db: -5.0,
            unit: Unit::Nats,
            mc_samples: None,
            seed: 1,
            workers: 2,
        }
    }

    #[test]
    fn grid_construction() {
        assert_eq!(spec(1.0).grid().len(), 11);
        let s = SweepSpec {
            from_db: -60.0,
            to_db: -10.0,
            step_db: 1.0,
            ..spec(1.0)
        };
        assert_eq!(s.grid().len(), 51);
        assert_eq!(*s.grid().last().unwrap(), -10.0);
        let s = SweepSpec {
            from_db: 0.0,
            to_db: 1.0,
            step_db: 0.1,
            ..spec(1.0)
        };
        assert_eq!(s.grid()[3], 0.3);
        assert_eq!(s.grid().len(), 11);
    }

    #[test]
    fn grid_validation() {
        let wrong_sign = SweepSpec {
            step_db: 5.0,
            ..spec(1.0)
        };
        assert!(wrong_sign.validate().is_err());
        let single = SweepSpec {
            to_db: -12.0,
            ..spec(1.0)
        };
        assert!(single.validate().is_err());
        let zero = SweepSpec {
            step_db: 0.0,
            ..spec(1.0)
        };
        assert!(zero.validate().is_err());
        assert!(spec(1.0).validate().is_ok());
    }

    #[test]
    fn n_formatting() {
        assert_eq!(format_n(2.5), "5/2");
        assert_eq!(format_n(0.5), "1/2");
        assert_eq!(format_n(-1.5), "-3/2");
        assert_eq!(format_n(-3.5), "-7/2");
        assert_eq!(format_n(0.0), "0");
        assert_eq!(format_n(0.25), "1/4");
        assert_eq!(format_n(1.0), "1");
        assert_eq!(format_n(0.1), "0.1");
    }

    #[test]
    fn config_parsing() {
        let cfg = ConfigFile::parse("# comment\nt = 2\nomega_t=1.5  # trailing\n\nunit=bits\n").unwrap();
        assert_eq!(cfg.get::<u32>("t").unwrap(), Some(2));
        assert_eq!(cfg.get::<f64>("omega-t").unwrap(), Some(1.5));
        assert_eq!(cfg.get_enum::<Unit>("unit").unwrap(), Some(Unit::Bits));
        assert_eq!(cfg.get::<u32>("r").unwrap(), None);
        assert!(ConfigFile::parse("bogus=1").is_err());
        assert!(ConfigFile::parse("t 2").is_err());
        assert!(ConfigFile::parse("t=two").unwrap().get::<u32>("t").is_err());
    }

    #[test]
    fn rows_and_flags() {
        let out = compute_sweep(&spec(2.0)).unwrap();
        assert_eq!(out.rows.len(), 11);
        assert_eq!(out.meta.n, -3.5);
        // for n = -7/2 the lower-branch argument needs SNR <= -15.2 dB
        assert!(out.rows[..2].iter().all(|r| r.c_asym_lambert.is_none()));
        assert!(out.rows[0].c_asym_log.is_some());
        assert_eq!(out.meta.flags.len(), 2);
        assert!(out.rows[2..].iter().all(|r| r.c_asym_lambert.is_some()));
        let csv = render_csv(&out);
        let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, CSV_HEADER);
        assert!(csv.contains("# n=-7/2"));
    }

    #[test]
    fn bits_scale_rate_columns_only() {
        let nats = compute_sweep(&spec(1.0)).unwrap();
        let bits = compute_sweep(&SweepSpec {
            unit: Unit::Bits,
            ..spec(1.0)
        })
        .unwrap();
        for (a, b) in nats.rows.iter().zip(&bits.rows) {
            assert_eq!(a.lambda0, b.lambda0);
            assert_eq!(a.mu0, b.mu0);
            let k = std::f64::consts::LN_2;
            assert!((b.c_exact_csit * k / a.c_exact_csit - 1.0).abs() < 1e-14);
            assert!((b.r_onoff * k / a.r_onoff - 1.0).abs() < 1e-14);
            assert!((b.c_nocsit * k / a.c_nocsit - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip_reproduces_csv() {
        let out = compute_sweep(&SweepSpec {
            mc_samples: Some(10_000),
            ..spec(2.0)
        })
        .unwrap();
        let back: SweepOutput = serde_json::from_str(&render_json(&out)).unwrap();
        assert_eq!(back, out);
        assert_eq!(render_csv(&back), render_csv(&out));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::VerifyFailed(1).exit_code(), 1);
        let e: CliError = Error::IterationLimit {
            func: "f",
            iterations: 3,
        }
        .into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = Error::InvalidParams("bad".into()).into();
        assert_eq!(e.exit_code(), 2);
        assert!(figure_params(0).is_err() && figure_params(5).is_err());
    }
}
