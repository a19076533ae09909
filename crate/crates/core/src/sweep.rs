//! Parameter sweeps and the text reports behind the `delegate` binary.
//!
//! A sweep configuration is a TOML file with a `[params]` table, where each
//! of `p`, `r`, `R`, `k`, `pi` is either a number or an inline table
//! `{ start, stop, step }`, and an optional `[options]` table:
//!
//! ```toml
//! [params]
//! p = 0.45
//! r = 1.6
//! R = 1
//! k = 0.163
//! pi = { start = 0.0, stop = 1.0, step = 0.05 }
//!
//! [options]
//! out = "flip.csv"
//! strict = false
//! workers = 4
//! ```
//!
//! Rows are emitted in lexicographic grid order (`p` outermost, `pi`
//! innermost) whatever the number of workers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::closed_form::{
    optimal_delegation, omega_sample, r_one_printed, r_one_root, r_underline, r_zero_printed,
    DelegationStrategy, RegionRecord, Thresholds,
};
use crate::model::{DelegationSet, ModelParams};
use crate::oracle::{cross_check, find_equilibria, CrossCheckSummary, GridSpec, Match, OracleError, ProbStep};
use crate::pbe::Verifier;
use crate::profile_format::{parse_profile, ProfileParseError};

pub const CSV_HEADER: &str =
    "p,r,R,k,pi,valid,feas_pool,feas_nc,feas_change,V_full,V_nc,V_change,delta,optimal";

/// Offset from each threshold used by the boundary scan.
pub const BOUNDARY_OFFSET: f64 = 1e-6;

pub const MAX_SWEPT_AXES: usize = 3;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("cannot read config {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("override `{0}`: {1}")]
    Override(String, String),
    #[error("parameter `{0}` is not set")]
    MissingParam(&'static str),
    #[error("axis `{axis}`: {reason}")]
    BadAxis { axis: &'static str, reason: String },
    #[error("{0} swept axes; at most {MAX_SWEPT_AXES} allowed")]
    TooManyAxes(usize),
    #[error("parameter `{0}` is swept; a single point is required")]
    NotAPoint(&'static str),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl SweepError {
    pub fn exit_status(&self) -> ExitStatus {
        ExitStatus::Usage
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Usage = 1,
    Validation = 2,
    OracleMismatch = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Fixed(f64),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    fn check(&self, axis: &'static str) -> Result<(), SweepError> {
        let bad = |reason: &str| Err(SweepError::BadAxis { axis, reason: reason.to_string() });
        match *self {
            Axis::Fixed(v) if !v.is_finite() => bad("value is not finite"),
            Axis::Fixed(_) => Ok(()),
            Axis::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite()) {
                    bad("range bounds are not finite")
                } else if !(step > 0.0 && step.is_finite()) {
                    bad("step must be positive")
                } else if stop < start {
                    bad("empty range (stop < start)")
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn is_swept(&self) -> bool {
        matches!(self, Axis::Range { start, stop, .. } if stop > start)
    }

    /// Grid values `start + i * step` up to `stop`; the last value snaps to
    /// `stop` when it lands on it up to rounding.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Axis::Fixed(v) => vec![v],
            Axis::Range { start, stop, step } => {
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n)
                    .map(|i| {
                        let v = start + i as f64 * step;
                        if (v - stop).abs() <= 1e-9 * step { stop } else { v }
                    })
                    .collect()
            }
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = String;

    /// `0.25` or `start:stop:step`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Axis::Fixed(num(v)?)),
            [a, b, c] => Ok(Axis::Range { start: num(a)?, stop: num(b)?, step: num(c)? }),
            _ => Err("expected a number or start:stop:step".to_string()),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StepRepr {
    Num(f64),
    Text(String),
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    p: Option<Axis>,
    r: Option<Axis>,
    #[serde(rename = "R", alias = "rent")]
    rent: Option<Axis>,
    k: Option<Axis>,
    pi: Option<Axis>,
    epsilon: Option<f64>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    out: Option<PathBuf>,
    strict: Option<bool>,
    oracle_check: Option<bool>,
    boundary_scan: Option<bool>,
    workers: Option<usize>,
    grid_step: Option<StepRepr>,
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub p: Option<Axis>,
    pub r: Option<Axis>,
    pub rent: Option<Axis>,
    pub k: Option<Axis>,
    pub pi: Option<Axis>,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
    /// Skip points outside the assumption region.
    pub strict: bool,
    pub oracle_check: bool,
    pub boundary_scan: bool,
    /// Worker threads; `None` uses the rayon default.
    pub workers: Option<usize>,
    pub grid: GridSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            p: None,
            r: None,
            rent: None,
            k: None,
            pi: None,
            epsilon: 1e-3,
            out: None,
            strict: true,
            oracle_check: false,
            boundary_scan: false,
            workers: None,
            grid: GridSpec::pure(),
        }
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim() {
        "1" | "true" | "yes" => Ok(true),
        "0" | "false" | "no" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, SweepError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        let mut cfg = SweepConfig {
            p: raw.params.p,
            r: raw.params.r,
            rent: raw.params.rent,
            k: raw.params.k,
            pi: raw.params.pi,
            out: raw.options.out,
            workers: raw.options.workers,
            ..SweepConfig::default()
        };
        if let Some(eps) = raw.params.epsilon {
            cfg.epsilon = eps;
        }
        cfg.strict = raw.options.strict.unwrap_or(true);
        cfg.oracle_check = raw.options.oracle_check.unwrap_or(false);
        cfg.boundary_scan = raw.options.boundary_scan.unwrap_or(false);
        if let Some(step) = raw.options.grid_step {
            let text = match step {
                StepRepr::Num(x) => x.to_string(),
                StepRepr::Text(s) => s,
            };
            cfg.grid.divisions = text.parse::<ProbStep>()?.0;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SweepError::ReadConfig { path: path.to_path_buf(), source })?;
        SweepConfig::from_toml_str(&text)
    }

    /// Applies a `key=value` override. Parameter values may be ranges
    /// written `start:stop:step`.
    pub fn set(&mut self, assignment: &str) -> Result<(), SweepError> {
        let err = |msg: String| SweepError::Override(assignment.to_string(), msg);
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| err("expected key=value".to_string()))?;
        let (key, value) = (key.trim(), value.trim());
        let axis = || value.parse::<Axis>().map_err(err);
        match key {
            "p" => self.p = Some(axis()?),
            "r" => self.r = Some(axis()?),
            "R" | "rent" => self.rent = Some(axis()?),
            "k" => self.k = Some(axis()?),
            "pi" => self.pi = Some(axis()?),
            "epsilon" => self.epsilon = value.parse().map_err(|_| err("not a number".to_string()))?,
            "out" => self.out = Some(PathBuf::from(value)),
            "strict" => self.strict = parse_bool(value).map_err(err)?,
            "oracle_check" => self.oracle_check = parse_bool(value).map_err(err)?,
            "boundary_scan" => self.boundary_scan = parse_bool(value).map_err(err)?,
            "workers" => {
                self.workers = Some(value.parse().map_err(|_| err("not a count".to_string()))?)
            }
            "grid_step" => {
                self.grid.divisions = value.parse::<ProbStep>().map_err(|e| err(e.to_string()))?.0
            }
            _ => return Err(err("unknown key".to_string())),
        }
        Ok(())
    }

    fn axes(&self) -> Result<[(&'static str, &Axis); 5], SweepError> {
        fn get<'a>(name: &'static str, a: &'a Option<Axis>) -> Result<(&'static str, &'a Axis), SweepError> {
            a.as_ref().map(|a| (name, a)).ok_or(SweepError::MissingParam(name))
        }
        Ok([
            get("p", &self.p)?,
            get("r", &self.r)?,
            get("R", &self.rent)?,
            get("k", &self.k)?,
            get("pi", &self.pi)?,
        ])
    }

    pub fn check(&self) -> Result<(), SweepError> {
        let axes = self.axes()?;
        for (name, axis) in axes {
            axis.check(name)?;
        }
        let swept = axes.iter().filter(|(_, a)| a.is_swept()).count();
        if swept > MAX_SWEPT_AXES {
            return Err(SweepError::TooManyAxes(swept));
        }
        Ok(())
    }

    /// The single parameter point described by the config.
    pub fn point(&self) -> Result<ModelParams, SweepError> {
        let axes = self.axes()?;
        let mut v = [0.0; 5];
        for (slot, (name, axis)) in v.iter_mut().zip(axes) {
            axis.check(name)?;
            let vals = axis.values();
            if vals.len() != 1 {
                return Err(SweepError::NotAPoint(name));
            }
            *slot = vals[0];
        }
        Ok(ModelParams { epsilon: self.epsilon, ..ModelParams::new(v[0], v[1], v[2], v[3], v[4]) })
    }

    /// Grid points in lexicographic order, including boundary-scan points
    /// when enabled.
    pub fn points(&self) -> Result<Vec<ModelParams>, SweepError> {
        self.check()?;
        let [p, r, rent, k, pi] = self.axes()?.map(|(_, a)| a.values());
        let mut out = Vec::new();
        for &p in &p {
            for &r in &r {
                for &rent in &rent {
                    let mut ks = k.clone();
                    if self.boundary_scan {
                        let th = Thresholds::at(&ModelParams::new(p, r, rent, 0.0, 0.5));
                        for t in [th.pooling, th.no_compromise, th.change] {
                            ks.push(t - BOUNDARY_OFFSET);
                            ks.push(t + BOUNDARY_OFFSET);
                        }
                        ks.sort_by(f64::total_cmp);
                        ks.dedup();
                    }
                    for &k in &ks {
                        for &pi in &pi {
                            let prm = ModelParams::new(p, r, rent, k, pi);
                            out.push(ModelParams { epsilon: self.epsilon, ..prm });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Formats with 12 significant digits, fixed notation for moderate
/// magnitudes and trailing zeros removed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed).to_string()
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn csv_row(rec: &RegionRecord) -> String {
    let b = |x: bool| if x { "1" } else { "0" };
    let prm = &rec.params;
    [
        fmt_sig(prm.p),
        fmt_sig(prm.r),
        fmt_sig(prm.rent),
        fmt_sig(prm.k),
        fmt_sig(prm.pi),
        b(rec.valid).to_string(),
        b(rec.feas_pool).to_string(),
        b(rec.feas_nc).to_string(),
        b(rec.feas_change).to_string(),
        fmt_sig(rec.v_full),
        fmt_sig(rec.v_nc),
        fmt_sig(rec.v_change),
        fmt_sig(rec.delta),
        rec.optimal.to_string(),
    ]
    .join(",")
}

pub fn render_csv(records: &[RegionRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for rec in records {
        out.push_str(&csv_row(rec));
        out.push('\n');
    }
    out
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global
/// pool when unset.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub records: Vec<RegionRecord>,
    pub skipped_invalid: usize,
    pub csv: String,
    pub oracle: Option<CrossCheckSummary>,
}

impl SweepOutcome {
    pub fn status(&self) -> ExitStatus {
        match &self.oracle {
            Some(summary) if !summary.is_clean() => ExitStatus::OracleMismatch,
            _ if self.records.is_empty() && self.skipped_invalid > 0 => ExitStatus::Validation,
            _ => ExitStatus::Ok,
        }
    }
}

/// Evaluates the grid and, when an output path is configured, writes the
/// CSV there.
pub fn cmd_sweep(config: &SweepConfig) -> Result<SweepOutcome, SweepError> {
    let points = config.points()?;
    let strict = config.strict;
    let (records, oracle) = with_workers(config.workers, || {
        let evaluated: Vec<RegionRecord> = points.par_iter().map(optimal_delegation).collect();
        let records: Vec<RegionRecord> =
            evaluated.into_iter().filter(|rec| rec.valid || !strict).collect();
        let oracle = if config.oracle_check {
            let valid: Vec<ModelParams> =
                records.iter().filter(|r| r.valid).map(|r| r.params).collect();
            Some(cross_check(&valid, &config.grid))
        } else {
            None
        };
        (records, oracle)
    });
    let oracle = oracle.transpose()?;
    let skipped_invalid = points.len() - records.len();
    let csv = render_csv(&records);
    if let Some(path) = &config.out {
        std::fs::write(path, &csv).map_err(|source| SweepError::Write { path: path.clone(), source })?;
    }
    Ok(SweepOutcome { records, skipped_invalid, csv, oracle })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandOutput {
    pub text: String,
    pub status: ExitStatus,
}

fn params_line(prm: &ModelParams) -> String {
    format!(
        "p = {}, r = {}, R = {}, k = {}, pi = {}",
        fmt_sig(prm.p),
        fmt_sig(prm.r),
        fmt_sig(prm.rent),
        fmt_sig(prm.k),
        fmt_sig(prm.pi)
    )
}

/// Validation block; returns whether the point is usable.
fn validation_block(out: &mut String, prm: &ModelParams) -> bool {
    let v = prm.validate();
    if v.is_ok() {
        let _ = writeln!(out, "validation: ok");
    } else {
        let _ = writeln!(out, "validation: {} violation(s)", v.violations.len());
        for viol in &v.violations {
            let _ = writeln!(out, "  - {viol}");
        }
    }
    if v.degenerate_moderate {
        let _ = writeln!(out, "  note: p = 1/2, the moderate state has probability zero");
    }
    v.is_ok()
}

pub fn cmd_eval(prm: &ModelParams, strict: bool) -> CommandOutput {
    let mut out = String::new();
    let _ = writeln!(out, "{}", params_line(prm));
    let valid = validation_block(&mut out, prm);
    if !valid && strict {
        let _ = writeln!(out, "values suppressed (pass --no-strict to compute anyway)");
        return CommandOutput { text: out, status: ExitStatus::Validation };
    }
    let th = Thresholds::at(prm);
    let rec = optimal_delegation(prm);
    let yn = |b: bool| if b { "feasible" } else { "infeasible" };
    let _ = writeln!(out, "k thresholds:");
    let _ = writeln!(out, "  pooling (full menu, k must exceed)   {}", fmt_sig(th.pooling));
    let _ = writeln!(out, "  no compromise (k at most)            {}", fmt_sig(th.no_compromise));
    let _ = writeln!(out, "  change (k at most)                   {}", fmt_sig(th.change));
    let _ = writeln!(out, "principal values:");
    let _ = writeln!(out, "  FullMenu      {:>16}  {}", fmt_sig(rec.v_full), yn(rec.feas_pool));
    let _ = writeln!(out, "  NoCompromise  {:>16}  {}", fmt_sig(rec.v_nc), yn(rec.feas_nc));
    let change_note = if rec.feas_change { "informative" } else { "pooling fallback" };
    let _ = writeln!(out, "  Change        {:>16}  {}", fmt_sig(rec.v_change), change_note);
    let _ = writeln!(out, "delta (change minus no compromise): {}", fmt_sig(rec.delta));
    let _ = writeln!(out, "optimal: {}", rec.optimal);
    let _ = writeln!(out, "r lower bound for the region sampler: {}", fmt_sig(r_underline(prm.p)));
    let root = r_one_root(prm.p).map_or("none in (√2, 2]".to_string(), fmt_sig);
    let _ = writeln!(
        out,
        "delta = 0 at pi = 1: r = {root} (printed formula gives {})",
        fmt_sig(r_one_printed(prm.p))
    );
    let _ = writeln!(out, "printed r at pi = 0: {}", fmt_sig(r_zero_printed(prm.p)));
    CommandOutput { text: out, status: ExitStatus::Ok }
}

pub fn cmd_verify(profile_text: &str, prm: &ModelParams, strict: bool) -> Result<CommandOutput, ProfileParseError> {
    let profile = parse_profile(profile_text)?;
    let mut out = String::new();
    let _ = writeln!(out, "{}", params_line(prm));
    let _ = writeln!(out, "delegation: {}", profile.delegation);
    if !validation_block(&mut out, prm) && strict {
        return Ok(CommandOutput { text: out, status: ExitStatus::Validation });
    }
    let report = Verifier::default().verify(&profile, prm);
    let _ = write!(out, "{report}");
    Ok(CommandOutput { text: out, status: ExitStatus::Ok })
}

pub fn cmd_omega(p: f64, pi: f64, epsilon: f64) -> CommandOutput {
    let mut out = String::new();
    match omega_sample(p, pi, epsilon) {
        Ok(s) => {
            let prm = &s.params;
            let th = &s.thresholds;
            let _ = writeln!(out, "feasible: {}", params_line(prm));
            let _ = writeln!(out, "r lower bound: {}", fmt_sig(s.r_underline));
            let check = |ok: bool| if ok { "ok" } else { "FAILED" };
            let _ = writeln!(
                out,
                "  k > pooling threshold        {} > {}  {}",
                fmt_sig(prm.k),
                fmt_sig(th.pooling),
                check(prm.k > th.pooling)
            );
            let _ = writeln!(
                out,
                "  k <= no-compromise threshold {} <= {}  {}",
                fmt_sig(prm.k),
                fmt_sig(th.no_compromise),
                check(prm.k <= th.no_compromise)
            );
            let _ = writeln!(
                out,
                "  k <= change threshold        {} <= {}  {}",
                fmt_sig(prm.k),
                fmt_sig(th.change),
                check(prm.k <= th.change)
            );
            CommandOutput { text: out, status: ExitStatus::Ok }
        }
        Err(e) => {
            let _ = writeln!(out, "{e}");
            CommandOutput { text: out, status: ExitStatus::Validation }
        }
    }
}

pub fn cmd_oracle(
    prm: &ModelParams,
    sets: &[DelegationSet],
    grid: &GridSpec,
    workers: Option<usize>,
    strict: bool,
) -> Result<CommandOutput, OracleError> {
    let mut out = String::new();
    let _ = writeln!(out, "{}", params_line(prm));
    if !validation_block(&mut out, prm) && strict {
        return Ok(CommandOutput { text: out, status: ExitStatus::Validation });
    }
    let _ = writeln!(out, "probability step 1/{}, best-response slack {:e}", grid.divisions, grid.epsilon_br);
    let mut status = ExitStatus::Ok;
    for &d in sets {
        let finding = with_workers(workers, || find_equilibria(prm, d, grid))?;
        if finding.matches_closed_form == Match::No {
            status = ExitStatus::OracleMismatch;
        }
        let _ = write!(out, "{finding}");
    }
    Ok(CommandOutput { text: out, status })
}

/// The three compared delegation sets.
pub fn compared_sets() -> Vec<DelegationSet> {
    DelegationStrategy::ALL.iter().map(|s| s.delegation()).collect()
}
