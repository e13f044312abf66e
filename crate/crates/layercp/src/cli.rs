//! Command-line front end: parameter sweeps written as CSV or JSON.
//!
//! Every output echoes the resolved parameter set as `key=value` pairs. The
//! same keys are accepted by `--config`, so an output header doubles as a
//! recipe for regenerating it.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::resonance_condition;
use crate::error::Error;
use crate::greens::electrostatic_shift;
use crate::modes::{completeness_audit, find_trapped_modes};
use crate::numerics::QuadratureConfig;
use crate::shift::{excited_nonresonant_kernel, ground_kernel, resonant_kernel, ResonantKernel};
use crate::types::{Polarization, ShiftResult, Stack, Transition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_ALL_FAILED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quantity {
    GroundShift,
    ExcitedShift,
    ResonantShift,
    TrappedModes,
    Completeness,
    Greens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum SweepVar {
    #[value(name = "Z")]
    Z,
    #[value(name = "L")]
    L,
    #[value(name = "E")]
    E,
    #[value(name = "n_l")]
    NL,
    #[value(name = "n_s")]
    NS,
    /// in-plane wavenumber, only meaningful for trapped-modes
    #[value(name = "k_par")]
    KPar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    Raw,
    #[value(name = "times-Z3")]
    #[serde(rename = "times-Z3")]
    TimesZ3,
    #[value(name = "times-Z4")]
    #[serde(rename = "times-Z4")]
    TimesZ4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

fn parse_value<T: ValueEnum>(s: &str) -> Result<T, CliError> {
    T::from_str(s, false).map_err(|_| CliError::Invalid(format!("unknown value '{s}'")))
}

/// Sweep range `lo:hi:count[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub log: bool,
}

impl SweepRange {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo >= self.hi {
            return invalid("range needs finite lo < hi");
        }
        if self.count < 2 {
            return invalid("range count must be at least 2");
        }
        if self.log && self.lo <= 0.0 {
            return invalid("log range needs lo > 0");
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..self.count)
            .map(|i| {
                if i == n {
                    return self.hi;
                }
                let t = i as f64 / n as f64;
                if self.log {
                    (self.lo.ln() + t * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + t * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

impl FromStr for SweepRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let log = match parts.len() {
            3 => false,
            4 if parts[3] == "log" => true,
            4 if parts[3] == "lin" || parts[3] == "linear" => false,
            _ => return Err(format!("expected lo:hi:count[:log], got '{s}'")),
        };
        let num = |t: &str| t.parse::<f64>().map_err(|e| format!("'{t}': {e}"));
        let count = parts[2].parse::<usize>().map_err(|e| format!("'{}': {e}", parts[2]))?;
        Ok(SweepRange { lo: num(parts[0])?, hi: num(parts[1])?, count, log })
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}:{:?}:{}", self.lo, self.hi, self.count)?;
        if self.log {
            write!(f, ":log")?;
        }
        Ok(())
    }
}

/// Point parameters. `e` is the transition energy |E|; the excited and
/// resonant quantities use the downward transition -|E|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub n_l: f64,
    pub n_s: f64,
    pub l: f64,
    pub z: f64,
    pub e: f64,
    pub mu_par2: f64,
    pub mu_perp2: f64,
    /// lateral separation used by the completeness audit
    pub rho: f64,
    pub k_par: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { n_l: 2.0, n_s: 1.5, l: 0.5, z: 1.0, e: 1.0, mu_par2: 1.0, mu_perp2: 1.0, rho: 0.0, k_par: 1.0 }
    }
}

impl Params {
    fn with(mut self, var: SweepVar, v: f64) -> Self {
        match var {
            SweepVar::Z => self.z = v,
            SweepVar::L => self.l = v,
            SweepVar::E => self.e = v,
            SweepVar::NL => self.n_l = v,
            SweepVar::NS => self.n_s = v,
            SweepVar::KPar => self.k_par = v,
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub quantity: Quantity,
    pub sweep: SweepVar,
    pub range: SweepRange,
    pub params: Params,
    pub normalization: Normalization,
    pub cfg: QuadratureConfig,
    /// When set, the resonance and anti-resonance thicknesses up to this
    /// order are echoed with the table.
    pub kappa_max: Option<u32>,
}

/// Keys that are echoed but derived from the others; ignored on input.
const DERIVED_KEYS: [&str; 3] = ["l_res", "l_antires", "units"];

fn canonical_key(k: &str) -> String {
    let k = k.trim().trim_start_matches("--").replace('-', "_");
    match k.as_str() {
        "l" => "L".into(),
        "z" => "Z".into(),
        "e" => "E".into(),
        "normalization" => "normalize".into(),
        _ => k,
    }
}

impl ScanSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        self.range.validate()?;
        self.cfg.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
        let p = &self.params;
        let pts = self.range.points();
        let (lo, hi) = (pts[0], pts[pts.len() - 1]);
        let fixed_ok = |v: f64| v.is_finite();
        if ![p.n_l, p.n_s, p.l, p.z, p.e, p.mu_par2, p.mu_perp2, p.rho, p.k_par].into_iter().all(fixed_ok) {
            return invalid("non-finite parameter");
        }
        let bound = |name: &str, v_lo: f64, min: f64, strict: bool| -> Result<(), CliError> {
            let bad = if strict { v_lo <= min } else { v_lo < min };
            if bad {
                invalid(format!("{name} must be {} {min}", if strict { ">" } else { ">=" }))
            } else {
                Ok(())
            }
        };
        let swept = |var: SweepVar, fixed: f64| if self.sweep == var { lo.min(hi) } else { fixed };
        bound("n_l", swept(SweepVar::NL, p.n_l), 1.0, false)?;
        bound("n_s", swept(SweepVar::NS, p.n_s), 1.0, false)?;
        bound("L", swept(SweepVar::L, p.l), 0.0, false)?;
        bound("Z", swept(SweepVar::Z, p.z), 0.0, true)?;
        bound("E", swept(SweepVar::E, p.e), 0.0, true)?;
        bound("k_par", swept(SweepVar::KPar, p.k_par), 0.0, true)?;
        bound("rho", p.rho, 0.0, false)?;
        if p.mu_par2 < 0.0 || p.mu_perp2 < 0.0 || p.mu_par2 + p.mu_perp2 == 0.0 {
            return invalid("dipole moments must be non-negative and not both zero");
        }
        let counting = matches!(self.quantity, Quantity::TrappedModes | Quantity::Completeness);
        if counting && self.normalization != Normalization::Raw {
            return invalid("trapped-modes and completeness only support normalize=raw");
        }
        if self.sweep == SweepVar::KPar && self.quantity != Quantity::TrappedModes {
            return invalid("k_par sweeps are only meaningful for trapped-modes");
        }
        Ok(())
    }

    /// Resolved parameter set as ordered key/value pairs.
    pub fn echo(&self) -> Vec<(String, String)> {
        let p = &self.params;
        let c = &self.cfg;
        let mut v: Vec<(String, String)> = vec![
            ("quantity".into(), value_name(&self.quantity)),
            ("sweep".into(), value_name(&self.sweep)),
            ("range".into(), self.range.to_string()),
            ("n_l".into(), format!("{:?}", p.n_l)),
            ("n_s".into(), format!("{:?}", p.n_s)),
            ("L".into(), format!("{:?}", p.l)),
            ("Z".into(), format!("{:?}", p.z)),
            ("E".into(), format!("{:?}", p.e)),
            ("mu_par2".into(), format!("{:?}", p.mu_par2)),
            ("mu_perp2".into(), format!("{:?}", p.mu_perp2)),
            ("rho".into(), format!("{:?}", p.rho)),
            ("k_par".into(), format!("{:?}", p.k_par)),
            ("normalize".into(), value_name(&self.normalization)),
            ("rel_tol".into(), format!("{:?}", c.rel_tol)),
            ("abs_tol".into(), format!("{:?}", c.abs_tol)),
            ("max_subdivisions".into(), c.max_subdivisions.to_string()),
            ("tail_cutoff".into(), format!("{:?}", c.tail_cutoff)),
            ("pv_exclusion".into(), format!("{:?}", c.pv_exclusion)),
        ];
        if let Some(k) = self.kappa_max {
            v.push(("kappa_max".into(), k.to_string()));
            if let Ok(st) = Stack::new(p.n_l, p.n_s, 0.0) {
                if let Ok(r) = resonance_condition(&st, p.e, k) {
                    let join = |f: &dyn Fn(&crate::asymptotics::ResonancePoint) -> f64| {
                        r.iter().map(|x| format!("{:?}", f(x))).collect::<Vec<_>>().join(";")
                    };
                    v.push(("l_res".into(), join(&|x| x.l_res)));
                    v.push(("l_antires".into(), join(&|x| x.l_antires)));
                }
            }
        }
        v.push(("units".into(), "natural (hbar=c=eps0=1)".into()));
        v
    }

    /// Builds a spec from key/value pairs on top of `base`. Unknown keys are an
    /// error; derived keys are ignored.
    pub fn apply_pairs(mut self, pairs: &[(String, String)]) -> Result<Self, CliError> {
        for (k, v) in pairs {
            let key = canonical_key(k);
            let v = v.trim();
            let num = || v.parse::<f64>().map_err(|_| CliError::Invalid(format!("{key}: not a number '{v}'")));
            let int = || v.parse::<usize>().map_err(|_| CliError::Invalid(format!("{key}: not an integer '{v}'")));
            match key.as_str() {
                "quantity" => self.quantity = parse_value(v)?,
                "sweep" => self.sweep = parse_value(v)?,
                "range" => self.range = v.parse().map_err(CliError::Invalid)?,
                "n_l" => self.params.n_l = num()?,
                "n_s" => self.params.n_s = num()?,
                "L" => self.params.l = num()?,
                "Z" => self.params.z = num()?,
                "E" => self.params.e = num()?,
                "mu_par2" => self.params.mu_par2 = num()?,
                "mu_perp2" => self.params.mu_perp2 = num()?,
                "rho" => self.params.rho = num()?,
                "k_par" => self.params.k_par = num()?,
                "normalize" => self.normalization = parse_value(v)?,
                "rel_tol" => self.cfg.rel_tol = num()?,
                "abs_tol" => self.cfg.abs_tol = num()?,
                "max_subdivisions" => self.cfg.max_subdivisions = int()?,
                "tail_cutoff" => self.cfg.tail_cutoff = num()?,
                "pv_exclusion" => self.cfg.pv_exclusion = num()?,
                "kappa_max" => self.kappa_max = Some(int()? as u32),
                k if DERIVED_KEYS.contains(&k) || k == "format" || k == "out" || k == "threads" => {}
                _ => return invalid(format!("unknown key '{k}'")),
            }
        }
        Ok(self)
    }

    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let has = |k: &str| pairs.iter().any(|(x, _)| canonical_key(x) == k);
        if !has("quantity") || !has("range") {
            return invalid("quantity and range are required");
        }
        let base = ScanSpec {
            quantity: Quantity::GroundShift,
            sweep: SweepVar::Z,
            range: SweepRange { lo: 1.0, hi: 2.0, count: 2, log: false },
            params: Params::default(),
            normalization: Normalization::Raw,
            cfg: QuadratureConfig::default(),
            kappa_max: None,
        };
        base.apply_pairs(pairs)
    }
}

/// Parses a `key=value` text: blank lines and lines starting with `#` are
/// skipped, except that `# key=value` lines (as written in CSV headers) are
/// read as pairs too.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let body = line.strip_prefix('#').map(str::trim).unwrap_or(line);
        if body.is_empty() {
            continue;
        }
        match body.split_once('=') {
            Some((k, v)) => out.push((k.trim().to_string(), v.trim().to_string())),
            None if line.starts_with('#') => {}
            None => return invalid(format!("line {}: expected key=value", i + 1)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Ok,
    Unconverged,
    PoleNear,
    /// evaluation failed; the values are NaN
    Error,
}

impl Flag {
    fn as_str(self) -> &'static str {
        match self {
            Flag::Ok => "ok",
            Flag::Unconverged => "unconverged",
            Flag::PoleNear => "pole-near",
            Flag::Error => "error",
        }
    }
}

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "ok" => Flag::Ok,
            "unconverged" => Flag::Unconverged,
            "pole-near" => Flag::PoleNear,
            "error" => Flag::Error,
            _ => return Err(format!("unknown flag '{s}'")),
        })
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScanRow {
    #[serde(with = "nan_as_null")]
    pub sweep_value: f64,
    #[serde(with = "nan_as_null")]
    pub value_par: f64,
    #[serde(with = "nan_as_null")]
    pub value_perp: f64,
    #[serde(with = "nan_as_null")]
    pub value_total: f64,
    #[serde(with = "nan_as_null")]
    pub abs_error: f64,
    pub flag: Flag,
}

impl PartialEq for ScanRow {
    // bitwise comparison so that NaN rows compare equal
    fn eq(&self, o: &Self) -> bool {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan());
        same(self.sweep_value, o.sweep_value)
            && same(self.value_par, o.value_par)
            && same(self.value_perp, o.value_perp)
            && same(self.value_total, o.value_total)
            && same(self.abs_error, o.abs_error)
            && self.flag == o.flag
    }
}

impl ScanRow {
    fn failed(x: f64, flag: Flag) -> Self {
        ScanRow { sweep_value: x, value_par: f64::NAN, value_perp: f64::NAN, value_total: f64::NAN, abs_error: f64::NAN, flag }
    }

    pub fn is_failed(&self) -> bool {
        self.value_total.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub spec: ScanSpec,
    pub rows: Vec<ScanRow>,
    /// per-row error messages, by row index; not serialized
    pub messages: Vec<(usize, String)>,
}

// Guided poles closer than this (in eta) to a window edge or to each other
// are reported as pole-near.
const POLE_GAP: f64 = 1e-7;

fn poles_near(stack: &Stack, k: &ResonantKernel) -> bool {
    let lo = (stack.n_s().powi(2) - 1.0).max(0.0).sqrt();
    let hi = (stack.n_l().powi(2) - 1.0).max(0.0).sqrt();
    let mut pts = vec![lo, hi];
    pts.extend(k.pole_list());
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    !k.pole_list().is_empty() && pts.windows(2).any(|w| w[1] - w[0] < POLE_GAP)
}

fn channels(par: ShiftResult, perp: ShiftResult, scale: f64) -> (f64, f64, f64, f64, bool) {
    let (p, q) = (par.scaled(scale), perp.scaled(scale));
    (p.value, q.value, p.value + q.value, p.abs_error + q.abs_error, p.converged && q.converged)
}

fn evaluate(spec: &ScanSpec, p: &Params) -> crate::Result<(f64, f64, f64, f64, Flag)> {
    let cfg = &spec.cfg;
    let stack = Stack::new(p.n_l, p.n_s, p.l)?;
    let scale = match spec.normalization {
        Normalization::Raw => 1.0,
        Normalization::TimesZ3 => p.z.powi(3),
        Normalization::TimesZ4 => p.z.powi(4),
    };
    let flag = |ok: bool| if ok { Flag::Ok } else { Flag::Unconverged };
    let (a, b) = (p.e * p.z, p.e * p.l);
    match spec.quantity {
        Quantity::GroundShift => {
            Transition::new(p.e, p.mu_par2, p.mu_perp2)?;
            let k = ground_kernel(&stack, a, b, cfg)?;
            let (x, y, t, err, ok) = channels(k.assemble(p.e, p.mu_par2, 0.0), k.assemble(p.e, 0.0, p.mu_perp2), scale);
            Ok((x, y, t, err, flag(ok)))
        }
        Quantity::ExcitedShift | Quantity::ResonantShift => {
            Transition::new(-p.e, p.mu_par2, p.mu_perp2)?;
            let rk = resonant_kernel(&stack, a, b, cfg)?;
            let mut par = rk.assemble(p.e, p.mu_par2, 0.0);
            let mut perp = rk.assemble(p.e, 0.0, p.mu_perp2);
            if spec.quantity == Quantity::ExcitedShift {
                let nr = excited_nonresonant_kernel(&stack, a, b, -1.0, cfg)?;
                par = par + nr.assemble(p.e, p.mu_par2, 0.0);
                perp = perp + nr.assemble(p.e, 0.0, p.mu_perp2);
            }
            let (x, y, t, err, ok) = channels(par, perp, scale);
            let fl = if !ok {
                Flag::Unconverged
            } else if poles_near(&stack.with_l(b)?, &rk) {
                Flag::PoleNear
            } else {
                Flag::Ok
            };
            Ok((x, y, t, err, fl))
        }
        Quantity::Greens => {
            let par = electrostatic_shift(&stack, p.mu_par2, 0.0, p.z, cfg)?;
            let perp = electrostatic_shift(&stack, 0.0, p.mu_perp2, p.z, cfg)?;
            let (x, y, t, err, ok) = channels(par, perp, scale);
            Ok((x, y, t, err, flag(ok)))
        }
        Quantity::TrappedModes => {
            let te = find_trapped_modes(&stack, p.k_par, Polarization::Te, cfg)?;
            let tm = find_trapped_modes(&stack, p.k_par, Polarization::Tm, cfg)?;
            let res = te.iter().chain(&tm).map(|r| r.residual).fold(0.0, f64::max);
            let (n_te, n_tm) = (te.len() as f64, tm.len() as f64);
            Ok((n_te, n_tm, n_te + n_tm, res, Flag::Ok))
        }
        Quantity::Completeness => {
            let z = p.z + p.l / 2.0;
            let xx = completeness_audit(&stack, z, z, p.rho, (0, 0), cfg)?;
            let zz = completeness_audit(&stack, z, z, p.rho, (2, 2), cfg)?;
            let rel = |r: &crate::modes::AuditResult| r.residual / r.target.abs().max(f64::MIN_POSITIVE);
            let (rx, rz) = (rel(&xx), rel(&zz));
            Ok((rx, rz, rx.max(rz), xx.abs_error.max(zz.abs_error), flag(xx.converged && zz.converged)))
        }
    }
}

fn is_pole_error(e: &Error) -> bool {
    matches!(e, Error::PoleClustering(_) | Error::MissingPole(_) | Error::DispersionPole(_))
}

/// Evaluates the spec on every sweep point, in parallel. Row order follows the
/// sweep; a failing point is flagged and never aborts the scan.
pub fn run_scan(spec: &ScanSpec) -> Result<ScanTable, CliError> {
    spec.validate()?;
    let pts = spec.range.points();
    let results: Vec<(ScanRow, Option<String>)> = pts
        .par_iter()
        .map(|&x| {
            let p = spec.params.with(spec.sweep, x);
            match evaluate(spec, &p) {
                Ok((vp, vq, vt, err, flag)) => {
                    (ScanRow { sweep_value: x, value_par: vp, value_perp: vq, value_total: vt, abs_error: err, flag }, None)
                }
                Err(e) => {
                    let flag = if is_pole_error(&e) { Flag::PoleNear } else { Flag::Error };
                    (ScanRow::failed(x, flag), Some(e.to_string()))
                }
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut messages = Vec::new();
    for (i, (row, msg)) in results.into_iter().enumerate() {
        rows.push(row);
        if let Some(m) = msg {
            messages.push((i, m));
        }
    }
    Ok(ScanTable { spec: spec.clone(), rows, messages })
}

fn fmt17(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn to_csv(table: &ScanTable) -> String {
    let mut s = String::new();
    for (k, v) in table.spec.echo() {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s.push_str(&format!("{},value_par,value_perp,value_total,abs_error,flag\n", value_name(&table.spec.sweep)));
    for r in &table.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt17(r.sweep_value),
            fmt17(r.value_par),
            fmt17(r.value_perp),
            fmt17(r.value_total),
            fmt17(r.abs_error),
            r.flag.as_str()
        ));
    }
    s
}

pub fn parse_csv(text: &str) -> Result<ScanTable, CliError> {
    let header: String = text.lines().take_while(|l| l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let spec = ScanSpec::from_pairs(&parse_pairs(&header)?)?;
    let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
    let cols = lines.next().ok_or_else(|| CliError::Invalid("missing column header".into()))?;
    if cols.split(',').count() != 6 {
        return invalid("expected six columns");
    }
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return invalid(format!("bad row '{line}'"));
        }
        let n = |t: &str| t.parse::<f64>().map_err(|_| CliError::Invalid(format!("bad number '{t}'")));
        rows.push(ScanRow {
            sweep_value: n(f[0])?,
            value_par: n(f[1])?,
            value_perp: n(f[2])?,
            value_total: n(f[3])?,
            abs_error: n(f[4])?,
            flag: f[5].parse().map_err(CliError::Invalid)?,
        });
    }
    Ok(ScanTable { spec, rows, messages: Vec::new() })
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    spec: BTreeMap<String, serde_json::Value>,
    rows: Vec<ScanRow>,
}

fn json_scalar(v: &str) -> serde_json::Value {
    if let Ok(i) = v.parse::<u64>() {
        return i.into();
    }
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() && !v.contains(':') => x.into(),
        _ => v.into(),
    }
}

pub fn to_json(table: &ScanTable) -> String {
    let spec = table.spec.echo().into_iter().map(|(k, v)| (k, json_scalar(&v))).collect();
    let t = JsonTable { spec, rows: table.rows.clone() };
    let mut s = serde_json::to_string_pretty(&t).expect("table serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<ScanTable, CliError> {
    let t: JsonTable = serde_json::from_str(text).map_err(|e| CliError::Invalid(e.to_string()))?;
    let pairs: Vec<(String, String)> = t
        .spec
        .into_iter()
        .map(|(k, v)| {
            let s = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => match n.as_u64() {
                    Some(i) => i.to_string(),
                    None => n.as_f64().unwrap_or(f64::NAN).to_string(),
                },
                other => other.to_string(),
            };
            (k, s)
        })
        .collect();
    Ok(ScanTable { spec: ScanSpec::from_pairs(&pairs)?, rows: t.rows, messages: Vec::new() })
}

/// Writes the table to `dest`, or to stdout when `dest` is None.
pub fn emit(table: &ScanTable, format: Format, dest: Option<&Path>) -> Result<(), CliError> {
    let text = match format {
        Format::Csv => to_csv(table),
        Format::Json => to_json(table),
    };
    match dest {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io { path: path.display().to_string(), source }),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io { path: "<stdout>".into(), source }),
    }
}

#[derive(Debug, Parser)]
#[command(name = "layercp", version, about = "Casimir-Polder shifts near a dielectric layer on a substrate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground-state shift
    Ground(CommonArgs),
    /// Excited-state shift of the downward transition -|E|
    Excited {
        #[command(flatten)]
        common: CommonArgs,
        /// only the resonant part
        #[arg(long)]
        resonant_only: bool,
    },
    /// Trapped-mode counts (TE, TM, total)
    Modes(CommonArgs),
    /// Mode-sum vs Green's-function residuals (xx, zz, max)
    Completeness(CommonArgs),
    /// Electrostatic shift from the Green's function
    Greens(CommonArgs),
    /// Resonant shift swept over L, with the resonance thicknesses echoed
    ResonanceMap {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        kappa_max: Option<u32>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long = "n-l")]
    pub n_l: Option<f64>,
    #[arg(long = "n-s")]
    pub n_s: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long = "Z")]
    pub z: Option<f64>,
    /// transition energy |E|
    #[arg(long = "E")]
    pub e: Option<f64>,
    #[arg(long = "mu-par2")]
    pub mu_par2: Option<f64>,
    #[arg(long = "mu-perp2")]
    pub mu_perp2: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "k-par")]
    pub k_par: Option<f64>,
    #[arg(long)]
    pub sweep: Option<SweepVar>,
    /// lo:hi:count[:log]
    #[arg(long)]
    pub range: Option<SweepRange>,
    #[arg(long)]
    pub normalize: Option<Normalization>,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "rel-tol")]
    pub rel_tol: Option<f64>,
    /// key=value file; command-line flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// worker threads for the sweep
    #[arg(long)]
    pub threads: Option<usize>,
}

impl CommonArgs {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = Vec::new();
        let mut put = |k: &str, x: Option<String>| {
            if let Some(x) = x {
                v.push((k.to_string(), x));
            }
        };
        put("n_l", self.n_l.map(|x| x.to_string()));
        put("n_s", self.n_s.map(|x| x.to_string()));
        put("L", self.l.map(|x| x.to_string()));
        put("Z", self.z.map(|x| x.to_string()));
        put("E", self.e.map(|x| x.to_string()));
        put("mu_par2", self.mu_par2.map(|x| x.to_string()));
        put("mu_perp2", self.mu_perp2.map(|x| x.to_string()));
        put("rho", self.rho.map(|x| x.to_string()));
        put("k_par", self.k_par.map(|x| x.to_string()));
        put("sweep", self.sweep.map(|x| value_name(&x)));
        put("range", self.range.map(|x| x.to_string()));
        put("normalize", self.normalize.map(|x| value_name(&x)));
        put("rel_tol", self.rel_tol.map(|x| x.to_string()));
        v
    }
}

/// Resolved invocation: spec, output format, destination and thread count.
pub struct Invocation {
    pub spec: ScanSpec,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

pub fn resolve(cli: &Cli) -> Result<Invocation, CliError> {
    let (common, quantity, default_sweep, kappa_max) = match &cli.command {
        Command::Ground(c) => (c, Quantity::GroundShift, SweepVar::Z, None),
        Command::Excited { common, resonant_only } => {
            let q = if *resonant_only { Quantity::ResonantShift } else { Quantity::ExcitedShift };
            (common, q, SweepVar::Z, None)
        }
        Command::Modes(c) => (c, Quantity::TrappedModes, SweepVar::KPar, None),
        Command::Completeness(c) => (c, Quantity::Completeness, SweepVar::Z, None),
        Command::Greens(c) => (c, Quantity::Greens, SweepVar::Z, None),
        Command::ResonanceMap { common, kappa_max } => (common, Quantity::ResonantShift, SweepVar::L, Some(kappa_max.unwrap_or(3))),
    };
    let mut pairs = vec![("quantity".to_string(), value_name(&quantity)), ("sweep".to_string(), value_name(&default_sweep))];
    let mut file_pairs = Vec::new();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        file_pairs = parse_pairs(&text)?;
        // the subcommand fixes the quantity
        file_pairs.retain(|(k, _)| canonical_key(k) != "quantity");
        pairs.extend(file_pairs.iter().cloned());
    }
    if let Some(k) = kappa_max {
        if !file_pairs.iter().any(|(k, _)| canonical_key(k) == "kappa_max") {
            pairs.push(("kappa_max".into(), k.to_string()));
        }
    }
    pairs.extend(common.pairs());
    let spec = ScanSpec::from_pairs(&pairs)?;
    spec.validate()?;
    let lookup = |key: &str| file_pairs.iter().rev().find(|(k, _)| canonical_key(k) == key).map(|(_, v)| v.clone());
    let format = match (common.format, lookup("format")) {
        (Some(f), _) => f,
        (None, Some(v)) => parse_value(&v)?,
        (None, None) => Format::Csv,
    };
    let out = common.out.clone().or_else(|| lookup("out").map(PathBuf::from));
    let threads = match (common.threads, lookup("threads")) {
        (Some(t), _) => Some(t),
        (None, Some(v)) => Some(v.parse().map_err(|_| CliError::Invalid(format!("threads: '{v}'")))?),
        (None, None) => None,
    };
    if threads == Some(0) {
        return invalid("threads must be at least 1");
    }
    Ok(Invocation { spec, format, out, threads })
}

/// Full command-line run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let inv = resolve(cli)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = inv.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| CliError::Invalid(e.to_string()))?;
    let table = pool.install(|| run_scan(&inv.spec))?;
    for (i, m) in &table.messages {
        eprintln!("row {i}: {m}");
    }
    emit(&table, inv.format, inv.out.as_deref())?;
    if table.rows.iter().all(ScanRow::is_failed) {
        return Ok(EXIT_ALL_FAILED);
    }
    Ok(EXIT_OK)
}
