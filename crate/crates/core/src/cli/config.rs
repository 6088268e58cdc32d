//! Run configuration: sectioned `key = value` text with unit-suffixed values.
//!
//! ```text
//! [system]
//! g = 2MHz2pi
//! kappa = 20MHz2pi
//! nbar = 0
//!
//! [target]
//! theta = acos(1/sqrt(3))
//! phi = 0.75pi
//! omega_bar = 100MHz2pi
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::TimeWindow;
use crate::lindblad::{HygieneLimits, Method, RelaxationBasis, KERNEL_PIVOT_TOL};
use crate::model::{DriveParams, SystemParams, TargetState, Thermal, RWA_MARGIN};
use crate::units::{ghz_2pi, mhz_2pi};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Syntax(String),
    #[error("missing field `{0}`")]
    Missing(String),
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("unknown field `{0}`")]
    Unknown(String),
    #[error("{0}")]
    Conflict(String),
}

type CResult<T> = std::result::Result<T, ConfigError>;

const KNOWN: &[(&str, &[&str])] = &[
    (
        "system",
        &[
            "omega_sc",
            "omega_c",
            "g",
            "eta",
            "kappa",
            "zeta",
            "gamma_s",
            "gamma_p",
            "gamma",
            "nbar",
            "temperature",
            "fock",
            "relaxation",
        ],
    ),
    ("target", &["theta", "phi", "omega_bar"]),
    ("drive", &["rabi_re", "rabi_im", "drive_freq", "qubit_detuning"]),
    ("time", &["t_end", "steps", "method", "rtol"]),
    (
        "sweep",
        &[
            "kind", "x_axis", "y_axis", "x_min", "x_max", "x_points", "y_min", "y_max", "y_points", "threshold",
            "t_end", "steps", "eta", "zeta", "gamma",
        ],
    ),
    ("tolerances", &["trace", "hermiticity", "min_eigenvalue", "fock_drift", "rwa_margin"]),
];

/// Parsed `section.key → value` table.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> CResult<Self> {
        let ini = ini::Ini::load_from_str_noescape(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let mut entries = BTreeMap::new();
        let mut seen_sections = BTreeSet::new();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if let Some((k, _)) = props.iter().next() {
                    return Err(ConfigError::Syntax(format!("`{k}` appears before any [section]")));
                }
                continue;
            };
            let section = section.trim().to_ascii_lowercase();
            let Some((_, keys)) = KNOWN.iter().find(|(s, _)| *s == section) else {
                return Err(ConfigError::Unknown(format!("[{section}]")));
            };
            if !seen_sections.insert(section.clone()) {
                return Err(ConfigError::Syntax(format!("section [{section}] appears twice")));
            }
            for (k, v) in props.iter() {
                let key = k.trim().to_ascii_lowercase();
                let full = format!("{section}.{key}");
                if !keys.contains(&key.as_str()) {
                    return Err(ConfigError::Unknown(full));
                }
                let value = strip_comment(v).to_string();
                if entries.insert(full.clone(), value).is_some() {
                    return Err(ConfigError::Syntax(format!("`{full}` given twice")));
                }
            }
        }
        Ok(RawConfig { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> CResult<&str> {
        self.get(key).ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    fn has_section(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        self.entries.keys().any(|k| k.starts_with(&prefix))
    }

    fn parsed<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> CResult<Option<T>> {
        self.get(key)
            .map(|v| f(v).map_err(|msg| ConfigError::Invalid { key: key.to_string(), msg }))
            .transpose()
    }

    fn required<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> CResult<T> {
        self.parsed(key, f)?.ok_or_else(|| ConfigError::Missing(key.to_string()))
    }

    /// At most one of the keys may be present.
    fn exclusive(&self, keys: &[&str]) -> CResult<Option<&'static str>> {
        let present: Vec<&str> = keys.iter().copied().filter(|k| self.get(k).is_some()).collect();
        if present.len() > 1 {
            return Err(ConfigError::Conflict(format!("give only one of {}", present.join(", "))));
        }
        Ok(present.first().map(|k| {
            let k: &'static str = KEYS_STATIC.iter().find(|s| **s == *k).copied().unwrap_or("");
            k
        }))
    }
}

const KEYS_STATIC: &[&str] = &[
    "system.g",
    "system.eta",
    "system.kappa",
    "system.zeta",
    "system.gamma_s",
    "system.gamma_p",
    "system.gamma",
    "system.nbar",
    "system.temperature",
    "drive.drive_freq",
    "drive.qubit_detuning",
];

fn strip_comment(v: &str) -> &str {
    let cut = v.char_indices().find(|&(i, c)| (c == '#' || c == ';') && (i == 0 || v[..i].ends_with(' ')));
    match cut {
        Some((i, _)) => v[..i].trim(),
        None => v.trim(),
    }
}

/// `float`, `sqrt(float)` or `a/b` of those.
pub fn parse_scalar(s: &str) -> Result<f64, String> {
    let term = |t: &str| -> Result<f64, String> {
        let t = t.trim();
        if let Some(inner) = t.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            return parse_float(inner).map(f64::sqrt);
        }
        parse_float(t)
    };
    match s.split_once('/') {
        Some((a, b)) => {
            let den = term(b)?;
            if den == 0.0 {
                return Err(format!("division by zero in `{s}`"));
            }
            Ok(term(a)? / den)
        }
        None => term(s),
    }
}

fn parse_float(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn split_suffix<'a>(s: &'a str, suffixes: &[&'a str]) -> Option<(&'a str, &'a str)> {
    suffixes.iter().find_map(|suf| s.strip_suffix(suf).map(|head| (head.trim(), *suf)))
}

/// Angular frequency in rad/s from `<v>MHz2pi`, `<v>GHz2pi`, `<v>kHz2pi` or `<v>rad_s`.
/// A bare `0` is accepted.
pub fn parse_frequency(s: &str) -> Result<f64, String> {
    let s = s.trim();
    match split_suffix(s, &["GHz2pi", "MHz2pi", "kHz2pi", "rad_s"]) {
        Some((v, "GHz2pi")) => parse_scalar(v).map(ghz_2pi),
        Some((v, "MHz2pi")) => parse_scalar(v).map(mhz_2pi),
        Some((v, "kHz2pi")) => parse_scalar(v).map(|x| mhz_2pi(x * 1e-3)),
        Some((v, _)) => parse_scalar(v),
        None => match parse_scalar(s) {
            Ok(0.0) => Ok(0.0),
            _ => Err(format!("`{s}` needs a unit: MHz2pi, GHz2pi, kHz2pi or rad_s")),
        },
    }
}

/// Angle in radians: `0.3`, `0.3rad`, `45deg`, `pi`, `0.75pi`, `pi/4`, `3pi/4`, `acos(1/sqrt(3))`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if let Some(inner) = s.strip_prefix("acos(").and_then(|r| r.strip_suffix(')')) {
        let x = parse_scalar(inner)?;
        if !(-1.0..=1.0).contains(&x) {
            return Err(format!("acos argument {x} outside [-1, 1]"));
        }
        return Ok(x.acos());
    }
    if let Some(v) = s.strip_suffix("deg") {
        return parse_scalar(v).map(f64::to_radians);
    }
    if let Some(v) = s.strip_suffix("rad") {
        return parse_scalar(v);
    }
    if let Some(pos) = s.find("pi") {
        let (head, tail) = (s[..pos].trim(), s[pos + 2..].trim());
        let factor = if head.is_empty() { 1.0 } else { parse_scalar(head)? };
        let divisor = match tail.strip_prefix('/') {
            Some(d) => parse_scalar(d)?,
            None if tail.is_empty() => 1.0,
            None => return Err(format!("cannot parse angle `{s}`")),
        };
        if divisor == 0.0 {
            return Err(format!("division by zero in `{s}`"));
        }
        return Ok(factor * PI / divisor);
    }
    parse_scalar(s)
}

/// Time value; `tau` is the dimensionless `2Ω̄t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeValue {
    Seconds(f64),
    Tau(f64),
}

impl TimeValue {
    pub fn seconds(self, omega_bar: Option<f64>) -> Result<f64, String> {
        match self {
            TimeValue::Seconds(s) => Ok(s),
            TimeValue::Tau(t) => omega_bar
                .map(|w| t / (2.0 * w))
                .ok_or_else(|| "`tau` units need target.omega_bar".to_string()),
        }
    }
}

pub fn parse_time(s: &str) -> Result<TimeValue, String> {
    let s = s.trim();
    let v = match split_suffix(s, &["tau", "us", "ns", "ms", "s"]) {
        Some((v, "tau")) => return nonneg(parse_scalar(v)?).map(TimeValue::Tau),
        Some((v, "us")) => parse_scalar(v)? * 1e-6,
        Some((v, "ns")) => parse_scalar(v)? * 1e-9,
        Some((v, "ms")) => parse_scalar(v)? * 1e-3,
        Some((v, _)) => parse_scalar(v)?,
        None => return Err(format!("`{s}` needs a unit: s, ms, us, ns or tau")),
    };
    nonneg(v).map(TimeValue::Seconds)
}

/// Temperature in kelvin from `<v>K` or `<v>mK`.
pub fn parse_temperature(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match split_suffix(s, &["mK", "K"]) {
        Some((v, "mK")) => parse_scalar(v)? * 1e-3,
        Some((v, _)) => parse_scalar(v)?,
        None => return Err(format!("`{s}` needs a unit: K or mK")),
    };
    nonneg(v)
}

fn nonneg(v: f64) -> Result<f64, String> {
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be >= 0"))
    }
}

fn positive(v: f64) -> Result<f64, String> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be > 0"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{s}` is not a non-negative integer"))
}

/// How the drive is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum DriveSpec {
    /// Drive designed for a target with effective Rabi frequency Ω̄.
    Designed { target: TargetState, omega_bar: f64 },
    /// Explicit drive; the fidelity target follows the drive direction unless given.
    Explicit { drive: DriveParams, target: TargetState },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSpec {
    pub t_end: f64,
    pub steps: usize,
    pub method: Method,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    RateMap,
    Robustness,
    FidelityMap,
}

/// Axes available to fidelity maps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapAxis {
    Eta,
    Zeta,
    Gamma,
    Theta,
    Phi,
}

impl MapAxis {
    fn parse(s: &str) -> Result<Self, String> {
        Ok(match s.trim() {
            "eta" => MapAxis::Eta,
            "zeta" => MapAxis::Zeta,
            "gamma" => MapAxis::Gamma,
            "theta" => MapAxis::Theta,
            "phi" => MapAxis::Phi,
            other => return Err(format!("unknown axis `{other}` (eta, zeta, gamma, theta, phi)")),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            MapAxis::Eta => "eta",
            MapAxis::Zeta => "zeta",
            MapAxis::Gamma => "gamma",
            MapAxis::Theta => "theta",
            MapAxis::Phi => "phi",
        }
    }

    fn is_angle(self) -> bool {
        matches!(self, MapAxis::Theta | MapAxis::Phi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub x: GridAxis,
    pub y: GridAxis,
    /// Axis names for fidelity maps.
    pub axes: Option<(MapAxis, MapAxis)>,
    pub threshold: f64,
    /// Evolution window for time-to-threshold; `t_end = 0` disables it.
    pub window: Option<TimeWindow>,
    /// Fixed dimensionless parameters for fidelity maps.
    pub eta: Option<f64>,
    pub zeta: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hygiene: HygieneLimits,
    pub fock_drift: f64,
    pub rwa_margin: f64,
    pub kernel_pivot: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { hygiene: HygieneLimits::default(), fock_drift: 1e-4, rwa_margin: RWA_MARGIN, kernel_pivot: KERNEL_PIVOT_TOL }
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub system: SystemParams,
    pub relaxation: RelaxationBasis,
    /// `None` when the file has neither a target nor a drive.
    pub drive: Option<DriveSpec>,
    pub time: Option<TimeSpec>,
    pub sweep: Option<SweepSpec>,
    pub tolerances: Tolerances,
    /// SHA-256 of the config text.
    pub hash: String,
}

impl RunConfig {
    pub fn from_text(text: &str) -> CResult<Self> {
        let raw = RawConfig::parse(text)?;
        let hash = Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect();
        Self::from_raw(&raw, hash)
    }

    pub fn from_raw(raw: &RawConfig, hash: String) -> CResult<Self> {
        let omega_bar = raw.parsed("target.omega_bar", |s| parse_frequency(s).and_then(positive))?;
        let system = resolve_system(raw, omega_bar)?;
        let relaxation = match raw.get("system.relaxation").map(str::trim) {
            None | Some("energy") => RelaxationBasis::Energy,
            Some("rotated") => RelaxationBasis::Rotated,
            Some(other) => {
                return Err(ConfigError::Invalid {
                    key: "system.relaxation".into(),
                    msg: format!("`{other}` is not `energy` or `rotated`"),
                })
            }
        };
        let drive = resolve_drive(raw, &system, omega_bar)?;
        let time = resolve_time(raw, omega_bar)?;
        let sweep = resolve_sweep(raw, omega_bar)?;
        let mut tolerances = Tolerances::default();
        if let Some(v) = raw.parsed("tolerances.trace", |s| parse_scalar(s).and_then(positive))? {
            tolerances.hygiene.trace = v;
        }
        if let Some(v) = raw.parsed("tolerances.hermiticity", |s| parse_scalar(s).and_then(positive))? {
            tolerances.hygiene.hermiticity = v;
        }
        if let Some(v) = raw.parsed("tolerances.min_eigenvalue", parse_scalar)? {
            tolerances.hygiene.min_eigenvalue = v;
        }
        if let Some(v) = raw.parsed("tolerances.fock_drift", |s| parse_scalar(s).and_then(positive))? {
            tolerances.fock_drift = v;
        }
        if let Some(v) = raw.parsed("tolerances.rwa_margin", |s| parse_scalar(s).and_then(positive))? {
            tolerances.rwa_margin = v;
        }
        Ok(RunConfig { system, relaxation, drive, time, sweep, tolerances, hash })
    }

    /// Ω̄ when the drive is designed.
    pub fn omega_bar(&self) -> Option<f64> {
        match &self.drive {
            Some(DriveSpec::Designed { omega_bar, .. }) => Some(*omega_bar),
            _ => None,
        }
    }
}

fn resolve_system(raw: &RawConfig, omega_bar: Option<f64>) -> CResult<SystemParams> {
    let defaults = SystemParams::typical();
    let need_bar = |key: &str| {
        omega_bar.ok_or_else(|| ConfigError::Conflict(format!("`{key}` is relative to Ω̄ and needs target.omega_bar")))
    };
    let freq = |key: &str| raw.parsed(key, |s| parse_frequency(s).and_then(nonneg));
    let ratio = |key: &str| raw.parsed(key, |s| parse_scalar(s).and_then(nonneg));

    let omega_sc = raw.parsed("system.omega_sc", |s| parse_frequency(s).and_then(positive))?.unwrap_or(defaults.omega_sc);
    let omega_c = raw.parsed("system.omega_c", |s| parse_frequency(s).and_then(positive))?.unwrap_or(omega_sc);

    // A fidelity map may set η or ζ itself, as a fixed value or as an axis.
    let swept = |name: &str| {
        raw.get("sweep.kind").map(str::trim) == Some("fidelity_map")
            && (raw.get(&format!("sweep.{name}")).is_some()
                || raw.get("sweep.x_axis").map(str::trim) == Some(name)
                || raw.get("sweep.y_axis").map(str::trim) == Some(name))
    };
    let g = match raw.exclusive(&["system.g", "system.eta"])? {
        Some("system.eta") => 2.0 * need_bar("system.eta")? * ratio("system.eta")?.unwrap_or(0.0),
        Some(_) => freq("system.g")?.unwrap_or(0.0),
        None if swept("eta") => 0.0,
        None => return Err(ConfigError::Missing("system.g".into())),
    };
    let kappa = match raw.exclusive(&["system.kappa", "system.zeta"])? {
        Some("system.zeta") => 2.0 * need_bar("system.zeta")? * ratio("system.zeta")?.unwrap_or(0.0),
        Some(_) => freq("system.kappa")?.unwrap_or(0.0),
        None if swept("zeta") => 0.0,
        None => return Err(ConfigError::Missing("system.kappa".into())),
    };
    let (gamma_s, gamma_p) = if let Some(gamma) = ratio("system.gamma")? {
        if raw.get("system.gamma_s").is_some() || raw.get("system.gamma_p").is_some() {
            return Err(ConfigError::Conflict("give either system.gamma or system.gamma_s/gamma_p".into()));
        }
        let rate = 2.0 * need_bar("system.gamma")? * gamma;
        (rate, rate)
    } else {
        (freq("system.gamma_s")?.unwrap_or(0.0), freq("system.gamma_p")?.unwrap_or(0.0))
    };
    let thermal = match raw.exclusive(&["system.nbar", "system.temperature"])? {
        Some("system.temperature") => Thermal::Temperature(raw.required("system.temperature", parse_temperature)?),
        Some(_) => Thermal::Occupation(raw.required("system.nbar", |s| parse_scalar(s).and_then(nonneg))?),
        None => Thermal::Occupation(0.0),
    };
    let fock = raw.parsed("system.fock", parse_count)?.unwrap_or(defaults.fock);
    let sys = SystemParams { omega_c, omega_sc, g, kappa, gamma_s, gamma_p, thermal, fock };
    sys.validate().map_err(|e| ConfigError::Invalid { key: "system".into(), msg: e.to_string() })?;
    Ok(sys)
}

/// Target whose axis is parallel to the drive vector `(Re Ω, Im Ω, δϖ/2)`.
pub fn target_along(rabi_re: f64, rabi_im: f64, qubit_detuning: f64) -> Option<TargetState> {
    let v = [rabi_re, rabi_im, 0.5 * qubit_detuning];
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
    // axis = (−sinθ cosφ, sinθ sinφ, cosθ)
    let phi = if theta.sin() == 0.0 { 0.0 } else { v[1].atan2(-v[0]).rem_euclid(2.0 * PI) };
    TargetState::wrapped(theta, phi).ok()
}

fn resolve_drive(raw: &RawConfig, sys: &SystemParams, omega_bar: Option<f64>) -> CResult<Option<DriveSpec>> {
    let has_drive = raw.has_section("drive");
    let target = if raw.get("target.theta").is_some() || raw.get("target.phi").is_some() {
        let theta = raw.required("target.theta", parse_angle)?;
        let phi = raw.required("target.phi", parse_angle)?;
        Some(TargetState::wrapped(theta, phi).map_err(|e| ConfigError::Invalid { key: "target".into(), msg: e.to_string() })?)
    } else {
        None
    };
    match (has_drive, omega_bar) {
        (true, Some(_)) => Err(ConfigError::Conflict(
            "give either a [drive] section or target.omega_bar, not both".into(),
        )),
        (false, Some(omega_bar)) => {
            let target = target.ok_or_else(|| ConfigError::Missing("target.theta".into()))?;
            Ok(Some(DriveSpec::Designed { target, omega_bar }))
        }
        (true, None) => {
            let rabi_re = raw.parsed("drive.rabi_re", parse_frequency)?.unwrap_or(0.0);
            let rabi_im = raw.parsed("drive.rabi_im", parse_frequency)?.unwrap_or(0.0);
            let drive_freq = match raw.exclusive(&["drive.drive_freq", "drive.qubit_detuning"])? {
                Some("drive.qubit_detuning") => sys.omega_sc - raw.required("drive.qubit_detuning", parse_frequency)?,
                Some(_) => raw.required("drive.drive_freq", |s| parse_frequency(s).and_then(positive))?,
                None => return Err(ConfigError::Missing("drive.drive_freq".into())),
            };
            let drive = DriveParams { rabi_re, rabi_im, counter_rotating: 0.0, drive_freq };
            let target = match target {
                Some(t) => t,
                None => target_along(rabi_re, rabi_im, drive.qubit_detuning(sys)).ok_or_else(|| {
                    ConfigError::Conflict("drive vector is zero; give target.theta and target.phi".into())
                })?,
            };
            Ok(Some(DriveSpec::Explicit { drive, target }))
        }
        (false, None) => {
            if target.is_some() {
                Err(ConfigError::Missing("target.omega_bar".into()))
            } else {
                Ok(None)
            }
        }
    }
}

fn resolve_time(raw: &RawConfig, omega_bar: Option<f64>) -> CResult<Option<TimeSpec>> {
    if !raw.has_section("time") {
        return Ok(None);
    }
    let t_end = raw
        .required("time.t_end", parse_time)?
        .seconds(omega_bar)
        .map_err(|msg| ConfigError::Invalid { key: "time.t_end".into(), msg })?;
    let steps = raw.parsed("time.steps", parse_count)?.unwrap_or(200);
    let rtol = raw.parsed("time.rtol", |s| parse_scalar(s).and_then(positive))?.unwrap_or(1e-9);
    let method = match raw.get("time.method").map(str::trim) {
        None | Some("expm") => Method::Propagator,
        Some("rk") => Method::RungeKutta { rtol, atol: rtol * 1e-3 },
        Some(other) => {
            return Err(ConfigError::Invalid { key: "time.method".into(), msg: format!("`{other}` is not `expm` or `rk`") })
        }
    };
    Ok(Some(TimeSpec { t_end, steps, method }))
}

fn resolve_sweep(raw: &RawConfig, omega_bar: Option<f64>) -> CResult<Option<SweepSpec>> {
    if !raw.has_section("sweep") {
        return Ok(None);
    }
    let kind = match raw.require("sweep.kind")?.trim() {
        "rate_map" => SweepKind::RateMap,
        "robustness" => SweepKind::Robustness,
        "fidelity_map" => SweepKind::FidelityMap,
        other => {
            return Err(ConfigError::Invalid {
                key: "sweep.kind".into(),
                msg: format!("`{other}` is not rate_map, robustness or fidelity_map"),
            })
        }
    };
    let axes = if kind == SweepKind::FidelityMap {
        let x = raw.required("sweep.x_axis", MapAxis::parse)?;
        let y = raw.required("sweep.y_axis", MapAxis::parse)?;
        if x == y {
            return Err(ConfigError::Conflict("sweep.x_axis and sweep.y_axis must differ".into()));
        }
        Some((x, y))
    } else {
        None
    };
    let axis = |name: &str, angle: bool| -> CResult<GridAxis> {
        let p = |s: &str| if angle { parse_angle(s) } else { parse_scalar(s) };
        let min = raw.required(&format!("sweep.{name}_min"), p)?;
        let max = raw.required(&format!("sweep.{name}_max"), p)?;
        let points = raw.required(&format!("sweep.{name}_points"), parse_count)?;
        let key = format!("sweep.{name}_points");
        if points == 0 {
            return Err(ConfigError::Invalid { key, msg: "must be at least 1".into() });
        }
        if points > 1 && !(max > min) {
            return Err(ConfigError::Invalid { key: format!("sweep.{name}_max"), msg: "must exceed the minimum".into() });
        }
        Ok(GridAxis { min, max, points })
    };
    let x = axis("x", axes.is_some_and(|a| a.0.is_angle()))?;
    let y = axis("y", kind == SweepKind::RateMap || axes.is_some_and(|a| a.1.is_angle()))?;
    let threshold = raw.parsed("sweep.threshold", parse_scalar)?.unwrap_or(0.99);
    let window = match raw.get("sweep.t_end") {
        None => Some(TimeWindow { t_end: 20e-6, steps: 4000 }),
        Some(_) => {
            let t_end = raw
                .required("sweep.t_end", parse_time)?
                .seconds(omega_bar)
                .map_err(|msg| ConfigError::Invalid { key: "sweep.t_end".into(), msg })?;
            let steps = raw.parsed("sweep.steps", parse_count)?.unwrap_or(4000);
            if steps == 0 || t_end == 0.0 {
                None
            } else {
                Some(TimeWindow { t_end, steps })
            }
        }
    };
    let ratio = |key: &str| raw.parsed(key, |s| parse_scalar(s).and_then(nonneg));
    Ok(Some(SweepSpec {
        kind,
        x,
        y,
        axes,
        threshold,
        window,
        eta: ratio("sweep.eta")?,
        zeta: ratio("sweep.zeta")?,
        gamma: ratio("sweep.gamma")?,
    }))
}
