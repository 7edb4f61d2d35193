//! Experiment configuration: a TOML file whose physical quantities are
//! strings with an explicit unit, e.g. `a_perp = "114 MHz"`.
//!
//! Every key missing from the user file falls back to [`DEFAULT_CONFIG`],
//! so the printed defaults are the complete list of physics inputs. All
//! schema problems are collected before returning.

use std::ops::Range;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml_edit::{Document, Item, Table, Value};

use crate::budget::DetectionAreaParams;
use crate::dynamics::Segment;
use crate::error::{ConfigError, Error, Result};
use crate::nv::{DriveField, DrivePhase, NvCenter, T1rhoModel};
use crate::spectra::{
    BackgroundModel, EnsembleSpec, HyperfineModel, LineOrder, OrientationRule, Placement, ShoulderShape,
    SynthesisMode,
};
use crate::spin::{EulerAngles, HyperfineTensor, SpinSpecies, TargetSpinSystem};

pub const DEFAULT_CONFIG: &str = r#"# Quantities carry units: MHz, kHz, GHz | us, ns, ms | nm, A | G, mT | deg, rad.
seed = 1

[target]
# p1_n15 | p1_n14 | nitroxide_n15 | custom
species = "p1_n15"
a_perp = "114 MHz"
a_zz = "159.9 MHz"
# principal = ["61 MHz", "97.5 MHz", "143.2 MHz"] replaces a_perp/a_zz
euler = ["0 deg", "0 deg", "0 deg"]
quadrupole = "0 MHz"
# only read for species = "custom"
electron_spin = 0.5
nuclear_spin = 0.5
electron_gamma = "-2.8025 MHz/G"
nuclear_gamma = "-4.316e-4 MHz/G"
# target dephasing rate (ordinary, per microsecond)
gamma = "10 MHz"

[nv]
zero_field_splitting = "2870 MHz"
gyromagnetic_ratio = "-2.803 MHz/G"
t2_star = "0.1 us"
# "none", a time, or a table [["100 MHz", "70 us"], ...]
t1_rho = "70 us"
dipolar_constant = "52 MHz nm^3"

[ensemble]
count = 1
# fixed | uniform
orientation = "fixed"
euler = ["0 deg", "0 deg", "0 deg"]
# fixed | shell | annulus
placement = "fixed"
position = ["1.5 nm", "2 nm", "5 nm"]
radius = "5 nm"
r_min = "0 nm"
r_max = "15 nm"
depth = "8 nm"

[rabi]
frequency = "396 MHz"
t_start = "0 us"
t_stop = "0.01 us"
t_step = "0.00005 us"

[spinlock]
pulse_power = "396 MHz"
lock_power = "100 MHz"
tau_start = "0 us"
tau_stop = "200 us"
tau_step = "5 us"
# segments = [
#   { kind = "polarize" },
#   { kind = "pulse", power = "396 MHz", phase = "y", duration = "0.000631 us" },
#   { kind = "pulse", power = "100 MHz", phase = "x", duration = "tau" },
#   { kind = "pulse", power = "396 MHz", phase = "-y", duration = "0.000631 us" },
#   { kind = "readout" },
# ]

[zf]
power_start = "20 MHz"
power_stop = "320 MHz"
power_step = "0.5 MHz"
tau = "10 us"
fwhm = "8 MHz"
# deepest dip as a fraction, or "none" for the bare model depth
contrast = 0.03
# fast | exact
mode = "fast"
# model | self
baseline = "model"
background = false

[deer]
field = "300 G"
freq_start = "700 MHz"
freq_stop = "1000 MHz"
freq_step = "0.5 MHz"
fwhm = "8 MHz"
contrast = 0.03
background = false

[background]
areal_density = "0.01 nm^-2"
g_factor = 2.0023
correlation_linewidth = "40 MHz"
depth = "8 nm"
eta_sq = 1.0
# half_gaussian | half_lorentzian
shoulder = "half_gaussian"

[noise]
# shot-noise repetitions per point; 0 disables the noise layer
repetitions = 0

[fit]
peaks = 3
# axial | full
model = "axial"
# ascending | middle_first
order = "ascending"
threshold = "10 MHz"

[budget]
areal_density = "5.5e-3 nm^-2"
gamma = "10 MHz"
tau = "10 us"
eta_sq = [1.25, 0.75, 1.25]
r0 = "15 nm"
contrast = 0.03

[output]
dir = "out"
create_dir = true
"#;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RabiConfig {
    pub frequency: f64,
    pub durations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SegmentTemplate {
    Fixed(Segment),
    /// A pulse or wait whose duration is the swept lock time.
    SweptPulse(DriveField),
    SweptWait,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinLockConfig {
    pub pulse_power: f64,
    pub lock_power: f64,
    pub taus: Vec<f64>,
    pub segments: Option<Vec<SegmentTemplate>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineSource {
    /// Divide by exp(−τ/T₁ρ(Ω)) from the NV parameters.
    Model,
    /// Robust polynomial through the off-peak points.
    SelfCalibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZfConfig {
    pub axis: Vec<f64>,
    pub tau: f64,
    pub fwhm: f64,
    pub contrast: Option<f64>,
    pub mode: SynthesisMode,
    pub baseline: BaselineSource,
    pub background: bool,
    /// π/2 pulse power for exact synthesis; the lock power when unset.
    pub pulse_power: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeerConfig {
    pub field: f64,
    pub axis: Vec<f64>,
    pub fwhm: f64,
    pub contrast: f64,
    pub background: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitConfig {
    pub peaks: usize,
    pub model: HyperfineModel,
    pub order: LineOrder,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetConfig {
    pub params: DetectionAreaParams,
    pub eta_sq: [f64; 3],
    pub r0: f64,
    pub contrast: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub create_dir: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub target: TargetSpinSystem,
    /// Target dephasing rate, μs⁻¹.
    pub target_gamma: f64,
    pub nv: NvCenter,
    pub dipolar_constant: f64,
    pub ensemble: EnsembleSpec,
    pub rabi: RabiConfig,
    pub spinlock: SpinLockConfig,
    pub zf: ZfConfig,
    pub deer: DeerConfig,
    pub background: BackgroundModel,
    pub repetitions: u64,
    pub fit: FitConfig,
    pub budget: BudgetConfig,
    /// Where files go does not change what is in them.
    #[serde(skip)]
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        parse_config_str(DEFAULT_CONFIG).expect("built-in defaults parse")
    }
}

impl ExperimentConfig {
    /// Hex SHA-256 prefix of the resolved configuration.
    pub fn digest(&self) -> String {
        self.digest_with("")
    }

    /// Digest of the configuration together with run arguments that are not
    /// part of it.
    pub fn digest_with(&self, extra: &str) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(format!("{json}\n{extra}").as_bytes());
        hash.iter().take(6).map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let defaults: Document<String> = DEFAULT_CONFIG.parse().expect("built-in defaults are valid TOML");
    let mut ctx = Ctx::new(text);
    let user = ctx.parse_user(text);
    let Some(user) = user else {
        return Err(Error::Config(ctx.errors));
    };
    let cfg = build(&mut ctx, user.as_table(), defaults.as_table());
    if ctx.errors.is_empty() {
        Ok(cfg)
    } else {
        ctx.errors.sort_by_key(|e| (e.line, e.column));
        Err(Error::Config(ctx.errors))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Dim {
    Frequency,
    Time,
    Length,
    Field,
    Angle,
    ArealDensity,
    Coupling,
    Gyro,
}

impl Dim {
    fn units(self) -> &'static [(&'static str, f64)] {
        match self {
            Dim::Frequency => &[("MHz", 1.0), ("kHz", 1e-3), ("GHz", 1e3), ("Hz", 1e-6), ("/us", 1.0)],
            Dim::Time => &[("us", 1.0), ("μs", 1.0), ("ns", 1e-3), ("ms", 1e3), ("s", 1e6)],
            Dim::Length => &[("nm", 1.0), ("A", 0.1), ("um", 1e3)],
            Dim::Field => &[("G", 1.0), ("mT", 10.0), ("T", 1e4)],
            Dim::Angle => &[("deg", std::f64::consts::PI / 180.0), ("rad", 1.0)],
            Dim::ArealDensity => &[("nm^-2", 1.0), ("cm^-2", 1e-14)],
            Dim::Coupling => &[("MHz nm^3", 1.0)],
            Dim::Gyro => &[("MHz/G", 1.0), ("kHz/G", 1e-3)],
        }
    }

    fn expected(self) -> String {
        self.units().iter().map(|u| u.0).collect::<Vec<_>>().join(", ")
    }
}

#[derive(Debug, Clone, Copy)]
enum Check {
    Any,
    Positive,
    NonNegative,
}

struct Ctx {
    line_starts: Vec<usize>,
    errors: Vec<ConfigError>,
}

impl Ctx {
    fn new(text: &str) -> Self {
        let mut ctx = Self {
            line_starts: Vec::new(),
            errors: Vec::new(),
        };
        ctx.index_lines(text);
        ctx
    }

    fn index_lines(&mut self, text: &str) {
        self.line_starts = vec![0];
        self.line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
    }

    fn location(&self, span: Option<Range<usize>>) -> (usize, usize) {
        match span {
            Some(r) => {
                let line = self.line_starts.partition_point(|&s| s <= r.start);
                (line, r.start - self.line_starts[line - 1] + 1)
            }
            None => (0, 0),
        }
    }

    fn error(&mut self, span: Option<Range<usize>>, field: &str, message: impl Into<String>) {
        let (line, column) = self.location(span);
        self.errors.push(ConfigError {
            line,
            column,
            field: field.to_string(),
            message: message.into(),
        });
    }

    /// Parse the user text. A duplicate key is reported with both locations;
    /// the later line is then commented out and parsing resumes so the other
    /// errors in the file still surface.
    fn parse_user(&mut self, text: &str) -> Option<Document<String>> {
        let mut text = text.to_string();
        for _ in 0..64 {
            self.index_lines(&text);
            let err = match text.parse::<Document<String>>() {
                Ok(doc) => return Some(doc),
                Err(e) => e,
            };
            let span = err.span();
            if err.message() != "duplicate key" || span.is_none() {
                self.error(span, "", err.message().to_string());
                return None;
            }
            let span = span.unwrap();
            let key = text[span.clone()].trim().to_string();
            let line_start = text[..span.start].rfind('\n').map_or(0, |i| i + 1);
            let header = text[line_start..span.start].trim_start().starts_with('[');
            let first = first_definition(&text[..line_start], &key, header);
            let (fl, fc) = self.location(first.clone());
            let message = match first {
                Some(_) => format!("duplicate key, first defined at {fl}:{fc}"),
                None => "duplicate key".to_string(),
            };
            let field = match enclosing_section(&text[..line_start]) {
                Some(section) if !header => format!("{section}.{key}"),
                _ => key.clone(),
            };
            self.error(Some(span.clone()), &field, message);
            if header {
                return None;
            }
            text.replace_range(line_start..line_start, "#");
        }
        None
    }
}

/// Name of the last `[table]` header opened in `prefix`.
fn enclosing_section(prefix: &str) -> Option<String> {
    prefix.lines().rev().find_map(|l| {
        let l = l.trim();
        let inner = l.strip_prefix('[')?.split(']').next()?;
        let bare = inner.chars().all(|c| c.is_ascii_alphanumeric() || "_-. ".contains(c));
        (bare && !inner.is_empty()).then(|| inner.split('.').map(str::trim).collect::<Vec<_>>().join("."))
    })
}

/// Where `key` was first defined in the already-valid prefix of a file.
fn first_definition(prefix: &str, key: &str, header: bool) -> Option<Range<usize>> {
    let doc: Document<String> = prefix.parse().ok()?;
    let root = doc.as_table();
    if header {
        let path: Vec<&str> = key.split('.').map(str::trim).collect();
        let mut t = root;
        for p in &path[..path.len() - 1] {
            t = t.get(p)?.as_table()?;
        }
        return t.key(path[path.len() - 1])?.span();
    }
    // the enclosing table is the last one opened in the prefix
    let mut best: Option<(isize, &Table)> = Some((-1, root));
    fn walk<'a>(t: &'a Table, best: &mut Option<(isize, &'a Table)>) {
        for (_, item) in t.iter() {
            if let Some(sub) = item.as_table() {
                let pos = sub.position().map_or(-1, |p| p);
                if best.is_none_or(|b| pos > b.0) {
                    *best = Some((pos, sub));
                }
                walk(sub, best);
            }
        }
    }
    walk(root, &mut best);
    best?.1.key(key)?.span()
}

/// A section of the user file and of the defaults.
struct Section<'a> {
    name: &'a str,
    user: Option<&'a Table>,
    default: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn field(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn user_has(&self, key: &str) -> bool {
        self.user.is_some_and(|t| t.contains_key(key))
    }

    fn get(&self, key: &str) -> Option<&'a Item> {
        self.user
            .and_then(|t| t.get(key))
            .or_else(|| self.default.and_then(|t| t.get(key)))
    }
}

fn section<'a>(ctx: &mut Ctx, user: &'a Table, default: &'a Table, name: &'a str) -> Section<'a> {
    let default_t = default.get(name).and_then(Item::as_table);
    let user_t = match user.get(name) {
        None => None,
        Some(item) => match item.as_table() {
            Some(t) => Some(t),
            None => {
                ctx.error(item.span(), name, "expected a table");
                None
            }
        },
    };
    if let (Some(u), Some(d)) = (user_t, default_t) {
        for (k, item) in u.iter() {
            if !d.contains_key(k) && !OPTIONAL_KEYS.contains(&(name, k)) {
                let span = u.key(k).and_then(|k| k.span()).or(item.span());
                ctx.error(span, &format!("{name}.{k}"), "unknown key");
            }
        }
    }
    Section {
        name,
        user: user_t,
        default: default_t,
    }
}

/// Keys that are accepted but have no default value.
const OPTIONAL_KEYS: &[(&str, &str)] = &[
    ("target", "principal"),
    ("spinlock", "segments"),
    ("zf", "pulse_power"),
];

fn parse_quantity(s: &str, dim: Dim) -> std::result::Result<f64, String> {
    let s = s.trim();
    let (num, unit) = match s.find(char::is_whitespace) {
        Some(i) => (&s[..i], s[i..].trim()),
        None => {
            return Err(match s.parse::<f64>() {
                Ok(_) => format!("missing unit (expected one of: {})", dim.expected()),
                Err(_) => format!("expected `<number> <unit>`, got `{s}`"),
            })
        }
    };
    let value: f64 = num.parse().map_err(|_| format!("`{num}` is not a number"))?;
    let unit_norm = unit.split_whitespace().collect::<Vec<_>>().join(" ");
    let scale = dim
        .units()
        .iter()
        .find(|u| u.0 == unit_norm)
        .map(|u| u.1)
        .ok_or_else(|| format!("unit `{unit}` not allowed here (expected one of: {})", dim.expected()))?;
    if !value.is_finite() {
        return Err("value must be finite".to_string());
    }
    Ok(value * scale)
}

fn check_value(ctx: &mut Ctx, span: Option<Range<usize>>, field: &str, v: f64, check: Check) -> bool {
    let ok = match check {
        Check::Any => true,
        Check::Positive => v > 0.0,
        Check::NonNegative => v >= 0.0,
    };
    if !ok {
        let what = match check {
            Check::Positive => "positive",
            _ => "non-negative",
        };
        ctx.error(span, field, format!("out of range: must be {what}, got {v}"));
    }
    ok
}

fn quantity_value(ctx: &mut Ctx, v: &Value, field: &str, dim: Dim, check: Check) -> Option<f64> {
    let span = v.span();
    let result = match v {
        Value::String(s) => parse_quantity(s.value(), dim),
        Value::Float(_) | Value::Integer(_) => Err(format!("missing unit (expected one of: {})", dim.expected())),
        _ => Err("expected a quantity string such as \"10 MHz\"".to_string()),
    };
    match result {
        Ok(x) => check_value(ctx, span, field, x, check).then_some(x),
        Err(msg) => {
            ctx.error(span, field, msg);
            None
        }
    }
}

fn quantity(ctx: &mut Ctx, s: &Section, key: &str, dim: Dim, check: Check) -> f64 {
    let field = s.field(key);
    match s.get(key).and_then(Item::as_value) {
        Some(v) => quantity_value(ctx, v, &field, dim, check).unwrap_or(f64::NAN),
        None => {
            ctx.error(None, &field, "missing value");
            f64::NAN
        }
    }
}

fn optional_quantity(ctx: &mut Ctx, s: &Section, key: &str, dim: Dim, check: Check) -> Option<f64> {
    let v = s.get(key)?.as_value()?;
    quantity_value(ctx, v, &s.field(key), dim, check)
}

fn quantity_array<const N: usize>(ctx: &mut Ctx, s: &Section, key: &str, dim: Dim, check: Check) -> [f64; N] {
    let field = s.field(key);
    let mut out = [f64::NAN; N];
    match s.get(key) {
        Some(item) => match item.as_array() {
            Some(arr) if arr.len() == N => {
                for (o, v) in out.iter_mut().zip(arr.iter()) {
                    *o = quantity_value(ctx, v, &field, dim, check).unwrap_or(f64::NAN);
                }
            }
            _ => ctx.error(item.span(), &field, format!("expected an array of {N} quantities")),
        },
        None => ctx.error(None, &field, "missing value"),
    }
    out
}

fn number(ctx: &mut Ctx, s: &Section, key: &str, check: Check) -> f64 {
    let field = s.field(key);
    let Some(item) = s.get(key) else {
        ctx.error(None, &field, "missing value");
        return f64::NAN;
    };
    let v = match item.as_value() {
        Some(Value::Float(f)) => Some(*f.value()),
        Some(Value::Integer(i)) => Some(*i.value() as f64),
        _ => None,
    };
    match v {
        Some(x) if check_value(ctx, item.span(), &field, x, check) => x,
        Some(_) => f64::NAN,
        None => {
            ctx.error(item.span(), &field, "expected a dimensionless number");
            f64::NAN
        }
    }
}

fn integer(ctx: &mut Ctx, s: &Section, key: &str) -> u64 {
    let field = s.field(key);
    let Some(item) = s.get(key) else {
        ctx.error(None, &field, "missing value");
        return 0;
    };
    match item.as_integer() {
        Some(i) if i >= 0 => i as u64,
        Some(i) => {
            ctx.error(item.span(), &field, format!("out of range: must be non-negative, got {i}"));
            0
        }
        None => {
            ctx.error(item.span(), &field, "expected a non-negative integer");
            0
        }
    }
}

fn boolean(ctx: &mut Ctx, s: &Section, key: &str) -> bool {
    let field = s.field(key);
    match s.get(key) {
        Some(item) => item.as_bool().unwrap_or_else(|| {
            ctx.error(item.span(), &field, "expected true or false");
            false
        }),
        None => false,
    }
}

fn choice<'c>(ctx: &mut Ctx, s: &Section, key: &str, options: &[&'c str]) -> &'c str {
    let field = s.field(key);
    let Some(item) = s.get(key) else {
        ctx.error(None, &field, "missing value");
        return options[0];
    };
    match item.as_str().and_then(|v| options.iter().find(|o| **o == v)) {
        Some(o) => o,
        None => {
            ctx.error(item.span(), &field, format!("expected one of: {}", options.join(", ")));
            options[0]
        }
    }
}

fn sweep(ctx: &mut Ctx, s: &Section, prefix: &str, dim: Dim) -> Vec<f64> {
    let start = quantity(ctx, s, &format!("{prefix}_start"), dim, Check::NonNegative);
    let stop = quantity(ctx, s, &format!("{prefix}_stop"), dim, Check::NonNegative);
    let step = quantity(ctx, s, &format!("{prefix}_step"), dim, Check::Positive);
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Vec::new();
    }
    let span = s.get(&format!("{prefix}_stop")).and_then(Item::span);
    if stop < start {
        ctx.error(span, &s.field(&format!("{prefix}_stop")), "sweep stop is below its start");
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if n > 1_000_000 {
        ctx.error(span, &s.field(&format!("{prefix}_step")), format!("sweep has {n} points; the limit is 1000000"));
        return Vec::new();
    }
    (0..n).map(|k| start + k as f64 * step).collect()
}

fn build(ctx: &mut Ctx, user: &Table, defaults: &Table) -> ExperimentConfig {
    const SECTIONS: &[&str] = &[
        "target", "nv", "ensemble", "rabi", "spinlock", "zf", "deer", "background", "noise", "fit", "budget",
        "output",
    ];
    for (k, item) in user.iter() {
        if k != "seed" && !SECTIONS.contains(&k) {
            let span = user.key(k).and_then(|k| k.span()).or(item.span());
            ctx.error(span, k, "unknown key");
        }
    }
    let root = Section {
        name: "",
        user: Some(user),
        default: Some(defaults),
    };
    let seed = integer(ctx, &root, "seed");

    let s = section(ctx, user, defaults, "target");
    let (target, target_gamma) = target_section(ctx, &s);

    let s = section(ctx, user, defaults, "nv");
    let nv = NvCenter {
        zero_field_splitting: quantity(ctx, &s, "zero_field_splitting", Dim::Frequency, Check::Positive),
        gyromagnetic_ratio: quantity(ctx, &s, "gyromagnetic_ratio", Dim::Gyro, Check::Any),
        t2_star: quantity(ctx, &s, "t2_star", Dim::Time, Check::Positive),
        t1_rho: t1rho(ctx, &s),
    };
    let dipolar_constant = quantity(ctx, &s, "dipolar_constant", Dim::Coupling, Check::NonNegative);

    let s = section(ctx, user, defaults, "ensemble");
    let ensemble = ensemble_section(ctx, &s);

    let s = section(ctx, user, defaults, "rabi");
    let rabi = RabiConfig {
        frequency: quantity(ctx, &s, "frequency", Dim::Frequency, Check::Positive),
        durations: sweep(ctx, &s, "t", Dim::Time),
    };

    let s = section(ctx, user, defaults, "spinlock");
    let spinlock = SpinLockConfig {
        pulse_power: quantity(ctx, &s, "pulse_power", Dim::Frequency, Check::Positive),
        lock_power: quantity(ctx, &s, "lock_power", Dim::Frequency, Check::Positive),
        taus: sweep(ctx, &s, "tau", Dim::Time),
        segments: segments(ctx, &s),
    };

    let s = section(ctx, user, defaults, "zf");
    let contrast = match s.get("contrast").and_then(Item::as_str) {
        Some("none") => None,
        _ => Some(fraction(ctx, &s, "contrast")),
    };
    let zf = ZfConfig {
        axis: sweep(ctx, &s, "power", Dim::Frequency),
        tau: quantity(ctx, &s, "tau", Dim::Time, Check::Positive),
        fwhm: quantity(ctx, &s, "fwhm", Dim::Frequency, Check::Positive),
        contrast,
        mode: match choice(ctx, &s, "mode", &["fast", "exact"]) {
            "exact" => SynthesisMode::Exact,
            _ => SynthesisMode::Fast,
        },
        baseline: match choice(ctx, &s, "baseline", &["model", "self"]) {
            "self" => BaselineSource::SelfCalibrated,
            _ => BaselineSource::Model,
        },
        background: boolean(ctx, &s, "background"),
        pulse_power: optional_quantity(ctx, &s, "pulse_power", Dim::Frequency, Check::Positive),
    };
    if zf.contrast.is_some() && zf.mode == SynthesisMode::Exact && s.user_has("mode") && s.user_has("contrast") {
        let span = s.get("contrast").and_then(Item::span);
        ctx.error(span, "zf.contrast", "contrast rescaling is only available in fast mode; use \"none\"");
    }

    let s = section(ctx, user, defaults, "deer");
    let deer = DeerConfig {
        field: quantity(ctx, &s, "field", Dim::Field, Check::Positive),
        axis: sweep(ctx, &s, "freq", Dim::Frequency),
        fwhm: quantity(ctx, &s, "fwhm", Dim::Frequency, Check::Positive),
        contrast: fraction(ctx, &s, "contrast"),
        background: boolean(ctx, &s, "background"),
    };

    let s = section(ctx, user, defaults, "background");
    let background = BackgroundModel {
        areal_density: quantity(ctx, &s, "areal_density", Dim::ArealDensity, Check::Positive),
        g_factor: number(ctx, &s, "g_factor", Check::Positive),
        correlation_linewidth: quantity(ctx, &s, "correlation_linewidth", Dim::Frequency, Check::Positive),
        depth: quantity(ctx, &s, "depth", Dim::Length, Check::Positive),
        eta_sq: number(ctx, &s, "eta_sq", Check::Positive),
        shoulder: match choice(ctx, &s, "shoulder", &["half_gaussian", "half_lorentzian"]) {
            "half_lorentzian" => ShoulderShape::HalfLorentzian,
            _ => ShoulderShape::HalfGaussian,
        },
    };

    let s = section(ctx, user, defaults, "noise");
    let repetitions = integer(ctx, &s, "repetitions");

    let s = section(ctx, user, defaults, "fit");
    let peaks = integer(ctx, &s, "peaks") as usize;
    if peaks == 0 {
        ctx.error(s.get("peaks").and_then(Item::span), "fit.peaks", "out of range: must be at least 1");
    }
    let fit = FitConfig {
        peaks,
        model: match choice(ctx, &s, "model", &["axial", "full"]) {
            "full" => HyperfineModel::Full,
            _ => HyperfineModel::Axial,
        },
        order: match choice(ctx, &s, "order", &["ascending", "middle_first"]) {
            "middle_first" => LineOrder::MiddleFirst,
            _ => LineOrder::Ascending,
        },
        threshold: quantity(ctx, &s, "threshold", Dim::Frequency, Check::Positive),
    };

    let s = section(ctx, user, defaults, "budget");
    let budget = BudgetConfig {
        params: DetectionAreaParams {
            areal_density: quantity(ctx, &s, "areal_density", Dim::ArealDensity, Check::Positive),
            coupling_constant: dipolar_constant,
            eta_sq: f64::NAN,
            gamma: quantity(ctx, &s, "gamma", Dim::Frequency, Check::Positive),
            tau: quantity(ctx, &s, "tau", Dim::Time, Check::NonNegative),
        },
        eta_sq: numbers3(ctx, &s, "eta_sq"),
        r0: quantity(ctx, &s, "r0", Dim::Length, Check::Positive),
        contrast: fraction(ctx, &s, "contrast"),
    };
    let mut budget = budget;
    budget.params.eta_sq = budget.eta_sq[0];

    let s = section(ctx, user, defaults, "output");
    let dir = match s.get("dir").and_then(Item::as_str) {
        Some(d) => PathBuf::from(d),
        None => {
            ctx.error(s.get("dir").and_then(Item::span), "output.dir", "expected a path string");
            PathBuf::from("out")
        }
    };
    let output = OutputConfig {
        dir,
        create_dir: boolean(ctx, &s, "create_dir"),
    };

    ExperimentConfig {
        seed,
        target,
        target_gamma,
        nv,
        dipolar_constant,
        ensemble,
        rabi,
        spinlock,
        zf,
        deer,
        background,
        repetitions,
        fit,
        budget,
        output,
    }
}

fn fraction(ctx: &mut Ctx, s: &Section, key: &str) -> f64 {
    let field = s.field(key);
    if let Some(item) = s.get(key) {
        if let Some(text) = item.as_str() {
            let t = text.trim();
            let v = t
                .strip_suffix('%')
                .and_then(|n| n.trim().parse::<f64>().ok())
                .map(|p| p / 100.0);
            return match v {
                Some(x) if (0.0..1.0).contains(&x) && x > 0.0 => x,
                _ => {
                    ctx.error(item.span(), &field, "expected a fraction in (0, 1) or a percentage like \"3 %\"");
                    f64::NAN
                }
            };
        }
    }
    let x = number(ctx, s, key, Check::Positive);
    if x >= 1.0 {
        ctx.error(s.get(key).and_then(Item::span), &field, format!("out of range: fraction must be below 1, got {x}"));
    }
    x
}

fn numbers3(ctx: &mut Ctx, s: &Section, key: &str) -> [f64; 3] {
    let field = s.field(key);
    let mut out = [f64::NAN; 3];
    match s.get(key).and_then(Item::as_array) {
        Some(arr) if arr.len() == 3 => {
            for (o, v) in out.iter_mut().zip(arr.iter()) {
                match v.as_float().or(v.as_integer().map(|i| i as f64)) {
                    Some(x) if x > 0.0 => *o = x,
                    _ => ctx.error(v.span(), &field, "expected a positive number"),
                }
            }
        }
        _ => ctx.error(s.get(key).and_then(Item::span), &field, "expected an array of 3 numbers"),
    }
    out
}

fn target_section(ctx: &mut Ctx, s: &Section) -> (TargetSpinSystem, f64) {
    let species = choice(ctx, s, "species", &["p1_n15", "p1_n14", "nitroxide_n15", "custom"]);
    let preset = match species {
        "p1_n14" => TargetSpinSystem::p1_n14(),
        "nitroxide_n15" => TargetSpinSystem::nitroxide_n15(),
        _ => TargetSpinSystem::p1_n15(),
    };
    let mut sys = preset.clone();
    if species == "custom" {
        let es = number(ctx, s, "electron_spin", Check::Positive);
        let ns = number(ctx, s, "nuclear_spin", Check::Positive);
        let eg = quantity(ctx, s, "electron_gamma", Dim::Gyro, Check::Any);
        let ng = quantity(ctx, s, "nuclear_gamma", Dim::Gyro, Check::Any);
        for (key, spin, gamma, slot) in [
            ("electron_spin", es, eg, &mut sys.electron),
            ("nuclear_spin", ns, ng, &mut sys.nucleus),
        ] {
            if spin.is_finite() {
                match SpinSpecies::new(spin, gamma) {
                    Ok(sp) => *slot = sp,
                    Err(e) => ctx.error(s.get(key).and_then(Item::span), &s.field(key), e.to_string()),
                }
            }
        }
    }
    let principal = if s.user_has("principal") {
        if s.user_has("a_perp") || s.user_has("a_zz") {
            ctx.error(
                s.get("principal").and_then(Item::span),
                "target.principal",
                "give either principal or a_perp/a_zz, not both",
            );
        }
        quantity_array::<3>(ctx, s, "principal", Dim::Frequency, Check::Any)
    } else if s.user_has("species") && !s.user_has("a_perp") && !s.user_has("a_zz") && species != "custom" {
        preset.hyperfine.principal_values
    } else {
        let a_perp = quantity(ctx, s, "a_perp", Dim::Frequency, Check::Any);
        let a_zz = quantity(ctx, s, "a_zz", Dim::Frequency, Check::Any);
        [a_perp, a_perp, a_zz]
    };
    let [a, b, g] = quantity_array::<3>(ctx, s, "euler", Dim::Angle, Check::Any);
    sys.hyperfine = HyperfineTensor {
        principal_values: principal,
        orientation: EulerAngles::new(a, b, g),
    };
    sys.quadrupole = quantity(ctx, s, "quadrupole", Dim::Frequency, Check::Any);
    if let Err(e) = crate::spin::hyperfine_hamiltonian(&sys, false) {
        ctx.error(s.get("species").and_then(Item::span), "target", e.to_string());
    }
    let gamma = quantity(ctx, s, "gamma", Dim::Frequency, Check::Positive);
    (sys, gamma)
}

fn t1rho(ctx: &mut Ctx, s: &Section) -> T1rhoModel {
    let Some(item) = s.get("t1_rho") else {
        ctx.error(None, "nv.t1_rho", "missing value");
        return T1rhoModel::None;
    };
    if item.as_str() == Some("none") {
        return T1rhoModel::None;
    }
    if let Some(arr) = item.as_array() {
        let mut points = Vec::new();
        for row in arr.iter() {
            match row.as_array() {
                Some(pair) if pair.len() == 2 => {
                    let p = quantity_value(ctx, pair.get(0).unwrap(), "nv.t1_rho", Dim::Frequency, Check::NonNegative);
                    let t = quantity_value(ctx, pair.get(1).unwrap(), "nv.t1_rho", Dim::Time, Check::Positive);
                    if let (Some(p), Some(t)) = (p, t) {
                        points.push((p, t));
                    }
                }
                _ => ctx.error(row.span(), "nv.t1_rho", "expected [power, time] pairs"),
            }
        }
        let model = T1rhoModel::Table(points);
        if let Err(e) = model.validate() {
            ctx.error(item.span(), "nv.t1_rho", e.to_string());
        }
        return model;
    }
    match item.as_value() {
        Some(v) => quantity_value(ctx, v, "nv.t1_rho", Dim::Time, Check::Positive)
            .map(T1rhoModel::Constant)
            .unwrap_or(T1rhoModel::None),
        None => {
            ctx.error(item.span(), "nv.t1_rho", "expected \"none\", a time or a table");
            T1rhoModel::None
        }
    }
}

fn ensemble_section(ctx: &mut Ctx, s: &Section) -> EnsembleSpec {
    let count = integer(ctx, s, "count") as usize;
    if count == 0 {
        ctx.error(s.get("count").and_then(Item::span), "ensemble.count", "out of range: must be at least 1");
    }
    let orientation = match choice(ctx, s, "orientation", &["fixed", "uniform"]) {
        "uniform" => OrientationRule::Uniform,
        _ => {
            let [a, b, g] = quantity_array::<3>(ctx, s, "euler", Dim::Angle, Check::Any);
            OrientationRule::Fixed {
                angles: vec![EulerAngles::new(a, b, g)],
            }
        }
    };
    let placement = match choice(ctx, s, "placement", &["fixed", "shell", "annulus"]) {
        "shell" => Placement::Shell {
            radius: quantity(ctx, s, "radius", Dim::Length, Check::Positive),
        },
        "annulus" => Placement::Annulus {
            r_min: quantity(ctx, s, "r_min", Dim::Length, Check::NonNegative),
            r_max: quantity(ctx, s, "r_max", Dim::Length, Check::Positive),
            depth: quantity(ctx, s, "depth", Dim::Length, Check::NonNegative),
        },
        _ => {
            let [x, y, z] = quantity_array::<3>(ctx, s, "position", Dim::Length, Check::Any);
            Placement::Fixed {
                positions: vec![Vector3::new(x, y, z)],
            }
        }
    };
    let spec = EnsembleSpec {
        count: count.max(1),
        orientation,
        placement,
    };
    if ctx.errors.is_empty() {
        if let Err(e) = spec.validate() {
            ctx.error(s.get("placement").and_then(Item::span), "ensemble", e.to_string());
        }
    }
    spec
}

fn segments(ctx: &mut Ctx, s: &Section) -> Option<Vec<SegmentTemplate>> {
    let item = s.user.and_then(|t| t.get("segments"))?;
    let Some(arr) = item.as_array() else {
        ctx.error(item.span(), "spinlock.segments", "expected an array of inline tables");
        return None;
    };
    let mut out = Vec::new();
    for v in arr.iter() {
        let Some(t) = v.as_inline_table() else {
            ctx.error(v.span(), "spinlock.segments", "expected an inline table");
            continue;
        };
        for (k, val) in t.iter() {
            if !["kind", "power", "phase", "duration"].contains(&k) {
                ctx.error(val.span(), &format!("spinlock.segments.{k}"), "unknown key");
            }
        }
        let kind = t.get("kind").and_then(Value::as_str).unwrap_or("");
        let duration = |ctx: &mut Ctx| -> Option<Option<f64>> {
            let d = t.get("duration");
            match d {
                Some(d) if d.as_str() == Some("tau") => Some(None),
                Some(d) => quantity_value(ctx, d, "spinlock.segments.duration", Dim::Time, Check::NonNegative).map(Some),
                None => {
                    ctx.error(v.span(), "spinlock.segments.duration", "missing value");
                    None
                }
            }
        };
        match kind {
            "polarize" => out.push(SegmentTemplate::Fixed(Segment::PolarizeNv)),
            "readout" => out.push(SegmentTemplate::Fixed(Segment::Readout)),
            "wait" => match duration(ctx) {
                Some(Some(d)) => out.push(SegmentTemplate::Fixed(Segment::Wait { duration: d })),
                Some(None) => out.push(SegmentTemplate::SweptWait),
                None => {}
            },
            "pulse" => {
                let power = t
                    .get("power")
                    .and_then(|p| quantity_value(ctx, p, "spinlock.segments.power", Dim::Frequency, Check::NonNegative));
                let phase = t.get("phase").and_then(Value::as_str).unwrap_or("x");
                let phase = match phase.parse::<DrivePhase>() {
                    Ok(p) => p,
                    Err(e) => {
                        ctx.error(t.get("phase").and_then(Value::span), "spinlock.segments.phase", e.to_string());
                        DrivePhase::X
                    }
                };
                if power.is_none() && t.get("power").is_none() {
                    ctx.error(v.span(), "spinlock.segments.power", "missing value");
                }
                if let (Some(power), Some(d)) = (power, duration(ctx)) {
                    let drive = DriveField::resonant(power, phase);
                    out.push(match d {
                        Some(duration) => SegmentTemplate::Fixed(Segment::MwPulse { drive, duration }),
                        None => SegmentTemplate::SweptPulse(drive),
                    });
                }
            }
            other => ctx.error(
                t.get("kind").and_then(Value::span).or(v.span()),
                "spinlock.segments.kind",
                format!("unknown segment kind `{other}` (expected polarize, pulse, wait or readout)"),
            ),
        }
    }
    Some(out)
}

impl SpinLockConfig {
    /// The sequence for one lock time: the configured segments with `tau`
    /// substituted, or the standard y π/2, x lock, −y π/2 shape.
    pub fn sequence(&self, tau: f64) -> Result<crate::dynamics::PulseSequence> {
        use crate::dynamics::PulseSequence;
        match &self.segments {
            None => Ok(PulseSequence::spin_lock(self.pulse_power, self.lock_power, tau)),
            Some(templates) => PulseSequence::new(
                templates
                    .iter()
                    .map(|t| match t {
                        SegmentTemplate::Fixed(s) => s.clone(),
                        SegmentTemplate::SweptPulse(drive) => Segment::MwPulse {
                            drive: *drive,
                            duration: tau,
                        },
                        SegmentTemplate::SweptWait => Segment::Wait { duration: tau },
                    })
                    .collect(),
            ),
        }
    }
}
