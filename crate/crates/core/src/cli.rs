//! Command-line front end: config loading, subcommand dispatch and output.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::budget::{budget_table, outer_signal};
use crate::config::{parse_config, BaselineSource, ExperimentConfig, DEFAULT_CONFIG};
use crate::dynamics::{fit_decay, fit_rabi, rabi_trace, RelaxationChannels, SequenceEngine};
use crate::error::{Error, Result};
use crate::nv::resonance_powers;
use crate::output::{Emitter, RunReport, Table};
use crate::spectra::{
    add_shot_noise, background_lines, calibrate_baseline, deer_lines, deer_spectrum, extract_hyperfine,
    fit_gaussian_peaks, zf_lines, zf_spectrum, BackgroundMode, BaselineState, CenterObservation, DeerOptions,
    FitResult, HyperfineEstimate, HyperfineModel, InversionOptions, LineOrder, LockingBaseline, PeakClass, Spectrum,
    ZfOptions,
};
use crate::spin::zero_field_table;

#[derive(Debug, Parser)]
#[command(name = "zfesr", version, about = "Zero-field ESR with NV dressed states")]
pub struct Cli {
    /// Experiment configuration (TOML with unit-suffixed quantities).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for result files; overrides `output.dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Fail instead of creating a missing output directory.
    #[arg(long, global = true)]
    pub no_create_dir: bool,
    /// Random seed; overrides `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Print the default configuration and exit.
    #[arg(long)]
    pub print_defaults: bool,
    /// What to print on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Rabi oscillation trace and frequency fit.
    Rabi,
    /// Spin-lock decay trace and T1rho fit.
    Spinlock,
    /// Zero-field spectrum swept over drive power.
    ZfSweep,
    /// DEER spectrum swept over probe frequency.
    Deer,
    /// Gaussian peak fit of a spectrum (synthesized from the config without --input).
    Fit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        peaks: Option<usize>,
    },
    /// Hyperfine values from peak centers.
    Invert {
        /// Comma-separated drive-power centers in MHz.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        centers: Vec<f64>,
        /// Comma-separated 1σ center errors in MHz.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        errors: Vec<f64>,
        /// Comma-separated labels: left, middle, right.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        labels: Vec<String>,
        /// A spectrum or a peak table written by `fit`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
    },
    /// Detection-area signal budget.
    Budget {
        /// Detection radius in nm.
        #[arg(long)]
        r0: Option<f64>,
        /// Observed contrast as a fraction.
        #[arg(long)]
        contrast: Option<f64>,
    },
    /// Zero-field transition table and resonance powers.
    Peaks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Axial,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderArg {
    Ascending,
    MiddleFirst,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Rabi => "rabi",
            Command::Spinlock => "spinlock",
            Command::ZfSweep => "zf-sweep",
            Command::Deer => "deer",
            Command::Fit { .. } => "fit",
            Command::Invert { .. } => "invert",
            Command::Budget { .. } => "budget",
            Command::Peaks => "peaks",
        }
    }
}

/// What a run produced: the report, every file written, and stdout text.
#[derive(Debug)]
pub struct RunOutput {
    pub report: RunReport,
    pub files: Vec<PathBuf>,
    pub stdout: String,
    pub stderr: String,
}

/// Parse arguments, run, print, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if cli.print_defaults {
        print!("{DEFAULT_CONFIG}");
        return 0;
    }
    let start = std::time::Instant::now();
    match run(&cli) {
        Ok(out) => {
            eprint!("{}", out.stderr);
            eprintln!("finished in {:.3} s", start.elapsed().as_secs_f64());
            let _ = std::io::stdout().write_all(out.stdout.as_bytes());
            0
        }
        Err(e) => {
            let cat = e.category();
            let sub = cli.command.as_ref().map_or("zfesr", Command::name);
            eprintln!("error[{}] {sub}: {e}", cat.as_str());
            cat.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<RunOutput> {
    let Some(command) = &cli.command else {
        return Err(Error::invalid("no subcommand given (see --help)"));
    };
    let mut cfg = match &cli.config {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.clone();
    }
    if cli.no_create_dir {
        cfg.output.create_dir = false;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    pool.install(|| dispatch(&cfg, command, cli.format))
}

fn dispatch(cfg: &ExperimentConfig, command: &Command, format: Format) -> Result<RunOutput> {
    let digest = cfg.digest_with(&format!("{command:?}"));
    let mut em = Emitter::new(&cfg.output.dir, cfg.output.create_dir, &digest, command.name())?;
    let mut stderr = preview(cfg)?;
    let (results, main_text) = match command {
        Command::Peaks => peaks(cfg, &mut em)?,
        Command::Rabi => rabi(cfg, &mut em)?,
        Command::Spinlock => spinlock(cfg, &mut em)?,
        Command::ZfSweep => zf_sweep(cfg, &mut em)?,
        Command::Deer => deer(cfg, &mut em)?,
        Command::Fit { input, peaks } => fit(cfg, &mut em, input.as_deref(), *peaks)?,
        Command::Invert {
            centers,
            errors,
            labels,
            input,
            model,
            order,
        } => invert(cfg, &mut em, centers, errors, labels, input.as_deref(), *model, *order)?,
        Command::Budget { r0, contrast } => budget(cfg, &mut em, *r0, *contrast)?,
    };
    let report = RunReport {
        tool: "zfesr",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: command.name().to_string(),
        digest,
        seed: cfg.seed,
        files: Vec::new(),
        results,
    };
    let (report, files) = em.finish(report)?;
    for f in &files {
        stderr.push_str(&format!("wrote {}\n", f.display()));
    }
    let stdout = match format {
        Format::Csv => main_text,
        Format::Json => serde_json::to_string_pretty(&report).map_err(|e| Error::invalid(e.to_string()))? + "\n",
    };
    Ok(RunOutput {
        report,
        files,
        stdout,
        stderr,
    })
}

fn preview(cfg: &ExperimentConfig) -> Result<String> {
    let table = zero_field_table(&cfg.target)?;
    let lines: Vec<String> = resonance_powers(&table)
        .iter()
        .map(|r| format!("{:.3} MHz (Ω = {:.3} MHz)", r.transition_frequency, r.omega))
        .collect();
    Ok(format!("target lines: {}\n", lines.join(", ")))
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::invalid(e.to_string()))
}

fn peaks(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(serde_json::Value, String)> {
    let table = zero_field_table(&cfg.target)?;
    let lines = table.lines();
    let mut t = Table::new(
        "transition_MHz = target zero-field splitting, resonance_power_MHz = 2x transition, weight_x/y/z = summed |<j|S_a|i>|^2, rows = contributing level pairs",
        &["transition_MHz", "resonance_power_MHz", "weight_x", "weight_y", "weight_z", "rows"],
    );
    let mut json_lines = Vec::new();
    for line in &lines {
        let w = |f: fn(&crate::spin::TransitionRow) -> f64| line.rows.iter().map(|&k| f(&table.rows[k])).sum::<f64>();
        let (wx, wy, wz) = (w(|r| r.weight_x), w(|r| r.weight_y), w(|r| r.weight_z));
        t.push(&[
            line.frequency.to_string(),
            (2.0 * line.frequency).to_string(),
            wx.to_string(),
            wy.to_string(),
            wz.to_string(),
            line.rows.len().to_string(),
        ]);
        json_lines.push(json!({
            "transition_MHz": line.frequency,
            "resonance_power_MHz": 2.0 * line.frequency,
            "weights": [wx, wy, wz],
        }));
    }
    let csv = t.to_csv()?;
    em.write("csv", &csv)?;
    let x: Vec<f64> = lines.iter().map(|l| 2.0 * l.frequency).collect();
    let y: Vec<f64> = lines.iter().map(|l| table.line_transverse_weight(l) + line_z(&table, l)).collect();
    em.plot("resonance power (MHz)", "dipole weight", &x, &y)?;
    Ok((json!({ "lines": json_lines }), csv))
}

fn line_z(table: &crate::spin::TransitionTable, line: &crate::spin::SpectralLine) -> f64 {
    line.rows.iter().map(|&k| table.rows[k].weight_z).sum()
}

fn noisy(cfg: &ExperimentConfig, spec: Spectrum) -> Result<Spectrum> {
    if cfg.repetitions == 0 {
        return Ok(spec);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    add_shot_noise(&spec, cfg.repetitions, &mut rng)
}

fn trace_table(comment: &str, xname: &str, spec: &Spectrum) -> Result<String> {
    let mut cols = vec![xname, "pl"];
    if spec.sem.is_some() {
        cols.push("sem");
    }
    let mut t = Table::new(comment, &cols);
    for k in 0..spec.len() {
        let mut row = vec![spec.axis[k], spec.values[k]];
        if let Some(s) = &spec.sem {
            row.push(s[k]);
        }
        t.push(&row);
    }
    t.to_csv()
}

fn rabi(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(serde_json::Value, String)> {
    let r = &cfg.rabi;
    let pl = rabi_trace(r.frequency, &r.durations, None)?;
    let spec = noisy(cfg, Spectrum::new(r.durations.clone(), pl, None)?)?;
    let fit = fit_rabi(&spec.axis, &spec.values, spec.sem.as_deref())?;
    let csv = trace_table(
        "time_us = x-drive duration (us), pl = normalized PL, sem = shot-noise standard error",
        "time_us",
        &spec,
    )?;
    em.write("csv", &csv)?;
    em.plot("drive duration (us)", "PL", &spec.axis, &spec.values)?;
    Ok((json!({ "drive_MHz": r.frequency, "fit": to_json(&fit)? }), csv))
}

fn spinlock(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(serde_json::Value, String)> {
    let s = &cfg.spinlock;
    let channels = RelaxationChannels::from_nv(&cfg.nv, None);
    let engine = SequenceEngine::nv_only(&channels)?;
    let pl = s
        .taus
        .iter()
        .map(|&tau| Ok(engine.run(&s.sequence(tau)?)?.pl))
        .collect::<Result<Vec<_>>>()?;
    let spec = noisy(cfg, Spectrum::new(s.taus.clone(), pl, None)?)?;
    let fit = fit_decay(&spec.axis, &spec.values, spec.sem.as_deref())?;
    let csv = trace_table(
        "tau_us = lock duration (us), pl = normalized PL, sem = shot-noise standard error",
        "tau_us",
        &spec,
    )?;
    em.write("csv", &csv)?;
    em.plot("lock duration (us)", "PL", &spec.axis, &spec.values)?;
    Ok((
        json!({
            "pulse_power_MHz": s.pulse_power,
            "lock_power_MHz": s.lock_power,
            "custom_sequence": s.segments.is_some(),
            "fit": to_json(&fit)?,
        }),
        csv,
    ))
}

fn zf_options(cfg: &ExperimentConfig) -> ZfOptions {
    ZfOptions {
        mode: cfg.zf.mode,
        fwhm: cfg.zf.fwhm,
        contrast: cfg.zf.contrast,
        coupling_constant: cfg.dipolar_constant,
        pulse_power: cfg.zf.pulse_power,
        ..ZfOptions::default()
    }
}

/// The configured zero-field spectrum, raw baseline, noise applied.
pub fn synthesize_zf(cfg: &ExperimentConfig) -> Result<Spectrum> {
    let members = cfg.ensemble.members(cfg.seed)?;
    let channels = RelaxationChannels::from_nv(&cfg.nv, Some(cfg.target_gamma));
    let mut spec = zf_spectrum(&cfg.target, &members, &channels, cfg.zf.tau, &cfg.zf.axis, &zf_options(cfg))?;
    if cfg.zf.background {
        let bg = background_lines(&cfg.background, BackgroundMode::Zf, 0.0, cfg.zf.tau, &spec.axis)?;
        spec.values.iter_mut().zip(&bg.values).for_each(|(v, b)| *v *= b);
    }
    noisy(cfg, spec)
}

fn zf_sweep(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(serde_json::Value, String)> {
    let spec = synthesize_zf(cfg)?;
    let members = cfg.ensemble.members(cfg.seed)?;
    let lines = zf_lines(&cfg.target, &members, cfg.target_gamma, cfg.zf.tau, &zf_options(cfg))?;
    let csv = spec.to_csv_string()?;
    em.write("csv", &csv)?;
    em.plot("drive power (MHz)", "PL", &spec.axis, &spec.values)?;
    Ok((
        json!({
            "points": spec.len(),
            "tau_us": cfg.zf.tau,
            "noise_repetitions": cfg.repetitions,
            "lines": to_json(&lines)?,
        }),
        csv,
    ))
}

fn deer(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<(serde_json::Value, String)> {
    let d = &cfg.deer;
    let members = cfg.ensemble.members(cfg.seed)?;
    let opts = DeerOptions {
        fwhm: d.fwhm,
        contrast: d.contrast,
        ..DeerOptions::default()
    };
    let mut spec = deer_spectrum(&cfg.target, &members, d.field, &d.axis, &opts)?;
    if d.background {
        let bg = background_lines(&cfg.background, BackgroundMode::Deer, d.field, cfg.zf.tau, &spec.axis)?;
        spec.values.iter_mut().zip(&bg.values).for_each(|(v, b)| *v *= b);
    }
    let spec = noisy(cfg, spec)?;
    let per_member = members
        .iter()
        .map(|m| deer_lines(&cfg.target, m.orientation, d.field))
        .collect::<Result<Vec<_>>>()?;
    let csv = spec.to_csv_string()?;
    em.write("csv", &csv)?;
    em.plot("probe frequency (MHz)", "PL", &spec.axis, &spec.values)?;
    Ok((json!({ "field_G": d.field, "lines": per_member }), csv))
}

fn calibrated(cfg: &ExperimentConfig, spec: &Spectrum) -> Result<Spectrum> {
    match cfg.zf.baseline {
        BaselineSource::Model => calibrate_baseline(
            spec,
            Some(&LockingBaseline {
                t1rho: cfg.nv.t1_rho.clone(),
                tau: cfg.zf.tau,
            }),
        ),
        BaselineSource::SelfCalibrated => calibrate_baseline(spec, None),
    }
}

fn read_spectrum(path: &Path) -> Result<Spectrum> {
    Spectrum::read_csv(path)
}

/// Calibrate, fit and, for three peaks, invert.
pub fn fit_spectrum(cfg: &ExperimentConfig, spec: &Spectrum, n_peaks: usize) -> Result<FitResult> {
    let cal = calibrated(cfg, spec)?;
    let mut fit = fit_gaussian_peaks(&cal, n_peaks, None)?;
    if n_peaks == 3 && !fit.degenerate() {
        let obs = observations(&fit);
        fit.hyperfine = extract_hyperfine(&obs, cfg.fit.model, &inversion_options(cfg, None)).ok();
    }
    Ok(fit)
}

fn observations(fit: &FitResult) -> Vec<CenterObservation> {
    fit.peaks
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let err = fit
                .statistical_errors
                .as_ref()
                .map(|e| e[k][0])
                .filter(|e| *e > 0.0 && e.is_finite());
            CenterObservation::new(p.center, err)
        })
        .collect()
}

fn inversion_options(cfg: &ExperimentConfig, order: Option<LineOrder>) -> InversionOptions {
    InversionOptions {
        threshold: cfg.fit.threshold,
        order: order.unwrap_or(cfg.fit.order),
    }
}

fn fit(
    cfg: &ExperimentConfig,
    em: &mut Emitter,
    input: Option<&Path>,
    peaks: Option<usize>,
) -> Result<(serde_json::Value, String)> {
    let spec = match input {
        Some(p) => read_spectrum(p)?,
        None => synthesize_zf(cfg)?,
    };
    let n = peaks.unwrap_or(cfg.fit.peaks);
    if n == 0 {
        return Err(Error::invalid("need at least one peak"));
    }
    let fit = fit_spectrum(cfg, &spec, n)?;
    let cal = calibrated(cfg, &spec)?;
    let mut t = Table::new(
        "center_MHz = fitted drive-power center, center_err_MHz = half FWHM, stat_err_MHz = least-squares 1 sigma, fwhm_MHz, depth = fractional dip",
        &["center_MHz", "center_err_MHz", "stat_err_MHz", "fwhm_MHz", "depth"],
    );
    for (k, p) in fit.peaks.iter().enumerate() {
        let stat = fit.statistical_errors.as_ref().map_or(f64::NAN, |e| e[k][0]);
        t.push(&[p.center, fit.center_errors[k], stat, p.fwhm, p.depth]);
    }
    let csv = t.to_csv()?;
    em.write("csv", &csv)?;
    let model: Vec<f64> = cal
        .axis
        .iter()
        .map(|&x| 1.0 - fit.peaks.iter().map(|p| p.profile(x)).sum::<f64>())
        .collect();
    em.plot("drive power (MHz)", "fitted PL", &cal.axis, &model)?;
    Ok((json!({ "baseline": BaselineState::Calibrated.as_str(), "fit": to_json(&fit)? }), csv))
}

fn parse_label(s: &str) -> Result<PeakClass> {
    match s.trim() {
        "left" | "l" => Ok(PeakClass::Left),
        "middle" | "m" => Ok(PeakClass::Middle),
        "right" | "r" => Ok(PeakClass::Right),
        other => Err(Error::invalid(format!("unknown peak label `{other}`"))),
    }
}

/// Centers from a peak table written by `fit`, or from fitting a spectrum.
fn centers_from_file(cfg: &ExperimentConfig, path: &Path) -> Result<Vec<CenterObservation>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = text.lines().find(|l| !l.trim_start().starts_with('#')).unwrap_or("");
    if header.split(',').next().map(str::trim) == Some("center_MHz") {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let mut out = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::SpectrumFormat {
                path: path.into(),
                message: e.to_string(),
            })?;
            let num = |k: usize| rec.get(k).and_then(|v| v.trim().parse::<f64>().ok());
            let center = num(0).ok_or_else(|| Error::SpectrumFormat {
                path: path.into(),
                message: "bad center value".into(),
            })?;
            let err = num(2).filter(|e| *e > 0.0 && e.is_finite());
            out.push(CenterObservation::new(center, err));
        }
        return Ok(out);
    }
    let spec = Spectrum::from_csv_str(&text, &path.to_string_lossy())?;
    Ok(observations(&fit_spectrum(cfg, &spec, cfg.fit.peaks)?))
}

#[allow(clippy::too_many_arguments)]
fn invert(
    cfg: &ExperimentConfig,
    em: &mut Emitter,
    centers: &[f64],
    errors: &[f64],
    labels: &[String],
    input: Option<&Path>,
    model: Option<ModelArg>,
    order: Option<OrderArg>,
) -> Result<(serde_json::Value, String)> {
    let mut obs = if !centers.is_empty() {
        if !errors.is_empty() && errors.len() != centers.len() {
            return Err(Error::invalid("--errors must match --centers in length"));
        }
        centers
            .iter()
            .enumerate()
            .map(|(k, &c)| CenterObservation::new(c, errors.get(k).copied()))
            .collect()
    } else if let Some(p) = input {
        centers_from_file(cfg, p)?
    } else {
        observations(&fit_spectrum(cfg, &synthesize_zf(cfg)?, cfg.fit.peaks)?)
    };
    if !labels.is_empty() {
        if labels.len() != obs.len() {
            return Err(Error::invalid("--labels must match the number of centers"));
        }
        for (o, l) in obs.iter_mut().zip(labels) {
            o.class = Some(parse_label(l)?);
        }
    }
    let model = match model {
        Some(ModelArg::Axial) => HyperfineModel::Axial,
        Some(ModelArg::Full) => HyperfineModel::Full,
        None => cfg.fit.model,
    };
    let order = order.map(|o| match o {
        OrderArg::Ascending => LineOrder::Ascending,
        OrderArg::MiddleFirst => LineOrder::MiddleFirst,
    });
    let est = extract_hyperfine(&obs, model, &inversion_options(cfg, order))?;
    let csv = hyperfine_table(&est)?;
    em.write("csv", &csv)?;
    let x: Vec<f64> = obs.iter().map(|o| o.center).collect();
    let y: Vec<f64> = x.iter().zip(&est.residuals).map(|(c, r)| c - r).collect();
    em.plot("observed center (MHz)", "model center (MHz)", &x, &y)?;
    Ok((json!({ "observations": to_json(&obs)?, "estimate": to_json(&est)? }), csv))
}

fn hyperfine_table(est: &HyperfineEstimate) -> Result<String> {
    let names: &[&str] = match est.model {
        HyperfineModel::Axial => &["a_perp", "a_zz"],
        HyperfineModel::Full => &["a_xx", "a_yy", "a_zz"],
    };
    let mut t = Table::new(
        "parameter = hyperfine principal value, value_MHz, error_MHz = propagated 1 sigma",
        &["parameter", "value_MHz", "error_MHz"],
    );
    for (k, n) in names.iter().enumerate() {
        t.push(&[n.to_string(), est.values[k].to_string(), est.errors[k].to_string()]);
    }
    t.to_csv()
}

fn budget(
    cfg: &ExperimentConfig,
    em: &mut Emitter,
    r0: Option<f64>,
    contrast: Option<f64>,
) -> Result<(serde_json::Value, String)> {
    let b = &cfg.budget;
    let r0 = r0.unwrap_or(b.r0);
    let contrast = contrast.unwrap_or(b.contrast);
    let table = budget_table(r0, contrast, &b.params, b.eta_sq)?;
    let mut t = Table::new(
        "peak, eta_sq = orientation-averaged coupling, outer_percent = signal from beyond r0, quadrature_percent = same by numeric integration, dominance_percent = share from inside r0",
        &["peak", "eta_sq", "outer_percent", "quadrature_percent", "dominance_percent"],
    );
    for r in &table.rows {
        t.push(&[
            r.peak.as_str().to_string(),
            r.eta_sq.to_string(),
            (100.0 * r.outer_signal).to_string(),
            (100.0 * r.outer_signal_quadrature).to_string(),
            (100.0 * r.dominance).to_string(),
        ]);
    }
    let csv = t.to_csv()?;
    em.write("csv", &csv)?;
    let radii: Vec<f64> = (1..=40).map(|k| 2.5 * k as f64).collect();
    let left = b.params.with_eta_sq(b.eta_sq[0]);
    let curve = radii
        .iter()
        .map(|&r| outer_signal(r, &left).map(|s| 100.0 * s))
        .collect::<Result<Vec<_>>>()?;
    em.plot("r0 (nm)", "outer signal, left peak (%)", &radii, &curve)?;
    Ok((to_json(&table)?, format!("{}\n{csv}", table.to_text())))
}
