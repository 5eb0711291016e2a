//! Command-line front end: `fit`, `power`, `synth` and `scan`.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 a fit did not converge.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::feeding::{
    analyze_s_trend, fit_power_law, fit_saturation, saturation_cutoff, suppression, PowerPoint,
    PowerSeries,
};
use crate::fitting::{
    extract_observables, fit_doublet, fit_triplet, initial_triplet, refine_amplitudes, FitConfig,
    FitResult, InitOptions, Observables, Weighting,
};
use crate::io::config::{ConfigFile, FitSection};
use crate::io::report::{
    self, Diagnostics, FitReport, InputRecord, MetaRecord, ObservablesRecord, ParamsRecord,
    PowerLawRecord, PowerLaws, PowerReport, PowerRow, Provenance, SaturationRecord, SigmaRecord,
    TrendRecord,
};
use crate::io::{format_plot_data, parse_spectrum, sha256_hex, write_atomic};
use crate::model::{ParamId, Peak, Regime, Spectrum, TripletParams};
use crate::simulator::{emit_fixture, synth_scan, ScanConfig};
use crate::units::SPECTROMETER_RESOLUTION_NM;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

/// Environment variable overriding every output directory.
pub const OUT_DIR_ENV: &str = "CAVFEED_OUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "cavfeed",
    version,
    about = "Fit and simulate cavity-QED photoluminescence spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit polariton triplets to spectrum CSV files.
    Fit(FitArgs),
    /// Analyze a pump-power series of spectra or fit reports.
    Power(PowerArgs),
    /// Generate a single synthetic spectrum from a config.
    Synth(GenArgs),
    /// Generate a detuning, temperature or power scan from a config.
    Scan(GenArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fit two polaritons only (a_bare = 0).
    #[arg(long)]
    no_bare: bool,
    /// Hold a parameter fixed, e.g. `c_bare=933.8`. Widths are HWHM in nm.
    #[arg(long, value_name = "PARAM=VALUE")]
    fix: Vec<String>,
    #[arg(long, value_name = "none|poisson")]
    weights: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PowerArgs {
    dir: PathBuf,
    /// Use only spectra of this regime when the directory mixes regimes.
    #[arg(long, value_name = "ABE|QRE")]
    regime: Option<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Power report whose mean S is the suppression reference.
    #[arg(long, conflicts_with = "reference_s")]
    reference: Option<PathBuf>,
    /// Reference mean S for the suppression column.
    #[arg(long)]
    reference_s: Option<f64>,
    #[arg(long, value_name = "none|poisson")]
    weights: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Emulate the 0.02 nm spectrometer: warn on coarser grids and convolve with its response.
    #[arg(long)]
    paper_instrument: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Effective fit settings after config and flags are merged.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSettings {
    pub lambda0_nm: Option<f64>,
    pub cavity_nm: Option<f64>,
    pub splitting_guess_nm: Option<f64>,
    pub smoothing_window: usize,
    pub weighting: Weighting,
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub no_bare: bool,
    pub fixed: BTreeMap<ParamId, f64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        let cfg = FitConfig::default();
        FitSettings {
            lambda0_nm: None,
            cavity_nm: None,
            splitting_guess_nm: None,
            smoothing_window: InitOptions::default().smoothing_window,
            weighting: Weighting::None,
            max_iterations: cfg.max_iterations,
            rel_tolerance: cfg.rel_tolerance,
            no_bare: false,
            fixed: BTreeMap::new(),
        }
    }
}

impl FitSettings {
    pub fn from_section(sec: &FitSection) -> Result<Self> {
        let d = FitSettings::default();
        Ok(FitSettings {
            lambda0_nm: sec.lambda0_nm,
            cavity_nm: sec.cavity_nm,
            splitting_guess_nm: sec.splitting_guess_nm,
            smoothing_window: sec.smoothing_window.unwrap_or(d.smoothing_window),
            weighting: sec.weighting()?,
            max_iterations: sec.max_iterations.unwrap_or(d.max_iterations),
            rel_tolerance: sec.rel_tolerance.unwrap_or(d.rel_tolerance),
            no_bare: sec.no_bare.unwrap_or(false),
            fixed: sec.fixed()?,
        })
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig {
            max_iterations: self.max_iterations,
            rel_tolerance: self.rel_tolerance,
            fixed: self.fixed.clone(),
            weighting: self.weighting,
            ..FitConfig::default()
        }
    }

    fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).unwrap_or_default().as_bytes())
    }
}

/// Outcome of the multi-start fit of one spectrum.
#[derive(Debug, Clone)]
pub struct SpectrumFit {
    pub fit: FitResult,
    pub observables: Option<Observables>,
    pub lambda0_nm: f64,
    pub peaks_found: usize,
    pub starts: usize,
    pub warnings: Vec<String>,
}

fn layout_start(spec: &Spectrum, cavity: f64, split: f64) -> TripletParams {
    let x = spec.wavelengths();
    let y = spec.intensities();
    let base = y.iter().copied().fold(f64::INFINITY, f64::min);
    let area: f64 = x
        .windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (yw[0] + yw[1] - 2.0 * base) * (xw[1] - xw[0]))
        .sum();
    let a = (area / 3.0).max(f64::MIN_POSITIVE);
    TripletParams::from_peaks(
        Peak {
            amplitude: a,
            center: cavity - 0.5 * split,
            hwhm: 0.25 * split,
        },
        Peak {
            amplitude: a,
            center: cavity + 0.5 * split,
            hwhm: 0.25 * split,
        },
        Peak {
            amplitude: a,
            center: cavity,
            hwhm: split / 3.0,
        },
    )
}

/// Peak detection, initialization from several smoothing windows and a
/// layout guess, then the fit with the lowest residual among converged starts.
pub fn fit_spectrum(spec: &Spectrum, s: &FitSettings) -> Result<SpectrumFit> {
    let cfg = s.fit_config();
    let mut starts: Vec<TripletParams> = Vec::new();
    let mut peaks_found = 0;
    let mut warnings = Vec::new();
    let windows = [
        s.smoothing_window,
        2 * s.smoothing_window + 1,
        4 * s.smoothing_window + 1,
    ];
    for (k, &w) in windows.iter().enumerate() {
        if w > spec.len() {
            continue;
        }
        let opts = InitOptions {
            smoothing_window: w,
            cavity_nm: s.cavity_nm,
            splitting_guess_nm: s.splitting_guess_nm,
        };
        match initial_triplet(spec, &opts) {
            Ok(g) => {
                if k == 0 {
                    peaks_found = g.peaks.found();
                    if g.peaks.shortfall() > 0 {
                        warnings.push(format!("found {} of 3 peaks", g.peaks.found()));
                    }
                }
                if !starts.contains(&g.params) {
                    starts.push(g.params);
                }
            }
            Err(e) if k == 0 && s.cavity_nm.is_none() => return Err(e),
            Err(_) => {}
        }
    }
    let first = starts.first().copied();
    let cavity = s.cavity_nm.or(first.map(|p| p.c_bare));
    let split = s
        .splitting_guess_nm
        .or(first.map(|p| p.c_upper - p.c_lower));
    if let (Some(c), Some(split)) = (cavity, split) {
        if split > 0.0 {
            let mut p = layout_start(spec, c, split);
            refine_amplitudes(spec, &mut p);
            starts.push(p);
        }
    }
    if starts.is_empty() {
        return Err(Error::input("no peaks found to initialize the fit"));
    }

    let mut best: Option<FitResult> = None;
    let mut first_err = None;
    for init in &starts {
        let res = if s.no_bare {
            fit_doublet(spec, init, &cfg)
        } else {
            fit_triplet(spec, init, &cfg)
        };
        match res {
            Ok(f) => {
                let better = match &best {
                    None => true,
                    Some(b) => {
                        (f.converged && !b.converged)
                            || (f.converged == b.converged && f.residual_norm < b.residual_norm)
                    }
                };
                if better {
                    best = Some(f);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let fit = match best {
        Some(f) => f,
        None => return Err(first_err.unwrap_or_else(|| Error::input("no fit start succeeded"))),
    };
    let lambda0 = s
        .lambda0_nm
        .or(s.cavity_nm)
        .unwrap_or(0.5 * (fit.params.c_lower + fit.params.c_upper));
    let observables = if fit.converged {
        match extract_observables(&fit, lambda0) {
            Ok(o) => Some(o),
            Err(e) => {
                warnings.push(format!("observables unavailable: {e}"));
                None
            }
        }
    } else {
        warnings.push(format!("fit did not converge ({:?})", fit.termination));
        None
    };
    Ok(SpectrumFit {
        fit,
        observables,
        lambda0_nm: lambda0,
        peaks_found,
        starts: starts.len(),
        warnings,
    })
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn termination_name(t: crate::fitting::Termination) -> String {
    use crate::fitting::Termination::*;
    match t {
        RelativeDecrease => "relative_decrease",
        SmallGradient => "small_gradient",
        ExactFit => "exact_fit",
        Stalled => "stalled",
        MaxIterations => "max_iterations",
        NonFinite => "non_finite",
    }
    .into()
}

pub fn build_report(
    spec: &Spectrum,
    sf: &SpectrumFit,
    s: &FitSettings,
    provenance: Provenance,
) -> FitReport {
    FitReport {
        schema: report::FIT_SCHEMA.into(),
        generated_at_unix_s: now_unix(),
        input: provenance,
        metadata: MetaRecord::from(&spec.meta),
        model: if s.no_bare { "doublet" } else { "triplet" }.into(),
        params: ParamsRecord::from(&sf.fit.params),
        uncertainties: SigmaRecord::from_fit(&sf.fit),
        observables: sf
            .observables
            .as_ref()
            .map(|o| ObservablesRecord::new(o, sf.lambda0_nm)),
        diagnostics: Diagnostics {
            converged: sf.fit.converged,
            termination: termination_name(sf.fit.termination),
            iterations_count: sf.fit.iterations,
            residual_norm_counts2: sf.fit.residual_norm,
            n_points_count: sf.fit.n_points,
            n_free_count: sf.fit.n_free,
            peaks_found_count: sf.peaks_found,
            starts_count: sf.starts,
            warnings: sf.warnings.clone(),
        },
    }
}

struct LoadedConfig {
    file: Option<ConfigFile>,
    path: Option<PathBuf>,
    sha256: Option<String>,
}

fn load_config(path: Option<&Path>) -> Result<LoadedConfig> {
    match path {
        None => Ok(LoadedConfig {
            file: None,
            path: None,
            sha256: None,
        }),
        Some(p) => {
            let (cfg, bytes) = ConfigFile::load(p)?;
            Ok(LoadedConfig {
                file: Some(cfg),
                path: Some(p.to_path_buf()),
                sha256: Some(sha256_hex(&bytes)),
            })
        }
    }
}

fn parse_fix(s: &str) -> Result<(ParamId, f64)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::input(format!("--fix expects PARAM=VALUE, got '{s}'")))?;
    let id: ParamId = k.trim().parse()?;
    let v: f64 = v
        .trim()
        .parse()
        .ok()
        .filter(|x: &f64| x.is_finite())
        .ok_or_else(|| Error::input(format!("--fix {k}: '{v}' is not a finite number")))?;
    Ok((id, v))
}

fn settings_from(
    cfg: &LoadedConfig,
    weights: Option<&str>,
    fix: &[String],
    no_bare: bool,
) -> Result<FitSettings> {
    let sec = cfg
        .file
        .as_ref()
        .map(|c| c.fit_section())
        .unwrap_or_default();
    let mut s = FitSettings::from_section(&sec)?;
    if let Some(w) = weights {
        s.weighting = w.parse()?;
    }
    for f in fix {
        let (id, v) = parse_fix(f)?;
        s.fixed.insert(id, v);
    }
    s.no_bare |= no_bare;
    Ok(s)
}

fn out_dir(flag: Option<&Path>, fallback: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(d) if !d.is_empty() => PathBuf::from(d),
        _ => fallback.to_path_buf(),
    }
}

fn parent_or_dot(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn file_stem(p: &Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "spectrum".into())
}

struct FileFit {
    path: PathBuf,
    spectrum: Spectrum,
    sha256: String,
    fit: SpectrumFit,
}

fn fit_file(path: &Path, s: &FitSettings) -> Result<FileFit> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8_lossy(&bytes);
    let spectrum = parse_spectrum(&text, path)?;
    let fit = fit_spectrum(&spectrum, s)?;
    Ok(FileFit {
        path: path.to_path_buf(),
        spectrum,
        sha256: sha256_hex(&bytes),
        fit,
    })
}

fn provenance(ff: &FileFit, cfg: &LoadedConfig, s: &FitSettings) -> Provenance {
    Provenance {
        file: ff.path.display().to_string(),
        input_sha256: ff.sha256.clone(),
        config_file: cfg.path.as_ref().map(|p| p.display().to_string()),
        config_sha256: cfg.sha256.clone(),
        settings_sha256: s.hash(),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<i32> {
    let cfg = load_config(args.config.as_deref())?;
    let settings = settings_from(&cfg, args.weights.as_deref(), &args.fix, args.no_bare)?;
    let results: Vec<(PathBuf, Result<FileFit>)> = args
        .files
        .par_iter()
        .map(|p| (p.clone(), fit_file(p, &settings)))
        .collect();
    let mut code = EXIT_OK;
    for (path, res) in results {
        match res {
            Ok(ff) => {
                let dir = out_dir(args.out.as_deref(), &parent_or_dot(&path));
                let stem = file_stem(&path);
                let rep = build_report(
                    &ff.spectrum,
                    &ff.fit,
                    &settings,
                    provenance(&ff, &cfg, &settings),
                );
                let rpath = dir.join(format!("{stem}.report.json"));
                write_atomic(&rpath, report::to_json(&rep)?.as_bytes())?;
                let ppath = dir.join(format!("{stem}.plot.csv"));
                write_atomic(
                    &ppath,
                    format_plot_data(&ff.spectrum, &ff.fit.fit.params).as_bytes(),
                )?;
                println!("{}", rpath.display());
                if !ff.fit.fit.converged {
                    eprintln!("error: {}: fit did not converge", path.display());
                    if code == EXIT_OK {
                        code = EXIT_NOT_CONVERGED;
                    }
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                code = EXIT_INPUT;
            }
        }
    }
    Ok(code)
}

/// One power-series entry read from a spectrum or a fit report.
struct PowerInput {
    file: PathBuf,
    sha256: String,
    power_uw: Option<f64>,
    params: TripletParams,
    sigma: Option<[f64; 3]>,
    converged: bool,
}

fn list_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    v.sort();
    Ok(v)
}

enum Source {
    Report(Box<FitReport>),
    Raw(Spectrum),
}

struct PowerSource {
    file: PathBuf,
    sha256: String,
    regime: Option<Regime>,
    source: Source,
}

/// Fit reports (`*.report.json`) if the directory has any, else raw spectra (`*.csv`).
fn power_sources(dir: &Path) -> Result<Vec<PowerSource>> {
    let files = list_dir(dir)?;
    let is_report = |p: &PathBuf| p.to_string_lossy().ends_with(".report.json");
    let use_reports = files.iter().any(is_report);
    files
        .iter()
        .filter(|p| {
            if use_reports {
                is_report(p)
            } else {
                p.extension().is_some_and(|e| e == "csv")
                    && !p.to_string_lossy().ends_with(".plot.csv")
            }
        })
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
            let (regime, source) = if use_reports {
                let r: FitReport = serde_json::from_slice(&bytes)?;
                (r.metadata.regime, Source::Report(Box::new(r)))
            } else {
                let spec = parse_spectrum(&String::from_utf8_lossy(&bytes), p)?;
                (spec.meta.regime, Source::Raw(spec))
            };
            Ok(PowerSource {
                file: p.clone(),
                sha256: sha256_hex(&bytes),
                regime,
                source,
            })
        })
        .collect()
}

fn amplitude_sigmas(f: impl Fn(ParamId) -> Option<f64>) -> Option<[f64; 3]> {
    match [ParamId::ALower, ParamId::AUpper, ParamId::ABare].map(f) {
        [Some(a), Some(b), Some(c)] => Some([a, b, c]),
        _ => None,
    }
}

fn resolve_source(src: &PowerSource, settings: &FitSettings) -> Result<PowerInput> {
    let (power_uw, params, sigma, converged) = match &src.source {
        Source::Report(r) => {
            let u = r.uncertainties;
            let sigma = amplitude_sigmas(|id| match id {
                ParamId::ALower => u.a_lower_sigma_counts_nm,
                ParamId::AUpper => u.a_upper_sigma_counts_nm,
                _ => u.a_bare_sigma_counts_nm,
            });
            (
                r.metadata.power_uw,
                r.params.to_params(),
                sigma,
                r.diagnostics.converged,
            )
        }
        Source::Raw(spec) => {
            if spec.meta.power_uw.is_none() {
                return Err(Error::input(format!(
                    "{}: no power_uW metadata",
                    src.file.display()
                )));
            }
            let sf = fit_spectrum(spec, settings)?;
            (
                spec.meta.power_uw,
                sf.fit.params,
                amplitude_sigmas(|id| sf.fit.std_error(id)),
                sf.fit.converged,
            )
        }
    };
    Ok(PowerInput {
        file: src.file.clone(),
        sha256: src.sha256.clone(),
        power_uw,
        params,
        sigma,
        converged,
    })
}

#[derive(Debug, Clone)]
pub struct PowerAnalysis {
    pub series: PowerSeries,
    pub trend: TrendRecord,
    pub power_law: PowerLaws,
    pub saturation: Option<SaturationRecord>,
    pub rows: Vec<PowerRow>,
    pub warnings: Vec<String>,
}

/// Power-series analysis of fitted amplitudes.
pub fn analyze_power(points: Vec<PowerPoint>, reference_s: Option<f64>) -> Result<PowerAnalysis> {
    let series = PowerSeries::new(points)?;
    if series.len() < 3 {
        return Err(Error::input(format!(
            "power analysis needs >= 3 powers, got {}",
            series.len()
        )));
    }
    let mut warnings = Vec::new();
    let totals = series.polariton_totals();
    let sat = if series.len() >= 4 {
        match fit_saturation(&totals) {
            Ok(s) => Some(s),
            Err(e) => {
                warnings.push(format!("saturation fit failed: {e}"));
                None
            }
        }
    } else {
        warnings.push("saturation fit needs >= 4 powers".into());
        None
    };
    let p_sat = sat
        .filter(|s| s.converged && s.warning.is_none())
        .map(|s| s.p_sat_uw);
    let cutoff = saturation_cutoff(&series, p_sat);
    let trend = analyze_s_trend(&series, Some(cutoff))?;

    let below: Vec<&PowerPoint> = series
        .points()
        .iter()
        .filter(|p| p.power_uw <= cutoff)
        .collect();
    let law = |f: &dyn Fn(&PowerPoint) -> f64| -> Option<PowerLawRecord> {
        let data: Vec<(f64, f64)> = below.iter().map(|p| (p.power_uw, f(p))).collect();
        fit_power_law(&data).ok().map(|r| PowerLawRecord::from(&r))
    };
    let laws = PowerLaws {
        lower: law(&|p| p.a_lower),
        upper: law(&|p| p.a_upper),
        bare: law(&|p| p.a_bare),
        polariton_total: law(&|p| p.polariton_total()),
    };

    let rows = series
        .points()
        .iter()
        .map(|p| {
            let s = p.s_ratio()?;
            Ok(PowerRow {
                power_uw: p.power_uw,
                a_lower_counts_nm: p.a_lower,
                a_upper_counts_nm: p.a_upper,
                a_bare_counts_nm: p.a_bare,
                s_ratio_unitless: s,
                suppression_unitless: reference_s.map(|r| suppression(s, r)).transpose()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerAnalysis {
        series,
        trend: TrendRecord::from(&trend),
        power_law: laws,
        saturation: sat.as_ref().map(SaturationRecord::from),
        rows,
        warnings,
    })
}

fn power_table_csv(rows: &[PowerRow]) -> String {
    let mut out = String::from("power_uW,a_lower_counts_nm,a_upper_counts_nm,a_bare_counts_nm,s_ratio_unitless,suppression_unitless\n");
    for r in rows {
        let sup = r
            .suppression_unitless
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.power_uw,
            r.a_lower_counts_nm,
            r.a_upper_counts_nm,
            r.a_bare_counts_nm,
            r.s_ratio_unitless,
            sup
        ));
    }
    out
}

fn cmd_power(args: &PowerArgs) -> Result<i32> {
    let cfg = load_config(args.config.as_deref())?;
    let settings = settings_from(&cfg, args.weights.as_deref(), &[], false)?;
    let regime_filter: Option<Regime> = args.regime.as_deref().map(str::parse).transpose()?;
    let reference_s = match (&args.reference, args.reference_s) {
        (Some(p), _) => Some(
            report::read_json::<PowerReport>(p)?
                .trend
                .mean_s_ratio_unitless,
        ),
        (None, r) => r,
    };

    let mut sources = power_sources(&args.dir)?;
    let regimes: Vec<Regime> = {
        let mut r: Vec<Regime> = sources.iter().filter_map(|i| i.regime).collect();
        r.sort_by_key(|x| x.tag());
        r.dedup();
        r
    };
    let regime = match regime_filter {
        Some(r) => {
            sources.retain(|i| i.regime.is_none_or(|x| x == r));
            Some(r)
        }
        None if regimes.len() > 1 => {
            return Err(Error::input(format!(
                "{}: mixed regimes ({}); pass --regime",
                args.dir.display(),
                regimes
                    .iter()
                    .map(|r| r.tag())
                    .collect::<Vec<_>>()
                    .join(", ")
            )))
        }
        None => regimes.first().copied(),
    };
    if sources.len() < 3 {
        return Err(Error::input(format!(
            "{}: power analysis needs >= 3 powers, found {}",
            args.dir.display(),
            sources.len()
        )));
    }
    let inputs = sources
        .par_iter()
        .map(|s| resolve_source(s, &settings))
        .collect::<Result<Vec<_>>>()?;

    let mut warnings = Vec::new();
    let mut code = EXIT_OK;
    let mut points = Vec::new();
    let mut records = Vec::new();
    for i in &inputs {
        let Some(p) = i.power_uw else {
            return Err(Error::input(format!(
                "{}: no power_uW metadata",
                i.file.display()
            )));
        };
        records.push(InputRecord {
            file: i.file.display().to_string(),
            sha256: i.sha256.clone(),
        });
        if !i.converged {
            warnings.push(format!(
                "{}: fit did not converge, point excluded",
                i.file.display()
            ));
            code = EXIT_NOT_CONVERGED;
            continue;
        }
        points.push(PowerPoint {
            power_uw: p,
            a_lower: i.params.a_lower,
            a_upper: i.params.a_upper,
            a_bare: i.params.a_bare,
            sigma: i.sigma,
        });
    }
    let PowerAnalysis {
        trend,
        power_law: laws,
        saturation: sat,
        rows,
        warnings: w,
        ..
    } = analyze_power(points, reference_s)?;
    warnings.extend(w);
    let rep = PowerReport {
        schema: report::POWER_SCHEMA.into(),
        generated_at_unix_s: now_unix(),
        regime,
        inputs: records,
        rows,
        trend,
        power_law: laws,
        saturation: sat,
        reference_mean_s_ratio_unitless: reference_s,
        warnings,
    };
    let dir = out_dir(args.out.as_deref(), &args.dir);
    let rpath = dir.join("power_report.json");
    write_atomic(&rpath, report::to_json(&rep)?.as_bytes())?;
    write_atomic(
        &dir.join("power_table.csv"),
        power_table_csv(&rep.rows).as_bytes(),
    )?;
    println!("{}", rpath.display());
    println!(
        "classification={} mean_S={:.4}{}",
        rep.trend.classification,
        rep.trend.mean_s_ratio_unitless,
        rep.saturation
            .as_ref()
            .map(|s| format!(" P_sat={:.3} uW", s.p_sat_uw))
            .unwrap_or_default()
    );
    Ok(code)
}

fn generation_target(args: &GenArgs, cfg: &ConfigFile) -> (String, PathBuf) {
    let name = cfg.name.clone().unwrap_or_else(|| file_stem(&args.config));
    let base = parent_or_dot(&args.config);
    if let Some(o) = &args.out {
        return (name, o.clone());
    }
    if let Some(d) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
        return (name.clone(), PathBuf::from(d).join(&name));
    }
    let dir = match &cfg.output_dir {
        Some(d) => base.join(d),
        None => base.join(&name),
    };
    (name, dir)
}

fn apply_instrument(scan: &mut ScanConfig, paper_instrument: bool) {
    if !paper_instrument {
        return;
    }
    if let Some(w) = scan.grid.resolution_warning() {
        eprintln!("warning: {w}");
    }
    scan.instrument_fwhm_nm
        .get_or_insert(SPECTROMETER_RESOLUTION_NM);
}

fn cmd_generate(args: &GenArgs, single: bool) -> Result<i32> {
    let (cfg, _) = ConfigFile::load(&args.config)?;
    let mut scan = if single {
        cfg.single_config(args.seed)?
    } else {
        cfg.scan_config(args.seed)?
    };
    apply_instrument(&mut scan, args.paper_instrument);
    let points = synth_scan(&scan)?;
    let (name, dir) = generation_target(args, &cfg);
    let manifest = emit_fixture(&name, &scan, &points, &dir)?;
    println!("{}", manifest.display());
    Ok(EXIT_OK)
}

/// Runs the tool on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let res = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Power(a) => cmd_power(a),
        Command::Synth(a) => cmd_generate(a, true),
        Command::Scan(a) => cmd_generate(a, false),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_fix_values() {
        assert_eq!(parse_fix("c_bare=933.8").unwrap(), (ParamId::CBare, 933.8));
        assert!(parse_fix("c_bare").is_err());
        assert!(parse_fix("q=1").is_err());
        assert!(parse_fix("w_bare=nan").is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["cavfeed", "fit"]), EXIT_INPUT);
        assert_eq!(run(["cavfeed", "frobnicate"]), EXIT_INPUT);
        assert_eq!(run(["cavfeed", "--help"]), EXIT_OK);
    }
}
