//! Declarative TOML configuration shared by `synth`, `scan`, `fit` and `power`.
//!
//! ```toml
//! schema_version = 1
//! name = "fig2-qre"
//! seed = 2
//!
//! [system]
//! lambda_cavity_nm = 933.8
//! resonant_splitting_nm = 0.11
//! q_factor = 13300
//! gamma_x_GHz = 1.0
//!
//! [scan]
//! kind = "temperature"
//! temperatures_K = [16.4, 17.4, 18.4]
//! ```
//!
//! Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeding::FeedingModelParams;
use crate::fitting::Weighting;
use crate::model::{CoupledSystemParams, ParamId, Regime};
use crate::simulator::{LambdaGrid, NoiseModel, ScanAxis, ScanConfig, TemperatureMap};
use crate::units;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    pub name: Option<String>,
    /// Output directory of generated fixtures, relative to the config file.
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub system: Option<SystemSection>,
    pub feeding: Option<FeedingSection>,
    pub grid: Option<GridSection>,
    pub noise: Option<NoiseSection>,
    pub scan: Option<ScanSection>,
    pub single: Option<SingleSection>,
    pub fit: Option<FitSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub lambda_cavity_nm: f64,
    #[serde(rename = "g_GHz")]
    pub g_ghz: Option<f64>,
    /// Observed on-resonance polariton splitting; g is solved for from it.
    pub resonant_splitting_nm: Option<f64>,
    pub q_factor: Option<f64>,
    #[serde(rename = "kappa_GHz")]
    pub kappa_ghz: Option<f64>,
    #[serde(rename = "gamma_x_GHz", default = "default_gamma_x")]
    pub gamma_x_ghz: f64,
    #[serde(rename = "delta_GHz", default)]
    pub delta_ghz: f64,
}

fn default_gamma_x() -> f64 {
    1.0
}

fn default_eta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedingSection {
    pub regime: String,
    #[serde(rename = "p_sat_uW")]
    pub p_sat_uw: f64,
    #[serde(rename = "k_exciton_per_uW")]
    pub k_exciton: f64,
    #[serde(rename = "k_charged_per_uW", default)]
    pub k_charged: f64,
    #[serde(rename = "k_biexciton_per_uW2", default)]
    pub k_biexciton: f64,
    #[serde(rename = "eta_feed_unitless", default = "default_eta")]
    pub eta_feed: f64,
    #[serde(rename = "polariton_asymmetry_unitless", default)]
    pub polariton_asymmetry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub min_nm: f64,
    pub max_nm: f64,
    pub step_nm: f64,
    pub instrument_fwhm_nm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// none, gaussian or poisson.
    pub kind: String,
    pub sigma_rel_unitless: Option<f64>,
    pub counts_scale_unitless: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// detuning, temperature or power.
    pub kind: String,
    #[serde(rename = "power_uW")]
    pub power_uw: Option<f64>,
    #[serde(rename = "detunings_GHz")]
    pub detunings_ghz: Option<Vec<f64>>,
    #[serde(rename = "temperatures_K")]
    pub temperatures_k: Option<Vec<f64>>,
    #[serde(rename = "t0_K")]
    pub t0_k: Option<f64>,
    #[serde(rename = "slope_GHz_per_K")]
    pub slope_ghz_per_k: Option<f64>,
    #[serde(rename = "powers_uW")]
    pub powers_uw: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSection {
    #[serde(rename = "power_uW")]
    pub power_uw: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    /// Reference wavelength of the splitting → g conversion.
    pub lambda0_nm: Option<f64>,
    /// Known bare-cavity wavelength for initialization.
    pub cavity_nm: Option<f64>,
    pub splitting_guess_nm: Option<f64>,
    pub smoothing_window: Option<usize>,
    pub weights: Option<String>,
    pub max_iterations: Option<usize>,
    pub rel_tolerance: Option<f64>,
    pub no_bare: Option<bool>,
    /// Parameter name → value held fixed (widths as HWHM, nm).
    #[serde(default)]
    pub fix: BTreeMap<String, f64>,
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

fn require<'a, T>(v: &'a Option<T>, field: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| cfg_err(field, "missing"))
}

fn positive(v: f64, field: &str) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(cfg_err(field, format!("must be > 0, got {v}")))
    }
}

impl ConfigFile {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| {
            Error::Config(format!("{}: {}", path.display(), e.to_string().trim_end()))
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(cfg_err(
                "schema_version",
                format!(
                    "unsupported version {}, expected {SCHEMA_VERSION}",
                    cfg.schema_version
                ),
            ));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Config(format!("{}: not UTF-8", path.display())))?;
        Ok((Self::parse(text, path)?, bytes))
    }

    pub fn system(&self) -> Result<CoupledSystemParams> {
        let s = require(&self.system, "system")?;
        let lc = positive(s.lambda_cavity_nm, "system.lambda_cavity_nm")?;
        let kappa = match (s.q_factor, s.kappa_ghz) {
            (Some(q), None) => units::kappa_from_q(lc, positive(q, "system.q_factor")?)?,
            (None, Some(k)) => positive(k, "system.kappa_GHz")?,
            _ => {
                return Err(cfg_err(
                    "system",
                    "exactly one of q_factor, kappa_GHz required",
                ))
            }
        };
        if !(s.gamma_x_ghz >= 0.0 && s.gamma_x_ghz.is_finite()) {
            return Err(cfg_err(
                "system.gamma_x_GHz",
                format!("must be >= 0, got {}", s.gamma_x_ghz),
            ));
        }
        let g = match (s.g_ghz, s.resonant_splitting_nm) {
            (Some(g), None) => positive(g, "system.g_GHz")?,
            (None, Some(split)) => {
                let split_ghz = 2.0
                    * units::splitting_to_g(positive(split, "system.resonant_splitting_nm")?, lc)?;
                CoupledSystemParams::g_for_resonant_splitting(split_ghz, kappa, s.gamma_x_ghz)
            }
            _ => {
                return Err(cfg_err(
                    "system",
                    "exactly one of g_GHz, resonant_splitting_nm required",
                ))
            }
        };
        if !s.delta_ghz.is_finite() {
            return Err(cfg_err("system.delta_GHz", "must be finite"));
        }
        let sys = CoupledSystemParams {
            g_ghz: g,
            kappa_ghz: kappa,
            gamma_x_ghz: s.gamma_x_ghz,
            lambda_cavity_nm: lc,
            delta_ghz: s.delta_ghz,
        };
        sys.validate().map_err(|e| cfg_err("system", e))?;
        Ok(sys)
    }

    pub fn feeding(&self) -> Result<FeedingModelParams> {
        let f = require(&self.feeding, "feeding")?;
        let regime: Regime = f.regime.parse().map_err(|e| cfg_err("feeding.regime", e))?;
        let m = FeedingModelParams {
            regime,
            p_sat_uw: f.p_sat_uw,
            k_exciton: f.k_exciton,
            k_charged: f.k_charged,
            k_biexciton: f.k_biexciton,
            eta_feed: f.eta_feed,
            polariton_asymmetry: f.polariton_asymmetry,
        };
        m.validate().map_err(|e| cfg_err("feeding", e))?;
        Ok(m)
    }

    pub fn grid(&self) -> Result<(LambdaGrid, Option<f64>)> {
        let g = require(&self.grid, "grid")?;
        let grid = LambdaGrid {
            min_nm: g.min_nm,
            max_nm: g.max_nm,
            step_nm: g.step_nm,
        };
        grid.validate().map_err(|e| cfg_err("grid", e))?;
        if let Some(f) = g.instrument_fwhm_nm {
            positive(f, "grid.instrument_fwhm_nm")?;
        }
        Ok((grid, g.instrument_fwhm_nm))
    }

    pub fn noise(&self) -> Result<NoiseModel> {
        let Some(n) = &self.noise else {
            return Ok(NoiseModel::None);
        };
        let model = match n.kind.as_str() {
            "none" => NoiseModel::None,
            "gaussian" => NoiseModel::Gaussian {
                sigma_rel: *require(&n.sigma_rel_unitless, "noise.sigma_rel_unitless")?,
            },
            "poisson" => NoiseModel::Poisson {
                counts_scale: n.counts_scale_unitless.unwrap_or(1.0),
            },
            other => {
                return Err(cfg_err(
                    "noise.kind",
                    format!("unknown kind '{other}', expected none, gaussian or poisson"),
                ))
            }
        };
        model.validate().map_err(|e| cfg_err("noise", e))?;
        Ok(model)
    }

    fn base_scan(
        &self,
        seed_override: Option<u64>,
        power_uw: f64,
        axis: ScanAxis,
    ) -> Result<ScanConfig> {
        let (grid, instrument) = self.grid()?;
        let cfg = ScanConfig {
            sys: self.system()?,
            feeding: self.feeding()?,
            power_uw,
            grid,
            noise: self.noise()?,
            instrument_fwhm_nm: instrument,
            seed: seed_override.or(self.seed).unwrap_or(0),
            axis,
        };
        cfg.validate().map_err(|e| cfg_err("scan", e))?;
        Ok(cfg)
    }

    pub fn scan_config(&self, seed_override: Option<u64>) -> Result<ScanConfig> {
        let s = require(&self.scan, "scan")?;
        let nonempty = |v: &Option<Vec<f64>>, field: &str| -> Result<Vec<f64>> {
            let v = require(v, field)?;
            if v.is_empty() {
                return Err(cfg_err(field, "list is empty"));
            }
            Ok(v.clone())
        };
        let (axis, power) = match s.kind.as_str() {
            "detuning" => (
                ScanAxis::Detuning {
                    detunings_ghz: nonempty(&s.detunings_ghz, "scan.detunings_GHz")?,
                },
                *require(&s.power_uw, "scan.power_uW")?,
            ),
            "temperature" => {
                let d = TemperatureMap::default();
                (
                    ScanAxis::Temperature {
                        map: TemperatureMap {
                            slope_ghz_per_k: s.slope_ghz_per_k.unwrap_or(d.slope_ghz_per_k),
                            t0_k: s.t0_k.unwrap_or(d.t0_k),
                        },
                        temperatures_k: nonempty(&s.temperatures_k, "scan.temperatures_K")?,
                    },
                    *require(&s.power_uw, "scan.power_uW")?,
                )
            }
            "power" => {
                let powers = nonempty(&s.powers_uw, "scan.powers_uW")?;
                if let Some(p) = powers.iter().find(|p| !(**p > 0.0)) {
                    return Err(cfg_err(
                        "scan.powers_uW",
                        format!("powers must be > 0, got {p}"),
                    ));
                }
                (
                    ScanAxis::Power { powers_uw: powers },
                    s.power_uw.unwrap_or(0.0),
                )
            }
            other => {
                return Err(cfg_err(
                    "scan.kind",
                    format!("unknown kind '{other}', expected detuning, temperature or power"),
                ))
            }
        };
        if !matches!(axis, ScanAxis::Power { .. }) {
            positive(power, "scan.power_uW")?;
        }
        self.base_scan(seed_override, power, axis)
    }

    /// A one-point power scan at the `[single]` pump power and `system.delta_GHz`.
    pub fn single_config(&self, seed_override: Option<u64>) -> Result<ScanConfig> {
        let s = require(&self.single, "single")?;
        let p = positive(s.power_uw, "single.power_uW")?;
        self.base_scan(seed_override, p, ScanAxis::Power { powers_uw: vec![p] })
    }

    pub fn fit_section(&self) -> FitSection {
        self.fit.clone().unwrap_or_default()
    }
}

impl FitSection {
    pub fn weighting(&self) -> Result<Weighting> {
        self.weights
            .as_deref()
            .map(|w| w.parse().map_err(|e| cfg_err("fit.weights", e)))
            .transpose()
            .map(|w| w.unwrap_or_default())
    }

    pub fn fixed(&self) -> Result<BTreeMap<ParamId, f64>> {
        self.fix
            .iter()
            .map(|(k, &v)| {
                let id: ParamId = k.parse().map_err(|e| cfg_err("fit.fix", e))?;
                if !v.is_finite() {
                    return Err(cfg_err(&format!("fit.fix.{k}"), "must be finite"));
                }
                Ok((id, v))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
schema_version = 1
seed = 4

[system]
lambda_cavity_nm = 933.8
resonant_splitting_nm = 0.11
q_factor = 13300

[feeding]
regime = "QRE"
p_sat_uW = 8.5
k_exciton_per_uW = 2000
k_biexciton_per_uW2 = 400
eta_feed_unitless = 0.5

[grid]
min_nm = 933.3
max_nm = 934.3
step_nm = 0.005

[noise]
kind = "poisson"

[scan]
kind = "detuning"
power_uW = 4.0
detunings_GHz = [-20, 0, 20]
"#;

    fn parse(t: &str) -> Result<ConfigFile> {
        ConfigFile::parse(t, Path::new("c.toml"))
    }

    #[test]
    fn parses_example() {
        let c = parse(BASE).unwrap();
        let s = c.scan_config(None).unwrap();
        assert_eq!(s.seed, 4);
        assert_eq!(c.scan_config(Some(9)).unwrap().seed, 9);
        let split = 2.0 * units::splitting_to_g(0.11, 933.8).unwrap();
        assert!((s.sys.resonant_splitting_ghz() - split).abs() < 1e-9);
        assert_eq!(s.axis.len(), 3);
    }

    #[test]
    fn unknown_key_rejected_with_name() {
        let t = BASE.replace("q_factor = 13300", "q_factor = 13300\nq_factr = 1");
        let e = parse(&t).unwrap_err().to_string();
        assert!(e.contains("q_factr"), "{e}");
    }

    #[test]
    fn field_level_diagnostics() {
        let empty = BASE.replace("detunings_GHz = [-20, 0, 20]", "detunings_GHz = []");
        let e = parse(&empty)
            .unwrap()
            .scan_config(None)
            .unwrap_err()
            .to_string();
        assert!(e.contains("scan.detunings_GHz"), "{e}");
        let step = BASE.replace("step_nm = 0.005", "step_nm = -1");
        let e = parse(&step)
            .unwrap()
            .scan_config(None)
            .unwrap_err()
            .to_string();
        assert!(e.contains("grid"), "{e}");
        let both = BASE.replace("q_factor = 13300", "q_factor = 13300\nkappa_GHz = 20");
        assert!(parse(&both).unwrap().system().is_err());
        let ver = BASE.replace("schema_version = 1", "schema_version = 2");
        assert!(parse(&ver).is_err());
    }

    #[test]
    fn fit_section_parsing() {
        let t = "schema_version = 1\n[fit]\nweights = \"poisson\"\nfix = { c_bare = 933.8 }\n";
        let f = parse(t).unwrap().fit_section();
        assert_eq!(f.weighting().unwrap(), Weighting::Poisson);
        assert_eq!(f.fixed().unwrap()[&ParamId::CBare], 933.8);
        let bad = "schema_version = 1\n[fit]\nfix = { c_bar = 1.0 }\n";
        assert!(parse(bad).unwrap().fit_section().fixed().is_err());
    }
}
