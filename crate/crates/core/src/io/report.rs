//! JSON documents written by the command-line tool.
//!
//! Every numeric key carries its unit; widths are full widths at half maximum.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeding::{PowerLawFit, STrend, SaturationFit, TrendClass};
use crate::fitting::{FitResult, Observables};
use crate::model::{ParamId, Regime, SpectrumMeta, TripletParams};
use crate::units;

pub const FIT_SCHEMA: &str = "cavfeed-fit-report/1";
pub const POWER_SCHEMA: &str = "cavfeed-power-report/1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub a_lower_counts_nm: f64,
    pub c_lower_nm: f64,
    pub fwhm_lower_nm: f64,
    pub a_upper_counts_nm: f64,
    pub c_upper_nm: f64,
    pub fwhm_upper_nm: f64,
    pub a_bare_counts_nm: f64,
    pub c_bare_nm: f64,
    pub fwhm_bare_nm: f64,
}

impl From<&TripletParams> for ParamsRecord {
    fn from(p: &TripletParams) -> Self {
        ParamsRecord {
            a_lower_counts_nm: p.a_lower,
            c_lower_nm: p.c_lower,
            fwhm_lower_nm: 2.0 * p.w_lower,
            a_upper_counts_nm: p.a_upper,
            c_upper_nm: p.c_upper,
            fwhm_upper_nm: 2.0 * p.w_upper,
            a_bare_counts_nm: p.a_bare,
            c_bare_nm: p.c_bare,
            fwhm_bare_nm: 2.0 * p.w_bare,
        }
    }
}

impl ParamsRecord {
    pub fn to_params(&self) -> TripletParams {
        TripletParams {
            a_lower: self.a_lower_counts_nm,
            c_lower: self.c_lower_nm,
            w_lower: 0.5 * self.fwhm_lower_nm,
            a_upper: self.a_upper_counts_nm,
            c_upper: self.c_upper_nm,
            w_upper: 0.5 * self.fwhm_upper_nm,
            a_bare: self.a_bare_counts_nm,
            c_bare: self.c_bare_nm,
            w_bare: 0.5 * self.fwhm_bare_nm,
        }
    }
}

/// One-sigma uncertainties; zero for fixed parameters, absent without a covariance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SigmaRecord {
    pub a_lower_sigma_counts_nm: Option<f64>,
    pub c_lower_sigma_nm: Option<f64>,
    pub fwhm_lower_sigma_nm: Option<f64>,
    pub a_upper_sigma_counts_nm: Option<f64>,
    pub c_upper_sigma_nm: Option<f64>,
    pub fwhm_upper_sigma_nm: Option<f64>,
    pub a_bare_sigma_counts_nm: Option<f64>,
    pub c_bare_sigma_nm: Option<f64>,
    pub fwhm_bare_sigma_nm: Option<f64>,
}

impl SigmaRecord {
    pub fn from_fit(fit: &FitResult) -> Self {
        let s = |id: ParamId| {
            let k = if id.is_width() { 2.0 } else { 1.0 };
            fit.std_error(id).map(|v| k * v)
        };
        SigmaRecord {
            a_lower_sigma_counts_nm: s(ParamId::ALower),
            c_lower_sigma_nm: s(ParamId::CLower),
            fwhm_lower_sigma_nm: s(ParamId::WLower),
            a_upper_sigma_counts_nm: s(ParamId::AUpper),
            c_upper_sigma_nm: s(ParamId::CUpper),
            fwhm_upper_sigma_nm: s(ParamId::WUpper),
            a_bare_sigma_counts_nm: s(ParamId::ABare),
            c_bare_sigma_nm: s(ParamId::CBare),
            fwhm_bare_sigma_nm: s(ParamId::WBare),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservablesRecord {
    pub lambda0_nm: f64,
    pub splitting_nm: f64,
    pub splitting_sigma_nm: Option<f64>,
    #[serde(rename = "splitting_GHz")]
    pub splitting_ghz: f64,
    #[serde(rename = "splitting_sigma_GHz")]
    pub splitting_sigma_ghz: Option<f64>,
    #[serde(rename = "g_GHz")]
    pub g_ghz: f64,
    #[serde(rename = "g_sigma_GHz")]
    pub g_sigma_ghz: Option<f64>,
    pub s_ratio_unitless: f64,
    pub s_ratio_sigma_unitless: Option<f64>,
    pub fwhm_lower_nm: f64,
    pub fwhm_upper_nm: f64,
    pub fwhm_bare_nm: f64,
    pub q_bare_unitless: Option<f64>,
}

impl ObservablesRecord {
    pub fn new(o: &Observables, lambda0_nm: f64) -> Self {
        ObservablesRecord {
            lambda0_nm,
            splitting_nm: o.splitting_nm,
            splitting_sigma_nm: o.splitting_sigma_nm,
            splitting_ghz: o.splitting_ghz,
            splitting_sigma_ghz: o.splitting_sigma_ghz,
            g_ghz: o.g_ghz,
            g_sigma_ghz: o
                .splitting_sigma_nm
                .and_then(|s| units::splitting_to_g(s, lambda0_nm).ok()),
            s_ratio_unitless: o.s_ratio,
            s_ratio_sigma_unitless: o.s_ratio_sigma,
            fwhm_lower_nm: o.fwhm_lower_nm,
            fwhm_upper_nm: o.fwhm_upper_nm,
            fwhm_bare_nm: o.fwhm_bare_nm,
            q_bare_unitless: o.q_bare,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub file: String,
    pub input_sha256: String,
    pub config_file: Option<String>,
    pub config_sha256: Option<String>,
    /// Hash of the effective fit settings after flags are applied.
    pub settings_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetaRecord {
    #[serde(rename = "temperature_K")]
    pub temperature_k: Option<f64>,
    #[serde(rename = "power_uW")]
    pub power_uw: Option<f64>,
    pub regime: Option<Regime>,
    pub extra: BTreeMap<String, String>,
}

impl From<&SpectrumMeta> for MetaRecord {
    fn from(m: &SpectrumMeta) -> Self {
        MetaRecord {
            temperature_k: m.temperature_k,
            power_uw: m.power_uw,
            regime: m.regime,
            extra: m.extra.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub converged: bool,
    pub termination: String,
    pub iterations_count: usize,
    pub residual_norm_counts2: f64,
    pub n_points_count: usize,
    pub n_free_count: usize,
    pub peaks_found_count: usize,
    pub starts_count: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    pub generated_at_unix_s: u64,
    pub input: Provenance,
    pub metadata: MetaRecord,
    /// "triplet" or "doublet".
    pub model: String,
    pub params: ParamsRecord,
    pub uncertainties: SigmaRecord,
    pub observables: Option<ObservablesRecord>,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    #[serde(rename = "power_uW")]
    pub power_uw: f64,
    pub a_lower_counts_nm: f64,
    pub a_upper_counts_nm: f64,
    pub a_bare_counts_nm: f64,
    pub s_ratio_unitless: f64,
    /// 1 − S/S_ref against the reference mean S, when one is given.
    pub suppression_unitless: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendRecord {
    pub classification: TrendClass,
    pub mean_s_ratio_unitless: f64,
    #[serde(rename = "slope_per_uW")]
    pub slope_per_uw: f64,
    pub intercept_unitless: f64,
    #[serde(rename = "cutoff_uW")]
    pub cutoff_uw: Option<f64>,
    pub n_used_count: usize,
    pub f_ratio_unitless: Option<f64>,
    pub relative_trend_unitless: f64,
    pub relative_scatter_unitless: f64,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&STrend> for TrendRecord {
    fn from(t: &STrend) -> Self {
        TrendRecord {
            classification: t.classification,
            mean_s_ratio_unitless: t.mean_s,
            slope_per_uw: t.slope_per_uw,
            intercept_unitless: t.intercept,
            cutoff_uw: t.diagnostics.cutoff_uw,
            n_used_count: t.diagnostics.n_used,
            f_ratio_unitless: finite(t.diagnostics.f_ratio),
            relative_trend_unitless: t.diagnostics.relative_trend,
            relative_scatter_unitless: t.diagnostics.relative_scatter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRecord {
    pub exponent_unitless: f64,
    pub prefactor_counts_nm: f64,
    pub r_squared_unitless: f64,
}

impl From<&PowerLawFit> for PowerLawRecord {
    fn from(f: &PowerLawFit) -> Self {
        PowerLawRecord {
            exponent_unitless: f.exponent,
            prefactor_counts_nm: f.prefactor,
            r_squared_unitless: f.r_squared,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerLaws {
    pub lower: Option<PowerLawRecord>,
    pub upper: Option<PowerLawRecord>,
    pub bare: Option<PowerLawRecord>,
    pub polariton_total: Option<PowerLawRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationRecord {
    #[serde(rename = "p_sat_uW")]
    pub p_sat_uw: f64,
    #[serde(rename = "p_sat_sigma_uW")]
    pub p_sat_sigma_uw: Option<f64>,
    pub a_max_counts_nm: f64,
    pub converged: bool,
    pub warning: Option<String>,
}

impl From<&SaturationFit> for SaturationRecord {
    fn from(s: &SaturationFit) -> Self {
        SaturationRecord {
            p_sat_uw: s.p_sat_uw,
            p_sat_sigma_uw: s.p_sat_sigma_uw,
            a_max_counts_nm: s.a_max,
            converged: s.converged,
            warning: s.warning.map(|w| {
                serde_json::to_value(w)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub schema: String,
    pub generated_at_unix_s: u64,
    pub regime: Option<Regime>,
    pub inputs: Vec<InputRecord>,
    pub rows: Vec<PowerRow>,
    pub trend: TrendRecord,
    pub power_law: PowerLaws,
    pub saturation: Option<SaturationRecord>,
    pub reference_mean_s_ratio_unitless: Option<f64>,
    pub warnings: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
