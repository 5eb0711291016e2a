use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::s_ratio;
use crate::error::{Error, Result};
use crate::fitting::lm::{self, LeastSquaresProblem, LmSettings};

/// Linear trend accepted over a constant when the residual-variance F-ratio exceeds this.
pub const F_RATIO_THRESHOLD: f64 = 10.0;
/// ...and the fitted line changes S by at least this fraction of its mean over the power span.
pub const MIN_RELATIVE_TREND: f64 = 0.1;
/// A constant is accepted when the RMS scatter about the mean is at most this fraction of the mean.
pub const MAX_CONSTANT_SCATTER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub power_uw: f64,
    pub a_lower: f64,
    pub a_upper: f64,
    pub a_bare: f64,
    /// Standard errors of (a_lower, a_upper, a_bare).
    pub sigma: Option<[f64; 3]>,
}

impl PowerPoint {
    pub fn polariton_total(&self) -> f64 {
        self.a_lower + self.a_upper
    }

    pub fn s_ratio(&self) -> Result<f64> {
        s_ratio(self.a_lower, self.a_upper, self.a_bare)
    }
}

/// Fitted amplitudes across pump powers, strictly increasing in power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSeries {
    points: Vec<PowerPoint>,
}

impl PowerSeries {
    pub fn new(mut points: Vec<PowerPoint>) -> Result<Self> {
        points.sort_by(|a, b| a.power_uw.total_cmp(&b.power_uw));
        if let Some(p) = points
            .iter()
            .find(|p| !(p.power_uw > 0.0 && p.power_uw.is_finite()))
        {
            return Err(Error::input(format!(
                "pump powers must be > 0, got {}",
                p.power_uw
            )));
        }
        if let Some(w) = points.windows(2).find(|w| w[0].power_uw == w[1].power_uw) {
            return Err(Error::input(format!(
                "duplicate pump power {} uW",
                w[0].power_uw
            )));
        }
        Ok(PowerSeries { points })
    }

    pub fn points(&self) -> &[PowerPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn polariton_totals(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .map(|p| (p.power_uw, p.polariton_total()))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of log A on log P.
pub fn fit_power_law(series: &[(f64, f64)]) -> Result<PowerLawFit> {
    if series.len() < 3 {
        return Err(Error::input(format!(
            "power-law fit needs >= 3 points, got {}",
            series.len()
        )));
    }
    if let Some(&(p, a)) = series.iter().find(|(p, a)| !(*p > 0.0 && *a > 0.0)) {
        return Err(Error::domain(format!(
            "power-law fit needs positive values, got ({p}, {a})"
        )));
    }
    let xs: Vec<f64> = series.iter().map(|(p, _)| p.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|(_, a)| a.ln()).collect();
    let (slope, intercept, ssr) =
        ols(&xs, &ys).ok_or_else(|| Error::input("power-law fit needs distinct powers"))?;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let sst: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(PowerLawFit {
        exponent: slope,
        prefactor: intercept.exp(),
        r_squared,
    })
}

/// (slope, intercept, residual sum of squares), `None` if x is degenerate.
fn ols(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Some((slope, intercept, ssr))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaturationWarning {
    /// The fitted saturation power sits on its upper bound: no curvature in the data.
    AtUpperBound,
    /// The fitted knee lies outside the sampled powers.
    KneeOutsideData,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationFit {
    pub p_sat_uw: f64,
    pub a_max: f64,
    pub p_sat_sigma_uw: Option<f64>,
    pub converged: bool,
    pub warning: Option<SaturationWarning>,
}

/// A(P) = a_max·P/(P + p_sat), each residual divided by its own scale.
struct SaturationProblem<'a> {
    data: &'a [(f64, f64)],
    scale: Vec<f64>,
}

impl LeastSquaresProblem for SaturationProblem<'_> {
    fn n_params(&self) -> usize {
        2
    }

    fn n_residuals(&self) -> usize {
        self.data.len()
    }

    fn residuals(&self, p: &[f64], out: &mut [f64]) {
        for ((o, &(pw, a)), s) in out.iter_mut().zip(self.data).zip(&self.scale) {
            *o = (p[0] * pw / (pw + p[1]) - a) / s;
        }
    }

    fn jacobian(&self, p: &[f64], jac: &mut DMatrix<f64>) {
        for (i, (&(pw, _), s)) in self.data.iter().zip(&self.scale).enumerate() {
            let d = pw + p[1];
            jac[(i, 0)] = pw / d / s;
            jac[(i, 1)] = -p[0] * pw / (d * d) / s;
        }
    }
}

const P_SAT_UPPER_FACTOR: f64 = 100.0;

/// Refits after the unweighted pass with residuals relative to the previous model.
pub const SATURATION_REWEIGHT_PASSES: usize = 2;

/// Least-squares fit of A(P) = a_max·P/(P + p_sat) with constant relative
/// scatter: an unweighted pass, then passes weighted by the fitted model.
pub fn fit_saturation(series: &[(f64, f64)]) -> Result<SaturationFit> {
    if series.len() < 4 {
        return Err(Error::input(format!(
            "saturation fit needs >= 4 points, got {}",
            series.len()
        )));
    }
    if let Some(&(p, a)) = series
        .iter()
        .find(|(p, a)| !(*p > 0.0 && a.is_finite() && *a >= 0.0))
    {
        return Err(Error::domain(format!(
            "saturation fit needs P > 0 and A >= 0, got ({p}, {a})"
        )));
    }
    let p_min = series.iter().map(|d| d.0).fold(f64::INFINITY, f64::min);
    let p_max = series.iter().map(|d| d.0).fold(0.0, f64::max);
    let a_top = series.iter().map(|d| d.1).fold(0.0, f64::max);
    if a_top <= 0.0 {
        return Err(Error::input(
            "saturation fit needs at least one positive amplitude",
        ));
    }
    let upper = P_SAT_UPPER_FACTOR * p_max;

    // double-reciprocal line 1/A = 1/a_max + (p_sat/a_max)/P seeds the solver
    let positive: Vec<(f64, f64)> = series.iter().copied().filter(|d| d.1 > 0.0).collect();
    let xs: Vec<f64> = positive.iter().map(|d| 1.0 / d.0).collect();
    let ys: Vec<f64> = positive.iter().map(|d| 1.0 / d.1).collect();
    let (a0, p0) = match ols(&xs, &ys) {
        Some((slope, icpt, _)) if icpt > 0.0 && slope > 0.0 => {
            (1.0 / icpt, (slope / icpt).min(upper))
        }
        _ => (2.0 * a_top, p_max),
    };

    let mut settings = LmSettings::unbounded(2);
    settings.max_iterations = 500;
    settings.rel_tolerance = 1e-12;
    settings.lower = vec![0.0, 1e-6 * p_min];
    settings.upper = vec![f64::INFINITY, upper];
    let mut problem = SaturationProblem {
        data: series,
        scale: vec![a_top; series.len()],
    };
    let mut out = lm::minimize(&problem, &[a0, p0], &settings);
    for _ in 0..SATURATION_REWEIGHT_PASSES {
        if !out.converged() || out.params[0] <= 0.0 {
            break;
        }
        let (a_max, ps) = (out.params[0], out.params[1]);
        problem.scale = series
            .iter()
            .map(|&(pw, _)| a_max * pw / (pw + ps))
            .collect();
        let start = out.params.clone();
        out = lm::minimize(&problem, &start, &settings);
    }

    let p_sat = out.params[1];
    let warning = if p_sat >= 0.999 * upper {
        Some(SaturationWarning::AtUpperBound)
    } else if p_sat > p_max || p_sat < p_min {
        Some(SaturationWarning::KneeOutsideData)
    } else {
        None
    };
    let dof = series.len().saturating_sub(2).max(1) as f64;
    let var = out.normal_inverse[(1, 1)] * out.ssr / dof;
    Ok(SaturationFit {
        p_sat_uw: p_sat,
        a_max: out.params[0],
        p_sat_sigma_uw: out.converged().then(|| var.max(0.0).sqrt()),
        converged: out.converged(),
        warning,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrendClass {
    Constant,
    Linear,
    Other,
}

impl std::fmt::Display for TrendClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrendClass::Constant => "constant",
            TrendClass::Linear => "linear",
            TrendClass::Other => "other",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendDiagnostics {
    pub n_used: usize,
    pub cutoff_uw: Option<f64>,
    pub ssr_constant: f64,
    pub ssr_linear: f64,
    pub f_ratio: f64,
    /// |slope|·(P_max − P_min)/mean S.
    pub relative_trend: f64,
    /// RMS scatter about the mean divided by the mean.
    pub relative_scatter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct STrend {
    pub classification: TrendClass,
    pub slope_per_uw: f64,
    pub intercept: f64,
    pub mean_s: f64,
    /// (power, S) for every point used.
    pub s_values: Vec<(f64, f64)>,
    pub diagnostics: TrendDiagnostics,
}

/// Classifies S(P) over the points at or below `cutoff_uw` as constant, linear or neither.
pub fn analyze_s_trend(series: &PowerSeries, cutoff_uw: Option<f64>) -> Result<STrend> {
    let s_values: Vec<(f64, f64)> = series
        .points()
        .iter()
        .filter(|p| cutoff_uw.is_none_or(|c| p.power_uw <= c))
        .map(|p| p.s_ratio().map(|s| (p.power_uw, s)))
        .collect::<Result<_>>()?;
    let n = s_values.len();
    if n < 3 {
        return Err(Error::input(format!(
            "S trend needs >= 3 points below the saturation cutoff, got {n}"
        )));
    }
    let xs: Vec<f64> = s_values.iter().map(|v| v.0).collect();
    let ys: Vec<f64> = s_values.iter().map(|v| v.1).collect();
    let mean_s = ys.iter().sum::<f64>() / n as f64;
    let ssr_constant: f64 = ys.iter().map(|y| (y - mean_s).powi(2)).sum();
    let (slope, intercept, ssr_linear) =
        ols(&xs, &ys).ok_or_else(|| Error::input("S trend needs distinct powers"))?;
    let ssr_linear = ssr_linear.min(ssr_constant);

    let f_ratio = if ssr_linear > 0.0 {
        (ssr_constant - ssr_linear) / (ssr_linear / (n - 2) as f64)
    } else if ssr_constant > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let span = xs[n - 1] - xs[0];
    let (relative_trend, relative_scatter) = if mean_s > 0.0 {
        (
            slope.abs() * span / mean_s,
            (ssr_constant / n as f64).sqrt() / mean_s,
        )
    } else {
        (0.0, 0.0)
    };

    let classification = if ssr_constant <= 1e-24 * n as f64 {
        TrendClass::Constant
    } else if f_ratio > F_RATIO_THRESHOLD && relative_trend >= MIN_RELATIVE_TREND {
        TrendClass::Linear
    } else if relative_scatter <= MAX_CONSTANT_SCATTER {
        TrendClass::Constant
    } else {
        TrendClass::Other
    };

    Ok(STrend {
        classification,
        slope_per_uw: slope,
        intercept,
        mean_s,
        s_values,
        diagnostics: TrendDiagnostics {
            n_used: n,
            cutoff_uw,
            ssr_constant,
            ssr_linear,
            f_ratio,
            relative_trend,
            relative_scatter,
        },
    })
}

/// Upper power for "below saturation": 0.9·P_sat when known, otherwise the
/// largest power up to which the polariton sum still grows with exponent
/// within 15% of 1. Falls back to the largest power.
pub fn saturation_cutoff(series: &PowerSeries, p_sat_uw: Option<f64>) -> f64 {
    if let Some(p) = p_sat_uw {
        return 0.9 * p;
    }
    let totals = series.polariton_totals();
    let last = totals.last().map(|t| t.0).unwrap_or(0.0);
    let mut cutoff = None;
    for k in 3..=totals.len() {
        if let Ok(fit) = fit_power_law(&totals[..k]) {
            if (fit.exponent - 1.0).abs() <= 0.15 {
                cutoff = Some(totals[k - 1].0);
            }
        }
    }
    cutoff.unwrap_or(last)
}

/// Fractional reduction of S relative to a reference mean: 1 − S/S̄.
pub fn suppression(s: f64, s_reference_mean: f64) -> Result<f64> {
    if !(s_reference_mean > 0.0) {
        return Err(Error::domain("reference S must be > 0"));
    }
    Ok(1.0 - s / s_reference_mean)
}
