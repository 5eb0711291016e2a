use std::collections::BTreeMap;

use nalgebra::{DMatrix, SMatrix};
use serde::{Deserialize, Serialize};

use super::lm::{self, LeastSquaresProblem, LmSettings, Termination};
use crate::error::{Error, Result};
use crate::model::{ParamId, Peak, Spectrum, TripletParams, PARAM_COUNT};

/// Least-squares weighting of the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    #[default]
    None,
    /// σᵢ² = max(model(λᵢ), 1), the model taken from the previous pass of
    /// an iteratively reweighted fit.
    Poisson,
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Weighting::None),
            "poisson" => Ok(Weighting::Poisson),
            other => Err(Error::input(format!(
                "unknown weighting '{other}', expected none or poisson"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    pub rel_tolerance: f64,
    pub damping_init: f64,
    /// Box constraints overriding the defaults.
    pub bounds: BTreeMap<ParamId, (f64, f64)>,
    /// Parameters held at the given value.
    pub fixed: BTreeMap<ParamId, f64>,
    pub weighting: Weighting,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 200,
            rel_tolerance: 1e-8,
            damping_init: 1e-3,
            bounds: BTreeMap::new(),
            fixed: BTreeMap::new(),
            weighting: Weighting::None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::Config("rel_tolerance must be > 0".into()));
        }
        if !(self.damping_init > 0.0) {
            return Err(Error::Config("damping_init must be > 0".into()));
        }
        for (id, (lo, hi)) in &self.bounds {
            if !(lo < hi) {
                return Err(Error::Config(format!(
                    "bounds for {id}: lower {lo} not below upper {hi}"
                )));
            }
        }
        for (id, v) in &self.fixed {
            if !v.is_finite() {
                return Err(Error::Config(format!("fixed value for {id} is not finite")));
            }
        }
        Ok(())
    }

    pub fn fix(mut self, id: ParamId, value: f64) -> Self {
        self.fixed.insert(id, value);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: TripletParams,
    /// Σ wᵢ(Iᵢ − model)², counts² when unweighted.
    pub residual_norm: f64,
    /// Parameter covariance in [`ParamId`] order; zero rows for fixed parameters.
    pub covariance: Option<SMatrix<f64, PARAM_COUNT, PARAM_COUNT>>,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    /// Residual norm after each accepted step, starting at the initial point.
    pub history: Vec<f64>,
    pub n_points: usize,
    pub n_free: usize,
}

impl FitResult {
    pub fn std_error(&self, id: ParamId) -> Option<f64> {
        self.covariance.map(|c| c[(id.index(), id.index())].sqrt())
    }
}

/// Least-squares problem for the three-Lorentzian model.
struct TripletProblem<'a> {
    x: &'a [f64],
    y: &'a [f64],
    /// √wᵢ/‖√w·y‖: keeps the solver path independent of the overall intensity scale.
    row_scale: Vec<f64>,
    /// ‖√w·y‖², the factor between internal and reported residual norms.
    norm2: f64,
}

impl<'a> TripletProblem<'a> {
    /// `variances` of None gives unit weights.
    fn new(spec: &'a Spectrum, variances: Option<&[f64]>) -> Self {
        let y = spec.intensities();
        let sqrt_w: Vec<f64> = match variances {
            None => vec![1.0; y.len()],
            Some(v) => v.iter().map(|v| 1.0 / v.sqrt()).collect(),
        };
        let norm = sqrt_w
            .iter()
            .zip(y)
            .map(|(w, v)| (w * v) * (w * v))
            .sum::<f64>()
            .sqrt();
        let norm = if norm > 0.0 { norm } else { 1.0 };
        TripletProblem {
            x: spec.wavelengths(),
            y,
            row_scale: sqrt_w.iter().map(|w| w / norm).collect(),
            norm2: norm * norm,
        }
    }
}

impl LeastSquaresProblem for TripletProblem<'_> {
    fn n_params(&self) -> usize {
        PARAM_COUNT
    }

    fn n_residuals(&self) -> usize {
        self.x.len()
    }

    fn residuals(&self, params: &[f64], out: &mut [f64]) {
        let p = TripletParams::from_slice(params);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row_scale[i] * (p.eval(self.x[i]) - self.y[i]);
        }
    }

    fn jacobian(&self, params: &[f64], jac: &mut DMatrix<f64>) {
        let p = TripletParams::from_slice(params);
        for i in 0..self.x.len() {
            let g = p.gradient(self.x[i]);
            for j in 0..PARAM_COUNT {
                jac[(i, j)] = self.row_scale[i] * g[j];
            }
        }
    }

    fn project(&self, params: &mut [f64], free: &[bool]) {
        order_centers(params, free);
    }
}

/// Keeps c_lower < c_upper, and while the polaritons overlap
/// (|c_upper − c_lower| < max(w)/2) keeps the bare peak between them.
fn order_centers(p: &mut [f64], free: &[bool]) {
    let (cl, cu, cb) = (
        ParamId::CLower.index(),
        ParamId::CUpper.index(),
        ParamId::CBare.index(),
    );
    let w = p[ParamId::WLower.index()].max(p[ParamId::WUpper.index()]);
    let min_sep = 1e-6 * w;
    if p[cu] - p[cl] < min_sep {
        match (free[cl], free[cu]) {
            (true, true) => {
                let mid = 0.5 * (p[cl] + p[cu]);
                p[cl] = mid - 0.5 * min_sep;
                p[cu] = mid + 0.5 * min_sep;
            }
            (true, false) => p[cl] = p[cu] - min_sep,
            (false, true) => p[cu] = p[cl] + min_sep,
            (false, false) => {}
        }
    }
    let overlap = p[cu] - p[cl] < 0.5 * w;
    if overlap && free[cb] && p[ParamId::ABare.index()] > 0.0 {
        let margin = 0.25 * (p[cu] - p[cl]);
        p[cb] = p[cb].clamp(p[cl] + margin, p[cu] - margin);
    }
}

/// Defaults: amplitudes ≥ 0, widths ≥ 1e-6 nm and at most the axis span,
/// centers within one span of the axis.
fn default_bounds(spec: &Spectrum, id: ParamId) -> (f64, f64) {
    let (lo, hi) = spec.range();
    let span = hi - lo;
    if id.is_amplitude() {
        (0.0, f64::INFINITY)
    } else if id.is_width() {
        (1e-6, span)
    } else {
        (lo - span, hi + span)
    }
}

const POISSON_REWEIGHT_PASSES: usize = 2;

/// Fits the three-Lorentzian model by bounded Levenberg–Marquardt.
pub fn fit_triplet(spec: &Spectrum, init: &TripletParams, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if spec.intensities().iter().any(|v| !v.is_finite()) {
        return Err(Error::input("spectrum contains non-finite intensities"));
    }
    let mut start = *init;
    for (&id, &v) in &cfg.fixed {
        start.set(id, v);
    }
    // equal centers are repaired by the ordering guard; everything else must hold
    let mut probe = start;
    if probe.c_lower >= probe.c_upper {
        probe.c_upper = probe.c_lower + 1.0;
    }
    probe.validate()?;

    let mut settings = LmSettings::unbounded(PARAM_COUNT);
    settings.max_iterations = cfg.max_iterations;
    settings.rel_tolerance = cfg.rel_tolerance;
    settings.damping_init = cfg.damping_init;
    for id in ParamId::ALL {
        let (lo, hi) = cfg
            .bounds
            .get(&id)
            .copied()
            .unwrap_or_else(|| default_bounds(spec, id));
        settings.lower[id.index()] = lo;
        settings.upper[id.index()] = hi;
        settings.free[id.index()] = !cfg.fixed.contains_key(&id);
    }

    let mut problem = TripletProblem::new(spec, None);
    let mut out = lm::minimize(&problem, &start.to_array(), &settings);
    let mut iterations = out.iterations;
    if cfg.weighting == Weighting::Poisson {
        for _ in 0..POISSON_REWEIGHT_PASSES {
            let model = TripletParams::from_slice(&out.params);
            let var: Vec<f64> = spec
                .wavelengths()
                .iter()
                .map(|&l| model.eval(l).max(1.0))
                .collect();
            problem = TripletProblem::new(spec, Some(&var));
            let from = if out.params.iter().all(|v| v.is_finite()) {
                out.params.clone()
            } else {
                start.to_array().to_vec()
            };
            out = lm::minimize(&problem, &from, &settings);
            iterations += out.iterations;
        }
    }

    let data_norm2 = problem.norm2;
    let residual_norm = out.ssr * data_norm2;
    let n_free = settings.free.iter().filter(|&&f| f).count();
    let n_points = spec.len();
    let converged = out.converged() && residual_norm.is_finite();

    let covariance = if converged {
        // internal residuals are r/‖·‖ so (JᵀJ)⁻¹ carries a factor 1/‖·‖²
        let sigma2 = match cfg.weighting {
            Weighting::None => {
                let dof = n_points.saturating_sub(n_free).max(1);
                residual_norm / dof as f64
            }
            Weighting::Poisson => 1.0,
        };
        let factor = sigma2 / data_norm2;
        let mut c = SMatrix::<f64, PARAM_COUNT, PARAM_COUNT>::zeros();
        for i in 0..PARAM_COUNT {
            for j in 0..PARAM_COUNT {
                c[(i, j)] = out.normal_inverse[(i, j)] * factor;
            }
        }
        Some(c)
    } else {
        None
    };

    let mut params = TripletParams::from_slice(&out.params);
    for (&id, &v) in &cfg.fixed {
        params.set(id, v);
    }

    Ok(FitResult {
        params,
        residual_norm,
        covariance,
        converged,
        iterations,
        termination: out.termination,
        history: out.history.iter().map(|s| s * data_norm2).collect(),
        n_points,
        n_free,
    })
}

/// Triplet fit with the bare-cavity peak removed (a_bare = 0).
pub fn fit_doublet(spec: &Spectrum, init: &TripletParams, cfg: &FitConfig) -> Result<FitResult> {
    let cfg = cfg
        .clone()
        .fix(ParamId::ABare, 0.0)
        .fix(
            ParamId::CBare,
            cfg.fixed
                .get(&ParamId::CBare)
                .copied()
                .unwrap_or(init.c_bare),
        )
        .fix(
            ParamId::WBare,
            cfg.fixed
                .get(&ParamId::WBare)
                .copied()
                .unwrap_or(init.w_bare),
        );
    fit_triplet(spec, init, &cfg)
}

/// Single-Lorentzian fit; the result's bare peak holds the fitted line.
pub fn fit_lorentzian(spec: &Spectrum, init: Peak, cfg: &FitConfig) -> Result<FitResult> {
    let (lo, hi) = spec.range();
    let w = spec.spacing();
    let params = TripletParams::from_peaks(
        Peak {
            amplitude: 0.0,
            center: lo,
            hwhm: w,
        },
        Peak {
            amplitude: 0.0,
            center: hi,
            hwhm: w,
        },
        init,
    );
    let mut cfg = cfg.clone();
    for id in [
        ParamId::ALower,
        ParamId::CLower,
        ParamId::WLower,
        ParamId::AUpper,
        ParamId::CUpper,
        ParamId::WUpper,
    ] {
        cfg.fixed.insert(id, params.get(id));
    }
    fit_triplet(spec, &params, &cfg)
}
