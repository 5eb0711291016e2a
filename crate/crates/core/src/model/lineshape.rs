use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Area-normalized Lorentzian γ/(π(γ² + Δ²)) with HWHM `gamma`.
pub fn lorentzian(gamma: f64, delta: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain(format!(
            "Lorentzian width must be > 0, got {gamma}"
        )));
    }
    Ok(lorentzian_unchecked(gamma, delta))
}

/// Cumulative distribution of [`lorentzian`]: arctan(Δ/γ)/π + 1/2.
pub fn lorentzian_cdf(gamma: f64, delta: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain(format!(
            "Lorentzian width must be > 0, got {gamma}"
        )));
    }
    Ok((delta / gamma).atan() / PI + 0.5)
}

#[inline]
pub(crate) fn lorentzian_unchecked(gamma: f64, delta: f64) -> f64 {
    gamma / (PI * (gamma * gamma + delta * delta))
}

pub const PARAM_COUNT: usize = 9;

/// Index of a triplet parameter in its packed vector form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamId {
    ALower,
    CLower,
    WLower,
    AUpper,
    CUpper,
    WUpper,
    ABare,
    CBare,
    WBare,
}

impl ParamId {
    pub const ALL: [ParamId; PARAM_COUNT] = [
        ParamId::ALower,
        ParamId::CLower,
        ParamId::WLower,
        ParamId::AUpper,
        ParamId::CUpper,
        ParamId::WUpper,
        ParamId::ABare,
        ParamId::CBare,
        ParamId::WBare,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamId::ALower => "a_lower",
            ParamId::CLower => "c_lower",
            ParamId::WLower => "w_lower",
            ParamId::AUpper => "a_upper",
            ParamId::CUpper => "c_upper",
            ParamId::WUpper => "w_upper",
            ParamId::ABare => "a_bare",
            ParamId::CBare => "c_bare",
            ParamId::WBare => "w_bare",
        }
    }

    pub fn is_amplitude(self) -> bool {
        matches!(self, ParamId::ALower | ParamId::AUpper | ParamId::ABare)
    }

    pub fn is_center(self) -> bool {
        matches!(self, ParamId::CLower | ParamId::CUpper | ParamId::CBare)
    }

    pub fn is_width(self) -> bool {
        matches!(self, ParamId::WLower | ParamId::WUpper | ParamId::WBare)
    }
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamId::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::input(format!("unknown parameter '{s}'")))
    }
}

/// One Lorentzian component: area, center and HWHM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub amplitude: f64,
    pub center: f64,
    pub hwhm: f64,
}

impl Peak {
    #[inline]
    fn eval(&self, lambda: f64) -> f64 {
        self.amplitude * lorentzian_unchecked(self.hwhm, lambda - self.center)
    }

    /// d/dA, d/dc, d/dγ of A·L(γ, λ − c).
    #[inline]
    fn gradient(&self, lambda: f64) -> [f64; 3] {
        let d = lambda - self.center;
        let g = self.hwhm;
        let s = g * g + d * d;
        let s2 = PI * s * s;
        [
            g / (PI * s),
            self.amplitude * 2.0 * g * d / s2,
            self.amplitude * (d * d - g * g) / s2,
        ]
    }
}

/// The nine parameters of the lower-polariton / upper-polariton / bare-cavity
/// Lorentzian sum. Widths are HWHM in nm, amplitudes are areas in counts·nm.
///
/// "Lower" and "upper" are ordered by wavelength: `c_lower < c_upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletParams {
    pub a_lower: f64,
    pub a_upper: f64,
    pub a_bare: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub c_bare: f64,
    pub w_lower: f64,
    pub w_upper: f64,
    pub w_bare: f64,
}

impl TripletParams {
    pub fn from_peaks(lower: Peak, upper: Peak, bare: Peak) -> Self {
        TripletParams {
            a_lower: lower.amplitude,
            a_upper: upper.amplitude,
            a_bare: bare.amplitude,
            c_lower: lower.center,
            c_upper: upper.center,
            c_bare: bare.center,
            w_lower: lower.hwhm,
            w_upper: upper.hwhm,
            w_bare: bare.hwhm,
        }
    }

    pub fn lower(&self) -> Peak {
        Peak {
            amplitude: self.a_lower,
            center: self.c_lower,
            hwhm: self.w_lower,
        }
    }

    pub fn upper(&self) -> Peak {
        Peak {
            amplitude: self.a_upper,
            center: self.c_upper,
            hwhm: self.w_upper,
        }
    }

    pub fn bare(&self) -> Peak {
        Peak {
            amplitude: self.a_bare,
            center: self.c_bare,
            hwhm: self.w_bare,
        }
    }

    pub fn to_array(&self) -> [f64; PARAM_COUNT] {
        [
            self.a_lower,
            self.c_lower,
            self.w_lower,
            self.a_upper,
            self.c_upper,
            self.w_upper,
            self.a_bare,
            self.c_bare,
            self.w_bare,
        ]
    }

    pub fn from_slice(p: &[f64]) -> Self {
        assert_eq!(p.len(), PARAM_COUNT);
        TripletParams {
            a_lower: p[0],
            c_lower: p[1],
            w_lower: p[2],
            a_upper: p[3],
            c_upper: p[4],
            w_upper: p[5],
            a_bare: p[6],
            c_bare: p[7],
            w_bare: p[8],
        }
    }

    pub fn get(&self, id: ParamId) -> f64 {
        self.to_array()[id.index()]
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        let mut a = self.to_array();
        a[id.index()] = value;
        *self = TripletParams::from_slice(&a);
    }

    pub fn validate(&self) -> Result<()> {
        let a = self.to_array();
        if let Some(id) = ParamId::ALL
            .into_iter()
            .find(|id| !a[id.index()].is_finite())
        {
            return Err(Error::domain(format!("{id} is not finite")));
        }
        for id in ParamId::ALL {
            let v = a[id.index()];
            if id.is_width() && v <= 0.0 {
                return Err(Error::domain(format!("{id} must be > 0, got {v}")));
            }
            if id.is_amplitude() && v < 0.0 {
                return Err(Error::domain(format!("{id} must be >= 0, got {v}")));
            }
        }
        if self.c_lower >= self.c_upper {
            return Err(Error::domain(format!(
                "c_lower ({}) must be below c_upper ({})",
                self.c_lower, self.c_upper
            )));
        }
        Ok(())
    }

    /// Model intensity without validation; callers guarantee validity.
    #[inline]
    pub fn eval(&self, lambda: f64) -> f64 {
        self.lower().eval(lambda) + self.upper().eval(lambda) + self.bare().eval(lambda)
    }

    /// Per-peak contributions `[lower, upper, bare]`.
    pub fn components(&self, lambda: f64) -> [f64; 3] {
        [
            self.lower().eval(lambda),
            self.upper().eval(lambda),
            self.bare().eval(lambda),
        ]
    }

    /// Analytic gradient of [`TripletParams::eval`] in [`ParamId`] order.
    pub fn gradient(&self, lambda: f64) -> [f64; PARAM_COUNT] {
        let l = self.lower().gradient(lambda);
        let u = self.upper().gradient(lambda);
        let b = self.bare().gradient(lambda);
        [l[0], l[1], l[2], u[0], u[1], u[2], b[0], b[1], b[2]]
    }

    pub fn scale_amplitudes(&self, k: f64) -> Self {
        TripletParams {
            a_lower: self.a_lower * k,
            a_upper: self.a_upper * k,
            a_bare: self.a_bare * k,
            ..*self
        }
    }
}

/// Three-Lorentzian intensity at `lambda`.
pub fn triplet_intensity(params: &TripletParams, lambda: f64) -> Result<f64> {
    params.validate()?;
    Ok(params.eval(lambda))
}
