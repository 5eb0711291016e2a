use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Regime;

/// S = a_bare / (a_lower + a_upper + a_bare).
pub fn s_ratio(a_lower: f64, a_upper: f64, a_bare: f64) -> Result<f64> {
    for (name, v) in [
        ("a_lower", a_lower),
        ("a_upper", a_upper),
        ("a_bare", a_bare),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::domain(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    let total = a_lower + a_upper + a_bare;
    if total <= 0.0 {
        return Err(Error::domain("S ratio undefined: all amplitudes are zero"));
    }
    Ok(a_bare / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes {
    pub a_lower: f64,
    pub a_upper: f64,
    pub a_bare: f64,
}

impl Amplitudes {
    pub fn polariton_total(&self) -> f64 {
        self.a_lower + self.a_upper
    }

    pub fn s_ratio(&self) -> Result<f64> {
        s_ratio(self.a_lower, self.a_upper, self.a_bare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedingModelParams {
    pub regime: Regime,
    #[serde(rename = "p_sat_uW")]
    pub p_sat_uw: f64,
    /// Polariton amplitude per µW below saturation, counts·nm/µW.
    #[serde(rename = "k_exciton_per_uW")]
    pub k_exciton: f64,
    /// Charged-exciton feeding per µW, counts·nm/µW. May be nonzero under
    /// QRE to represent residual charging.
    #[serde(rename = "k_charged_per_uW")]
    pub k_charged: f64,
    /// Biexciton feeding per µW², counts·nm/µW². Zero under ABE.
    #[serde(rename = "k_biexciton_per_uW2")]
    pub k_biexciton: f64,
    /// Fraction of detuned-configuration emission routed into the bare cavity peak.
    #[serde(rename = "eta_feed_unitless")]
    pub eta_feed: f64,
    /// (a_upper − a_lower)/(a_upper + a_lower); 0 splits the polariton emission equally.
    #[serde(rename = "polariton_asymmetry_unitless")]
    pub polariton_asymmetry: f64,
}

impl FeedingModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_sat_uw > 0.0 && self.p_sat_uw.is_finite()) {
            return Err(Error::domain(format!(
                "p_sat must be > 0, got {}",
                self.p_sat_uw
            )));
        }
        for (name, v) in [
            ("k_exciton", self.k_exciton),
            ("k_charged", self.k_charged),
            ("k_biexciton", self.k_biexciton),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.eta_feed) {
            return Err(Error::domain(format!(
                "eta_feed must lie in [0, 1], got {}",
                self.eta_feed
            )));
        }
        if !(self.polariton_asymmetry > -1.0 && self.polariton_asymmetry < 1.0) {
            return Err(Error::domain(format!(
                "polariton_asymmetry must lie in (-1, 1), got {}",
                self.polariton_asymmetry
            )));
        }
        if self.regime == Regime::AboveBand && self.k_biexciton != 0.0 {
            return Err(Error::domain(
                "above-band excitation carries no biexciton feeding (k_biexciton must be 0)",
            ));
        }
        Ok(())
    }
}

/// Peak areas predicted at pump power `power_uw`.
pub fn model_amplitudes(m: &FeedingModelParams, power_uw: f64) -> Result<Amplitudes> {
    m.validate()?;
    if !(power_uw > 0.0 && power_uw.is_finite()) {
        return Err(Error::domain(format!(
            "pump power must be > 0, got {power_uw}"
        )));
    }
    let x = power_uw / m.p_sat_uw;
    let sat = x / (1.0 + x);
    let polariton = m.k_exciton * m.p_sat_uw * sat;
    let charged = m.k_charged * m.p_sat_uw * sat;
    let biexciton = m.k_biexciton * m.p_sat_uw * m.p_sat_uw * sat * sat;
    Ok(Amplitudes {
        a_lower: 0.5 * polariton * (1.0 - m.polariton_asymmetry),
        a_upper: 0.5 * polariton * (1.0 + m.polariton_asymmetry),
        a_bare: m.eta_feed * (charged + biexciton),
    })
}
