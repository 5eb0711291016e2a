//! Two-level exciton–cavity dispersion.
//!
//! The polariton frequencies are the eigenvalues of
//!
//! ```text
//! | ω_x − iγ_x/2    g        |
//! | g               ω_c − iκ/2 |
//! ```
//!
//! with κ and γ_x energy-decay rates (FWHM, GHz). Real parts are line
//! centers, −2·Im gives the FWHM of each line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledSystemParams {
    /// Exciton–photon coupling strength, GHz.
    #[serde(rename = "g_GHz")]
    pub g_ghz: f64,
    /// Cavity energy decay rate, GHz.
    #[serde(rename = "kappa_GHz")]
    pub kappa_ghz: f64,
    /// Exciton decay rate, GHz.
    #[serde(rename = "gamma_x_GHz")]
    pub gamma_x_ghz: f64,
    pub lambda_cavity_nm: f64,
    /// Exciton minus cavity frequency, GHz. Positive puts the exciton on the blue side.
    #[serde(rename = "delta_GHz")]
    pub delta_ghz: f64,
}

impl CoupledSystemParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g_GHz", self.g_ghz),
            ("kappa_GHz", self.kappa_ghz),
            ("gamma_x_GHz", self.gamma_x_ghz),
            ("lambda_cavity_nm", self.lambda_cavity_nm),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !self.delta_ghz.is_finite() {
            return Err(Error::domain("delta_GHz must be finite"));
        }
        Ok(())
    }

    /// g > |κ − γ_x|/4: the two eigenvalues have distinct real parts at zero detuning.
    pub fn is_strongly_coupled(&self) -> bool {
        self.g_ghz > (self.kappa_ghz - self.gamma_x_ghz).abs() / 4.0
    }

    /// Real splitting on resonance, 2·sqrt(g² − ((κ − γ_x)/4)²), GHz. Zero when weakly coupled.
    pub fn resonant_splitting_ghz(&self) -> f64 {
        let loss = (self.kappa_ghz - self.gamma_x_ghz) / 4.0;
        2.0 * (self.g_ghz * self.g_ghz - loss * loss).max(0.0).sqrt()
    }

    /// Coupling that yields a given real splitting on resonance for these losses.
    pub fn g_for_resonant_splitting(splitting_ghz: f64, kappa_ghz: f64, gamma_x_ghz: f64) -> f64 {
        let half = splitting_ghz / 2.0;
        let loss = (kappa_ghz - gamma_x_ghz) / 4.0;
        (half * half + loss * loss).sqrt()
    }

    pub fn cavity_frequency_ghz(&self) -> f64 {
        units::SPEED_OF_LIGHT_NM_GHZ / self.lambda_cavity_nm
    }

    pub fn exciton_wavelength_nm(&self) -> Result<f64> {
        units::frequency_to_wavelength(self.cavity_frequency_ghz() + self.delta_ghz)
    }

    pub fn with_detuning(&self, delta_ghz: f64) -> Self {
        CoupledSystemParams { delta_ghz, ..*self }
    }
}

/// The two complex polariton frequencies (absolute, GHz), ordered by real part.
pub fn polariton_frequencies(sys: &CoupledSystemParams) -> Result<[Complex64; 2]> {
    sys.validate()?;
    // offsets from the cavity frequency keep the radicand well conditioned
    let x = Complex64::new(sys.delta_ghz, -sys.gamma_x_ghz / 2.0);
    let c = Complex64::new(0.0, -sys.kappa_ghz / 2.0);
    let mean = (x + c) / 2.0;
    let half_diff = (x - c) / 2.0;
    let root = (half_diff * half_diff + sys.g_ghz * sys.g_ghz).sqrt();
    let nu_c = sys.cavity_frequency_ghz();
    let mut pair = [mean - root + nu_c, mean + root + nu_c];
    if pair[0].re > pair[1].re {
        pair.swap(0, 1);
    }
    Ok(pair)
}

/// A polariton line expressed on the wavelength axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonLine {
    pub center_nm: f64,
    pub hwhm_nm: f64,
    pub frequency: Complex64,
}

/// Polariton lines ordered by wavelength (shorter first).
pub fn polariton_lines(sys: &CoupledSystemParams) -> Result<[PolaritonLine; 2]> {
    let [low_f, high_f] = polariton_frequencies(sys)?;
    let line = |w: Complex64| -> Result<PolaritonLine> {
        let center_nm = units::frequency_to_wavelength(w.re)?;
        let fwhm_ghz = -2.0 * w.im;
        Ok(PolaritonLine {
            center_nm,
            hwhm_nm: units::width_ghz_to_nm(fwhm_ghz, center_nm)? / 2.0,
            frequency: w,
        })
    };
    Ok([line(high_f)?, line(low_f)?])
}
