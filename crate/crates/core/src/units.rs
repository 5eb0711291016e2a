//! Unit canon and conversions.
//!
//! Wavelengths are in nm, frequencies and rates in GHz (cyclic), pump powers
//! in µW. Every wavelength/frequency conversion in the crate goes through
//! this module.

use crate::error::{Error, Result};

/// Speed of light in nm·GHz.
pub const SPEED_OF_LIGHT_NM_GHZ: f64 = 2.997_924_58e8;

/// Spectrometer resolution of the reference setup, nm.
pub const SPECTROMETER_RESOLUTION_NM: f64 = 0.02;

/// Optical frequency of a vacuum wavelength.
pub fn wavelength_to_frequency(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be > 0, got {lambda_nm}"
        )));
    }
    Ok(SPEED_OF_LIGHT_NM_GHZ / lambda_nm)
}

pub fn frequency_to_wavelength(nu_ghz: f64) -> Result<f64> {
    if !(nu_ghz > 0.0) {
        return Err(Error::domain(format!(
            "frequency must be > 0, got {nu_ghz}"
        )));
    }
    Ok(SPEED_OF_LIGHT_NM_GHZ / nu_ghz)
}

/// Linearized width conversion Δν = c·Δλ/λ².
pub fn width_nm_to_ghz(width_nm: f64, lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be > 0, got {lambda_nm}"
        )));
    }
    Ok(SPEED_OF_LIGHT_NM_GHZ * width_nm / (lambda_nm * lambda_nm))
}

/// Linearized width conversion Δλ = λ²·Δν/c.
pub fn width_ghz_to_nm(width_ghz: f64, lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) {
        return Err(Error::domain(format!(
            "wavelength must be > 0, got {lambda_nm}"
        )));
    }
    Ok(lambda_nm * lambda_nm * width_ghz / SPEED_OF_LIGHT_NM_GHZ)
}

/// Vacuum Rabi frequency from the polariton splitting: g = c·Δλ/(2λ0²).
pub fn splitting_to_g(delta_lambda_nm: f64, lambda0_nm: f64) -> Result<f64> {
    if !(delta_lambda_nm >= 0.0) {
        return Err(Error::domain(format!(
            "splitting must be >= 0, got {delta_lambda_nm}"
        )));
    }
    Ok(width_nm_to_ghz(delta_lambda_nm, lambda0_nm)? / 2.0)
}

/// Inverse of [`splitting_to_g`].
pub fn g_to_splitting(g_ghz: f64, lambda0_nm: f64) -> Result<f64> {
    if !(g_ghz >= 0.0) {
        return Err(Error::domain(format!("g must be >= 0, got {g_ghz}")));
    }
    width_ghz_to_nm(2.0 * g_ghz, lambda0_nm)
}

/// Quality factor Q = λ/FWHM.
pub fn q_factor(center_nm: f64, fwhm_nm: f64) -> Result<f64> {
    if !(fwhm_nm > 0.0) {
        return Err(Error::domain(format!("fwhm must be > 0, got {fwhm_nm}")));
    }
    Ok(center_nm / fwhm_nm)
}

/// Cavity energy decay rate (FWHM in GHz) implied by a quality factor.
pub fn kappa_from_q(lambda_nm: f64, q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::domain(format!("Q must be > 0, got {q}")));
    }
    Ok(wavelength_to_frequency(lambda_nm)? / q)
}
