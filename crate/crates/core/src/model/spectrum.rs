use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples in a valid spectrum.
pub const MIN_SAMPLES: usize = 8;

/// Pump regime: above-band or quasi-resonant excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "ABE")]
    AboveBand,
    #[serde(rename = "QRE")]
    QuasiResonant,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::AboveBand => "ABE",
            Regime::QuasiResonant => "QRE",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ABE" => Ok(Regime::AboveBand),
            "QRE" => Ok(Regime::QuasiResonant),
            other => Err(Error::input(format!(
                "unknown regime '{other}', expected ABE or QRE"
            ))),
        }
    }
}

/// Optional acquisition labels attached to a spectrum.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectrumMeta {
    pub temperature_k: Option<f64>,
    pub power_uw: Option<f64>,
    pub regime: Option<Regime>,
    /// Any other `key=value` labels, preserved verbatim.
    pub extra: BTreeMap<String, String>,
}

/// A sampled photoluminescence spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    wavelengths: Vec<f64>,
    intensities: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    /// Builds a spectrum, checking length, ordering and sign invariants.
    pub fn new(wavelengths: Vec<f64>, intensities: Vec<f64>) -> Result<Self> {
        Self::with_meta(wavelengths, intensities, SpectrumMeta::default())
    }

    pub fn with_meta(
        wavelengths: Vec<f64>,
        intensities: Vec<f64>,
        meta: SpectrumMeta,
    ) -> Result<Self> {
        if wavelengths.len() != intensities.len() {
            return Err(Error::input(format!(
                "{} wavelengths but {} intensities",
                wavelengths.len(),
                intensities.len()
            )));
        }
        if wavelengths.len() < MIN_SAMPLES {
            return Err(Error::input(format!(
                "spectrum has {} samples, at least {MIN_SAMPLES} required",
                wavelengths.len()
            )));
        }
        if let Some(i) = wavelengths.iter().position(|w| !w.is_finite()) {
            return Err(Error::input(format!("non-finite wavelength at sample {i}")));
        }
        if let Some(i) = wavelengths.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::input(format!(
                "wavelengths not strictly increasing at sample {}",
                i + 1
            )));
        }
        if let Some(i) = intensities.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite intensity at sample {i}")));
        }
        if let Some(i) = intensities.iter().position(|&v| v < 0.0) {
            return Err(Error::input(format!("negative intensity at sample {i}")));
        }
        Ok(Spectrum {
            wavelengths,
            intensities,
            meta,
        })
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        (self.wavelengths[0], self.wavelengths[self.len() - 1])
    }

    pub fn contains(&self, lambda: f64) -> bool {
        let (lo, hi) = self.range();
        lambda >= lo && lambda <= hi
    }

    /// Mean sample spacing, nm.
    pub fn spacing(&self) -> f64 {
        let (lo, hi) = self.range();
        (hi - lo) / (self.len() - 1) as f64
    }

    pub fn max_intensity(&self) -> f64 {
        self.intensities.iter().copied().fold(0.0, f64::max)
    }

    /// Same axis and labels, every intensity multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Result<Spectrum> {
        Spectrum::with_meta(
            self.wavelengths.clone(),
            self.intensities.iter().map(|v| v * k).collect(),
            self.meta.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axis(n: usize) -> Vec<f64> {
        (0..n).map(|i| 933.0 + 0.01 * i as f64).collect()
    }

    #[test]
    fn accepts_valid() {
        let s = Spectrum::new(axis(10), vec![1.0; 10]).unwrap();
        assert_eq!(s.len(), 10);
        assert!((s.spacing() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn rejects_short_unsorted_negative_mismatched() {
        assert!(Spectrum::new(axis(7), vec![1.0; 7]).is_err());
        assert!(Spectrum::new(axis(10), vec![1.0; 9]).is_err());
        let mut w = axis(10);
        w.swap(3, 4);
        assert!(Spectrum::new(w, vec![1.0; 10]).is_err());
        let mut w = axis(10);
        w[5] = w[4];
        assert!(Spectrum::new(w, vec![1.0; 10]).is_err());
        let mut v = vec![1.0; 10];
        v[2] = -1e-9;
        assert!(Spectrum::new(axis(10), v).is_err());
        let mut v = vec![1.0; 10];
        v[2] = f64::NAN;
        assert!(Spectrum::new(axis(10), v).is_err());
    }

    #[test]
    fn regime_parse() {
        assert_eq!("abe".parse::<Regime>().unwrap(), Regime::AboveBand);
        assert_eq!("QRE".parse::<Regime>().unwrap(), Regime::QuasiResonant);
        assert!("PLE".parse::<Regime>().is_err());
    }
}
