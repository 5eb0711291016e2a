use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    #[default]
    None,
    /// Additive Gaussian noise with σ = `sigma_rel` × spectrum maximum,
    /// clipped at zero.
    Gaussian { sigma_rel: f64 },
    /// Each sample drawn from Poisson(I·scale)/scale.
    Poisson { counts_scale: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::None => Ok(()),
            NoiseModel::Gaussian { sigma_rel } if sigma_rel >= 0.0 && sigma_rel.is_finite() => {
                Ok(())
            }
            NoiseModel::Poisson { counts_scale }
                if counts_scale > 0.0 && counts_scale.is_finite() =>
            {
                Ok(())
            }
            other => Err(Error::input(format!("invalid noise model {other:?}"))),
        }
    }

    pub fn apply<R: Rng>(&self, y: &mut [f64], rng: &mut R) -> Result<()> {
        self.validate()?;
        match *self {
            NoiseModel::None => {}
            NoiseModel::Gaussian { sigma_rel } => {
                let peak = y.iter().copied().fold(0.0, f64::max);
                let sigma = sigma_rel * peak;
                if sigma > 0.0 {
                    let normal =
                        Normal::new(0.0, sigma).map_err(|e| Error::input(e.to_string()))?;
                    for v in y.iter_mut() {
                        *v = (*v + normal.sample(rng)).max(0.0);
                    }
                }
            }
            NoiseModel::Poisson { counts_scale } => {
                for v in y.iter_mut() {
                    let mean = *v * counts_scale;
                    *v = if mean > 0.0 {
                        let p = Poisson::new(mean).map_err(|e| Error::input(e.to_string()))?;
                        p.sample(rng) / counts_scale
                    } else {
                        0.0
                    };
                }
            }
        }
        Ok(())
    }
}

/// Convolution with a normalized Gaussian of the given FWHM on a uniform
/// grid, renormalized at the edges.
pub fn apply_instrument_response(y: &[f64], step_nm: f64, fwhm_nm: f64) -> Result<Vec<f64>> {
    if !(fwhm_nm > 0.0 && step_nm > 0.0) {
        return Err(Error::input("instrument FWHM and grid step must be > 0"));
    }
    let sigma = fwhm_nm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let half = (4.0 * sigma / step_nm).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|k| {
            let d = k as f64 * step_nm;
            (-0.5 * (d / sigma).powi(2)).exp()
        })
        .collect();
    let n = y.len() as isize;
    Ok((0..n)
        .map(|i| {
            let mut acc = 0.0;
            let mut wsum = 0.0;
            for (k, w) in (-half..=half).zip(&kernel) {
                let j = i + k;
                if (0..n).contains(&j) {
                    acc += w * y[j as usize];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect())
}
