use serde::{Deserialize, Serialize};

use super::triplet::FitResult;
use crate::error::{Error, Result};
use crate::feeding::s_ratio;
use crate::model::ParamId;
use crate::units::{self, SPEED_OF_LIGHT_NM_GHZ};

/// Physical quantities derived from a converged triplet fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    /// c_upper − c_lower, nm.
    pub splitting_nm: f64,
    pub splitting_sigma_nm: Option<f64>,
    /// Frequency difference of the two polariton centers, GHz.
    pub splitting_ghz: f64,
    pub splitting_sigma_ghz: Option<f64>,
    /// Vacuum Rabi frequency from the splitting at `lambda0`.
    pub g_ghz: f64,
    pub s_ratio: f64,
    pub s_ratio_sigma: Option<f64>,
    pub fwhm_lower_nm: f64,
    pub fwhm_upper_nm: f64,
    pub fwhm_bare_nm: f64,
    /// Quality factor of the bare-cavity peak, absent when a_bare = 0.
    pub q_bare: Option<f64>,
}

pub fn extract_observables(fit: &FitResult, lambda0_nm: f64) -> Result<Observables> {
    if !fit.converged {
        return Err(Error::State(
            "observables requested from a non-converged fit".into(),
        ));
    }
    let p = &fit.params;
    let splitting_nm = p.c_upper - p.c_lower;
    let g_ghz = units::splitting_to_g(splitting_nm, lambda0_nm)?;
    let nu = |l: f64| SPEED_OF_LIGHT_NM_GHZ / l;
    let splitting_ghz = nu(p.c_lower) - nu(p.c_upper);
    let s = s_ratio(p.a_lower, p.a_upper, p.a_bare)?;

    let cov = fit.covariance;
    let var = |grad: &[(ParamId, f64)]| -> Option<f64> {
        cov.map(|c| {
            let mut v = 0.0;
            for &(a, ga) in grad {
                for &(b, gb) in grad {
                    v += ga * gb * c[(a.index(), b.index())];
                }
            }
            v.max(0.0).sqrt()
        })
    };
    let splitting_sigma_nm = var(&[(ParamId::CUpper, 1.0), (ParamId::CLower, -1.0)]);
    let dnu = |l: f64| SPEED_OF_LIGHT_NM_GHZ / (l * l);
    let splitting_sigma_ghz = var(&[
        (ParamId::CLower, -dnu(p.c_lower)),
        (ParamId::CUpper, dnu(p.c_upper)),
    ]);
    let total = p.a_lower + p.a_upper + p.a_bare;
    let ds_dpol = -p.a_bare / (total * total);
    let ds_dbare = (p.a_lower + p.a_upper) / (total * total);
    let s_ratio_sigma = var(&[
        (ParamId::ALower, ds_dpol),
        (ParamId::AUpper, ds_dpol),
        (ParamId::ABare, ds_dbare),
    ]);

    let fwhm_bare_nm = 2.0 * p.w_bare;
    let q_bare = if p.a_bare > 0.0 {
        Some(units::q_factor(p.c_bare, fwhm_bare_nm)?)
    } else {
        None
    };

    Ok(Observables {
        splitting_nm,
        splitting_sigma_nm,
        splitting_ghz,
        splitting_sigma_ghz,
        g_ghz,
        s_ratio: s,
        s_ratio_sigma,
        fwhm_lower_nm: 2.0 * p.w_lower,
        fwhm_upper_nm: 2.0 * p.w_upper,
        fwhm_bare_nm,
        q_bare,
    })
}
