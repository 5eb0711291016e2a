//! Initial parameters for the triplet fit from detected peaks.
//!
//! Lowest- and highest-wavelength peaks seed the two polaritons and the
//! remaining one the bare cavity. With two peaks the bare center is pinned to
//! the known cavity wavelength when one is supplied. With a single blended
//! peak the polaritons are placed symmetrically about it.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::peaks::{detect_peaks, PeakGuess};
use crate::error::{Error, Result};
use crate::model::{Peak, Spectrum, TripletParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitOptions {
    pub smoothing_window: usize,
    /// Known bare-cavity wavelength, nm.
    pub cavity_nm: Option<f64>,
    /// Expected polariton splitting, nm; used only when a single peak is found.
    pub splitting_guess_nm: Option<f64>,
}

impl Default for InitOptions {
    fn default() -> Self {
        InitOptions {
            smoothing_window: 3,
            cavity_nm: None,
            splitting_guess_nm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialGuess {
    pub params: TripletParams,
    /// Set when the protocol pins c_bare.
    pub pinned_bare_center: Option<f64>,
    pub peaks: PeakGuess,
}

fn sample_at(spec: &Spectrum, lambda: f64) -> f64 {
    let x = spec.wavelengths();
    let idx = x.partition_point(|&v| v < lambda).min(x.len() - 1);
    spec.intensities()[idx]
}

fn baseline(spec: &Spectrum) -> f64 {
    spec.intensities()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn peak_from(h: f64, c: f64, w: f64, base: f64) -> Peak {
    Peak {
        amplitude: PI * (h - base).max(0.0) * w,
        center: c,
        hwhm: w,
    }
}

pub fn initial_triplet(spec: &Spectrum, opts: &InitOptions) -> Result<InitialGuess> {
    let guess = detect_peaks(spec, 3, opts.smoothing_window)?;
    let base = baseline(spec);
    let min_w = 2.0 * spec.spacing();
    let w = |i: usize| guess.widths[i].max(min_w);

    let (params, pinned) = match guess.found() {
        3 => {
            let lower = peak_from(guess.heights[0], guess.centers[0], w(0), base);
            let bare = peak_from(guess.heights[1], guess.centers[1], w(1), base);
            let upper = peak_from(guess.heights[2], guess.centers[2], w(2), base);
            (TripletParams::from_peaks(lower, upper, bare), None)
        }
        2 => {
            let lower = peak_from(guess.heights[0], guess.centers[0], w(0), base);
            let upper = peak_from(guess.heights[1], guess.centers[1], w(1), base);
            let center = opts
                .cavity_nm
                .unwrap_or(0.5 * (lower.center + upper.center));
            let wb = 0.5 * (lower.hwhm + upper.hwhm);
            let bare = Peak {
                amplitude: 0.5 * PI * wb * (sample_at(spec, center) - base).max(0.0),
                center,
                hwhm: wb,
            };
            (
                TripletParams::from_peaks(lower, upper, bare),
                opts.cavity_nm,
            )
        }
        1 => {
            let c0 = guess.centers[0];
            let h = guess.heights[0] - base;
            let wd = w(0);
            let split = opts.splitting_guess_nm.unwrap_or(wd);
            let center = opts.cavity_nm.unwrap_or(c0);
            let third = PI * h.max(0.0) * wd / 3.0;
            let pol_w = (0.5 * wd).max(min_w);
            let lower = Peak {
                amplitude: third,
                center: c0 - 0.5 * split,
                hwhm: pol_w,
            };
            let upper = Peak {
                amplitude: third,
                center: c0 + 0.5 * split,
                hwhm: pol_w,
            };
            let bare = Peak {
                amplitude: third,
                center,
                hwhm: wd,
            };
            (
                TripletParams::from_peaks(lower, upper, bare),
                opts.cavity_nm,
            )
        }
        _ => return Err(Error::input("no peaks found in spectrum")),
    };
    let mut params = cap_widths(params, min_w);
    refine_amplitudes(spec, &mut params);
    Ok(InitialGuess {
        params,
        pinned_bare_center: pinned,
        peaks: guess,
    })
}

/// Limits each width to half the distance to the nearest other center, so
/// blended peaks do not start wider than their spacing.
fn cap_widths(mut p: TripletParams, min_w: f64) -> TripletParams {
    let c = [p.c_lower, p.c_upper, p.c_bare];
    let mut w = [p.w_lower, p.w_upper, p.w_bare];
    for i in 0..3 {
        let nearest = (0..3)
            .filter(|&j| j != i)
            .map(|j| (c[i] - c[j]).abs())
            .filter(|d| *d > 0.0)
            .fold(f64::INFINITY, f64::min);
        if nearest.is_finite() {
            w[i] = w[i].min(0.5 * nearest).max(min_w);
        }
    }
    p.w_lower = w[0];
    p.w_upper = w[1];
    p.w_bare = w[2];
    p
}

/// Replaces the amplitudes with the non-negative least-squares solution at
/// fixed centers and widths. Leaves them unchanged if every subset is singular.
pub fn refine_amplitudes(spec: &Spectrum, p: &mut TripletParams) {
    let x = spec.wavelengths();
    let y = spec.intensities();
    let basis: Vec<[f64; 3]> = x
        .iter()
        .map(|&l| {
            TripletParams {
                a_lower: 1.0,
                a_upper: 1.0,
                a_bare: 1.0,
                ..*p
            }
            .components(l)
        })
        .collect();
    let mut gram = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    let mut yy = 0.0;
    for (b, &v) in basis.iter().zip(y) {
        for i in 0..3 {
            rhs[i] += b[i] * v;
            for j in 0..3 {
                gram[(i, j)] += b[i] * b[j];
            }
        }
        yy += v * v;
    }
    let mut best: Option<(f64, [f64; 3])> = None;
    for mask in 1u8..8 {
        let idx: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
        let n = idx.len();
        let g = DMatrix::from_fn(n, n, |i, j| gram[(idx[i], idx[j])]);
        let r = DVector::from_fn(n, |i, _| rhs[idx[i]]);
        let Some(sol) = g.clone().cholesky().map(|c| c.solve(&r)) else {
            continue;
        };
        if sol.iter().any(|v| !(*v >= 0.0)) {
            continue;
        }
        let mut a = [0.0; 3];
        for (k, &i) in idx.iter().enumerate() {
            a[i] = sol[k];
        }
        let av = Vector3::from(a);
        let ssr = yy - 2.0 * av.dot(&rhs) + av.dot(&(gram * av));
        if best.is_none_or(|(s, _)| ssr < s) {
            best = Some((ssr, a));
        }
    }
    if let Some((_, a)) = best {
        p.a_lower = a[0];
        p.a_upper = a[1];
        p.a_bare = a[2];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn render(p: &TripletParams) -> Spectrum {
        let x: Vec<f64> = (0..401).map(|i| 933.0 + 0.005 * i as f64).collect();
        let y = x.iter().map(|&l| p.eval(l)).collect();
        Spectrum::new(x, y).unwrap()
    }

    #[test]
    fn three_peaks_assign_by_wavelength() {
        let truth = TripletParams {
            a_lower: 10.0,
            a_upper: 10.0,
            a_bare: 10.0,
            c_lower: 933.4,
            c_upper: 934.4,
            c_bare: 933.9,
            w_lower: 0.03,
            w_upper: 0.03,
            w_bare: 0.04,
        };
        let g = initial_triplet(&render(&truth), &InitOptions::default()).unwrap();
        assert!(g.pinned_bare_center.is_none());
        assert!((g.params.c_lower - 933.4).abs() < 0.01);
        assert!((g.params.c_bare - 933.9).abs() < 0.01);
        assert!((g.params.c_upper - 934.4).abs() < 0.01);
    }

    #[test]
    fn doublet_pins_cavity() {
        let truth = TripletParams {
            a_lower: 10.0,
            a_upper: 10.0,
            a_bare: 0.0,
            c_lower: 933.6,
            c_upper: 934.2,
            c_bare: 933.9,
            w_lower: 0.03,
            w_upper: 0.03,
            w_bare: 0.04,
        };
        let opts = InitOptions {
            cavity_nm: Some(933.85),
            ..InitOptions::default()
        };
        let g = initial_triplet(&render(&truth), &opts).unwrap();
        assert_eq!(g.pinned_bare_center, Some(933.85));
        assert_eq!(g.params.c_bare, 933.85);
        assert!(g.params.c_lower < g.params.c_upper);
    }

    #[test]
    fn blended_triplet_amplitudes_from_linear_solve() {
        let truth = TripletParams {
            a_lower: 475.0,
            a_upper: 475.0,
            a_bare: 470.0,
            c_lower: 933.745,
            c_upper: 933.855,
            c_bare: 933.8,
            w_lower: 0.018,
            w_upper: 0.018,
            w_bare: 0.035,
        };
        let spec = render(&truth);
        let g = initial_triplet(&spec, &InitOptions::default()).unwrap();
        for (w, c) in [
            (g.params.w_lower, g.params.c_lower),
            (g.params.w_upper, g.params.c_upper),
        ] {
            assert!(w <= 0.5 * (c - g.params.c_bare).abs() + 1e-12);
        }
        let mut exact = truth;
        exact.a_lower = 1.0;
        exact.a_upper = 1.0;
        exact.a_bare = 1.0;
        refine_amplitudes(&spec, &mut exact);
        assert!((exact.a_lower - 475.0).abs() < 1e-6);
        assert!((exact.a_bare - 470.0).abs() < 1e-6);
    }

    #[test]
    fn flat_spectrum_is_input_error() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let s = Spectrum::new(x, vec![2.0; 20]).unwrap();
        assert!(matches!(
            initial_triplet(&s, &InitOptions::default()),
            Err(Error::Input(_))
        ));
    }
}
