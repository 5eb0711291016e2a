//! Synthetic spectra of the coupled system: single spectra, detuning or
//! temperature scans, and pump-power scans, with seeded noise.
//!
//! Every spectrum draws from its own ChaCha8 stream selected by
//! `(seed, scan index)`, so parallel and serial generation agree bit for bit.

mod fixture;
mod noise;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feeding::{model_amplitudes, FeedingModelParams};
use crate::model::{
    polariton_lines, CoupledSystemParams, Peak, Spectrum, SpectrumMeta, TripletParams, MIN_SAMPLES,
};
use crate::units;

pub use fixture::{emit_fixture, read_fixture, FixtureFile, Manifest, RNG_NAME};
pub use noise::{apply_instrument_response, NoiseModel};

/// Uniform wavelength axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaGrid {
    pub min_nm: f64,
    pub max_nm: f64,
    pub step_nm: f64,
}

impl LambdaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_nm > 0.0 && self.step_nm.is_finite()) {
            return Err(Error::input(format!(
                "grid step must be > 0, got {}",
                self.step_nm
            )));
        }
        if !(self.min_nm < self.max_nm) || !self.min_nm.is_finite() || !self.max_nm.is_finite() {
            return Err(Error::input(format!(
                "grid min ({}) must be below max ({})",
                self.min_nm, self.max_nm
            )));
        }
        if self.len() < MIN_SAMPLES {
            return Err(Error::input(format!(
                "grid has fewer than {MIN_SAMPLES} samples"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.max_nm - self.min_nm) / self.step_nm + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.min_nm + self.step_nm * i as f64)
            .collect()
    }

    /// Warning text when the step is coarser than the reference spectrometer resolution.
    pub fn resolution_warning(&self) -> Option<String> {
        (self.step_nm > units::SPECTROMETER_RESOLUTION_NM).then(|| {
            format!(
                "grid step {} nm is coarser than the {} nm spectrometer resolution",
                self.step_nm,
                units::SPECTROMETER_RESOLUTION_NM
            )
        })
    }
}

/// Noise-free triplet parameters of the coupled system at a pump power.
///
/// Polariton centers use the exact λ = c/ν map, widths the linearized one;
/// the bare cavity line sits at the cavity wavelength with FWHM κ.
pub fn triplet_for(
    sys: &CoupledSystemParams,
    feeding: &FeedingModelParams,
    power_uw: f64,
) -> Result<TripletParams> {
    let [short, long] = polariton_lines(sys)?;
    let amps = model_amplitudes(feeding, power_uw)?;
    let bare_hwhm = units::width_ghz_to_nm(sys.kappa_ghz, sys.lambda_cavity_nm)? / 2.0;
    Ok(TripletParams::from_peaks(
        Peak {
            amplitude: amps.a_lower,
            center: short.center_nm,
            hwhm: short.hwhm_nm,
        },
        Peak {
            amplitude: amps.a_upper,
            center: long.center_nm,
            hwhm: long.hwhm_nm,
        },
        Peak {
            amplitude: amps.a_bare,
            center: sys.lambda_cavity_nm,
            hwhm: bare_hwhm,
        },
    ))
}

/// RNG for spectrum `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Evaluates `params` on `grid` and applies instrument response and noise.
pub fn render(
    params: &TripletParams,
    grid: &LambdaGrid,
    noise: &NoiseModel,
    instrument_fwhm_nm: Option<f64>,
    seed: u64,
    stream: u64,
    meta: SpectrumMeta,
) -> Result<Spectrum> {
    grid.validate()?;
    params.validate()?;
    let x = grid.points();
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let inside = |c: f64| c >= lo && c <= hi;
    if !(inside(params.c_lower) || inside(params.c_upper) || inside(params.c_bare)) {
        return Err(Error::input(format!(
            "grid [{lo}, {hi}] nm excludes all three peak centers"
        )));
    }
    let mut y: Vec<f64> = x.iter().map(|&l| params.eval(l)).collect();
    if let Some(fwhm) = instrument_fwhm_nm {
        y = apply_instrument_response(&y, grid.step_nm, fwhm)?;
    }
    let mut rng = stream_rng(seed, stream);
    noise.apply(&mut y, &mut rng)?;
    Spectrum::with_meta(x, y, meta)
}

/// One spectrum of the coupled system under the feeding model.
pub fn synth_spectrum(
    sys: &CoupledSystemParams,
    feeding: &FeedingModelParams,
    power_uw: f64,
    grid: &LambdaGrid,
    noise: &NoiseModel,
    seed: u64,
) -> Result<Spectrum> {
    let params = triplet_for(sys, feeding, power_uw)?;
    render(
        &params,
        grid,
        noise,
        None,
        seed,
        0,
        meta_for(feeding, power_uw, sys.delta_ghz, None),
    )
}

fn meta_for(
    feeding: &FeedingModelParams,
    power_uw: f64,
    delta_ghz: f64,
    temperature_k: Option<f64>,
) -> SpectrumMeta {
    let mut meta = SpectrumMeta {
        temperature_k,
        power_uw: Some(power_uw),
        regime: Some(feeding.regime),
        ..SpectrumMeta::default()
    };
    meta.extra
        .insert("detuning_GHz".into(), format!("{delta_ghz}"));
    meta
}

/// Affine temperature tuning δ(T) = slope·(T − T0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureMap {
    #[serde(rename = "slope_GHz_per_K")]
    pub slope_ghz_per_k: f64,
    /// Temperature of zero detuning, K.
    #[serde(rename = "t0_K")]
    pub t0_k: f64,
}

impl TemperatureMap {
    pub fn detuning(&self, t_k: f64) -> f64 {
        self.slope_ghz_per_k * (t_k - self.t0_k)
    }
}

impl Default for TemperatureMap {
    /// Crosses resonance at 16.4 K; about 0.2 nm of exciton tuning over 5 K.
    fn default() -> Self {
        TemperatureMap {
            slope_ghz_per_k: -15.0,
            t0_k: 16.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanAxis {
    Detuning {
        #[serde(rename = "detunings_GHz")]
        detunings_ghz: Vec<f64>,
    },
    Temperature {
        map: TemperatureMap,
        #[serde(rename = "temperatures_K")]
        temperatures_k: Vec<f64>,
    },
    /// Pump-power series at fixed detuning.
    Power {
        #[serde(rename = "powers_uW")]
        powers_uw: Vec<f64>,
    },
}

impl ScanAxis {
    pub fn len(&self) -> usize {
        match self {
            ScanAxis::Detuning { detunings_ghz } => detunings_ghz.len(),
            ScanAxis::Temperature { temperatures_k, .. } => temperatures_k.len(),
            ScanAxis::Power { powers_uw } => powers_uw.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Coupled system; `delta_ghz` is the fixed detuning of power scans.
    pub sys: CoupledSystemParams,
    pub feeding: FeedingModelParams,
    /// Pump power of detuning and temperature scans, µW.
    #[serde(rename = "power_uW")]
    pub power_uw: f64,
    pub grid: LambdaGrid,
    pub noise: NoiseModel,
    pub instrument_fwhm_nm: Option<f64>,
    pub seed: u64,
    pub axis: ScanAxis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub index: usize,
    pub detuning_ghz: f64,
    pub power_uw: f64,
    pub temperature_k: Option<f64>,
    pub truth: TripletParams,
    pub spectrum: Spectrum,
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        self.sys.validate()?;
        self.feeding.validate()?;
        self.grid.validate()?;
        self.noise.validate()?;
        if self.axis.is_empty() {
            return Err(Error::input("scan axis is empty"));
        }
        if !matches!(self.axis, ScanAxis::Power { .. }) && !(self.power_uw > 0.0) {
            return Err(Error::input(format!(
                "pump power must be > 0, got {}",
                self.power_uw
            )));
        }
        if let Some(f) = self.instrument_fwhm_nm {
            if !(f > 0.0) {
                return Err(Error::input(format!(
                    "instrument FWHM must be > 0, got {f}"
                )));
            }
        }
        Ok(())
    }

    /// (detuning GHz, power µW, temperature K) of scan point `i`.
    fn coordinates(&self, i: usize) -> (f64, f64, Option<f64>) {
        match &self.axis {
            ScanAxis::Detuning { detunings_ghz } => (detunings_ghz[i], self.power_uw, None),
            ScanAxis::Temperature {
                map,
                temperatures_k,
            } => (
                map.detuning(temperatures_k[i]),
                self.power_uw,
                Some(temperatures_k[i]),
            ),
            ScanAxis::Power { powers_uw } => (self.sys.delta_ghz, powers_uw[i], None),
        }
    }
}

/// Generates every spectrum of a scan, in parallel.
pub fn synth_scan(cfg: &ScanConfig) -> Result<Vec<ScanPoint>> {
    cfg.validate()?;
    (0..cfg.axis.len())
        .into_par_iter()
        .map(|i| {
            let (delta, power, temp) = cfg.coordinates(i);
            let sys = cfg.sys.with_detuning(delta);
            let truth = triplet_for(&sys, &cfg.feeding, power)?;
            let spectrum = render(
                &truth,
                &cfg.grid,
                &cfg.noise,
                cfg.instrument_fwhm_nm,
                cfg.seed,
                i as u64,
                meta_for(&cfg.feeding, power, delta, temp),
            )?;
            Ok(ScanPoint {
                index: i,
                detuning_ghz: delta,
                power_uw: power,
                temperature_k: temp,
                truth,
                spectrum,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Regime;
    use std::f64::consts::PI;

    pub(crate) fn device_sys() -> CoupledSystemParams {
        CoupledSystemParams {
            g_ghz: 18.9,
            kappa_ghz: units::kappa_from_q(933.8, 13_300.0).unwrap(),
            gamma_x_ghz: 1.0,
            lambda_cavity_nm: 933.8,
            delta_ghz: 0.0,
        }
    }

    pub(crate) fn qre() -> FeedingModelParams {
        FeedingModelParams {
            regime: Regime::QuasiResonant,
            p_sat_uw: 8.5,
            k_exciton: 2000.0,
            k_charged: 0.0,
            k_biexciton: 400.0,
            eta_feed: 0.5,
            polariton_asymmetry: 0.0,
        }
    }

    fn grid() -> LambdaGrid {
        LambdaGrid {
            min_nm: 933.3,
            max_nm: 934.3,
            step_nm: 0.005,
        }
    }

    #[test]
    fn grid_points() {
        let g = grid();
        assert_eq!(g.len(), 201);
        let p = g.points();
        assert!((p[200] - 934.3).abs() < 1e-9);
        assert!(g.resolution_warning().is_none());
        let coarse = LambdaGrid { step_nm: 0.03, ..g };
        assert!(coarse.resolution_warning().is_some());
        assert!(LambdaGrid { step_nm: 0.0, ..g }.validate().is_err());
        assert!(LambdaGrid { min_nm: 935.0, ..g }.validate().is_err());
    }

    #[test]
    fn same_seed_bit_identical() {
        let noise = NoiseModel::Poisson { counts_scale: 1.0 };
        let a = synth_spectrum(&device_sys(), &qre(), 2.0, &grid(), &noise, 7).unwrap();
        let b = synth_spectrum(&device_sys(), &qre(), 2.0, &grid(), &noise, 7).unwrap();
        assert_eq!(a, b);
        let c = synth_spectrum(&device_sys(), &qre(), 2.0, &grid(), &noise, 8).unwrap();
        assert_ne!(a.intensities(), c.intensities());
    }

    #[test]
    fn single_peak_value_at_center() {
        let p = TripletParams {
            a_lower: 0.0,
            a_upper: 0.0,
            a_bare: 37.0,
            c_lower: 933.3,
            c_upper: 934.3,
            c_bare: 933.8,
            w_lower: 0.01,
            w_upper: 0.01,
            w_bare: 0.035,
        };
        let s = render(
            &p,
            &grid(),
            &NoiseModel::None,
            None,
            0,
            0,
            SpectrumMeta::default(),
        )
        .unwrap();
        let i = s
            .wavelengths()
            .iter()
            .position(|&l| (l - 933.8).abs() < 1e-9)
            .unwrap();
        let l = s.wavelengths()[i];
        let exact = 37.0 * 0.035 / (PI * (0.035 * 0.035 + (l - 933.8).powi(2)));
        assert_eq!(s.intensities()[i], exact);
        assert!((s.intensities()[i] - 37.0 / (PI * 0.035)).abs() < 1e-9 * exact);
    }

    #[test]
    fn grid_excluding_peaks_is_error() {
        let far = LambdaGrid {
            min_nm: 900.0,
            max_nm: 901.0,
            step_nm: 0.01,
        };
        let r = synth_spectrum(&device_sys(), &qre(), 1.0, &far, &NoiseModel::None, 0);
        assert!(matches!(r, Err(Error::Input(_))));
    }

    #[test]
    fn no_biexciton_gives_pure_doublet() {
        let m = FeedingModelParams {
            k_biexciton: 0.0,
            ..qre()
        };
        let t = triplet_for(&device_sys(), &m, 3.0).unwrap();
        assert_eq!(t.a_bare, 0.0);
        assert!(t.a_lower > 0.0 && t.a_upper > 0.0);
    }

    #[test]
    fn resonant_lines_symmetric_about_cavity() {
        let t = triplet_for(&device_sys(), &qre(), 1.0).unwrap();
        let mid = 0.5 * (t.c_lower + t.c_upper);
        assert!((mid - 933.8).abs() < 1e-4);
        assert!((t.a_lower - t.a_upper).abs() < 1e-12);
        let split = t.c_upper - t.c_lower;
        assert!((split - 0.1047).abs() < 1e-3, "{split}");
    }

    #[test]
    fn scan_parallel_matches_serial_render() {
        let cfg = ScanConfig {
            sys: device_sys(),
            feeding: qre(),
            power_uw: 4.0,
            grid: grid(),
            noise: NoiseModel::Poisson { counts_scale: 1.0 },
            instrument_fwhm_nm: None,
            seed: 99,
            axis: ScanAxis::Temperature {
                map: TemperatureMap::default(),
                temperatures_k: vec![14.0, 15.0, 16.4, 18.0, 19.0],
            },
        };
        let scan = synth_scan(&cfg).unwrap();
        assert_eq!(scan.len(), 5);
        assert_eq!(scan[2].detuning_ghz, 0.0);
        for pt in &scan {
            let again = render(
                &pt.truth,
                &cfg.grid,
                &cfg.noise,
                None,
                cfg.seed,
                pt.index as u64,
                pt.spectrum.meta.clone(),
            )
            .unwrap();
            assert_eq!(again, pt.spectrum);
        }
        let empty = ScanConfig {
            axis: ScanAxis::Detuning {
                detunings_ghz: vec![],
            },
            ..cfg
        };
        assert!(matches!(synth_scan(&empty), Err(Error::Input(_))));
    }

    #[test]
    fn poisson_mean_converges() {
        let p = triplet_for(&device_sys(), &qre(), 1.0).unwrap();
        let small = LambdaGrid {
            min_nm: 933.76,
            max_nm: 933.84,
            step_nm: 0.01,
        };
        let clean = render(
            &p,
            &small,
            &NoiseModel::None,
            None,
            0,
            0,
            SpectrumMeta::default(),
        )
        .unwrap();
        let n = 10_000;
        let mut sums = vec![0.0; small.len()];
        for k in 0..n {
            let s = render(
                &p,
                &small,
                &NoiseModel::Poisson { counts_scale: 1.0 },
                None,
                5,
                k,
                SpectrumMeta::default(),
            )
            .unwrap();
            for (acc, v) in sums.iter_mut().zip(s.intensities()) {
                *acc += v;
            }
        }
        for (i, &mu) in clean.intensities().iter().enumerate() {
            let mean = sums[i] / n as f64;
            let tol = 3.0 * mu.sqrt() / (n as f64).sqrt();
            assert!((mean - mu).abs() < tol, "i={i}: {mean} vs {mu} (tol {tol})");
        }
    }
}
