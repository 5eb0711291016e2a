//! Peak detection for fit initialization.

use crate::error::{Error, Result};
use crate::model::Spectrum;

/// Candidate peaks, sorted by wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakGuess {
    pub centers: Vec<f64>,
    pub heights: Vec<f64>,
    /// HWHM estimates from half-height crossings, nm.
    pub widths: Vec<f64>,
    pub requested: usize,
}

impl PeakGuess {
    pub fn found(&self) -> usize {
        self.centers.len()
    }

    /// Number of requested peaks that were not found.
    pub fn shortfall(&self) -> usize {
        self.requested.saturating_sub(self.found())
    }
}

/// Centered moving average; the window shrinks at the edges.
pub fn moving_average(data: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    let n = data.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in data {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

struct Candidate {
    index: usize,
    prominence: f64,
}

/// Local maxima with their topographic prominence. Plateaus count once
/// (at their first sample).
fn local_maxima(y: &[f64]) -> Vec<Candidate> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if y[i] > y[i - 1] {
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                out.push(Candidate {
                    index: i,
                    prominence: prominence(y, i),
                });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn prominence(y: &[f64], peak: usize) -> f64 {
    let h = y[peak];
    let mut left_min = h;
    for &v in y[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &y[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// HWHM from interpolated half-height crossings above the spectrum minimum.
fn half_width(x: &[f64], y: &[f64], peak: usize) -> f64 {
    let base = y.iter().copied().fold(f64::INFINITY, f64::min);
    let half = base + 0.5 * (y[peak] - base);
    let cross = |a: usize, b: usize| -> f64 {
        let t = (half - y[a]) / (y[b] - y[a]);
        x[a] + t * (x[b] - x[a])
    };
    let left = (1..=peak)
        .rev()
        .find(|&i| y[i - 1] <= half)
        .map(|i| cross(i - 1, i));
    let right = (peak..y.len() - 1)
        .find(|&i| y[i + 1] <= half)
        .map(|i| cross(i + 1, i));
    match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => x[peak] - l,
        (None, Some(r)) => r - x[peak],
        (None, None) => 0.5 * (x[x.len() - 1] - x[0]),
    }
}

/// Maxima less prominent than this fraction of the strongest are treated as noise.
pub const MIN_RELATIVE_PROMINENCE: f64 = 0.02;

/// The `n` most prominent local maxima of the smoothed spectrum.
pub fn detect_peaks(spec: &Spectrum, n: usize, smoothing_window: usize) -> Result<PeakGuess> {
    if !(1..=3).contains(&n) {
        return Err(Error::input(format!(
            "peak count must be 1, 2 or 3, got {n}"
        )));
    }
    if smoothing_window == 0 {
        return Err(Error::input("smoothing window must be at least 1 sample"));
    }
    if spec.len() < smoothing_window {
        return Err(Error::input(format!(
            "spectrum has {} samples, shorter than the smoothing window of {smoothing_window}",
            spec.len()
        )));
    }
    let x = spec.wavelengths();
    let y = moving_average(spec.intensities(), smoothing_window);
    let mut cands = local_maxima(&y);
    cands.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    if let Some(top) = cands.first().map(|c| c.prominence) {
        cands.retain(|c| c.prominence >= MIN_RELATIVE_PROMINENCE * top);
    }
    cands.truncate(n);
    cands.sort_by_key(|c| c.index);

    Ok(PeakGuess {
        centers: cands.iter().map(|c| x[c.index]).collect(),
        heights: cands.iter().map(|c| y[c.index]).collect(),
        widths: cands.iter().map(|c| half_width(x, &y, c.index)).collect(),
        requested: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TripletParams;

    fn render(p: &TripletParams, lo: f64, hi: f64, step: f64) -> Spectrum {
        let n = ((hi - lo) / step).round() as usize + 1;
        let x: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let y = x.iter().map(|&l| p.eval(l)).collect();
        Spectrum::new(x, y).unwrap()
    }

    #[test]
    fn separated_triplet_found_within_one_sample() {
        let p = TripletParams {
            a_lower: 10.0,
            a_upper: 8.0,
            a_bare: 12.0,
            c_lower: 933.2,
            c_upper: 934.4,
            c_bare: 933.83,
            w_lower: 0.03,
            w_upper: 0.04,
            w_bare: 0.035,
        };
        let s = render(&p, 932.5, 935.0, 0.005);
        let g = detect_peaks(&s, 3, 3).unwrap();
        assert_eq!(g.found(), 3);
        assert_eq!(g.shortfall(), 0);
        for (c, truth) in g.centers.iter().zip([p.c_lower, p.c_bare, p.c_upper]) {
            assert!((c - truth).abs() <= 0.005 + 1e-9, "{c} vs {truth}");
        }
    }

    #[test]
    fn flat_spectrum_has_no_peaks() {
        let x: Vec<f64> = (0..50).map(|i| 900.0 + i as f64).collect();
        let s = Spectrum::new(x, vec![3.0; 50]).unwrap();
        let g = detect_peaks(&s, 3, 5).unwrap();
        assert_eq!(g.found(), 0);
        assert_eq!(g.shortfall(), 3);
    }

    #[test]
    fn single_lorentzian_center_and_width() {
        let p = TripletParams {
            a_lower: 0.0,
            a_upper: 0.0,
            a_bare: 5.0,
            c_lower: 933.0,
            c_upper: 935.0,
            c_bare: 933.913,
            w_lower: 0.01,
            w_upper: 0.01,
            w_bare: 0.05,
        };
        let s = render(&p, 933.0, 935.0, 0.004);
        let g = detect_peaks(&s, 1, 3).unwrap();
        assert_eq!(g.found(), 1);
        let argmax = s
            .intensities()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(g.centers[0], s.wavelengths()[argmax]);
        assert!((g.widths[0] - 0.05).abs() / 0.05 < 0.2, "{}", g.widths[0]);
    }

    #[test]
    fn window_longer_than_spectrum_is_input_error() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let s = Spectrum::new(x, vec![1.0; 10]).unwrap();
        assert!(matches!(detect_peaks(&s, 1, 11), Err(Error::Input(_))));
        assert!(detect_peaks(&s, 4, 3).is_err());
        assert!(detect_peaks(&s, 0, 3).is_err());
    }

    #[test]
    fn most_prominent_peaks_win() {
        let x: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let mut y = vec![0.0; 40];
        y[5] = 1.0;
        y[15] = 10.0;
        y[25] = 0.5;
        y[35] = 7.0;
        let s = Spectrum::new(x, y).unwrap();
        let g = detect_peaks(&s, 2, 1).unwrap();
        assert_eq!(g.centers, vec![15.0, 35.0]);
    }
}
