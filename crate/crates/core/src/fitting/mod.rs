//! Nonlinear least-squares fitting of the three-Lorentzian model.

mod init;
pub mod lm;
mod observables;
mod peaks;
mod triplet;

pub use init::{initial_triplet, refine_amplitudes, InitOptions, InitialGuess};
pub use lm::{LeastSquaresProblem, LmOutcome, LmSettings, Termination};
pub use observables::{extract_observables, Observables};
pub use peaks::{detect_peaks, moving_average, PeakGuess};
pub use triplet::{fit_doublet, fit_lorentzian, fit_triplet, FitConfig, FitResult, Weighting};
