//! Cavity-feeding power dependence.
//!
//! The single-exciton (polariton) amplitude follows the two-level saturation
//! form x/(1+x), x = P/P_sat. Detuned configurations feed the bare cavity: the
//! charged exciton with the same linear-then-saturating form, the biexciton
//! with its square. Both forms are modeling choices that reproduce linear
//! growth, quadratic growth and saturation respectively.

mod analysis;
mod model;

pub use analysis::{
    analyze_s_trend, fit_power_law, fit_saturation, saturation_cutoff, suppression, PowerLawFit,
    PowerPoint, PowerSeries, STrend, SaturationFit, SaturationWarning, TrendClass,
    TrendDiagnostics, F_RATIO_THRESHOLD, MAX_CONSTANT_SCATTER, MIN_RELATIVE_TREND,
};
pub use model::{model_amplitudes, s_ratio, Amplitudes, FeedingModelParams};
