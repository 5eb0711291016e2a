//! Domain types and the forward spectral model.

mod dispersion;
mod lineshape;
mod spectrum;

pub use dispersion::{polariton_frequencies, polariton_lines, CoupledSystemParams, PolaritonLine};
pub use lineshape::{
    lorentzian, lorentzian_cdf, triplet_intensity, ParamId, Peak, TripletParams, PARAM_COUNT,
};
pub use spectrum::{Regime, Spectrum, SpectrumMeta, MIN_SAMPLES};
