//! File formats: spectrum CSV, fit and power reports, TOML configuration.

mod atomic;
pub mod config;
mod csv;
pub mod report;

pub use atomic::write_atomic;
pub use csv::{format_plot_data, format_spectrum, parse_spectrum, read_spectrum, write_spectrum};

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
