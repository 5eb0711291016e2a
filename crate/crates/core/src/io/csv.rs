//! Two-column spectrum CSV.
//!
//! ```text
//! # temperature_K=16.4
//! # power_uW=1.5
//! # regime=QRE
//! wavelength_nm,intensity_counts
//! 933.2,12.5
//! ```
//!
//! Comment lines start with `#`; those of the form `key=value` become
//! metadata. Floats are written in shortest round-trip form, so a
//! write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Regime, Spectrum, SpectrumMeta, TripletParams, MIN_SAMPLES};

use super::write_atomic;

pub const HEADER: &str = "wavelength_nm,intensity_counts";

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn apply_meta(
    meta: &mut SpectrumMeta,
    key: &str,
    value: &str,
    path: &Path,
    line: usize,
) -> Result<()> {
    let num = |v: &str| {
        v.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| parse_err(path, line, format!("{key}: '{v}' is not a number")))
    };
    match key {
        "temperature_K" => meta.temperature_k = Some(num(value)?),
        "power_uW" => meta.power_uw = Some(num(value)?),
        "regime" => {
            meta.regime = Some(
                value
                    .parse::<Regime>()
                    .map_err(|e| parse_err(path, line, e.to_string()))?,
            )
        }
        _ => {
            meta.extra.insert(key.to_string(), value.to_string());
        }
    }
    Ok(())
}

/// Parses spectrum CSV text; `path` is used only in diagnostics.
pub fn parse_spectrum(text: &str, path: &Path) -> Result<Spectrum> {
    let mut meta = SpectrumMeta::default();
    let mut header_seen = false;
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        last_line = line;
        let s = raw.trim();
        if s.is_empty() {
            continue;
        }
        if let Some(c) = s.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                apply_meta(&mut meta, k.trim(), v.trim(), path, line)?;
            }
            continue;
        }
        if !header_seen {
            let cols: Vec<String> = s
                .split(',')
                .map(|c| c.trim().to_ascii_lowercase())
                .collect();
            if cols != ["wavelength_nm", "intensity_counts"] {
                return Err(parse_err(
                    path,
                    line,
                    format!("expected header '{HEADER}', found '{s}'"),
                ));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = s.split(',').map(str::trim).collect();
        if fields.len() != 2 {
            return Err(parse_err(
                path,
                line,
                format!("expected 2 columns, found {}", fields.len()),
            ));
        }
        let parse = |f: &str, what: &str| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    parse_err(path, line, format!("{what} '{f}' is not a finite number"))
                })
        };
        let l = parse(fields[0], "wavelength")?;
        let v = parse(fields[1], "intensity")?;
        if let Some(&prev) = x.last() {
            if l <= prev {
                return Err(parse_err(
                    path,
                    line,
                    format!("wavelength {l} not above previous {prev}"),
                ));
            }
        }
        if v < 0.0 {
            return Err(parse_err(path, line, format!("negative intensity {v}")));
        }
        x.push(l);
        y.push(v);
    }
    if !header_seen {
        return Err(parse_err(
            path,
            last_line.max(1),
            format!("missing header '{HEADER}'"),
        ));
    }
    if x.len() < MIN_SAMPLES {
        return Err(parse_err(
            path,
            last_line.max(1),
            format!("{} data rows, at least {MIN_SAMPLES} required", x.len()),
        ));
    }
    Spectrum::with_meta(x, y, meta)
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spectrum(&text, path)
}

pub fn format_spectrum(spec: &Spectrum) -> String {
    let mut out = String::new();
    let m = &spec.meta;
    if let Some(t) = m.temperature_k {
        let _ = writeln!(out, "# temperature_K={t}");
    }
    if let Some(p) = m.power_uw {
        let _ = writeln!(out, "# power_uW={p}");
    }
    if let Some(r) = m.regime {
        let _ = writeln!(out, "# regime={r}");
    }
    for (k, v) in &m.extra {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str(HEADER);
    out.push('\n');
    for (l, v) in spec.wavelengths().iter().zip(spec.intensities()) {
        let _ = writeln!(out, "{l},{v}");
    }
    out
}

pub fn write_spectrum(path: &Path, spec: &Spectrum) -> Result<()> {
    write_atomic(path, format_spectrum(spec).as_bytes())
}

/// Measured data, total model and per-peak components on the spectrum axis.
pub fn format_plot_data(spec: &Spectrum, params: &TripletParams) -> String {
    let mut out = String::from(
        "wavelength_nm,measured_counts,fitted_counts,lower_counts,upper_counts,bare_counts\n",
    );
    for (&l, &v) in spec.wavelengths().iter().zip(spec.intensities()) {
        let [a, b, c] = params.components(l);
        let _ = writeln!(out, "{l},{v},{},{a},{b},{c}", a + b + c);
    }
    out
}
