//! CSV emission: header row, 12-significant-digit decimals, LF endings.
//! Formatting is deterministic so reruns diff clean.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// Render a float with 12 significant digits in plain decimal notation.
pub fn sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".to_string()
        } else if v > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let magnitude = v.abs().log10().floor() as i32;
    let factor = 10f64.powi(11 - magnitude);
    let rounded = (v * factor).round() / factor;
    format!("{rounded}")
}

pub struct Csv {
    buffer: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buffer = String::new();
        buffer.push_str(&header.join(","));
        buffer.push('\n');
        Self {
            buffer,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        let _ = writeln!(self.buffer, "{}", fields.join(","));
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.buffer.as_bytes())
    }
}
