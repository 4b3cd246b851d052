//! CSV and JSON writers. Floats are written with 17 significant digits so
//! that parsing a file back yields the exact in-memory values.

use std::fmt::Write as _;

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Comma-separated table with a header row and `\n` line endings.
#[derive(Debug, Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut csv = Self::default();
        csv.row(header.iter().map(|s| s.to_string()));
        csv
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let line = fields.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.buf, "{line}").expect("writing to a String");
    }

    pub fn into_string(self) -> String {
        self.buf
    }
}
