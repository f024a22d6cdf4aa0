//! CSV and JSON serialization shared by all commands.
//!
//! Floats are written with 17 significant digits (`{:.16e}`), missing values
//! as empty fields. An optional first line starting with `#` carries the
//! generation time; it is the only part of an output that depends on more
//! than the configuration and seeds.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn optional(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

/// `key=value` tokens joined by `;`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Flags(String);

impl Flags {
    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        if !self.0.is_empty() {
            self.0.push(';');
        }
        let _ = write!(self.0, "{key}={}", sanitize(&value.to_string()));
        self
    }

    /// A bare marker such as `unreliable`.
    pub fn mark(&mut self, key: &str) -> &mut Self {
        if !self.0.is_empty() {
            self.0.push(';');
        }
        self.0.push_str(key);
        self
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Keeps error messages inside one flag token.
fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if matches!(c, ',' | ';' | '=' | '\n' | '\r' | '"') {
                ' '
            } else {
                c
            }
        })
        .collect()
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn header_line(with_timestamp: bool) -> Option<String> {
    with_timestamp.then(|| format!("# sbeq {} generated {}", env!("CARGO_PKG_VERSION"), timestamp()))
}

/// Writes a table to `out`, or to stdout when `out` is `None`.
pub fn write_table(out: Option<&Path>, with_timestamp: bool, columns: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    if let Some(line) = header_line(with_timestamp) {
        writeln!(sink, "{line}")?;
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(columns)?;
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        w.write_record(row)?;
    }
    w.flush()
}

/// Pretty JSON with a `generated` field prepended unless suppressed.
pub fn write_json<T: Serialize>(out: Option<&Path>, with_timestamp: bool, value: &T) -> io::Result<()> {
    let mut v = serde_json::to_value(value)?;
    if with_timestamp {
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("generated".into(), timestamp().into());
        }
    }
    let mut text = serde_json::to_string_pretty(&v)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}
