//! Tabulated diagnostics: one row per check, written as CSV.

use std::fmt::Write as _;
use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub name: String,
    pub value: f64,
    /// Threshold the value was compared against (NaN when informational).
    pub threshold: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsReport {
    pub rows: Vec<ReportRow>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, threshold: f64, pass: bool, note: impl Into<String>) {
        self.rows.push(ReportRow { name: name.into(), value, threshold, pass, note: note.into() });
    }

    /// Records `value <= threshold`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64, note: impl Into<String>) {
        let pass = value <= threshold;
        self.push(name, value, threshold, pass, note);
    }

    /// Records `value >= threshold`.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64, note: impl Into<String>) {
        let pass = value >= threshold;
        self.push(name, value, threshold, pass, note);
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// Every value and threshold is finite (informational NaN thresholds aside).
    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.value.is_finite())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "name,value,threshold,status,note")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{},{}",
                csv_field(&r.name),
                r.value,
                r.threshold,
                if r.pass { "PASS" } else { "FAIL" },
                csv_field(&r.note)
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Human-readable table with a pass count.
    pub fn summary(&self) -> String {
        let width = self.rows.iter().map(|r| r.name.len()).max().unwrap_or(4);
        let mut s = String::new();
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<width$}  {:>12.5e}  {:>12.5e}  {}  {}",
                r.name,
                r.value,
                r.threshold,
                if r.pass { "PASS" } else { "FAIL" },
                r.note
            );
        }
        let passed = self.rows.iter().filter(|r| r.pass).count();
        let _ = writeln!(s, "{passed}/{} checks passed", self.rows.len());
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
