//! CSV tables with a `#` metadata line.

use std::io::Write;

use crate::config::ExperimentConfig;

/// Formats a value with `.` as decimal separator, switching to scientific
/// notation below `1e-3` in magnitude.
pub fn number(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if x == 0.0 {
        "0".to_string()
    } else if x.abs() < 1e-3 {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Metadata line, header and rows.
    pub fn write<W: Write>(&self, cfg: &ExperimentConfig, out: W) -> std::io::Result<()> {
        let mut out = out;
        writeln!(
            out,
            "# {} {} experiment={} config-sha256={}",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            cfg.experiment.kind,
            cfg.hash()
        )?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self, cfg: &ExperimentConfig) -> String {
        let mut buf = Vec::new();
        self.write(cfg, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }
}
